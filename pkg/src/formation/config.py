"""Scenario files: YAML in, validated ScenarioConfig out.

Unknown keys are errors so a misspelt gain name cannot silently fall back
to its default.  Every error carries the file position of the offending
entry.
"""

from __future__ import annotations

import math
import warnings
from importlib import resources
from pathlib import Path

import yaml

from .dynamic_control import LearnerGains, SlidingGains
from .estimator import EstimatorGains, gain_sufficiency_warning
from .graph import Topology, validate
from .kinematic_control import FormationOffset, KinematicGains, ShuntingParams
from .models import AxisCurve, DisturbanceSpec, LeaderTrajectory, RobotParams
from .sim import (DEFAULT_DECIMATION, DEFAULT_DT, SWITCHING_MODES, RobotConfig, ScenarioConfig,
                  Variant)

DEFAULT_PERTURBATION = (-2.0, 1.0, 0.3)


class ConfigError(ValueError):
    def __init__(self, message, source="<config>", mark=None):
        self.source = source
        self.line = None if mark is None else mark.line + 1
        self.column = None if mark is None else mark.column + 1
        where = source if mark is None else f"{source}:{self.line}:{self.column}"
        super().__init__(f"{where}: {message}")


class _Map(dict):
    """Mapping that remembers where it and each of its values start."""

    mark = None
    marks: dict


class _Loader(yaml.SafeLoader):
    pass


def _construct_map(loader, node):
    loader.flatten_mapping(node)
    out = _Map()
    out.mark = node.start_mark
    out.marks = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        if key in out:
            raise yaml.constructor.ConstructorError(
                None, None, f"duplicate key {key!r}", key_node.start_mark)
        out[key] = loader.construct_object(value_node, deep=True)
        out.marks[key] = value_node.start_mark
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_map)


class _Reader:
    """Pulls typed values out of one mapping and rejects leftovers."""

    def __init__(self, mapping, where, source):
        if not isinstance(mapping, dict):
            raise ConfigError(f"{where} must be a mapping", source, getattr(mapping, "mark", None))
        self.m = mapping
        self.where = where
        self.source = source
        self.used = set()

    def mark(self, key=None):
        if key is not None and key in getattr(self.m, "marks", {}):
            return self.m.marks[key]
        return getattr(self.m, "mark", None)

    def fail(self, key, message):
        raise ConfigError(message, self.source, self.mark(key))

    def has(self, key):
        return key in self.m

    def raw(self, key, default=None):
        self.used.add(key)
        return self.m.get(key, default)

    def number(self, key, default=None):
        value = self.raw(key, default)
        if value is None:
            self.fail(key, f"{self.where}.{key} is required")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(key, f"{self.where}.{key} must be a number, got {value!r}")
        if not math.isfinite(value):
            self.fail(key, f"{self.where}.{key} must be finite")
        return float(value)

    def integer(self, key, default=None):
        value = self.raw(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(key, f"{self.where}.{key} must be an integer, got {value!r}")
        return value

    def string(self, key, default=None):
        value = self.raw(key, default)
        if not isinstance(value, str):
            self.fail(key, f"{self.where}.{key} must be a string, got {value!r}")
        return value

    def vector(self, key, size, default=None):
        value = self.raw(key, default)
        if value is None:
            self.fail(key, f"{self.where}.{key} is required")
        if (not isinstance(value, (list, tuple)) or len(value) != size
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                           for v in value)):
            self.fail(key, f"{self.where}.{key} must be a list of {size} numbers, got {value!r}")
        return tuple(float(v) for v in value)

    def section(self, key):
        value = self.raw(key)
        if value is None:
            return None
        if not isinstance(value, dict):
            self.fail(key, f"{self.where}.{key} must be a mapping")
        return _Reader(value, f"{self.where}.{key}", self.source)

    def build(self, key, factory, *args, **kwargs):
        """Call a validating constructor, anchoring its complaint at ``key``."""
        try:
            return factory(*args, **kwargs)
        except ValueError as exc:
            self.fail(key, str(exc))

    def finish(self):
        extra = [k for k in self.m if k not in self.used]
        if extra:
            self.fail(extra[0], f"unknown key {extra[0]!r} in {self.where}")


def _estimator(r, base):
    if r is None:
        return base
    k_p = r.vector("k_p", 3, (base.k_x, base.k_y, base.k_theta))
    k_a1 = r.number("k_a1", base.k_a1)
    k_b1 = r.number("k_b1", base.k_b1)
    # the angular channel inherits the linear-channel gains when left out
    k_a2 = r.number("k_a2", k_a1)
    k_b2 = r.number("k_b2", k_b1)
    r.finish()
    return r.build(None, EstimatorGains, *k_p, k_a1, k_b1, k_a2, k_b2)


def _kinematic(r, base):
    if r is None:
        return base
    out = r.build(None, KinematicGains, r.number("k1", base.k1), r.number("k2", base.k2),
                  r.number("k3", base.k3))
    r.finish()
    return out


def _shunting(r, base):
    if r is None:
        return base
    A = r.number("A", base.A)
    B = r.number("B", base.B)
    r.finish()
    return r.build(None, ShuntingParams, A, B, B)


def _sliding(r, base):
    if r is None:
        return base
    out = r.build(None, SlidingGains, r.number("c_a", base.c_a), r.number("c_b", base.c_b),
                  r.number("boundary_layer", base.boundary_layer))
    r.finish()
    return out


def _learner(r, base, c_hat0):
    if r is None:
        return base, c_hat0
    gains = r.build(None, LearnerGains, r.vector("k4", 2, base.k4), r.vector("k5", 2, base.k5))
    c_hat0 = r.vector("c_hat0", 2, c_hat0)
    r.finish()
    return gains, c_hat0


def _plant(r, base):
    if r is None:
        return base
    out = r.build(None, RobotParams, r.number("a", base.a), r.number("b", base.b))
    r.finish()
    return out


def _disturbance(r, base):
    if r is None:
        return base
    out = r.build(None, DisturbanceSpec, r.string("kind", base.kind),
                  r.number("amplitude", base.amplitude), r.number("omega", base.omega),
                  r.number("phase", base.phase))
    r.finish()
    return out


def _robot_template(root):
    """Per-robot settings shared by every follower, with the reference defaults."""
    t = dict(estimator=EstimatorGains(), kinematic=KinematicGains(), shunting=ShuntingParams(),
             sliding=SlidingGains(), learner=LearnerGains(), c_hat0=RobotConfig.c_hat0,
             plant=RobotParams(), d1=DisturbanceSpec(), d2=DisturbanceSpec())
    return _apply_blocks(root, t)


def _apply_blocks(r, t):
    t = dict(t)
    gains = r.section("gains")
    if gains is not None:
        t["estimator"] = _estimator(gains.section("estimator"), t["estimator"])
        t["kinematic"] = _kinematic(gains.section("kinematic"), t["kinematic"])
        t["shunting"] = _shunting(gains.section("shunting"), t["shunting"])
        t["sliding"] = _sliding(gains.section("sliding"), t["sliding"])
        t["learner"], t["c_hat0"] = _learner(gains.section("learner"), t["learner"], t["c_hat0"])
        gains.finish()
    t["plant"] = _plant(r.section("plant"), t["plant"])
    dist = r.section("disturbances")
    if dist is not None:
        t["d1"] = _disturbance(dist.section("d1"), t["d1"])
        t["d2"] = _disturbance(dist.section("d2"), t["d2"])
        dist.finish()
    return t


def _axis(r, where):
    if r is None:
        raise ConfigError(f"trajectory.{where} is required")
    out = AxisCurve(*(r.number(c, 0.0) for c in ("c0", "c1", "c2", "c3", "c4")))
    r.finish()
    return out


def _topology(r):
    n = r.integer("followers")
    if n < 1:
        r.fail("followers", "topology.followers must be at least 1")
    edges = r.raw("edges", [])
    if not isinstance(edges, list) or not all(
            isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) for v in e)
            for e in edges):
        r.fail("edges", "topology.edges must be a list of [i, j] follower pairs")
    for i, j in edges:
        if not (1 <= i <= n and 1 <= j <= n) or i == j:
            r.fail("edges", f"edge [{i}, {j}] must join two distinct followers in 1..{n}")
    links = r.vector("leader_links", n)
    r.finish()
    topo = r.build("leader_links", Topology.from_edges, n, [tuple(e) for e in edges], links)
    report = validate(topo)
    if report.problems:
        r.fail(None, "invalid topology: " + "; ".join(report.problems))
    return topo


def parse_config(text, source="<config>", warn=True) -> ScenarioConfig:
    """Build a validated scenario from YAML text."""
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        raise ConfigError(f"parse error: {exc.problem}", source, exc.problem_mark) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"parse error: {exc}", source) from None
    root = _Reader(doc if doc is not None else _Map(), "config", source)

    dt = root.number("dt", DEFAULT_DT)
    horizon = root.number("horizon", 20.0)
    decimation = root.integer("decimation", DEFAULT_DECIMATION)
    name = root.string("variant", Variant.BIOINSPIRED_LEARNING.value)
    try:
        variant = Variant(name)
    except ValueError:
        root.fail("variant", f"variant must be one of {[v.value for v in Variant]}")
    switching = root.string("switching", "implicit")
    if switching not in SWITCHING_MODES:
        root.fail("switching", f"switching must be one of {list(SWITCHING_MODES)}")

    topo_r = root.section("topology")
    if topo_r is None:
        root.fail(None, "topology is required")
    topology = _topology(topo_r)

    traj_r = root.section("trajectory")
    if traj_r is None:
        trajectory = LeaderTrajectory(AxisCurve(c1=1.0), AxisCurve(c0=3.0, c2=0.4, c3=1.0,
                                                                    c4=-math.pi / 2))
    else:
        trajectory = LeaderTrajectory(_axis(traj_r.section("x"), "x"),
                                      _axis(traj_r.section("y"), "y"))
        traj_r.finish()

    template = _robot_template(root)
    perturbation = root.vector("perturbation", 3, DEFAULT_PERTURBATION)
    ref = None
    robots_raw = root.raw("robots")
    if not isinstance(robots_raw, list) or not robots_raw:
        root.fail("robots", "robots must be a non-empty list")
    robots = []
    for i, item in enumerate(robots_raw, 1):
        r = _Reader(item, f"robots[{i}]", source)
        offset = FormationOffset(*r.vector("offset", 2))
        if r.has("pose"):
            pose = r.vector("pose", 3)
        else:
            if ref is None:
                try:
                    ref = trajectory.reference(0.0)
                except ValueError as exc:
                    root.fail("trajectory", str(exc))
            pose = (ref.pose.x - offset.dx + perturbation[0],
                    ref.pose.y - offset.dy + perturbation[1],
                    ref.pose.theta + perturbation[2])
        velocity = r.vector("velocity", 2, (0.0, 0.0))
        estimate = r.vector("estimate", 5) if r.has("estimate") else None
        t = _apply_blocks(r, template)
        r.finish()
        robots.append(RobotConfig(
            offset=offset, pose=pose, velocity=velocity, estimator=t["estimator"],
            kinematic=t["kinematic"], shunting=t["shunting"], plant=t["plant"],
            learner=t["learner"], sliding=t["sliding"], c_hat0=t["c_hat0"],
            d1=t["d1"], d2=t["d2"], estimate=estimate))
    root.finish()

    config = ScenarioConfig(topology, tuple(robots), trajectory, dt, horizon, variant,
                            decimation, switching)
    check(config, root)
    if warn:
        for message in gain_warnings(config):
            warnings.warn(f"{source}: {message}", stacklevel=2)
    return config


def _anchor(problem):
    for prefix, key in (("dt", "dt"), ("horizon", "horizon"), ("decimation", "decimation"),
                        ("leader linear velocity", "trajectory"), ("switching", "switching")):
        if problem.startswith(prefix):
            return key
    if "steps are not a multiple" in problem:
        return "decimation"
    if problem.startswith("robot "):
        return "robots"
    return "topology"


def check(config, root):
    problems = config.problems()
    if problems:
        root.fail(_anchor(problems[0]), "; ".join(problems))


def gain_warnings(config):
    """Convergence-sufficiency messages for the velocity estimator gains."""
    _, gamma1, gamma2 = config.trajectory.bounds(config.horizon)
    out = []
    for i, r in enumerate(config.robots, 1):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            msg = gain_sufficiency_warning(r.estimator, gamma1, gamma2, config.n)
        if msg:
            out.append(f"robot {i}: {msg}")
    return out


def load_config(path, warn=True) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text, str(path), warn)


def demo_text() -> str:
    return resources.files("formation").joinpath("data/demo.yaml").read_text()


def load_demo(warn=True) -> ScenarioConfig:
    return parse_config(demo_text(), "demo.yaml", warn)


def to_dict(config: ScenarioConfig) -> dict:
    """Fully resolved scenario, every default spelled out, per robot."""
    topo = config.topology
    n = topo.n
    edges = [[i + 1, j + 1] for i in range(n) for j in range(i + 1, n) if topo.adjacency[i, j]]

    def axis(c):
        return {k: float(getattr(c, k)) for k in ("c0", "c1", "c2", "c3", "c4")}

    def dist(d):
        return {"kind": d.kind, "amplitude": d.amplitude, "omega": d.omega, "phase": d.phase}

    robots = []
    for r in config.robots:
        e = r.estimator
        entry = {
            "offset": [r.offset.dx, r.offset.dy],
            "pose": list(r.pose),
            "velocity": list(r.velocity),
        }
        if r.estimate is not None:
            entry["estimate"] = list(r.estimate)
        entry.update({
            "gains": {
                "estimator": {"k_p": [e.k_x, e.k_y, e.k_theta], "k_a1": e.k_a1, "k_b1": e.k_b1,
                              "k_a2": e.k_a2, "k_b2": e.k_b2},
                "kinematic": {"k1": r.kinematic.k1, "k2": r.kinematic.k2, "k3": r.kinematic.k3},
                "shunting": {"A": r.shunting.A, "B": r.shunting.B},
                "sliding": {"c_a": r.sliding.c_a, "c_b": r.sliding.c_b,
                            "boundary_layer": r.sliding.boundary_layer},
                "learner": {"k4": list(r.learner.k4), "k5": list(r.learner.k5),
                            "c_hat0": list(r.c_hat0)},
            },
            "plant": {"a": r.plant.a, "b": r.plant.b},
            "disturbances": {"d1": dist(r.d1), "d2": dist(r.d2)},
        })
        robots.append(entry)
    return {
        "dt": config.dt,
        "horizon": config.horizon,
        "decimation": config.decimation,
        "variant": config.variant.value,
        "switching": config.switching,
        "topology": {"followers": n, "edges": edges,
                     "leader_links": [float(v) for v in topo.leader_links]},
        "trajectory": {"x": axis(config.trajectory.x), "y": axis(config.trajectory.y)},
        "robots": robots,
    }


def dump_config(config: ScenarioConfig) -> str:
    return yaml.safe_dump(to_dict(config), sort_keys=False, default_flow_style=None)
