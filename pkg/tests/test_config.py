import math
import warnings

import numpy as np
import pytest

from formation.config import (ConfigError, demo_text, dump_config, load_config, load_demo,
                              parse_config)
from formation.sim import Variant, demo_scenario

MINIMAL = """\
topology:
  followers: 2
  edges: [[1, 2]]
  leader_links: [1, 0]
robots:
  - offset: [1.0, 0.0]
  - offset: [2.0, 1.0]
"""


def test_demo_loads_without_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        config = load_demo()
    assert config == demo_scenario()


def test_demo_encodes_reference_constants():
    config = load_demo()
    assert [(r.offset.dx, r.offset.dy) for r in config.robots] == [(3, 0), (4, 5), (4, -5)]
    for r in config.robots:
        assert r.estimator.as_row() == (15, 15, 15, 25, 1, 25, 1)
        assert (r.kinematic.k1, r.kinematic.k2, r.kinematic.k3) == (2, 3, 4)
        assert (r.shunting.A, r.shunting.B) == (2, 2)
        assert (r.sliding.c_a, r.sliding.c_b) == (3, 3)
        assert r.learner.k4 == (6, 50) and r.learner.k5 == (25, 50)
        assert (r.plant.a, r.plant.b) == (0.4, 10)
        assert r.d1.value(1.3) == 0.1
        assert r.d2.value(1.3) == pytest.approx(0.1 * math.cos(1.3))
    for t in (0.0, 1.0, 4.2):
        ref = config.trajectory.reference(t)
        assert ref.pose.x == pytest.approx(t)
        assert ref.pose.y == pytest.approx(3 + 0.4 * math.cos(-math.pi / 2 + t))


def test_minimal_config_fills_defaults():
    config = parse_config(MINIMAL)
    assert config.variant is Variant.BIOINSPIRED_LEARNING
    assert config.horizon == 20.0
    ref = config.trajectory.reference(0.0)
    assert config.robots[1].pose == pytest.approx(
        (ref.pose.x - 2.0 - 2.0, ref.pose.y - 1.0 + 1.0, ref.pose.theta + 0.3))
    assert config.robots[0].estimator.k_a2 == 25.0


def test_estimator_second_channel_defaults_to_first():
    text = MINIMAL + "gains:\n  estimator: {k_a1: 30.0, k_b1: 2.0}\n"
    r = parse_config(text).robots[0]
    assert (r.estimator.k_a2, r.estimator.k_b2) == (30.0, 2.0)


def test_per_robot_override():
    text = MINIMAL.replace("  - offset: [2.0, 1.0]",
                           "  - offset: [2.0, 1.0]\n    pose: [0, 0, 0]\n"
                           "    plant: {a: 0.5}\n    estimate: [0, 3, 0.1, 1, 0]")
    a, b = parse_config(text).robots
    assert (a.plant.a, b.plant.a, b.plant.b) == (0.4, 0.5, 10.0)
    assert b.pose == (0, 0, 0) and b.estimate == (0, 3, 0.1, 1, 0)
    assert a.estimate is None


def test_round_trip_through_dump():
    config = load_demo()
    assert parse_config(dump_config(config)) == config
    custom = parse_config(MINIMAL + "variant: backstepping\nswitching: explicit\n")
    assert parse_config(dump_config(custom)) == custom


def _error(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text, "scenario.yaml")
    return str(info.value)


def test_negative_gain_rejected_with_location():
    message = _error(demo_text().replace("k1: 2.0", "k1: -1"))
    assert "positive design constants" in message
    line = next(i for i, l in enumerate(demo_text().splitlines(), 1) if "k1: 2.0" in l)
    assert message.startswith(f"scenario.yaml:{line}:")


def test_disconnected_graph_rejected():
    message = _error(demo_text().replace("edges: [[1, 2], [1, 3], [2, 3]]", "edges: [[1, 2]]"))
    assert "not connected" in message and "connectivity assumption" in message


def test_missing_leader_access_rejected():
    message = _error(MINIMAL.replace("[1, 0]", "[0, 0]"))
    assert "no follower has access to the leader (connectivity assumption)" in message


def test_unknown_key_rejected():
    message = _error(demo_text().replace("k_a1: 25.0", "k_al: 25.0"))
    assert "k_al" in message


def test_parse_error_has_location():
    message = _error("topology: [1, 2\nrobots: []\n")
    assert message.startswith("scenario.yaml:") and "parse error" in message


@pytest.mark.parametrize("edit, fragment", [
    (("dt: 5.0e-5", "dt: 0.5"), "dt must lie"),
    (("variant: bioinspired+learning", "variant: fastest"), "variant must be one of"),
    (("switching: implicit", "switching: fuzzy"), "switching must be one of"),
    (("followers: 3", "followers: 2"), "must join two distinct followers"),
    (("shunting: {A: 2.0, B: 2.0}", "shunting: {A: 2.0, B: 2.0, D: 3.0}"), "D"),
    (("c_hat0: [0.1, 1.0]", "c_hat0: [0.0, 1.0]"), "initial parameter guess"),
    (("kind: constant", "kind: square"), "unknown disturbance kind"),
])
def test_invalid_values_rejected(edit, fragment):
    assert fragment in _error(demo_text().replace(*edit))


def test_stalling_leader_rejected():
    text = MINIMAL + "trajectory:\n  x: {c0: 1.0}\n  y: {c0: 2.0}\n"
    message = _error(text)
    assert "leader speed 0 m/s too small" in message
    assert message.startswith("scenario.yaml:9:")


def test_insufficient_switching_gain_warns():
    text = MINIMAL + "gains:\n  estimator: {k_a1: 0.01}\n"
    with pytest.warns(UserWarning, match="k_a1"):
        config = parse_config(text)
    assert config.robots[0].estimator.k_a1 == 0.01


def test_load_config_reports_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "nope.yaml")


def test_dump_is_plain_yaml_with_every_robot():
    text = dump_config(load_demo())
    assert text.count("offset:") == 3 and "k_a2" in text
    assert np.isfinite(parse_config(text).dt)
