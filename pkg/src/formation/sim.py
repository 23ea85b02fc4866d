"""Deterministic closed-loop simulation of the leader-follower formation.

One step of length dt proceeds as a sampled-data loop:

1. leader reference at t;
2. every follower forms its consensus errors from the step-start snapshot;
3. the switching terms of the velocity estimators are frozen for the step;
4. body-frame tracking errors and the velocity command;
5. backward-difference command rate;
6. wheel torques; the command rate and the sliding term are held for the
   step, the division by the learned gains follows the RK4 stages;
7-9. estimator, shunting neuron, learner and plant states advance with
   classical RK4, each robot seeing its own stage state and its
   neighbors' step-start snapshot.

Near switching surfaces the scheme is therefore first order, elsewhere
fourth order.  With ``switching="implicit"`` (the default) each frozen sign
is replaced by its backward-Euler value sat(e / width), the width being the
distance the switching term alone moves e in one step; a discrete sgn would
otherwise chatter across the surface with a step-sized amplitude.  Inter-robot coupling only ever reads the snapshot, so a
robot's step depends on its neighbors and on nothing else.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .dynamic_control import EPS_C, LearnerGains, ParameterUnderflowError, SlidingGains
from .dynamic_control import _torques, command_rate, learner_rates, surface, switch
from .estimator import (EstimatorGains, _linear_velocity_rate, consensus_pose_error,
                        consensus_velocity_errors, pose_estimator_rate, sgn)
from .graph import Topology, validate
from .kinematic_control import (FormationOffset, KinematicGains, ShuntingParams,
                                backstepping_command, bioinspired_command, inertial_error,
                                shunting_rate, to_body_frame)
from .models import (EPS_SPEED, AxisCurve, DisturbanceSpec, LeaderTrajectory, RobotParams,
                     TrajectoryError, disturbance_value, dynamics_rate, kinematics_rate,
                     leader_state)


class Variant(str, enum.Enum):
    BACKSTEPPING = "backstepping"
    BIOINSPIRED = "bioinspired"
    BACKSTEPPING_LEARNING = "backstepping+learning"
    BIOINSPIRED_LEARNING = "bioinspired+learning"

    @property
    def bioinspired(self):
        return self in (Variant.BIOINSPIRED, Variant.BIOINSPIRED_LEARNING)

    @property
    def learning(self):
        return self in (Variant.BACKSTEPPING_LEARNING, Variant.BIOINSPIRED_LEARNING)


# Table column order
VARIANTS = (Variant.BACKSTEPPING, Variant.BIOINSPIRED,
            Variant.BACKSTEPPING_LEARNING, Variant.BIOINSPIRED_LEARNING)

# integrated state, one row per follower
STATE_COLUMNS = ("x", "y", "theta", "v", "w", "est_x", "est_y", "est_theta", "est_v", "est_w",
                 "vs", "v_hat", "w_hat", "a_hat", "b_hat", "int_v", "int_w")
_S = {name: k for k, name in enumerate(STATE_COLUMNS)}
_EST = 5
_VS = 10
_ZH = 11
_CH = 13
_INT = 15

CSV_COLUMNS = ("t", "robot_id", "x", "y", "theta", "v", "w", "est_x", "est_y", "est_theta",
               "est_v", "est_w", "ex_b", "ey_b", "eth", "v_cmd", "w_cmd", "tau_l", "tau_r",
               "a_hat", "b_hat", "vs", "d1", "d2")

# per-record, per-robot log layout: CSV columns after robot_id, then diagnostics
LOG_COLUMNS = CSV_COLUMNS[2:] + ("v_hat", "w_hat", "int_v", "int_w", "s_v", "s_w",
                                 "e_v", "e_w", "pe_x", "pe_y", "pe_theta",
                                 "v_cmd_rate", "w_cmd_rate")
_L = {name: k for k, name in enumerate(LOG_COLUMNS)}
LEADER_COLUMNS = ("x_r", "y_r", "theta_r", "v_r", "w_r")

OK, UNDERFLOW, DEGENERATE, NONFINITE = 0, 1, 2, 3

# the startup transient of the demo scenario needs a fine step to be
# resolved to within a couple of percent; logging stays at 100 Hz
DEFAULT_DT = 5e-5
DEFAULT_DECIMATION = 200
SWITCHING_MODES = ("implicit", "explicit")


class SimulationError(RuntimeError):
    def __init__(self, message, robot=None, t=None):
        super().__init__(message)
        self.robot = robot
        self.t = t


@dataclass(frozen=True)
class RobotConfig:
    offset: FormationOffset
    pose: tuple[float, float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    estimator: EstimatorGains = field(default_factory=EstimatorGains)
    kinematic: KinematicGains = field(default_factory=KinematicGains)
    shunting: ShuntingParams = field(default_factory=ShuntingParams)
    plant: RobotParams = field(default_factory=RobotParams)
    learner: LearnerGains = field(default_factory=LearnerGains)
    sliding: SlidingGains = field(default_factory=SlidingGains)
    # learning start point, and the frozen value for the non-learning variants
    c_hat0: tuple[float, float] = (0.1, 1.0)
    d1: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    d2: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    # initial leader estimate (x, y, theta, v, w); None starts from the
    # robot's own pose with zero velocities
    estimate: tuple[float, float, float, float, float] | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    topology: Topology
    robots: tuple[RobotConfig, ...]
    trajectory: LeaderTrajectory
    dt: float = DEFAULT_DT
    horizon: float = 20.0
    variant: Variant = Variant.BIOINSPIRED_LEARNING
    decimation: int = DEFAULT_DECIMATION
    switching: str = "implicit"

    @property
    def n(self):
        return len(self.robots)

    @property
    def n_steps(self):
        return int(round(self.horizon / self.dt))

    def with_variant(self, variant):
        return replace(self, variant=Variant(variant))

    def problems(self):
        """Every violated scenario invariant, as readable strings."""
        out = list(validate(self.topology).problems)
        if self.topology.n != self.n:
            out.append(f"topology has {self.topology.n} followers but {self.n} robots configured")
        if not (0 < self.dt <= 0.01):
            out.append(f"dt must lie in (0, 0.01], got {self.dt}")
        if not self.horizon > 0:
            out.append(f"horizon must be positive, got {self.horizon}")
        elif abs(self.n_steps * self.dt - self.horizon) > 1e-9 * max(1.0, self.horizon):
            out.append(f"horizon {self.horizon} is not a whole number of steps of {self.dt}")
        if self.switching not in SWITCHING_MODES:
            out.append(f"switching must be one of {SWITCHING_MODES}, got {self.switching!r}")
        if self.decimation < 1:
            out.append("decimation must be at least 1")
        elif self.horizon > 0 and self.dt > 0 and self.n_steps % self.decimation:
            out.append(f"{self.n_steps} steps are not a multiple of decimation {self.decimation}")
        for i, r in enumerate(self.robots, 1):
            if min(abs(c) for c in r.c_hat0) <= EPS_C:
                out.append(f"robot {i}: initial parameter guess must exceed {EPS_C} in magnitude")
        if self.horizon > 0:
            v_min, _, _ = self.trajectory.bounds(self.horizon)
            if v_min <= EPS_SPEED:
                out.append("leader linear velocity must stay positive over the horizon "
                           f"(min sampled speed {v_min:.3g} m/s)")
        return out

    def validate(self):
        problems = self.problems()
        if problems:
            raise ValueError("invalid scenario: " + "; ".join(problems))
        return self


def demo_scenario(variant=Variant.BIOINSPIRED_LEARNING, dt=DEFAULT_DT, horizon=20.0,
                   decimation=DEFAULT_DECIMATION, perturbation=(-2.0, 1.0, 0.3)) -> ScenarioConfig:
    """Three followers behind a weaving leader with the reference gains,
    plant and disturbances.

    The communication graph and the initial poses are assumed: a leader
    link to follower 1 only, a complete follower triangle, and each
    follower displaced from its formation slot by ``perturbation``.
    """
    topology = Topology.from_edges(3, [(1, 2), (1, 3), (2, 3)], (1, 0, 0))
    trajectory = LeaderTrajectory(AxisCurve(c1=1.0), AxisCurve(c0=3.0, c2=0.4, c3=1.0,
                                                                c4=-math.pi / 2))
    ref = trajectory.reference(0.0)
    robots = []
    for dx, dy in ((3.0, 0.0), (4.0, 5.0), (4.0, -5.0)):
        pose = (ref.pose.x - dx + perturbation[0], ref.pose.y - dy + perturbation[1],
                ref.pose.theta + perturbation[2])
        robots.append(RobotConfig(
            offset=FormationOffset(dx, dy), pose=pose,
            d1=DisturbanceSpec("constant", 0.1),
            d2=DisturbanceSpec("sinusoid", 0.1, 1.0, 0.0)))
    return ScenarioConfig(topology, tuple(robots), trajectory, dt, horizon, Variant(variant),
                          decimation)


@dataclass
class SimState:
    """Everything carried from one step to the next."""

    X: np.ndarray
    prev_cmd: np.ndarray
    first: bool = True


def initial_state(config: ScenarioConfig) -> SimState:
    X = np.zeros((config.n, len(STATE_COLUMNS)))
    for i, r in enumerate(config.robots):
        X[i, 0:3] = r.pose
        X[i, 3:5] = r.velocity
        if r.estimate is None:
            X[i, _EST:_EST + 3] = r.pose
        else:
            X[i, _EST:_EST + 5] = r.estimate
        X[i, _ZH:_ZH + 2] = r.velocity
        X[i, _CH:_CH + 2] = r.c_hat0
    return SimState(X, np.zeros((config.n, 2)), True)


def _pack(config: ScenarioConfig):
    rs = config.robots
    arr = lambda rows: np.ascontiguousarray(np.array(rows, dtype=float))  # noqa: E731
    return (
        arr(config.topology.adjacency),
        arr(config.topology.leader_links),
        arr([(r.offset.dx, r.offset.dy) for r in rs]),
        arr([r.estimator.as_row() for r in rs]),
        arr([(r.kinematic.k1, r.kinematic.k2, r.kinematic.k3) for r in rs]),
        arr([(r.shunting.A, r.shunting.B) for r in rs]),
        arr([(r.plant.a, r.plant.b) for r in rs]),
        arr([(r.d1.as_row(), r.d2.as_row()) for r in rs]),
        arr([r.learner.k4 + r.learner.k5 for r in rs]),
        arr([(r.sliding.c_a, r.sliding.c_b, r.sliding.boundary_layer) for r in rs]),
        arr([r.c_hat0 for r in rs]),
        config.trajectory.coeffs(),
        config.variant.bioinspired,
        config.variant.learning,
        config.switching == "implicit",
    )


@njit(cache=True)
def _control(X, t, dt, first, prev_cmd, P, ctl, held):
    """Sampled controller outputs at the start of a step.

    ``ctl`` receives the logged quantities, ``held`` the values frozen over
    the step: the estimator switching terms and the torque-law numerators
    (command rate plus sliding term) of both channels.  Returns (status, robot).
    """
    (adj, links, offsets, est_g, kin_g, shunt, plant, dist, lg, slide, c_frozen, traj,
     bio, learning, implicit) = P
    xr, yr, thr, vr, wr, s2 = leader_state(traj, t)
    if s2 <= EPS_SPEED * EPS_SPEED:
        return DEGENERATE, -1
    leader = np.array((xr, yr, thr))
    n = X.shape[0]
    est = X[:, _EST:_EST + 5]
    for i in range(n):
        own = est[i]
        pe = consensus_pose_error(own, est, adj[i], links[i], leader)
        e_v, e_w = consensus_velocity_errors(own, est, adj[i], links[i], vr, wr)
        ex, ey, eth = inertial_error(own[0], own[1], own[2], X[i, 0], X[i, 1], X[i, 2],
                                     offsets[i, 0], offsets[i, 1])
        exb, eyb, ethb = to_body_frame(ex, ey, eth, X[i, 2])
        k1, k2, k3 = kin_g[i, 0], kin_g[i, 1], kin_g[i, 2]
        if bio:
            v_cmd, w_cmd = bioinspired_command(own[3], own[4], eyb, ethb, X[i, _VS], k1, k2, k3)
        else:
            v_cmd, w_cmd = backstepping_command(own[3], own[4], exb, eyb, ethb, k1, k2, k3)
        vd, wd = command_rate(prev_cmd[i, 0], prev_cmd[i, 1], v_cmd, w_cmd, dt, first)
        if learning:
            a_hat, b_hat = X[i, _CH], X[i, _CH + 1]
        else:
            a_hat, b_hat = c_frozen[i, 0], c_frozen[i, 1]
        if abs(a_hat) <= EPS_C or abs(b_hat) <= EPS_C:
            return UNDERFLOW, i
        width_v = slide[i, 2]
        width_w = slide[i, 2]
        if implicit and width_v == 0.0:
            width_v = slide[i, 0] * dt
            width_w = slide[i, 1] * dt
        tau_l, tau_r = _torques(vd, wd, v_cmd - X[i, 3], w_cmd - X[i, 4], a_hat, b_hat,
                                slide[i, 0], slide[i, 1], width_v, width_w)
        ev_v = X[i, _ZH] - X[i, 3]
        ev_w = X[i, _ZH + 1] - X[i, 4]
        s_v, s_w = surface(ev_v, ev_w, X[i, _INT], X[i, _INT + 1], lg[i, 0], lg[i, 1])
        d1 = disturbance_value(int(dist[i, 0, 0]), dist[i, 0, 1], dist[i, 0, 2], dist[i, 0, 3], t)
        d2 = disturbance_value(int(dist[i, 1, 0]), dist[i, 1, 1], dist[i, 1, 2], dist[i, 1, 3], t)

        if implicit:
            slope = links[i]
            for j in range(n):
                slope += adj[i, j]
            held[i, 0] = switch(e_v, slope * est_g[i, 3] * dt)
            held[i, 1] = switch(e_w, slope * est_g[i, 5] * dt)
        else:
            held[i, 0] = sgn(e_v)
            held[i, 1] = sgn(e_w)
        held[i, 2] = vd + slide[i, 0] * switch(v_cmd - X[i, 3], width_v)
        held[i, 3] = wd + slide[i, 1] * switch(w_cmd - X[i, 4], width_w)
        prev_cmd[i, 0] = v_cmd
        prev_cmd[i, 1] = w_cmd

        row = ctl[i]
        for k in range(10):
            row[k] = X[i, k]
        row[10] = exb
        row[11] = eyb
        row[12] = ethb
        row[13] = v_cmd
        row[14] = w_cmd
        row[15] = tau_l
        row[16] = tau_r
        row[17] = a_hat
        row[18] = b_hat
        row[19] = X[i, _VS]
        row[20] = d1
        row[21] = d2
        row[22] = X[i, _ZH]
        row[23] = X[i, _ZH + 1]
        row[24] = X[i, _INT]
        row[25] = X[i, _INT + 1]
        row[26] = s_v
        row[27] = s_w
        row[28] = e_v
        row[29] = e_w
        row[30] = pe[0]
        row[31] = pe[1]
        row[32] = pe[2]
        row[33] = vd
        row[34] = wd
    return OK, -1


@njit(cache=True)
def _rates(Xs, snap, t, h, P, held, out):
    """Continuous-state rates at stage time t, h after the step start.

    Neighbors are read from ``snap`` only.
    """
    (adj, links, offsets, est_g, kin_g, shunt, plant, dist, lg, slide, c_frozen, traj,
     bio, learning, implicit) = P
    xr, yr, thr, vr, wr, _ = leader_state(traj, t)
    leader = np.array((xr, yr, thr))
    # neighbors' pose estimates dead-reckoned from the snapshot to the stage time
    n = Xs.shape[0]
    est_snap = snap[:, _EST:_EST + 5].copy()
    for j in range(n):
        v_j = est_snap[j, 3]
        th_j = est_snap[j, 2]
        est_snap[j, 0] += h * v_j * math.cos(th_j)
        est_snap[j, 1] += h * v_j * math.sin(th_j)
        est_snap[j, 2] += h * est_snap[j, 4]
    for i in range(n):
        x = Xs[i]
        own = x[_EST:_EST + 5]
        r = out[i]
        r[0], r[1], r[2] = kinematics_rate(x[2], x[3], x[4])
        d1 = disturbance_value(int(dist[i, 0, 0]), dist[i, 0, 1], dist[i, 0, 2], dist[i, 0, 3], t)
        d2 = disturbance_value(int(dist[i, 1, 0]), dist[i, 1, 1], dist[i, 1, 2], dist[i, 1, 3], t)
        # torques follow the stage gains; only the numerators are held
        if learning:
            tau_a = held[i, 2] / x[_CH]
            tau_b = held[i, 3] / x[_CH + 1]
        else:
            tau_a = held[i, 2] / c_frozen[i, 0]
            tau_b = held[i, 3] / c_frozen[i, 1]
        r[3], r[4] = dynamics_rate(0.5 * (tau_a - tau_b), 0.5 * (tau_a + tau_b),
                                   plant[i, 0], plant[i, 1], d1, d2)

        pe = consensus_pose_error(own, est_snap, adj[i], links[i], leader)
        r[5], r[6], r[7] = pose_estimator_rate(own, pe, est_g[i])
        e_v, e_w = consensus_velocity_errors(own, est_snap, adj[i], links[i], vr, wr)
        r[8], r[9] = _linear_velocity_rate(e_v, e_w, held[i, 0], held[i, 1], est_g[i])

        ex, ey, eth = inertial_error(own[0], own[1], own[2], x[0], x[1], x[2],
                                     offsets[i, 0], offsets[i, 1])
        exb, _, _ = to_body_frame(ex, ey, eth, x[2])
        r[10] = shunting_rate(x[_VS], exb, shunt[i, 0], shunt[i, 1])

        ev_v = x[_ZH] - x[3]
        ev_w = x[_ZH + 1] - x[4]
        s_v, s_w = surface(ev_v, ev_w, x[_INT], x[_INT + 1], lg[i, 0], lg[i, 1])
        dzv, dzw, da, db = learner_rates(s_v, s_w, ev_v, ev_w, tau_a, tau_b,
                                         x[_CH], x[_CH + 1], lg[i, 0], lg[i, 1],
                                         lg[i, 2], lg[i, 3])
        r[11] = dzv
        r[12] = dzw
        if learning:
            r[13] = da
            r[14] = db
        else:
            r[13] = 0.0
            r[14] = 0.0
        r[15] = ev_v
        r[16] = ev_w


@njit(cache=True)
def _advance(X, t, dt, P, held):
    """One RK4 step of all continuous states; returns the new state array."""
    snap = X.copy()
    k1 = np.empty_like(X)
    k2 = np.empty_like(X)
    k3 = np.empty_like(X)
    k4 = np.empty_like(X)
    _rates(X, snap, t, 0.0, P, held, k1)
    _rates(X + 0.5 * dt * k1, snap, t + 0.5 * dt, 0.5 * dt, P, held, k2)
    _rates(X + 0.5 * dt * k2, snap, t + 0.5 * dt, 0.5 * dt, P, held, k3)
    _rates(X + dt * k3, snap, t + dt, dt, P, held, k4)
    return X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True, nogil=True)
def _simulate(X0, prev_cmd, first, n_steps, dt, decimation, P, log, leader_log):
    """Run the loop, logging every ``decimation`` steps.

    Returns (status, robot, step).
    """
    X = X0.copy()
    n = X.shape[0]
    ctl = np.empty((n, log.shape[2]))
    held = np.empty((n, 4))
    traj = P[11]
    rec = 0
    for k in range(n_steps + 1):
        t = k * dt
        status, robot = _control(X, t, dt, first, prev_cmd, P, ctl, held)
        if status != OK:
            return status, robot, k
        first = False
        if k % decimation == 0:
            log[rec] = ctl
            xr, yr, thr, vr, wr, _ = leader_state(traj, t)
            leader_log[rec, 0] = xr
            leader_log[rec, 1] = yr
            leader_log[rec, 2] = thr
            leader_log[rec, 3] = vr
            leader_log[rec, 4] = wr
            rec += 1
        if k == n_steps:
            break
        X = _advance(X, t, dt, P, held)
        for i in range(n):
            for c in range(X.shape[1]):
                if not math.isfinite(X[i, c]):
                    return NONFINITE, i, k
    return OK, -1, n_steps


def _raise_for(status, robot, k, dt):
    t = k * dt
    if status == UNDERFLOW:
        raise ParameterUnderflowError(
            f"robot {robot + 1}: learned channel gain fell below {EPS_C} at t={t:.6g}")
    if status == DEGENERATE:
        raise TrajectoryError(f"leader speed degenerate at t={t:.6g}")
    if status == NONFINITE:
        raise SimulationError(f"robot {robot + 1}: state became non-finite at t={t:.6g}",
                              robot + 1, t)


def step(state: SimState, config: ScenarioConfig, t: float) -> tuple[SimState, np.ndarray]:
    """Advance every robot by one dt from time t.

    Returns the next state and the (n, len(LOG_COLUMNS)) controller record
    sampled at t.
    """
    P = _pack(config)
    ctl = np.empty((config.n, len(LOG_COLUMNS)))
    held = np.empty((config.n, 4))
    prev_cmd = state.prev_cmd.copy()
    status, robot = _control(state.X, float(t), config.dt, state.first, prev_cmd, P, ctl, held)
    if status != OK:
        _raise_for(status, robot, t / config.dt, config.dt)
    X = _advance(state.X, float(t), config.dt, P, held)
    return SimState(X, prev_cmd, False), ctl


@dataclass
class Trace:
    t: np.ndarray            # (K,)
    data: np.ndarray         # (K, n, len(LOG_COLUMNS))
    leader: np.ndarray       # (K, 5)
    dt_log: float

    @property
    def n(self):
        return self.data.shape[1]

    def __getitem__(self, name):
        """(K, n) history of one logged column, or (K,) of a leader column."""
        if name in _L:
            return self.data[:, :, _L[name]]
        return self.leader[:, LEADER_COLUMNS.index(name)]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            width = len(CSV_COLUMNS) - 2
            for k, t in enumerate(self.t):
                for i in range(self.n):
                    vals = ",".join(repr(float(v)) for v in self.data[k, i, :width])
                    fh.write(f"{float(t)!r},{i + 1},{vals}\n")


@dataclass
class MetricsReport:
    variant: str
    per_robot: list[dict]

    def to_text(self):
        lines = [f"variant = {self.variant}"]
        for i, m in enumerate(self.per_robot, 1):
            for key, value in m.items():
                lines.append(f"robot{i}.{key} = {value!r}")
        return "\n".join(lines) + "\n"


def total_velocity_error(trace: Trace, robot: int) -> float:
    """Left Riemann sum of |v_cmd - v| + |w_cmd - w| on the logging grid.

    ``robot`` is 0-based.
    """
    err = (np.abs(trace["v_cmd"][:, robot] - trace["v"][:, robot])
           + np.abs(trace["w_cmd"][:, robot] - trace["w"][:, robot]))
    return float(np.sum(err[:-1]) * trace.dt_log)


def estimator_errors(trace: Trace):
    """(pose error norm, |e_alpha|, |e_beta|), each (K, n), against the true leader."""
    ex = trace["est_x"] - trace["x_r"][:, None]
    ey = trace["est_y"] - trace["y_r"][:, None]
    eth = trace["est_theta"] - trace["theta_r"][:, None]
    pose = np.sqrt(ex ** 2 + ey ** 2 + eth ** 2)
    return (pose, np.abs(trace["est_v"] - trace["v_r"][:, None]),
            np.abs(trace["est_w"] - trace["w_r"][:, None]))


def formation_errors(trace: Trace, config: ScenarioConfig):
    dx = np.array([r.offset.dx for r in config.robots])
    dy = np.array([r.offset.dy for r in config.robots])
    ex = trace["x_r"][:, None] - trace["x"] - dx
    ey = trace["y_r"][:, None] - trace["y"] - dy
    eth = trace["theta_r"][:, None] - trace["theta"]
    return np.sqrt(ex ** 2 + ey ** 2 + eth ** 2)


def metrics(trace: Trace, config: ScenarioConfig) -> MetricsReport:
    pose, e_alpha, e_beta = estimator_errors(trace)
    form = formation_errors(trace, config)
    out = []
    for i, r in enumerate(config.robots):
        out.append({
            "total_velocity_error": total_velocity_error(trace, i),
            "max_abs_v_cmd": float(np.max(np.abs(trace["v_cmd"][:, i]))),
            "initial_abs_v_cmd": float(abs(trace["v_cmd"][0, i])),
            "final_pose_estimation_error": float(pose[-1, i]),
            "final_abs_e_alpha": float(e_alpha[-1, i]),
            "final_abs_e_beta": float(e_beta[-1, i]),
            "final_abs_a_error": float(abs(trace["a_hat"][-1, i] - r.plant.a)),
            "final_abs_b_error": float(abs(trace["b_hat"][-1, i] - r.plant.b)),
            "final_formation_error": float(form[-1, i]),
        })
    return MetricsReport(config.variant.value, out)


def simulate(config: ScenarioConfig, validate_config=True) -> Trace:
    if validate_config:
        config.validate()
    n_steps = config.n_steps
    n_rec = n_steps // config.decimation + 1
    state = initial_state(config)
    log = np.zeros((n_rec, config.n, len(LOG_COLUMNS)))
    leader_log = np.zeros((n_rec, len(LEADER_COLUMNS)))
    status, robot, k = _simulate(state.X, state.prev_cmd, True, n_steps, config.dt,
                                 config.decimation, _pack(config), log, leader_log)
    _raise_for(status, robot, k, config.dt)
    t = np.arange(n_rec) * (config.decimation * config.dt)
    return Trace(t, log, leader_log, config.decimation * config.dt)


def run(config: ScenarioConfig, validate_config=True) -> tuple[Trace, MetricsReport]:
    trace = simulate(config, validate_config)
    return trace, metrics(trace, config)


@dataclass
class Comparison:
    """Total velocity error per variant (rows, VARIANTS order) and follower (columns)."""

    table: np.ndarray
    traces: dict

    @property
    def ordering_ok(self):
        """Per follower: bioinspired+learning smallest and backstepping largest."""
        out = []
        for i in range(self.table.shape[1]):
            col = self.table[:, i]
            best = col[3] < min(col[0], col[1], col[2])
            worst = col[0] > max(col[1], col[2], col[3])
            out.append(bool(best and worst))
        return out

    def to_text(self):
        header = "follower," + ",".join(v.value for v in VARIANTS)
        rows = [header]
        for i in range(self.table.shape[1]):
            rows.append(f"{i + 1}," + ",".join(f"{x:.4f}" for x in self.table[:, i]))
        verdict = ["", "ordering (bioinspired+learning smallest, backstepping largest):"]
        for i, ok in enumerate(self.ordering_ok, 1):
            verdict.append(f"follower {i}: {'match' if ok else 'MISMATCH'}")
        return "\n".join(rows + verdict) + "\n"


def compare_variants(config: ScenarioConfig, parallel=False) -> Comparison:
    config.validate()
    configs = [config.with_variant(v) for v in VARIANTS]
    if parallel:
        with ThreadPoolExecutor(max_workers=len(configs)) as pool:
            traces = list(pool.map(lambda c: simulate(c, False), configs))
    else:
        traces = [simulate(c, False) for c in configs]
    table = np.array([[total_velocity_error(tr, i) for i in range(config.n)] for tr in traces])
    return Comparison(table, dict(zip((v.value for v in VARIANTS), traces)))
