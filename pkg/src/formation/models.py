"""Robot plant, disturbances and the virtual leader trajectory.

The numeric kernels take and return plain floats so that the compiled
simulation loop can call them directly; the dataclasses here are the
configuration-side views of the same quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

EPS_SPEED = 1e-6

CONSTANT = 0
SINUSOID = 1
_KINDS = {"constant": CONSTANT, "sinusoid": SINUSOID}


class TrajectoryError(ValueError):
    """Leader speed too small for the angular-velocity formula."""


class Pose(NamedTuple):
    x: float
    y: float
    theta: float


class LeaderReference(NamedTuple):
    pose: Pose
    v: float
    w: float


@dataclass(frozen=True)
class RobotParams:
    """Channel gains a = 1/(m r) and b = l/(I r) of the reduced dynamics."""

    a: float = 0.4
    b: float = 10.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"robot parameters must be positive, got a={self.a}, b={self.b}")


@dataclass(frozen=True)
class DisturbanceSpec:
    kind: str = "constant"
    amplitude: float = 0.0
    omega: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if self.amplitude < 0:
            raise ValueError("disturbance amplitude must be non-negative")

    def as_row(self):
        return (float(_KINDS[self.kind]), self.amplitude, self.omega, self.phase)

    def value(self, t):
        return disturbance_value(_KINDS[self.kind], self.amplitude, self.omega, self.phase, t)


@dataclass(frozen=True)
class AxisCurve:
    """c0 + c1*t + c2*cos(c3*t + c4)."""

    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0
    c4: float = 0.0

    def coeffs(self):
        return (self.c0, self.c1, self.c2, self.c3, self.c4)


@dataclass(frozen=True)
class LeaderTrajectory:
    x: AxisCurve
    y: AxisCurve

    def coeffs(self):
        return np.array([self.x.coeffs(), self.y.coeffs()], dtype=float)

    def reference(self, t) -> LeaderReference:
        return leader_reference(self.coeffs(), t)

    def bounds(self, horizon, samples=2001):
        """Sampled (min v_r, max |dv_r/dt|, max |dw_r/dt|) over [0, horizon]."""
        c = self.coeffs()
        v_min, g1, g2 = math.inf, 0.0, 0.0
        for t in np.linspace(0.0, horizon, samples):
            v, dv, dw = _speed_and_rates(c, float(t))
            v_min = min(v_min, v)
            g1 = max(g1, abs(dv))
            g2 = max(g2, abs(dw))
        return v_min, g1, g2


@njit(cache=True)
def kinematics_rate(theta, v, w):
    """Unicycle pose rate (dx/dt, dy/dt, dtheta/dt)."""
    return v * math.cos(theta), v * math.sin(theta), w


@njit(cache=True)
def dynamics_rate(tau_l, tau_r, a, b, d1, d2):
    """Body velocity rate of the two-channel plant.

    dv/dt = a (tau_L + tau_R) + d1,  dw/dt = b (tau_R - tau_L) + d2.
    A stronger right wheel turns the robot counter-clockwise (positive w).
    """
    return a * (tau_l + tau_r) + d1, b * (tau_r - tau_l) + d2


@njit(cache=True)
def disturbance_value(kind, amplitude, omega, phase, t):
    if kind == CONSTANT:
        return amplitude
    return amplitude * math.cos(omega * t + phase)


@njit(cache=True)
def _axis(c, t):
    """Value and first three derivatives of one trajectory axis."""
    arg = c[3] * t + c[4]
    ca = math.cos(arg)
    sa = math.sin(arg)
    p = c[0] + c[1] * t + c[2] * ca
    d1 = c[1] - c[2] * c[3] * sa
    d2 = -c[2] * c[3] * c[3] * ca
    d3 = c[2] * c[3] * c[3] * c[3] * sa
    return p, d1, d2, d3


@njit(cache=True)
def leader_state(coeffs, t):
    """(x, y, theta, v, w, speed^2) of the leader at time t.

    The caller checks speed^2 against EPS_SPEED**2; the kernel itself never
    raises so it can run inside the compiled loop.
    """
    x, xd, xdd, _ = _axis(coeffs[0], t)
    y, yd, ydd, _ = _axis(coeffs[1], t)
    s2 = xd * xd + yd * yd
    theta = math.atan2(yd, xd)
    v = math.sqrt(s2)
    if s2 > 0.0:
        w = (ydd * xd - xdd * yd) / s2
    else:
        w = 0.0
    return x, y, theta, v, w, s2


@njit(cache=True)
def _speed_and_rates(coeffs, t):
    _, xd, xdd, xddd = _axis(coeffs[0], t)
    _, yd, ydd, yddd = _axis(coeffs[1], t)
    s2 = xd * xd + yd * yd
    v = math.sqrt(s2)
    dv = (xd * xdd + yd * ydd) / v if v > 0.0 else 0.0
    num = ydd * xd - xdd * yd
    dnum = yddd * xd - xddd * yd
    dw = (dnum * s2 - num * 2.0 * (xd * xdd + yd * ydd)) / (s2 * s2) if s2 > 0.0 else 0.0
    return v, dv, dw


def leader_reference(coeffs, t) -> LeaderReference:
    x, y, theta, v, w, s2 = leader_state(np.asarray(coeffs, dtype=float), float(t))
    if s2 <= EPS_SPEED * EPS_SPEED:
        raise TrajectoryError(f"leader speed {math.sqrt(s2):.3g} m/s too small at t={t}")
    return LeaderReference(Pose(x, y, theta), v, w)
