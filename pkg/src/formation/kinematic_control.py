"""Tracking errors and velocity commands for one follower.

Two command laws share the angular channel: the shunting (bioinspired)
law drives the linear channel through a bounded neuron state, the plain
backstepping baseline feeds the driving error straight through.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from numba import njit


@dataclass(frozen=True)
class FormationOffset:
    dx: float
    dy: float


@dataclass(frozen=True)
class ShuntingParams:
    A: float = 2.0
    B: float = 2.0
    D: float = 2.0

    def __post_init__(self):
        if not (self.A > 0 and self.B > 0 and self.D > 0):
            raise ValueError("shunting parameters A, B, D must be positive design constants")
        if self.B != self.D:
            raise ValueError(f"shunting model requires B == D (got B={self.B}, D={self.D})")


@dataclass(frozen=True)
class KinematicGains:
    k1: float = 2.0
    k2: float = 3.0
    k3: float = 4.0

    def __post_init__(self):
        for name in ("k1", "k2", "k3"):
            if not getattr(self, name) > 0:
                raise ValueError(
                    f"kinematic gain {name}={getattr(self, name)} violates positive design constants")


@njit(cache=True)
def inertial_error(est_x, est_y, est_theta, x, y, theta, dx, dy):
    return est_x - x - dx, est_y - y - dy, est_theta - theta


@njit(cache=True)
def to_body_frame(e_x, e_y, e_theta, theta):
    """Rotate the planar error into the robot frame: (driving, lateral, heading)."""
    c = math.cos(theta)
    s = math.sin(theta)
    return c * e_x + s * e_y, -s * e_x + c * e_y, e_theta


@njit(cache=True)
def shunting_rate(vs, u, A, B):
    return -(A + abs(u)) * vs + B * u


def shunting_equilibrium(u, A, B):
    return B * u / (A + abs(u))


@njit(cache=True)
def bioinspired_command(est_v, est_w, ey_b, eth, vs, k1, k2, k3):
    v_cmd = est_v * math.cos(eth) + k1 * vs
    w_cmd = est_w + k2 * est_v * ey_b + k3 * est_v * math.sin(eth)
    return v_cmd, w_cmd


@njit(cache=True)
def backstepping_command(est_v, est_w, ex_b, ey_b, eth, k1, k2, k3):
    return bioinspired_command(est_v, est_w, ey_b, eth, ex_b, k1, k2, k3)


@njit(cache=True)
def error_dynamics_oracle(ex_b, ey_b, eth, v, w, est_v, est_w, est_theta,
                          dest_x, dest_y, dest_theta, theta):
    """Predicted time derivative of the body-frame error.

    ``v, w`` are the robot's actual velocities and ``dest_*`` the actual
    rates of the leader-pose estimate; the three correction terms measure
    how far those rates are from pure dead reckoning on (est_v, est_w).
    """
    c = math.cos(theta)
    s = math.sin(theta)
    gap_x = dest_x - est_v * math.cos(est_theta)
    gap_y = dest_y - est_v * math.sin(est_theta)
    om_x = gap_x * c + gap_y * s
    om_y = gap_y * c - gap_x * s
    om_th = dest_theta - est_w
    dx = w * ey_b - v + est_v * math.cos(eth) + om_x
    dy = -w * ex_b + est_v * math.sin(eth) + om_y
    dth = est_w - w + om_th
    return dx, dy, dth
