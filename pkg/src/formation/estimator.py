"""Distributed estimation of the leader pose and velocities.

Each follower integrates its own estimate of the leader state from
neighbor estimates only. A follower's view of the network is one row of
the adjacency matrix plus its leader-access flag: estimates of robots with
a zero weight are never read, so rates are independent of them bit for bit.

Estimate vectors are laid out as ``(x, y, theta, v, w)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass(frozen=True)
class EstimatorGains:
    k_x: float = 15.0
    k_y: float = 15.0
    k_theta: float = 15.0
    k_a1: float = 25.0
    k_b1: float = 1.0
    k_a2: float = 25.0
    k_b2: float = 1.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not value > 0:
                raise ValueError(f"estimator gain {name}={value} violates positive design constants")

    def as_row(self):
        return (self.k_x, self.k_y, self.k_theta, self.k_a1, self.k_b1, self.k_a2, self.k_b2)


@dataclass(frozen=True)
class EstimatorState:
    x: float
    y: float
    theta: float
    v: float = 0.0
    w: float = 0.0

    def as_array(self):
        return np.array([self.x, self.y, self.theta, self.v, self.w])

    @classmethod
    def from_pose(cls, x, y, theta):
        """Start on the robot's own pose with zero velocity estimates."""
        return cls(x, y, theta, 0.0, 0.0)


@njit(cache=True)
def sgn(x):
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


@njit(cache=True)
def consensus_pose_error(own, estimates, adj_row, leader_link, leader_pose):
    """Neighborhood disagreement of the pose estimate.

    ``own`` is this robot's estimate, ``estimates`` the (n, >=3) snapshot of
    every robot's estimate. ``leader_pose`` is only read when
    ``leader_link`` is nonzero.
    """
    ex = 0.0
    ey = 0.0
    eth = 0.0
    for j in range(adj_row.shape[0]):
        a = adj_row[j]
        if a != 0.0:
            ex += a * (own[0] - estimates[j, 0])
            ey += a * (own[1] - estimates[j, 1])
            eth += a * (own[2] - estimates[j, 2])
    if leader_link != 0.0:
        ex += leader_link * (own[0] - leader_pose[0])
        ey += leader_link * (own[1] - leader_pose[1])
        eth += leader_link * (own[2] - leader_pose[2])
    return ex, ey, eth


@njit(cache=True)
def consensus_velocity_errors(own, estimates, adj_row, leader_link, v_r, w_r):
    """Neighborhood disagreement (e_v, e_w) of the velocity estimates."""
    e_v = 0.0
    e_w = 0.0
    for j in range(adj_row.shape[0]):
        a = adj_row[j]
        if a != 0.0:
            e_v += a * (own[3] - estimates[j, 3])
            e_w += a * (own[4] - estimates[j, 4])
    if leader_link != 0.0:
        e_v += leader_link * (own[3] - v_r)
        e_w += leader_link * (own[4] - w_r)
    return e_v, e_w


@njit(cache=True)
def pose_estimator_rate(own, pose_err, gains):
    # own velocity estimates only; neighbors never supply derivatives
    return (own[3] * math.cos(own[2]) - gains[0] * pose_err[0],
            own[3] * math.sin(own[2]) - gains[1] * pose_err[1],
            own[4] - gains[2] * pose_err[2])


@njit(cache=True)
def velocity_estimator_rate(e_v, e_w, gains):
    return (-gains[3] * sgn(e_v) - gains[4] * e_v,
            -gains[5] * sgn(e_w) - gains[6] * e_w)


@njit(cache=True)
def _linear_velocity_rate(e_v, e_w, sign_v, sign_w, gains):
    # switching part supplied by the caller, frozen over an integration step
    return (-gains[3] * sign_v - gains[4] * e_v,
            -gains[5] * sign_w - gains[6] * e_w)


def gain_sufficiency_warning(gains: EstimatorGains, gamma1, gamma2, n):
    """Message when the switching gains cannot dominate the leader accelerations.

    Below ``gamma * sqrt(n)`` the velocity estimators only guarantee a
    bounded (input-to-state stable) error, not convergence.
    """
    root_n = math.sqrt(n)
    problems = []
    if gamma1 > 0 and gains.k_a1 < gamma1 * root_n:
        problems.append(f"k_a1={gains.k_a1} < gamma1*sqrt(n)={gamma1 * root_n:.4g}")
    if gamma2 > 0 and gains.k_a2 < gamma2 * root_n:
        problems.append(f"k_a2={gains.k_a2} < gamma2*sqrt(n)={gamma2 * root_n:.4g}")
    if not problems:
        return None
    msg = "velocity estimator convergence not guaranteed: " + "; ".join(problems)
    warnings.warn(msg, stacklevel=2)
    return msg
