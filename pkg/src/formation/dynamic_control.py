"""Online parameter learning and sliding-mode wheel torques.

Two-vectors are split into their linear (v) and angular (w) channels; the
torque matrix is diagonal with entries tau_a = tau_L + tau_R and
tau_b = tau_R - tau_L (positive tau_b turns counter-clockwise).
"""

from __future__ import annotations

from dataclasses import dataclass

from numba import njit

EPS_C = 1e-3


class ParameterUnderflowError(ArithmeticError):
    """A learned channel gain collapsed toward zero (learner divergence)."""


@dataclass(frozen=True)
class LearnerGains:
    k4: tuple[float, float] = (6.0, 50.0)
    k5: tuple[float, float] = (25.0, 50.0)

    def __post_init__(self):
        for name in ("k4", "k5"):
            diag = getattr(self, name)
            if len(diag) != 2 or not all(g > 0 for g in diag):
                raise ValueError(f"{name}={diag} violates positive design constants (positive diagonal)")


@dataclass(frozen=True)
class SlidingGains:
    c_a: float = 3.0
    c_b: float = 3.0
    boundary_layer: float = 0.0

    def __post_init__(self):
        if not (self.c_a > 0 and self.c_b > 0):
            raise ValueError("sliding gains c_a, c_b must be positive design constants")
        if self.boundary_layer < 0:
            raise ValueError("boundary layer width must be non-negative")


@njit(cache=True)
def switch(x, width):
    """sgn(x) with sgn(0) = 0, or a linear saturation of half-width ``width``."""
    if width > 0.0:
        r = x / width
        return min(1.0, max(-1.0, r))
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


@njit(cache=True)
def surface(ev_v, ev_w, int_v, int_w, k4_v, k4_w):
    return k4_v * int_v + ev_v, k4_w * int_w + ev_w


@njit(cache=True)
def learner_rates(s_v, s_w, ev_v, ev_w, tau_a, tau_b, a_hat, b_hat, k4_v, k4_w, k5_v, k5_w):
    """Rates of the velocity model and of the parameter estimates.

    Returns (dv_hat, dw_hat, da_hat, db_hat).
    """
    dz_v = tau_a * a_hat - k4_v * ev_v - k5_v * s_v
    dz_w = tau_b * b_hat - k4_w * ev_w - k5_w * s_w
    return dz_v, dz_w, -tau_a * k4_v * s_v, -tau_b * k4_w * s_w


@njit(cache=True)
def _torques(v_cmd_rate, w_cmd_rate, v_err, w_err, a_hat, b_hat, c_a, c_b, width_v, width_w):
    lin = (v_cmd_rate + c_a * switch(v_err, width_v)) / (2.0 * a_hat)
    ang = (w_cmd_rate + c_b * switch(w_err, width_w)) / (2.0 * b_hat)
    return lin - ang, lin + ang


def torque_command(v_cmd_rate, w_cmd_rate, v_err, w_err, a_hat, b_hat, c_a, c_b,
                   boundary_layer=0.0):
    """Wheel torques (tau_L, tau_R) from the learned channel gains.

    ``v_err = v_cmd - v`` and ``w_err = w_cmd - w``.
    """
    if abs(a_hat) <= EPS_C or abs(b_hat) <= EPS_C:
        raise ParameterUnderflowError(
            f"learned gains too small: a_hat={a_hat:.3g}, b_hat={b_hat:.3g}")
    return _torques(v_cmd_rate, w_cmd_rate, v_err, w_err, a_hat, b_hat, c_a, c_b,
                    boundary_layer, boundary_layer)


def fixed_parameter_controller(v_cmd_rate, w_cmd_rate, v_err, w_err, c_frozen, c_a, c_b,
                               boundary_layer=0.0):
    """Same law as :func:`torque_command` with gains frozen at ``c_frozen``."""
    a_hat, b_hat = c_frozen
    return torque_command(v_cmd_rate, w_cmd_rate, v_err, w_err, a_hat, b_hat, c_a, c_b,
                          boundary_layer)


@njit(cache=True)
def command_rate(prev_v, prev_w, v_cmd, w_cmd, dt, first):
    """Backward-difference derivative of the velocity command; zero on the first step."""
    if first:
        return 0.0, 0.0
    return (v_cmd - prev_v) / dt, (w_cmd - prev_w) / dt
