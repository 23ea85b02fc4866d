import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from formation.kinematic_control import (KinematicGains, ShuntingParams, backstepping_command,
                                         bioinspired_command, error_dynamics_oracle,
                                         inertial_error, shunting_equilibrium, shunting_rate,
                                         to_body_frame)

finite = st.floats(-50, 50, allow_nan=False)


def test_inertial_error_examples():
    assert inertial_error(4.0, 5.0, 0.3, 1.0, 3.0, 0.3, 3.0, 2.0) == (0.0, 0.0, 0.0)
    assert inertial_error(1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0) == (0.0, 0.0, 0.0)
    assert inertial_error(3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0) == (2.0, 0.0, 0.0)


def test_body_frame_examples():
    assert to_body_frame(0.7, -0.2, 0.1, 0.0) == (0.7, -0.2, 0.1)
    ex, ey, eth = to_body_frame(1.0, 0.0, 0.0, math.pi / 2)
    assert ex == pytest.approx(0.0, abs=1e-15)
    assert (ey, eth) == (-1.0, 0.0)


def test_shunting_examples():
    assert shunting_rate(0.0, 0.0, 2.0, 2.0) == 0.0
    assert shunting_rate(0.0, 1.0, 2.0, 2.0) == 2.0
    assert shunting_equilibrium(1.0, 2.0, 2.0) == pytest.approx(2.0 / 3.0)
    assert shunting_rate(2.0 / 3.0, 1.0, 2.0, 2.0) == pytest.approx(0.0, abs=1e-15)


def test_shunting_params_require_b_equal_d():
    with pytest.raises(ValueError, match="B == D"):
        ShuntingParams(2.0, 2.0, 3.0)
    with pytest.raises(ValueError, match="positive design constants"):
        ShuntingParams(0.0, 2.0, 2.0)


def test_kinematic_gains_positive():
    with pytest.raises(ValueError, match="positive design constants"):
        KinematicGains(k1=-1.0)


def test_bioinspired_examples():
    assert bioinspired_command(1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 3.0, 4.0)[0] == 1.0
    assert bioinspired_command(1.0, 0.5, 0.2, 0.0, 0.0, 2.0, 3.0, 4.0)[1] == pytest.approx(1.1)
    assert bioinspired_command(0.0, 0.0, 0.3, 0.4, 0.0, 2.0, 3.0, 4.0) == (0.0, 0.0)


def test_backstepping_examples():
    assert backstepping_command(0.0, 0.0, 4.0, 0.0, 0.0, 2.0, 3.0, 4.0)[0] == 8.0
    assert backstepping_command(1.0, 0.0, 0.5, 0.0, 0.0, 2.0, 3.0, 4.0)[0] == 2.0
    args = (0.8, 0.3, 0.0, 0.25, -0.1)
    assert (backstepping_command(*args, 2.0, 3.0, 4.0)
            == bioinspired_command(0.8, 0.3, 0.25, -0.1, 0.0, 2.0, 3.0, 4.0))


def test_oracle_examples():
    # pose estimate moving exactly by dead reckoning: no correction terms
    est_v, est_w, est_th = 1.2, 0.3, 0.4
    rates = (est_v * math.cos(est_th), est_v * math.sin(est_th), est_w)
    dx, dy, dth = error_dynamics_oracle(0.5, 0.0, 0.0, est_v, 0.7, est_v, est_w, est_th,
                                        *rates, 0.4)
    assert dx == pytest.approx(0.0, abs=1e-15)
    assert dth == pytest.approx(est_w - 0.7)
    assert dy == pytest.approx(-0.7 * 0.5)
    _, _, dth = error_dynamics_oracle(0.1, 0.2, 0.3, 1.0, est_w, est_v, est_w, est_th,
                                      *rates, 0.1)
    assert dth == 0.0


@settings(max_examples=200, deadline=None)
@given(finite, finite, st.floats(-10, 10))
def test_body_frame_is_isometry(ex, ey, theta):
    bx, by, _ = to_body_frame(ex, ey, 0.0, theta)
    assert math.hypot(bx, by) == pytest.approx(math.hypot(ex, ey), rel=1e-12, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(finite, finite, finite, finite, st.floats(-2, 2), st.floats(0.1, 5))
def test_bioinspired_command_bound(est_v, est_w, ey, eth, vs, k1):
    v_cmd, _ = bioinspired_command(est_v, est_w, ey, eth, vs, k1, 3.0, 4.0)
    assert abs(v_cmd) <= abs(est_v) + k1 * 2.0 + 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(-1.999, 1.999), st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=50))
def test_shunting_stays_bounded_under_piecewise_inputs(vs0, inputs):
    A = B = 2.0
    dt = 1e-3
    vs = vs0
    for u in inputs:
        for _ in range(20):
            k1 = shunting_rate(vs, u, A, B)
            k2 = shunting_rate(vs + 0.5 * dt * k1, u, A, B)
            k3 = shunting_rate(vs + 0.5 * dt * k2, u, A, B)
            k4 = shunting_rate(vs + dt * k3, u, A, B)
            vs += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            assert -B <= vs <= B


@settings(max_examples=50, deadline=None)
@given(st.floats(-100, 100))
def test_shunting_reaches_equilibrium(u):
    A = B = 2.0
    dt = 1e-3
    vs = 0.0
    for _ in range(int(round(20 / A / dt))):
        k1 = shunting_rate(vs, u, A, B)
        k2 = shunting_rate(vs + 0.5 * dt * k1, u, A, B)
        k3 = shunting_rate(vs + 0.5 * dt * k2, u, A, B)
        k4 = shunting_rate(vs + dt * k3, u, A, B)
        vs += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    assert vs == pytest.approx(shunting_equilibrium(u, A, B), abs=1e-6)
    assert np.isfinite(vs)
