import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqconic.errors import DomainError
from seqconic.vehicle import (
    IDX_OM,
    IDX_RX,
    IDX_TH,
    PhaseTag,
    RocketControl,
    RocketParams,
    RocketState,
    eval_dilated,
    eval_dynamics,
    eval_jacobians,
)

from conftest import envelope_point

P = RocketParams()

# frozen output of an independent symbolic transcription of the equations of
# motion, evaluated at m=95e3, r=(800,50), v=(-80,5), theta=1.2, omega=0.05,
# T=2e6, delta=0.05, powered phase
ENVELOPE_X = np.array([95000.0, 800.0, 50.0, -80.0, 5.0, 1.2, 0.05])
ENVELOPE_U = np.array([2e6, 0.05])
ENVELOPE_F = np.array(
    [
        -617.79878293639762,
        -80.0,
        5.0,
        4.7767457514399345,
        -17.419244484229473,
        0.05,
        -0.48923157543321952,
    ]
)


def test_coast_at_rest_feels_gravity_only():
    x = np.array([100e3, 1000.0, 100.0, 0.0, 0.0, 1.0, 0.0])
    u = np.array([0.0, 0.0])
    f = eval_dynamics(x, u, P, PhaseTag.COAST)
    assert np.allclose(f, [0, 0, 0, -9.81, 0, 0, 0], atol=0.0)


def test_upright_thrust_is_vertical():
    x = np.array([90e3, 500.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    u = np.array([1.5e6, 0.0])
    f = eval_dynamics(x, u, P, PhaseTag.LOW_THRUST)
    assert f[3] == pytest.approx(1.5e6 / 90e3 - 9.81, rel=1e-14)
    assert f[4] == 0.0


def test_envelope_point_matches_symbolic_transcription():
    f = eval_dynamics(ENVELOPE_X, ENVELOPE_U, P, PhaseTag.HIGH_THRUST)
    np.testing.assert_allclose(f, ENVELOPE_F, rtol=1e-13)


def test_dataclass_round_trip_matches_arrays():
    xs = RocketState.from_array(ENVELOPE_X)
    us = RocketControl.from_array(ENVELOPE_U)
    f = eval_dynamics(xs, us, P, PhaseTag.HIGH_THRUST)
    np.testing.assert_allclose(f, ENVELOPE_F, rtol=1e-13)
    np.testing.assert_array_equal(xs.as_array(), ENVELOPE_X)
    np.testing.assert_array_equal(us.as_array(), ENVELOPE_U)


def test_domain_errors():
    x = ENVELOPE_X.copy()
    x[0] = 0.0
    with pytest.raises(DomainError):
        eval_dynamics(x, ENVELOPE_U, P, PhaseTag.COAST)
    x[0] = np.nan
    with pytest.raises(DomainError):
        eval_dynamics(x, ENVELOPE_U, P, PhaseTag.COAST)
    with pytest.raises(DomainError):
        eval_jacobians(x, ENVELOPE_U, P, PhaseTag.COAST)
    with pytest.raises(DomainError):
        eval_dilated(ENVELOPE_X, ENVELOPE_U, 0.0, P, PhaseTag.COAST)
    with pytest.raises(DomainError):
        eval_dilated(ENVELOPE_X, ENVELOPE_U, -1.0, P, PhaseTag.COAST)


def _fd_jacobians(x, u, phase, rel=1e-7):
    A = np.zeros((7, 7))
    B = np.zeros((7, 2))
    for j in range(7):
        h = rel * max(1.0, abs(x[j]))
        dx = np.zeros(7)
        dx[j] = h
        A[:, j] = (
            eval_dynamics(x + dx, u, P, phase) - eval_dynamics(x - dx, u, P, phase)
        ) / (2 * h)
    for j in range(2):
        h = rel * max(1.0, abs(u[j]))
        du = np.zeros(2)
        du[j] = h
        B[:, j] = (
            eval_dynamics(x, u + du, P, phase) - eval_dynamics(x, u - du, P, phase)
        ) / (2 * h)
    return A, B


def _rel_err(analytic, fd):
    scale = np.maximum(np.abs(fd), 1e-3 * np.max(np.abs(fd)) + 1e-12)
    return float(np.max(np.abs(analytic - fd) / scale))


def test_jacobians_match_finite_differences_100_points():
    rng = np.random.default_rng(42)
    worst = 0.0
    for i in range(100):
        x, u = envelope_point(rng)
        phase = PhaseTag.COAST if i % 4 == 0 else PhaseTag.HIGH_THRUST
        A, B = eval_jacobians(x, u, P, phase)
        Afd, Bfd = _fd_jacobians(x, u, phase)
        worst = max(worst, _rel_err(A, Afd), _rel_err(B, Bfd))
    assert worst < 1e-5


def test_position_block_is_identity_and_mass_row_is_linear():
    rng = np.random.default_rng(7)
    for _ in range(10):
        x, u = envelope_point(rng)
        A, B = eval_jacobians(x, u, P, PhaseTag.LOW_THRUST)
        assert np.array_equal(A[1:3, 3:5], np.eye(2))
        assert A[0].tolist() == [0] * 7
        assert B[0, 0] == -P.alpha_e
        assert B[0, 1] == 0.0


def test_aero_force_opposes_body_velocity():
    rng = np.random.default_rng(3)
    kappa = 0.5 * P.rho_air * P.S_area
    for _ in range(200):
        x, u = envelope_point(rng)
        theta, (vx, vz) = x[IDX_TH], (x[3], x[4])
        c, s = math.cos(theta), math.sin(theta)
        v_b = np.array([c * vx - s * vz, s * vx + c * vz])
        f = eval_dynamics(x, np.array([0.0, 0.0]), P, PhaseTag.HIGH_THRUST)
        # recover inertial aero accel, rotate to body frame
        a_i = np.array([f[3] + P.g0, f[4]]) * x[0]
        a_b = np.array([c * a_i[0] - s * a_i[1], s * a_i[0] + c * a_i[1]])
        for i in range(2):
            if abs(v_b[i]) > 1e-6:
                assert np.sign(a_b[i]) == -np.sign(v_b[i])


def test_coast_phase_has_no_aero_torque():
    rng = np.random.default_rng(11)
    for _ in range(50):
        x, u = envelope_point(rng)
        f = eval_dynamics(x, np.array([0.0, 0.0]), P, PhaseTag.COAST)
        assert f[IDX_OM] == 0.0


def test_aero_cutoff_at_tiny_speed():
    x = np.array([90e3, 500.0, 0.0, 1e-10, -1e-10, 0.7, 0.0])
    f = eval_dynamics(x, np.array([0.0, 0.0]), P, PhaseTag.HIGH_THRUST)
    assert f[3] == -P.g0 and f[4] == 0.0 and f[IDX_OM] == 0.0
    A, B = eval_jacobians(x, np.array([0.0, 0.0]), P, PhaseTag.HIGH_THRUST)
    assert np.all(A[3:5, 3:5] == 0.0)


@settings(max_examples=50, deadline=None)
@given(s=st.floats(min_value=1e-3, max_value=50.0), seed=st.integers(0, 2**32 - 1))
def test_dilation_linearity(s, seed):
    rng = np.random.default_rng(seed)
    x, u = envelope_point(rng)
    f = eval_dynamics(x, u, P, PhaseTag.HIGH_THRUST)
    F, A, B, S = eval_dilated(x, u, s, P, PhaseTag.HIGH_THRUST)
    np.testing.assert_array_equal(F, s * f)
    np.testing.assert_array_equal(S, f)


def test_dilated_identity_and_scaling():
    F, A, B, S = eval_dilated(ENVELOPE_X, ENVELOPE_U, 1.0, P, PhaseTag.HIGH_THRUST)
    np.testing.assert_allclose(F, ENVELOPE_F, rtol=1e-13)
    Ac, Bc = eval_jacobians(ENVELOPE_X, ENVELOPE_U, P, PhaseTag.HIGH_THRUST)
    np.testing.assert_array_equal(A, Ac)
    np.testing.assert_array_equal(B, Bc)
    F25 = eval_dilated(ENVELOPE_X, ENVELOPE_U, 2.5, P, PhaseTag.HIGH_THRUST)[0]
    np.testing.assert_allclose(F25, 2.5 * ENVELOPE_F, rtol=1e-13)


def test_params_validation():
    with pytest.raises(Exception):
        RocketParams(m_dry=2e5)  # above initial mass
    with pytest.raises(Exception):
        RocketParams(s_min=11.0)
    with pytest.raises(Exception):
        RocketParams(T_min=3e6)
    with pytest.raises(Exception):
        RocketParams(k_switch=2)
    with pytest.raises(Exception):
        RocketParams(g0=-1.0)
    p = RocketParams()
    assert p.alpha_e == pytest.approx(1.0 / (330.0 * 9.81), rel=1e-15)
    assert p.inertia_coeff == pytest.approx(4.5**2 / 4 + 50.0**2 / 12, rel=1e-15)
    assert p.l_cp(PhaseTag.COAST) == 0.0
    assert p.l_cp(PhaseTag.TERMINAL_DESCENT) == 10.0
