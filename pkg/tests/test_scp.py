import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqconic.conic import Box, Free, Singleton
from seqconic.discretize import HoldKind
from seqconic.pipg import PipgSettings
from seqconic.rocket import make_problem
from seqconic.scp import (
    ProblemSets,
    ScaleSet,
    ScpSettings,
    Trajectory,
    TrajectoryProblem,
    assemble_subproblem,
    discretize_all,
    initial_guess,
    layout_for,
    nondimensionalize,
    redimensionalize,
    solve_seco,
    stack_trajectory,
    trust_region_penalty,
    unstack_trajectory,
    virtual_state_error,
)
from seqconic.vehicle import RocketParams

from _oracles import lti_discretize_oracle


def toy_problem(N=6, s_fixed=1.0, u_lim=1.0, free_terminal=True):
    """Double-integrator: maximize final position with bounded acceleration."""

    def sets(ref: Trajectory) -> ProblemSets:
        state_blocks = []
        for k in range(N):
            if k == 0:
                state_blocks.append([Singleton(np.zeros(2))])
            else:
                state_blocks.append([Free(2)])
        control_blocks = [
            [Box(np.array([-u_lim]), np.array([u_lim]))] for _ in range(N)
        ]
        dilation_blocks = [Singleton(np.array([s_fixed]))]
        return ProblemSets(state_blocks, control_blocks, dilation_blocks)

    return TrajectoryProblem(
        n_x=2,
        n_u=1,
        N=N,
        n_phase=1,
        interval_phase=np.zeros(N - 1, dtype=int),
        interval_hold=tuple([HoldKind.FOH] * (N - 1)),
        dynamics=lambda k, x, u: np.array([x[1], u[0]]),
        jacobians=lambda k, x, u: (
            np.array([[0.0, 1.0], [0.0, 0.0]]),
            np.array([[0.0], [1.0]]),
        ),
        sets=sets,
        terminal_cost=np.array([-1.0, 0.0]),
    )


def toy_trajectory(problem, u_val=0.0, s=1.0):
    """Dynamically consistent trajectory under constant control."""
    N = problem.N
    x = np.zeros((N, 2))
    for k in range(N - 1):
        # closed-form double-integrator update under constant control
        x[k + 1, 0] = x[k, 0] + s * x[k, 1] + 0.5 * s**2 * u_val
        x[k + 1, 1] = x[k, 1] + s * u_val
    u = np.full((N, 1), u_val)
    return Trajectory(
        x=x, xi=x.copy(), u=u, s=np.array([s]),
        interval_phase=problem.interval_phase,
        interval_hold=problem.interval_hold,
    )


def toy_oracle_trajectory(N, s):
    """Exact optimum: bang acceleration at the upper bound everywhere."""
    x = np.zeros((N, 2))
    for k in range(N - 1):
        x[k + 1, 0] = x[k, 0] + s * x[k, 1] + 0.5 * s**2
        x[k + 1, 1] = x[k, 1] + s
    return x


def test_scale_round_trip_is_identity():
    scale = ScaleSet()
    problem = toy_problem()
    rng = np.random.default_rng(0)
    traj = Trajectory(
        x=rng.normal(size=(6, 7)) * 1e3,
        xi=rng.normal(size=(6, 7)) * 1e3,
        u=rng.normal(size=(6, 2)) * 1e6,
        s=rng.uniform(0.5, 10, 4),
        interval_phase=np.zeros(5, dtype=int),
        interval_hold=tuple([HoldKind.FOH] * 5),
    )
    back = redimensionalize(scale, nondimensionalize(scale, traj))
    np.testing.assert_allclose(back.x, traj.x, rtol=1e-12)
    np.testing.assert_allclose(back.u, traj.u, rtol=1e-12)
    np.testing.assert_allclose(back.s, traj.s, rtol=1e-12)


def test_scaled_initial_altitude_is_one():
    scale = ScaleSet(length=1000.0)
    p = RocketParams()
    ps = scale.scale_params(p)
    assert ps.r_i[0] == pytest.approx(1.0, rel=1e-15)


def test_scale_validation():
    with pytest.raises(Exception):
        ScaleSet(length=0.0)
    with pytest.raises(Exception):
        ScaleSet(angle=2.0)


def test_scaled_params_preserve_dynamics():
    """Scale covariance: f_scaled(x/Dx, u/Du) = T * f(x, u) / Dx."""
    from seqconic.vehicle import PhaseTag, eval_dynamics

    scale = ScaleSet()
    p = RocketParams()
    ps = scale.scale_params(p)
    rng = np.random.default_rng(8)
    Dx, Du = scale.state_units(), scale.control_units()
    for _ in range(20):
        x = np.array(
            [rng.uniform(86e3, 1e5), rng.uniform(0, 1000), rng.uniform(-100, 100),
             rng.uniform(-100, 100), rng.uniform(-30, 30), rng.uniform(-2, 2),
             rng.uniform(-0.3, 0.3)]
        )
        u = np.array([rng.uniform(0, 6e6), rng.uniform(-0.17, 0.17)])
        f_phys = eval_dynamics(x, u, p, PhaseTag.HIGH_THRUST)
        f_scaled = eval_dynamics(x / Dx, u / Du, ps, PhaseTag.HIGH_THRUST)
        np.testing.assert_allclose(f_scaled, scale.time * f_phys / Dx, rtol=1e-12)


def test_decision_vector_dimension_for_default_grid():
    problem = make_problem(ScaleSet().scale_params(RocketParams()))
    lay = layout_for(problem)
    assert lay.dim == 16 * 7 + 16 * 7 + 16 * 2 + 4 + 16 * 7 == 372


def test_stack_unstack_round_trip():
    problem = toy_problem()
    traj = toy_trajectory(problem, u_val=0.3)
    lay = layout_for(problem)
    z = stack_trajectory(traj, lay, gamma=7.0)
    back = unstack_trajectory(z, problem)
    np.testing.assert_array_equal(back.x, traj.x)
    np.testing.assert_array_equal(back.u, traj.u)
    np.testing.assert_array_equal(back.s, traj.s)


def test_dynamics_rows_stack_propagation_defects():
    """h - H z_ref on the dynamics rows equals the negated per-interval
    defect between the propagated endpoint and the next reference node."""
    problem = toy_problem()
    settings = ScpSettings(substeps=8)
    ref = toy_trajectory(problem, u_val=0.25)
    ref.x[3] += np.array([0.05, -0.02])  # break consistency at one node
    updates = discretize_all(problem, ref, settings.substeps)
    prog = assemble_subproblem(ref, updates, problem, settings)
    lay = layout_for(problem)
    z_ref = stack_trajectory(ref, lay, math.sqrt(settings.w_vse / settings.w_tr))
    gap = prog.h - prog.H @ z_ref
    n_dyn = (problem.N - 1) * problem.n_x
    defects = np.array([u.x_prop - ref.x[k + 1] for k, u in enumerate(updates)])
    np.testing.assert_allclose(gap[:n_dyn], -defects.ravel(), atol=1e-12)
    # the d-definition rows are satisfied exactly by any stacked trajectory
    np.testing.assert_allclose(gap[n_dyn:], 0.0, atol=1e-12)


def test_assembled_q_is_diagonal_nonnegative_with_full_curvature():
    problem = toy_problem()
    settings = ScpSettings()
    ref = toy_trajectory(problem)
    updates = discretize_all(problem, ref, settings.substeps)
    prog = assemble_subproblem(ref, updates, problem, settings)
    assert np.all(prog.q_diag >= 0)
    assert np.all(prog.q_diag > 0)  # every variable receives curvature


def test_stationarity_with_feasible_reference_and_no_cost():
    """With w_c ~ 0 and a dynamically consistent interior reference, the
    subproblem minimizer is the reference itself."""
    problem = toy_problem()
    problem.terminal_cost = np.zeros(2)
    settings = ScpSettings(w_tr=1.0, w_vse=1e4)
    ref = toy_trajectory(problem, u_val=0.3)
    report = solve_seco(
        problem, ref, settings,
        PipgSettings(max_iters=200_000, omega=settings.w_vse / settings.w_tr),
    )
    assert report.converged
    assert report.n_iterations == 1
    sol = report.trajectory
    assert np.max(np.abs(sol.x - ref.x)) < 1e-6
    assert np.max(np.abs(sol.u - ref.u)) < 1e-6


def test_toy_rendezvous_converges_in_three_iterations():
    """Linear dynamics: the linearization is exact, so the loop needs only
    the proximal steps to land on the constrained optimum.

    The virtual-state penalty leaves a permanent x-to-xi gap of
    (objective sensitivity) * w_c / w_vse at constrained nodes, which sets
    the state-accuracy floor; controls sit exactly on their bounds.
    """
    problem = toy_problem(N=6)
    settings = ScpSettings(w_c=5.0, w_tr=0.05, w_vse=1e6, eps_tr=1e-9, eps_vse=1e-8)
    start = toy_trajectory(problem, u_val=0.0)
    report = solve_seco(
        problem, start, settings,
        PipgSettings(max_iters=2_000_000, omega=settings.w_vse / settings.w_tr,
                     eps_fixed_point=1e-10, eps_equality=1e-10),
    )
    assert report.converged
    assert report.n_iterations <= 3
    x_star = toy_oracle_trajectory(problem.N, 1.0)
    sol = report.trajectory
    np.testing.assert_allclose(sol.u, 1.0, atol=1e-6)
    # x accuracy floor: the initial-node gap w_c * sens / w_vse ~ 2.5e-5
    # integrates across the horizon
    np.testing.assert_allclose(sol.x, x_star, atol=2e-4)
    assert report.max_defect < 1e-7


def test_initial_guess_matches_boundary_and_bounds():
    params = RocketParams()
    problem = make_problem(ScaleSet().scale_params(params))
    guess = initial_guess(problem, params)
    np.testing.assert_array_equal(
        guess.x[0], [params.m_i, *params.r_i, *params.v_i, params.theta_i, params.omega_i]
    )
    np.testing.assert_array_equal(guess.xi, guess.x)
    assert np.all(guess.s >= params.s_min) and np.all(guess.s <= params.s_max)
    assert guess.u[0, 0] == 0.0  # coast node: engines off
    assert np.all(guess.u[1:6, 0] == 3 * 0.5 * (params.T_min + params.T_max))
    assert np.all(guess.u[6:, 0] == 0.5 * (params.T_min + params.T_max))
    assert np.all(guess.u[:, 1] == 0.0)
    # mass interpolates toward the midpoint of initial and dry mass
    assert guess.x[-1, 0] == pytest.approx(0.5 * (params.m_i + params.m_dry))


def test_structural_decoupling_of_rows_and_blocks(default_params):
    """Dynamics rows touch only x/u/s columns; d-rows tie x, xi, d; all
    state constraints act on xi columns only."""
    scale = ScaleSet()
    ps = scale.scale_params(default_params)
    problem = make_problem(ps)
    guess = scale.scale_trajectory(initial_guess(problem, default_params))
    settings = ScpSettings()
    updates = discretize_all(problem, guess, 8)
    prog = assemble_subproblem(guess, updates, problem, settings)
    lay = layout_for(problem)
    H = prog.H.tocsc()
    n_dyn = (problem.N - 1) * problem.n_x
    # columns in the xi range must not appear in any dynamics row
    xi_cols = range(lay.xi_off, lay.u_off)
    for c in xi_cols:
        rows = H.indices[H.indptr[c] : H.indptr[c + 1]]
        assert np.all(rows >= n_dyn)
    # d columns appear only in d-definition rows
    for c in range(lay.d_off, lay.dim):
        rows = H.indices[H.indptr[c] : H.indptr[c + 1]]
        assert np.all(rows >= n_dyn)
    # non-free blocks cover only xi, u, s index ranges
    off = 0
    for b in prog.blocks:
        if not isinstance(b, Free):
            assert lay.xi_off <= off < lay.d_off
        off += b.dim


def test_zoh_intervals_have_zero_right_control_columns(default_params):
    scale = ScaleSet()
    ps = scale.scale_params(default_params)
    problem = make_problem(ps)
    guess = scale.scale_trajectory(initial_guess(problem, default_params))
    updates = discretize_all(problem, guess, 8)
    for k, hold in enumerate(problem.interval_hold):
        if hold is HoldKind.ZOH:
            assert np.all(updates[k].B_plus == 0.0)
    prog = assemble_subproblem(guess, updates, problem, ScpSettings())
    lay = layout_for(problem)
    H = prog.H.tolil()
    for k, hold in enumerate(problem.interval_hold):
        if hold is not HoldKind.ZOH:
            continue
        rows = slice(k * problem.n_x, (k + 1) * problem.n_x)
        cols = lay.u_slice(k + 1)
        block = prog.H[rows, cols].toarray()
        assert np.all(block == 0.0)


def test_settings_validation():
    with pytest.raises(Exception):
        ScpSettings(w_tr=0.0)
    with pytest.raises(Exception):
        ScpSettings(eps_tr=-1.0)
    with pytest.raises(Exception):
        ScpSettings(max_scp_iters=0)


def test_penalty_helpers():
    problem = toy_problem()
    a = toy_trajectory(problem, u_val=0.0)
    b = toy_trajectory(problem, u_val=0.0)
    b.x = a.x + 0.1
    b.u = a.u.copy()
    b.s = a.s.copy()
    assert trust_region_penalty(b, a) == pytest.approx(0.01 * a.x.size)
    b.xi = b.x - 0.2
    assert virtual_state_error(b) == pytest.approx(0.04 * a.x.size)
