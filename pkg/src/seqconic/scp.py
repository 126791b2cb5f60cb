"""Sequential conic optimization outer loop.

Each iteration linearizes and exactly discretizes the dilated dynamics
around the reference, assembles the penalized-trust-region subproblem with
a virtual state, vectorizes it into a ConicProgram, solves it with the
first-order solver, and re-centers the reference on the solution.

Decision vector layout (nodes k = 1..N, phases p = 1..n_phase):

    z = (x_1..x_N, xi_1..xi_N, u_1..u_N, s_1..s_p, d_1..d_N)

x carries the dynamics, xi (the virtual state) carries every state
constraint, and the auxiliary difference d_k = x_k - xi_k (introduced via
equality rows) carries the virtual-state-error quadratic so Q stays
diagonal and all projections separable. Internally d is stored scaled by
gamma = sqrt(w_vse / w_tr), which equalizes the Q diagonal and markedly
improves the first-order solver's conditioning; the stored-to-physical map
is recorded in ConicProgram.col_scale.

Convergence: trust-region penalty J_tr and virtual-state-error penalty
J_vse both below tolerance.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .conic import ConicProgram, Free, SetBlock
from .discretize import DiscreteUpdate, HoldKind, discretize_system, propagate_system
from .errors import ConfigurationError, DivergedReferenceError, SolverNumericalError
from .pipg import PipgResult, PipgSettings, PipgStats, precondition, solve, unscale_dual
from .vehicle import (
    IDX_OM,
    IDX_TH,
    N_CONTROLS,
    N_STATES,
    PhaseTag,
    RocketParams,
)

logger = logging.getLogger(__name__)

PHASE_ORDER = (
    PhaseTag.COAST,
    PhaseTag.HIGH_THRUST,
    PhaseTag.LOW_THRUST,
    PhaseTag.TERMINAL_DESCENT,
)


@dataclass
class ScaleSet:
    """Nondimensionalization units: length [m], mass [kg], time [s].

    Angles stay in radians (trig arguments cannot be rescaled); the angle
    unit is kept for completeness and must remain 1.
    """

    length: float = 1000.0
    mass: float = 1e5
    time: float = 10.0
    angle: float = 1.0

    def __post_init__(self):
        for name in ("length", "mass", "time", "angle"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"scale constant {name} must be positive")
        if self.angle != 1.0:
            raise ConfigurationError("angle unit must be 1 (radians)")

    @property
    def velocity(self) -> float:
        return self.length / self.time

    @property
    def force(self) -> float:
        return self.mass * self.length / self.time**2

    def state_units(self) -> np.ndarray:
        """Physical units of the state components (m, r, v, theta, omega)."""
        return np.array(
            [self.mass, self.length, self.length,
             self.velocity, self.velocity, 1.0, 1.0 / self.time]
        )

    def control_units(self) -> np.ndarray:
        return np.array([self.force, 1.0])

    def scale_params(self, p: RocketParams) -> RocketParams:
        """Express all physical constants in scaled units.

        The dynamics are scale-covariant under this transformation, so the
        vehicle model can be evaluated directly on scaled quantities.
        """
        L, M, T = self.length, self.mass, self.time
        V, F = self.velocity, self.force
        return replace(
            p,
            g0=p.g0 / (L / T**2),
            Isp=p.Isp / T,
            l_r=p.l_r / L,
            l_h=p.l_h / L,
            l_cm=p.l_cm / L,
            l_cp_coast=p.l_cp_coast / L,
            l_cp_powered=p.l_cp_powered / L,
            rho_air=p.rho_air / (M / L**3),
            S_area=p.S_area / L**2,
            T_min=p.T_min / F,
            T_max=p.T_max / F,
            delta_dot_max=p.delta_dot_max * T,
            h_trigger=p.h_trigger / L,
            v_max=p.v_max / V,
            omega_max=p.omega_max * T,
            m_dry=p.m_dry / M,
            m_i=p.m_i / M,
            r_i=p.r_i / L,
            v_i=p.v_i / V,
            r_f=p.r_f / L,
            v_f=p.v_f / V,
            omega_i=p.omega_i * T,
            omega_f=p.omega_f * T,
            s_min=p.s_min / T,
            s_max=p.s_max / T,
            v_terminal=p.v_terminal / V,
        )

    def scale_trajectory(self, traj: "Trajectory") -> "Trajectory":
        sx = self.state_units()
        su = self.control_units()
        return Trajectory(
            x=traj.x / sx,
            xi=traj.xi / sx,
            u=traj.u / su,
            s=traj.s / self.time,
            interval_phase=traj.interval_phase,
            interval_hold=traj.interval_hold,
        )

    def unscale_trajectory(self, traj: "Trajectory") -> "Trajectory":
        sx = self.state_units()
        su = self.control_units()
        return Trajectory(
            x=traj.x * sx,
            xi=traj.xi * sx,
            u=traj.u * su,
            s=traj.s * self.time,
            interval_phase=traj.interval_phase,
            interval_hold=traj.interval_hold,
        )


# spec'd operation names for the affine unit maps
def nondimensionalize(scale: ScaleSet, traj: "Trajectory") -> "Trajectory":
    return scale.scale_trajectory(traj)


def redimensionalize(scale: ScaleSet, traj: "Trajectory") -> "Trajectory":
    return scale.unscale_trajectory(traj)


@dataclass
class Trajectory:
    """One SCP iterate: states, virtual states, controls, dilations."""

    x: np.ndarray                    # (N, n_x)
    xi: np.ndarray                   # (N, n_x)
    u: np.ndarray                    # (N, n_u)
    s: np.ndarray                    # (n_phase,)
    interval_phase: np.ndarray       # (N-1,) phase index owning each interval
    interval_hold: tuple[HoldKind, ...]

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.xi = np.asarray(self.xi, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        self.s = np.asarray(self.s, dtype=float)
        self.interval_phase = np.asarray(self.interval_phase, dtype=int)

    @property
    def N(self) -> int:
        return self.x.shape[0]

    @property
    def n_phase(self) -> int:
        return self.s.size

    def interval_dilations(self) -> np.ndarray:
        """Per-interval wall-clock lengths (phase dilations fanned out)."""
        return self.s[self.interval_phase]

    def node_times(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.interval_dilations())])

    def total_time(self) -> float:
        return float(np.sum(self.interval_dilations()))

    def copy(self) -> "Trajectory":
        return Trajectory(
            x=self.x.copy(), xi=self.xi.copy(), u=self.u.copy(), s=self.s.copy(),
            interval_phase=self.interval_phase.copy(), interval_hold=self.interval_hold,
        )


@dataclass
class ProblemSets:
    """Per-node projection sets plus the dilation sets for one reference."""

    state_blocks: list[list[SetBlock]]
    control_blocks: list[list[SetBlock]]
    dilation_blocks: list[SetBlock]


@dataclass
class TrajectoryProblem:
    """A multi-phase optimal control problem in the form the loop consumes.

    dynamics / jacobians take the interval index so phase-dependent models
    can switch parameters; sets(ref) rebuilds the reference-dependent
    projection blocks each iteration; terminal_cost c defines the Mayer
    objective c @ x_N.
    """

    n_x: int
    n_u: int
    N: int
    n_phase: int
    interval_phase: np.ndarray
    interval_hold: tuple[HoldKind, ...]
    dynamics: Callable[[int, np.ndarray, np.ndarray], np.ndarray]
    jacobians: Callable[[int, np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    sets: Callable[[Trajectory], ProblemSets]
    terminal_cost: np.ndarray

    def __post_init__(self):
        self.interval_phase = np.asarray(self.interval_phase, dtype=int)
        self.terminal_cost = np.asarray(self.terminal_cost, dtype=float)
        if self.interval_phase.shape != (self.N - 1,):
            raise ConfigurationError("interval_phase must have N-1 entries")
        if len(self.interval_hold) != self.N - 1:
            raise ConfigurationError("interval_hold must have N-1 entries")
        if np.any(self.interval_phase < 0) or np.any(self.interval_phase >= self.n_phase):
            raise ConfigurationError("interval phase indices out of range")
        if self.terminal_cost.shape != (self.n_x,):
            raise ConfigurationError("terminal_cost must have n_x entries")


@dataclass
class ScpSettings:
    """Outer-loop weights, tolerances, and discretization controls.

    The default weights sit at the measured feasibility/conditioning
    optimum for the landing problem: w_vse/w_c sets the stationary
    constraint gap on the actual state (about 1e-6 scaled at 1e6), and
    w_vse/w_tr sets the subproblem conditioning the first-order solver
    must absorb. The default convergence thresholds declare success once
    the iterate's shape has stabilized and the virtual state has fused
    with the actual state (J_vse at its dual-force floor); driving the
    trust-region penalty itself to 1e-6 requires a couple hundred more
    outer iterations of propellant polishing and is available by config.
    """

    w_c: float = 1.0
    w_tr: float = 0.05
    w_vse: float = 1e6       # virtual-state coupling must dominate the trust region
    max_scp_iters: int = 50
    eps_tr: float = 3e-2
    eps_vse: float = 1e-10
    substeps: int = 16
    defect_substeps_factor: int = 4
    scale: ScaleSet = field(default_factory=ScaleSet)

    def __post_init__(self):
        if not (self.w_c > 0 and self.w_tr > 0 and self.w_vse > 0):
            raise ConfigurationError("objective weights must be positive")
        if not (self.eps_tr > 0 and self.eps_vse > 0):
            raise ConfigurationError("convergence tolerances must be positive")
        if self.max_scp_iters < 1 or self.substeps < 1 or self.defect_substeps_factor < 1:
            raise ConfigurationError("iteration/substep counts must be >= 1")


@dataclass
class ScpIteration:
    iteration: int
    j_tr: float
    j_vse: float
    objective: float
    pipg: PipgStats


@dataclass
class ScpReport:
    iterations: list[ScpIteration]
    converged: bool
    trajectory: Trajectory
    defects: np.ndarray              # post-hoc per-interval propagation defects
    total_time: float

    @property
    def n_iterations(self) -> int:
        return len(self.iterations)

    @property
    def max_defect(self) -> float:
        return float(np.max(self.defects)) if self.defects.size else 0.0


@dataclass(frozen=True)
class Layout:
    """Index map of the stacked decision vector."""

    N: int
    n_x: int
    n_u: int
    n_phase: int

    @property
    def x_off(self) -> int:
        return 0

    @property
    def xi_off(self) -> int:
        return self.N * self.n_x

    @property
    def u_off(self) -> int:
        return 2 * self.N * self.n_x

    @property
    def s_off(self) -> int:
        return 2 * self.N * self.n_x + self.N * self.n_u

    @property
    def d_off(self) -> int:
        return self.s_off + self.n_phase

    @property
    def dim(self) -> int:
        return self.d_off + self.N * self.n_x

    def x_slice(self, k: int) -> slice:
        return slice(self.x_off + k * self.n_x, self.x_off + (k + 1) * self.n_x)

    def xi_slice(self, k: int) -> slice:
        return slice(self.xi_off + k * self.n_x, self.xi_off + (k + 1) * self.n_x)

    def u_slice(self, k: int) -> slice:
        return slice(self.u_off + k * self.n_u, self.u_off + (k + 1) * self.n_u)

    def s_index(self, p: int) -> int:
        return self.s_off + p

    def d_slice(self, k: int) -> slice:
        return slice(self.d_off + k * self.n_x, self.d_off + (k + 1) * self.n_x)


def layout_for(problem: TrajectoryProblem) -> Layout:
    return Layout(N=problem.N, n_x=problem.n_x, n_u=problem.n_u, n_phase=problem.n_phase)


def stack_trajectory(traj: Trajectory, lay: Layout, gamma: float) -> np.ndarray:
    """Stack a trajectory into the decision vector (d stored pre-scaled)."""
    z = np.empty(lay.dim)
    z[lay.x_off : lay.xi_off] = traj.x.ravel()
    z[lay.xi_off : lay.u_off] = traj.xi.ravel()
    z[lay.u_off : lay.s_off] = traj.u.ravel()
    z[lay.s_off : lay.d_off] = traj.s
    z[lay.d_off :] = gamma * (traj.x - traj.xi).ravel()
    return z


def unstack_trajectory(z: np.ndarray, problem: TrajectoryProblem) -> Trajectory:
    lay = layout_for(problem)
    return Trajectory(
        x=z[lay.x_off : lay.xi_off].reshape(problem.N, problem.n_x).copy(),
        xi=z[lay.xi_off : lay.u_off].reshape(problem.N, problem.n_x).copy(),
        u=z[lay.u_off : lay.s_off].reshape(problem.N, problem.n_u).copy(),
        s=z[lay.s_off : lay.d_off].copy(),
        interval_phase=problem.interval_phase,
        interval_hold=problem.interval_hold,
    )


def initial_guess(problem: TrajectoryProblem, params: RocketParams) -> Trajectory:
    """Straight-line interpolation seed for the landing problem.

    States interpolate the boundary conditions (mass toward the midpoint of
    initial and dry mass), the virtual state copies the state, thrust sits
    mid-range for each phase's engine count, and each phase dilation spreads
    a coarse duration guess over its intervals, clipped into bounds.
    """
    N = problem.N
    alpha = np.linspace(0.0, 1.0, N)
    m_end = 0.5 * (params.m_i + params.m_dry)
    x = np.zeros((N, N_STATES))
    x[:, 0] = params.m_i + alpha * (m_end - params.m_i)
    x[:, 1] = params.r_i[0] + alpha * (params.r_f[0] - params.r_i[0])
    x[:, 2] = params.r_i[1] + alpha * (params.r_f[1] - params.r_i[1])
    x[:, 3] = params.v_i[0] + alpha * (params.v_f[0] - params.v_i[0])
    x[:, 4] = params.v_i[1] + alpha * (params.v_f[1] - params.v_i[1])
    x[:, IDX_TH] = params.theta_i + alpha * (params.theta_f - params.theta_i)
    x[:, IDX_OM] = params.omega_i + alpha * (params.omega_f - params.omega_i)

    u = np.zeros((N, N_CONTROLS))
    t_mid = 0.5 * (params.T_min + params.T_max)
    for k in range(N):
        phase_idx = problem.interval_phase[min(k, N - 2)]
        u[k, 0] = PHASE_ORDER[phase_idx].engine_count * t_mid

    counts = np.bincount(problem.interval_phase, minlength=problem.n_phase).astype(float)
    durations = np.array([params.s_min * max(counts[0], 1.0), 20.0, 20.0, 15.0])[
        : problem.n_phase
    ]
    s = np.clip(durations / np.maximum(counts, 1.0), params.s_min, params.s_max)

    return Trajectory(
        x=x, xi=x.copy(), u=u, s=s,
        interval_phase=problem.interval_phase,
        interval_hold=problem.interval_hold,
    )


def discretize_all(
    problem: TrajectoryProblem, ref: Trajectory, substeps: int
) -> list[DiscreteUpdate]:
    """Exact discretization of every interval around the reference."""
    updates = []
    for k in range(problem.N - 1):
        try:
            upd = discretize_system(
                lambda x, u, k=k: problem.dynamics(k, x, u),
                lambda x, u, k=k: problem.jacobians(k, x, u),
                ref.x[k],
                ref.u[k],
                ref.u[k + 1],
                float(ref.s[problem.interval_phase[k]]),
                problem.interval_hold[k],
                substeps,
            )
        except DivergedReferenceError as exc:
            raise DivergedReferenceError(str(exc), interval=k + 1) from exc
        updates.append(upd)
    return updates


def assemble_subproblem(
    ref: Trajectory,
    updates: list[DiscreteUpdate],
    problem: TrajectoryProblem,
    settings: ScpSettings,
) -> ConicProgram:
    """Vectorize the penalized-trust-region subproblem around the reference.

    Equality rows: the exact discrete dynamics at every interval (dilation
    column routed to the owning phase's variable) and the definitions
    d_k = x_k - xi_k. Diagonal Q carries the trust-region weight on every
    variable and the virtual-state-error weight on d (via the gamma
    scaling); q carries the Mayer cost on x_N and the trust-region centers.
    """
    N, n_x, n_u = problem.N, problem.n_x, problem.n_u
    lay = layout_for(problem)
    if len(updates) != N - 1:
        raise ConfigurationError(f"expected {N - 1} interval updates, got {len(updates)}")

    gamma = math.sqrt(settings.w_vse / settings.w_tr)

    q_diag = np.full(lay.dim, settings.w_tr)
    q_lin = np.zeros(lay.dim)
    q_lin[lay.x_off : lay.xi_off] = -settings.w_tr * ref.x.ravel()
    q_lin[lay.xi_off : lay.u_off] = -settings.w_tr * ref.xi.ravel()
    q_lin[lay.u_off : lay.s_off] = -settings.w_tr * ref.u.ravel()
    q_lin[lay.s_off : lay.d_off] = -settings.w_tr * ref.s
    q_lin[lay.x_slice(N - 1)] += settings.w_c * problem.terminal_cost

    rows, cols, vals = [], [], []
    n_dyn = (N - 1) * n_x
    h = np.zeros(n_dyn + N * n_x)

    def put(r0: int, c0: int, block: np.ndarray) -> None:
        nz = np.nonzero(block)
        rows.extend((r0 + nz[0]).tolist())
        cols.extend((c0 + nz[1]).tolist())
        vals.extend(block[nz].tolist())

    for k, upd in enumerate(updates):
        r0 = k * n_x
        put(r0, lay.x_slice(k).start, upd.A)
        put(r0, lay.x_slice(k + 1).start, -np.eye(n_x))
        put(r0, lay.u_slice(k).start, upd.B_minus)
        put(r0, lay.u_slice(k + 1).start, upd.B_plus)
        s_col = lay.s_index(int(problem.interval_phase[k]))
        nz = np.nonzero(upd.S)[0]
        rows.extend((r0 + nz).tolist())
        cols.extend([s_col] * len(nz))
        vals.extend(upd.S[nz].tolist())
        h[r0 : r0 + n_x] = -upd.residual

    inv_gamma = 1.0 / gamma
    for k in range(N):
        r0 = n_dyn + k * n_x
        for i in range(n_x):
            rows.extend([r0 + i] * 3)
            cols.extend(
                [lay.x_slice(k).start + i, lay.xi_slice(k).start + i, lay.d_slice(k).start + i]
            )
            vals.extend([1.0, -1.0, -inv_gamma])

    H = sp.csr_matrix(
        (vals, (rows, cols)), shape=(n_dyn + N * n_x, lay.dim)
    )

    sets = problem.sets(ref)
    blocks: list[SetBlock] = [Free(N * n_x)]
    for k, node_blocks in enumerate(sets.state_blocks):
        if sum(b.dim for b in node_blocks) != n_x:
            raise ConfigurationError(f"state blocks at node {k + 1} do not cover the state")
        blocks.extend(node_blocks)
    for k, node_blocks in enumerate(sets.control_blocks):
        if sum(b.dim for b in node_blocks) != n_u:
            raise ConfigurationError(f"control blocks at node {k + 1} do not cover the control")
        blocks.extend(node_blocks)
    if sum(b.dim for b in sets.dilation_blocks) != problem.n_phase:
        raise ConfigurationError("dilation blocks do not cover the phase dilations")
    blocks.extend(sets.dilation_blocks)
    blocks.append(Free(N * n_x))

    col_scale = np.ones(lay.dim)
    col_scale[lay.d_off :] = gamma

    return ConicProgram(
        dim=lay.dim, q_diag=q_diag, q_lin=q_lin, H=H, h=h,
        blocks=blocks, col_scale=col_scale,
    )


def trust_region_penalty(new: Trajectory, ref: Trajectory) -> float:
    """J_tr: squared deviation of states, controls, and dilations."""
    return float(
        np.sum((new.x - ref.x) ** 2)
        + np.sum((new.u - ref.u) ** 2)
        + np.sum((new.s - ref.s) ** 2)
    )


def virtual_state_error(traj: Trajectory) -> float:
    """J_vse: squared distance between the state and the virtual state."""
    return float(np.sum((traj.x - traj.xi) ** 2))


def propagation_defects(
    problem: TrajectoryProblem, traj: Trajectory, substeps: int
) -> np.ndarray:
    """Max-abs defect between nonlinear propagation and the next node state."""
    defects = np.empty(problem.N - 1)
    for k in range(problem.N - 1):
        x_prop = propagate_system(
            lambda x, u, k=k: problem.dynamics(k, x, u),
            traj.x[k],
            traj.u[k],
            traj.u[k + 1],
            float(traj.s[problem.interval_phase[k]]),
            problem.interval_hold[k],
            substeps,
        )
        defects[k] = float(np.max(np.abs(x_prop - traj.x[k + 1])))
    return defects


def solve_seco(
    problem: TrajectoryProblem,
    initial: Trajectory,
    scp_settings: ScpSettings | None = None,
    pipg_settings: PipgSettings | None = None,
) -> ScpReport:
    """Run the full outer loop from the given initial reference.

    The first subproblem is warm-started with the stacked reference and a
    zero dual; subsequent ones reuse the previous primal/dual pair (duals
    are kept in original row units and rescaled to each iteration's row
    normalization).
    """
    scp_settings = scp_settings or ScpSettings()
    pipg_settings = pipg_settings or PipgSettings()
    t0 = time.perf_counter()
    lay = layout_for(problem)
    gamma = math.sqrt(scp_settings.w_vse / scp_settings.w_tr)

    ref = initial.copy()
    warm_z = stack_trajectory(ref, lay, gamma)
    warm_eta: np.ndarray | None = None

    history: list[ScpIteration] = []
    converged = False
    for it in range(1, scp_settings.max_scp_iters + 1):
        updates = discretize_all(problem, ref, scp_settings.substeps)
        prog = assemble_subproblem(ref, updates, problem, scp_settings)
        scaled = precondition(prog)
        eta0 = np.zeros(scaled.n_eq) if warm_eta is None else warm_eta * scaled.row_scale
        try:
            result: PipgResult = solve(scaled, warm_start=(warm_z, eta0), settings=pipg_settings)
        except SolverNumericalError as exc:
            raise SolverNumericalError(
                f"subproblem solve failed at outer iteration {it}: {exc}"
            ) from exc
        if not result.stats.converged:
            logger.warning(
                "subproblem hit the iteration limit at outer iteration %d "
                "(residuals %.2e / %.2e); continuing with the best iterate",
                it, result.stats.fixed_point_residual, result.stats.equality_residual,
            )
        new = unstack_trajectory(result.z, problem)
        j_tr = trust_region_penalty(new, ref)
        j_vse = virtual_state_error(new)
        objective = (
            scp_settings.w_c * float(problem.terminal_cost @ new.x[-1])
            + 0.5 * (scp_settings.w_tr * j_tr + scp_settings.w_vse * j_vse)
        )
        history.append(
            ScpIteration(iteration=it, j_tr=j_tr, j_vse=j_vse, objective=objective,
                         pipg=result.stats)
        )
        logger.info(
            "iter %2d: J_tr=%.3e J_vse=%.3e obj=%+.6e pipg=%d its",
            it, j_tr, j_vse, objective, result.stats.iterations,
        )
        ref = new
        warm_z = result.z
        warm_eta = unscale_dual(scaled, result.eta)
        if j_tr <= scp_settings.eps_tr and j_vse <= scp_settings.eps_vse:
            converged = True
            break

    defects = propagation_defects(
        problem, ref, scp_settings.substeps * scp_settings.defect_substeps_factor
    )
    return ScpReport(
        iterations=history,
        converged=converged,
        trajectory=ref,
        defects=defects,
        total_time=time.perf_counter() - t0,
    )
