"""Four-phase rocket landing problem definition.

Encodes the temporal grid, the per-node projection sets on the virtual
state and controls, per-phase dilation bounds, the altitude-triggered
terminal-descent constraint window, boundary conditions, and the
final-mass objective. Also provides a constraint-violation audit of a
trajectory and the end-to-end solve entry point.

Grid (1-based node indices):
    1 .. k_ignition-1        unpowered coast (single engine-off node)
    k_ignition .. k_switch-1 high-thrust burn, 3 engines
    k_switch .. k_trigger-1  low-thrust burn, 1 engine
    k_trigger .. N           altitude-triggered terminal descent

Interval k inherits the phase of its left node. Intervals 1 and
k_switch-1 hold the control constant (ZOH) so the engine ignition and
downselection discontinuities stay off the interior of an interval; all
other intervals interpolate linearly (FOH).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .conic import Ball, Box, SetBlock, Singleton
from .errors import ConfigurationError
from .pipg import PipgSettings
from .scp import (
    PHASE_ORDER,
    ProblemSets,
    ScaleSet,
    ScpReport,
    ScpSettings,
    Trajectory,
    TrajectoryProblem,
    initial_guess,
    solve_seco,
)
from .discretize import HoldKind
from .vehicle import (
    IDX_DELTA,
    IDX_M,
    IDX_OM,
    IDX_RX,
    IDX_RZ,
    IDX_T,
    IDX_TH,
    N_CONTROLS,
    N_STATES,
    PhaseTag,
    RocketParams,
    eval_dynamics,
    eval_jacobians,
)

logger = logging.getLogger(__name__)

MASS_OBJECTIVE = np.array([-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])  # maximize final mass


@dataclass(frozen=True)
class PhasePlan:
    """Node-to-phase assignment and the per-interval hold pattern."""

    N: int
    k_ignition: int
    k_switch: int
    k_trigger: int
    node_phases: tuple[PhaseTag, ...]
    interval_phase: np.ndarray
    interval_hold: tuple[HoldKind, ...]

    n_phase = 4

    @staticmethod
    def from_params(p: RocketParams) -> "PhasePlan":
        if not (1 <= p.k_ignition < p.k_switch < p.k_trigger <= p.N):
            raise ConfigurationError("grid indices must be strictly ordered within 1..N")

        def phase_of(k: int) -> int:  # 1-based node index -> phase index
            if k < p.k_ignition:
                return 0
            if k < p.k_switch:
                return 1
            if k < p.k_trigger:
                return 2
            return 3

        node_phases = tuple(PHASE_ORDER[phase_of(k)] for k in range(1, p.N + 1))
        interval_phase = np.array([phase_of(k) for k in range(1, p.N)])
        holds = [HoldKind.FOH] * (p.N - 1)
        holds[0] = HoldKind.ZOH
        holds[p.k_switch - 2] = HoldKind.ZOH
        return PhasePlan(
            N=p.N,
            k_ignition=p.k_ignition,
            k_switch=p.k_switch,
            k_trigger=p.k_trigger,
            node_phases=node_phases,
            interval_phase=interval_phase,
            interval_hold=tuple(holds),
        )

    def phase_interval_counts(self) -> np.ndarray:
        return np.bincount(self.interval_phase, minlength=self.n_phase)


class _ScalarBounds:
    """Intersection of scalar interval constraints per node and component."""

    def __init__(self, N: int, n: int):
        self.lo = np.full((N, n), -np.inf)
        self.hi = np.full((N, n), np.inf)

    def pin(self, k: int, i: int, value: float) -> None:
        self.at_least(k, i, value)
        self.at_most(k, i, value)

    def at_least(self, k: int, i: int, value: float) -> None:
        self.lo[k, i] = max(self.lo[k, i], value)

    def at_most(self, k: int, i: int, value: float) -> None:
        self.hi[k, i] = min(self.hi[k, i], value)

    def block(self, k: int, i: int) -> SetBlock:
        lo, hi = self.lo[k, i], self.hi[k, i]
        if lo > hi:
            raise ConfigurationError(
                f"contradictory bounds on component {i} at node {k + 1}: [{lo}, {hi}]"
            )
        if lo == hi:
            return Singleton(np.array([lo]))
        return Box(np.array([lo]), np.array([hi]))


def build_rocket_problem(p: RocketParams, reference: Trajectory) -> ProblemSets:
    """Emit every node's projection sets for the given reference.

    The reference supplies the combined gimbal angle/rate boxes, the
    gimbal-hold singleton at engine downselection, and the post-trigger
    glideslope boxes; these constraints are exact once the loop converges.
    """
    plan = PhasePlan.from_params(p)
    N = p.N
    k_ig, k_sw, k_tr = p.k_ignition, p.k_switch, p.k_trigger
    tan_gs = math.tan(p.gamma_gs)

    xi = _ScalarBounds(N, N_STATES)
    # velocity needs a non-separable pair: None -> box from xi bounds,
    # otherwise a singleton or speed ball
    v_point: dict[int, np.ndarray] = {}
    v_ball: dict[int, float] = {}

    # initial conditions (coast node)
    xi.pin(0, IDX_M, p.m_i)
    xi.pin(0, IDX_RX, p.r_i[0])
    xi.pin(0, IDX_RZ, p.r_i[1])
    v_point[0] = p.v_i.copy()
    xi.pin(0, IDX_TH, p.theta_i)
    xi.pin(0, IDX_OM, p.omega_i)

    # minimum altitude ahead of the trigger window
    for k in range(0, k_tr - 1):
        xi.at_least(k, IDX_RX, p.h_trigger)

    # altitude-triggered terminal-descent window: equality waypoint at the
    # trigger node, ceiling afterwards, glideslope as reference-based boxes
    xi.pin(k_tr - 1, IDX_RX, p.h_trigger)
    gs_width = tan_gs * p.h_trigger
    xi.at_least(k_tr - 1, IDX_RZ, -gs_width)
    xi.at_most(k_tr - 1, IDX_RZ, gs_width)
    for k in range(k_tr, N - 1):
        xi.at_most(k, IDX_RX, p.h_trigger)
        width = tan_gs * reference.xi[k, IDX_RX]
        if width < 0.0:
            logger.warning(
                "negative reference altitude at node %d; glideslope box clamped to zero width",
                k + 1,
            )
            width = 0.0
        xi.at_least(k, IDX_RZ, -width)
        xi.at_most(k, IDX_RZ, width)
    for k in range(k_tr - 1, N - 1):
        v_ball[k] = p.v_max
        xi.at_least(k, IDX_TH, -p.theta_max)
        xi.at_most(k, IDX_TH, p.theta_max)
        xi.at_least(k, IDX_OM, -p.omega_max)
        xi.at_most(k, IDX_OM, p.omega_max)

    # terminal boundary conditions
    xi.at_least(N - 1, IDX_M, p.m_dry)
    xi.pin(N - 1, IDX_RX, p.r_f[0])
    xi.pin(N - 1, IDX_RZ, p.r_f[1])
    v_point[N - 1] = p.v_f.copy()
    xi.pin(N - 1, IDX_TH, p.theta_f)
    xi.pin(N - 1, IDX_OM, p.omega_f)

    state_blocks: list[list[SetBlock]] = []
    for k in range(N):
        node: list[SetBlock] = [
            xi.block(k, IDX_M),
            xi.block(k, IDX_RX),
            xi.block(k, IDX_RZ),
        ]
        if k in v_point:
            node.append(Singleton(v_point[k]))
        elif k in v_ball:
            node.append(Ball(np.zeros(2), v_ball[k]))
        else:
            node.append(Box(xi.lo[k, 3:5], xi.hi[k, 3:5]))
        node.append(xi.block(k, IDX_TH))
        node.append(xi.block(k, IDX_OM))
        state_blocks.append(node)

    # controls: thrust box per engine count, combined gimbal angle/rate box
    ub = _ScalarBounds(N, N_CONTROLS)
    ub.pin(0, IDX_T, 0.0)      # engines off through the coast node
    ub.pin(0, IDX_DELTA, 0.0)  # gimbal inconsequential while unpowered; fixed for determinism
    for k in range(1, N):
        node_k = k + 1  # 1-based
        engines = 3 if node_k < k_sw else 1
        ub.at_least(k, IDX_T, engines * p.T_min)
        ub.at_most(k, IDX_T, engines * p.T_max)
        if node_k == N:
            ub.pin(k, IDX_DELTA, 0.0)  # no plume impingement on the pad structure
        elif node_k == k_sw:
            ub.pin(k, IDX_DELTA, float(reference.u[k - 1, IDX_DELTA]))
        else:
            d_lim = p.delta_max_td if node_k >= k_tr else p.delta_max
            s_prev = float(reference.s[plan.interval_phase[k - 1]])
            d_prev = float(reference.u[k - 1, IDX_DELTA])
            lo = max(-d_lim, d_prev - p.delta_dot_max * s_prev)
            hi = min(d_lim, d_prev + p.delta_dot_max * s_prev)
            if lo > hi:
                logger.warning(
                    "empty combined gimbal box at node %d (reference gimbal %.4f rad "
                    "outside the angle bound); clamped to the angle box",
                    node_k, d_prev,
                )
                lo, hi = -d_lim, d_lim
            ub.at_least(k, IDX_DELTA, lo)
            ub.at_most(k, IDX_DELTA, hi)

    control_blocks = [[ub.block(k, IDX_T), ub.block(k, IDX_DELTA)] for k in range(N)]
    dilation_blocks: list[SetBlock] = [
        Box(np.full(plan.n_phase, p.s_min), np.full(plan.n_phase, p.s_max))
    ]
    return ProblemSets(
        state_blocks=state_blocks,
        control_blocks=control_blocks,
        dilation_blocks=dilation_blocks,
    )


def make_problem(p: RocketParams) -> TrajectoryProblem:
    """Wire the vehicle model and node sets into the generic problem form."""
    plan = PhasePlan.from_params(p)

    def phase_of_interval(k: int) -> PhaseTag:
        return PHASE_ORDER[int(plan.interval_phase[k])]

    return TrajectoryProblem(
        n_x=N_STATES,
        n_u=N_CONTROLS,
        N=p.N,
        n_phase=plan.n_phase,
        interval_phase=plan.interval_phase,
        interval_hold=plan.interval_hold,
        dynamics=lambda k, x, u: eval_dynamics(x, u, p, phase_of_interval(k)),
        jacobians=lambda k, x, u: eval_jacobians(x, u, p, phase_of_interval(k)),
        sets=lambda ref: build_rocket_problem(p, ref),
        terminal_cost=MASS_OBJECTIVE,
    )


@dataclass
class FeasibilityReport:
    """Max violation per constraint family, in nondimensional units."""

    violations: dict[str, float]
    single_crossing: bool
    tol: float

    @property
    def max_violation(self) -> float:
        return max(self.violations.values()) if self.violations else 0.0

    @property
    def ok(self) -> bool:
        return self.max_violation <= self.tol


def check_feasibility(
    traj: Trajectory,
    params: RocketParams,
    tol: float = 1e-6,
    scale: ScaleSet | None = None,
) -> FeasibilityReport:
    """Audit every mission constraint on the actual state of a trajectory.

    Evaluates the physical constraints on x (not the virtual state) at
    every node, normalized by the nondimensionalization units so the
    violations are comparable across families, and checks the
    single-crossing structure of the altitude trigger.
    """
    scale = scale or ScaleSet()
    p = scale.scale_params(params)
    t = scale.scale_trajectory(traj)
    plan = PhasePlan.from_params(p)
    N, k_ig, k_sw, k_tr = p.N, p.k_ignition, p.k_switch, p.k_trigger
    x, u, s = t.x, t.u, t.s
    tan_gs = math.tan(p.gamma_gs)

    viol: dict[str, float] = {}
    init = np.array([p.m_i, p.r_i[0], p.r_i[1], p.v_i[0], p.v_i[1], p.theta_i, p.omega_i])
    viol["initial_state"] = float(np.max(np.abs(x[0] - init)))
    term = np.array([p.r_f[0], p.r_f[1], p.v_f[0], p.v_f[1], p.theta_f, p.omega_f])
    viol["terminal_state"] = max(
        float(np.max(np.abs(x[N - 1, 1:] - term))),
        max(p.m_dry - x[N - 1, IDX_M], 0.0),
    )
    viol["altitude_floor"] = max(
        float(np.max(p.h_trigger - x[: k_tr - 1, IDX_RX])), 0.0
    )
    viol["trigger_altitude"] = abs(float(x[k_tr - 1, IDX_RX]) - p.h_trigger)
    viol["altitude_ceiling"] = (
        max(float(np.max(x[k_tr:, IDX_RX] - p.h_trigger)), 0.0) if k_tr < N else 0.0
    )
    gs = np.abs(x[k_tr - 1 : N - 1, IDX_RZ]) - tan_gs * x[k_tr - 1 : N - 1, IDX_RX]
    viol["glideslope"] = max(float(np.max(gs)), 0.0)
    speed = np.linalg.norm(x[k_tr - 1 : N - 1, 3:5], axis=1)
    viol["speed_limit"] = max(float(np.max(speed - p.v_max)), 0.0)
    viol["tilt_limit"] = max(
        float(np.max(np.abs(x[k_tr - 1 : N - 1, IDX_TH]) - p.theta_max)), 0.0
    )
    viol["rate_limit"] = max(
        float(np.max(np.abs(x[k_tr - 1 : N - 1, IDX_OM]) - p.omega_max)), 0.0
    )

    thrust_v = abs(float(u[0, IDX_T]))
    gimbal_v = abs(float(u[0, IDX_DELTA]))
    rate_v = 0.0
    for k in range(1, N):
        node_k = k + 1
        engines = 3 if node_k < k_sw else 1
        thrust_v = max(
            thrust_v,
            engines * p.T_min - u[k, IDX_T],
            u[k, IDX_T] - engines * p.T_max,
        )
        if node_k == N:
            gimbal_v = max(gimbal_v, abs(float(u[k, IDX_DELTA])))
        else:
            d_lim = p.delta_max_td if node_k >= k_tr else p.delta_max
            gimbal_v = max(gimbal_v, abs(float(u[k, IDX_DELTA])) - d_lim)
        s_prev = float(s[plan.interval_phase[k - 1]])
        rate_v = max(
            rate_v,
            abs(float(u[k, IDX_DELTA] - u[k - 1, IDX_DELTA])) - p.delta_dot_max * s_prev,
        )
    viol["thrust_bounds"] = max(thrust_v, 0.0)
    viol["gimbal_angle"] = max(gimbal_v, 0.0)
    viol["gimbal_rate"] = max(rate_v, 0.0)
    viol["gimbal_hold"] = abs(float(u[k_sw - 1, IDX_DELTA] - u[k_sw - 2, IDX_DELTA]))
    viol["dilation_bounds"] = max(
        float(np.max(s - p.s_max)), float(np.max(p.s_min - s)), 0.0
    )

    single = (
        viol["altitude_floor"] <= tol
        and viol["trigger_altitude"] <= tol
        and viol["altitude_ceiling"] <= tol
    )
    return FeasibilityReport(violations=viol, single_crossing=single, tol=tol)


@dataclass
class LandingResult:
    """End-to-end solve output: report plus physical-unit summaries."""

    report: ScpReport
    trajectory: Trajectory          # physical units
    plan: PhasePlan
    feasibility: FeasibilityReport
    pdi_altitude: float
    pdi_speed: float
    phase_durations: np.ndarray
    flight_time: float
    propellant_used: float

    @property
    def converged(self) -> bool:
        return self.report.converged


def landing_pipg_settings(scp_settings: ScpSettings) -> PipgSettings:
    """Inner-solver settings tuned to the landing subproblem structure.

    The dual step must counter the virtual-state stiffness carried by the
    d-equality rows, so omega is balanced against w_vse/w_tr; the residual
    check period and iteration cap are sized for the resulting iteration
    counts (a capped early solve returns a slightly loose iterate, which
    the outer loop absorbs).
    """
    return PipgSettings(
        omega=scp_settings.w_vse / scp_settings.w_tr,
        max_iters=400_000,
        check_every=500,
    )


def solve_landing(
    params: RocketParams | None = None,
    scp_settings: ScpSettings | None = None,
    pipg_settings: PipgSettings | None = None,
) -> LandingResult:
    """Solve the four-phase landing problem end to end.

    Scales the problem, runs the outer loop, and returns the physical-unit
    trajectory together with the feasibility audit and mission summary.
    """
    params = params or RocketParams()
    scp_settings = scp_settings or ScpSettings()
    if pipg_settings is None:
        pipg_settings = landing_pipg_settings(scp_settings)

    scale = scp_settings.scale
    params_s = scale.scale_params(params)
    problem = make_problem(params_s)
    plan = PhasePlan.from_params(params)

    guess_phys = initial_guess(problem, params)
    guess = scale.scale_trajectory(guess_phys)
    report = solve_seco(problem, guess, scp_settings, pipg_settings)

    traj = scale.unscale_trajectory(report.trajectory)
    feas = check_feasibility(traj, params, scale=scale)
    counts = plan.phase_interval_counts()
    durations = traj.s * counts
    k_pdi = params.k_ignition - 1
    return LandingResult(
        report=report,
        trajectory=traj,
        plan=plan,
        feasibility=feas,
        pdi_altitude=float(traj.x[k_pdi, IDX_RX]),
        pdi_speed=float(np.linalg.norm(traj.x[k_pdi, 3:5])),
        phase_durations=durations,
        flight_time=float(np.sum(durations)),
        propellant_used=float(traj.x[0, IDX_M] - traj.x[-1, IDX_M]),
    )
