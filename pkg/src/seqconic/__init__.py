"""Sequential conic optimization toolkit for multi-phase landing guidance."""

from .conic import Ball, Box, ConicProgram, Free, Singleton, project_all, project_block
from .discretize import (
    DiscreteUpdate,
    HoldKind,
    IntervalReference,
    discretize_interval,
    discretize_system,
    interp_control,
    propagate_nonlinear,
)
from .errors import (
    ConfigurationError,
    DivergedReferenceError,
    DomainError,
    SolverNumericalError,
)
from .pipg import PipgSettings, compute_step_sizes, estimate_spectral, precondition, solve
from .rocket import (
    FeasibilityReport,
    LandingResult,
    PhasePlan,
    build_rocket_problem,
    check_feasibility,
    make_problem,
    solve_landing,
)
from .scp import (
    ScaleSet,
    ScpReport,
    ScpSettings,
    Trajectory,
    TrajectoryProblem,
    assemble_subproblem,
    initial_guess,
    solve_seco,
)
from .vehicle import (
    PhaseTag,
    RocketControl,
    RocketParams,
    RocketState,
    eval_dilated,
    eval_dynamics,
    eval_jacobians,
)

__version__ = "0.1.0"
