"""Extrapolated proportional-integral projected gradient solver.

Solves ConicProgram instances using only matrix-vector products and
closed-form projections:

    z^{j+1}    = proj_D[zeta^j - alpha (Q zeta^j + q + H' eta^j)]
    w^{j+1}    = eta^j + beta (H (2 z^{j+1} - zeta^j) - h)
    zeta^{j+1} = (1 - rho) zeta^j + rho z^{j+1}
    eta^{j+1}  = (1 - rho) eta^j + rho w^{j+1}

Step sizes come from the spectral quantities of the program (max diagonal
of Q, a power-iteration estimate of ||H||_2^2); rho in [1, 2) is the
extrapolation factor. Everything is deterministic: the power iteration
starts from a fixed vector and there is no randomness anywhere.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .conic import ConicProgram, kkt_residual
from .errors import SolverNumericalError

SPECTRAL_SAFETY = 1.1


@dataclass
class PipgSettings:
    rho: float = 1.9                 # extrapolation factor, [1, 2)
    omega: float = 1.0               # dual/primal step-size ratio
    max_iters: int = 150_000
    eps_fixed_point: float = 1e-9
    eps_equality: float = 1e-9
    check_every: int = 25            # residual-check period, keeps the hot loop branch-light
    power_iters: int = 100

    def __post_init__(self):
        if not 1.0 <= self.rho < 2.0:
            raise ValueError(f"rho must lie in [1, 2), got {self.rho}")
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not (self.eps_fixed_point > 0 and self.eps_equality > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1 or self.check_every < 1 or self.power_iters < 1:
            raise ValueError("iteration counts must be >= 1")


@dataclass
class PipgWorkspace:
    z: np.ndarray
    w: np.ndarray
    zeta: np.ndarray
    eta: np.ndarray
    alpha: float
    beta: float
    iterations: int = 0
    residual_history: list[tuple[int, float, float]] = field(default_factory=list)


@dataclass
class PipgStats:
    iterations: int
    fixed_point_residual: float
    equality_residual: float
    solve_time: float
    converged: bool
    alpha: float
    beta: float
    residual_history: list[tuple[int, float, float]]


@dataclass
class PipgResult:
    z: np.ndarray
    eta: np.ndarray
    stats: PipgStats


def estimate_spectral(prog: ConicProgram, power_iters: int = 100) -> tuple[float, float]:
    """(max diagonal of Q, inflated power-iteration estimate of ||H||_2^2).

    Q is diagonal so its largest eigenvalue is exact. The H estimate runs
    a deterministic power iteration on H'H and is inflated by a 1.1 safety
    factor to keep the step sizes conservative.
    """
    lambda_q = float(np.max(prog.q_diag)) if prog.dim else 0.0
    if prog.n_eq == 0 or prog.H.nnz == 0:
        return lambda_q, 0.0
    v = np.full(prog.dim, 1.0 / math.sqrt(prog.dim))
    sigma = 0.0
    for _ in range(power_iters):
        hv = prog.H @ v
        v_next = prog.Ht @ hv
        nrm = float(np.linalg.norm(v_next))
        if nrm == 0.0:
            return lambda_q, 0.0
        sigma = float(hv @ hv) / float(v @ v)
        v = v_next / nrm
    return lambda_q, SPECTRAL_SAFETY * sigma


def compute_step_sizes(lambda_q: float, sigma_h: float, omega: float) -> tuple[float, float]:
    """Primal and dual step sizes (alpha, beta) from the spectral bounds."""
    if lambda_q < 0 or sigma_h < 0 or omega <= 0:
        raise ValueError("lambda_q, sigma_h must be >= 0 and omega > 0")
    if lambda_q == 0.0 and sigma_h == 0.0:
        return 1.0, omega
    alpha = 2.0 / (lambda_q + math.sqrt(lambda_q**2 + 4.0 * omega * sigma_h))
    return alpha, omega * alpha


def precondition(prog: ConicProgram) -> ConicProgram:
    """Scale each equality row (and h) to unit l2 norm.

    Primal variables and projection sets are untouched, so all closed-form
    projections act on the original geometry. The returned program's
    row_scale holds the norms; original duals are eta_scaled / row_scale.
    Zero rows are left alone.
    """
    if prog.n_eq == 0:
        return prog
    norms = np.sqrt(np.asarray(prog.H.multiply(prog.H).sum(axis=1)).ravel())
    scale = np.where(norms > 0, norms, 1.0)
    D_inv = sp.diags(1.0 / scale)
    return ConicProgram(
        dim=prog.dim,
        q_diag=prog.q_diag,
        q_lin=prog.q_lin,
        H=sp.csr_matrix(D_inv @ prog.H),
        h=prog.h / scale,
        blocks=prog.blocks,
        col_scale=prog.col_scale,
        row_scale=prog.row_scale * scale,
    )


def solve(
    prog: ConicProgram,
    warm_start: tuple[np.ndarray, np.ndarray] | None = None,
    settings: PipgSettings | None = None,
) -> PipgResult:
    """Run the extrapolated primal-dual iteration until both residuals pass.

    Returns the final primal/dual pair and solve statistics; a hit on
    max_iters comes back flagged not-converged rather than raising.
    """
    settings = settings or PipgSettings()
    t0 = time.perf_counter()
    lambda_q, sigma_h = estimate_spectral(prog, settings.power_iters)
    alpha, beta = compute_step_sizes(lambda_q, sigma_h, settings.omega)

    if warm_start is not None:
        z0, eta0 = warm_start
        z0 = np.asarray(z0, dtype=float)
        eta0 = np.asarray(eta0, dtype=float)
        if z0.shape != (prog.dim,) or eta0.shape != (prog.n_eq,):
            raise ValueError("warm start dimensions do not match the program")
    else:
        z0 = np.zeros(prog.dim)
        eta0 = np.zeros(prog.n_eq)

    ws = PipgWorkspace(
        z=z0.copy(), w=eta0.copy(), zeta=z0.copy(), eta=eta0.copy(),
        alpha=alpha, beta=beta,
    )
    step, residuals = _make_stepper(prog, ws, alpha, beta, settings.rho)

    converged = False
    fixed = eq = math.inf
    while ws.iterations < settings.max_iters:
        chunk = min(settings.check_every, settings.max_iters - ws.iterations)
        step(chunk)
        ws.iterations += chunk
        if not (np.all(np.isfinite(ws.z)) and np.all(np.isfinite(ws.eta))):
            raise SolverNumericalError("non-finite iterate", iteration=ws.iterations)
        fixed, eq = residuals()
        ws.residual_history.append((ws.iterations, fixed, eq))
        if fixed <= settings.eps_fixed_point and eq <= settings.eps_equality:
            converged = True
            break

    stats = PipgStats(
        iterations=ws.iterations,
        fixed_point_residual=fixed,
        equality_residual=eq,
        solve_time=time.perf_counter() - t0,
        converged=converged,
        alpha=alpha,
        beta=beta,
        residual_history=ws.residual_history,
    )
    return PipgResult(z=ws.z, eta=ws.eta, stats=stats)


def _make_stepper(prog: ConicProgram, ws: PipgWorkspace, alpha: float, beta: float, rho: float):
    """Bind 'run n iterations in place' and 'current residuals' closures.

    Uses the compiled kernels when numba is available; otherwise numpy
    fallbacks with identical update order. The accepted solution is always
    re-certified by the caller with the plain-numpy kkt_residual.
    """
    if _kernels.HAVE_NUMBA:
        plan = prog.project
        ball_start = np.array([r.start for r, _ in plan.balls], dtype=np.int64)
        ball_end = np.array([r.stop for r, _ in plan.balls], dtype=np.int64)
        centers = (
            [b.center for _, b in plan.balls] if plan.balls else [np.empty(0)]
        )
        ball_coff = np.concatenate(
            [[0], np.cumsum([b.dim for _, b in plan.balls])]
        )[: len(plan.balls)].astype(np.int64)
        ball_center = np.concatenate(centers).astype(float)
        ball_radius = np.array([b.radius for _, b in plan.balls], dtype=float)
        H, Ht = prog.H, prog.Ht
        matrices = (
            prog.q_diag, prog.q_lin,
            H.data, H.indices, H.indptr,
            Ht.data, Ht.indices, Ht.indptr,
            prog.h,
            plan.box_idx, plan.box_lo, plan.box_hi,
            ball_start, ball_end, ball_coff, ball_center, ball_radius,
        )

        def step(n_iters: int) -> None:
            _kernels.run_iterations(
                *matrices, ws.z, ws.w, ws.zeta, ws.eta, alpha, beta, rho, n_iters
            )

        def residuals() -> tuple[float, float]:
            return _kernels.residuals(*matrices, ws.z, ws.eta, alpha)

        return step, residuals

    H, Ht, project = prog.H, prog.Ht, prog.project
    q_diag, q_lin, h = prog.q_diag, prog.q_lin, prog.h
    has_eq = prog.n_eq > 0

    def step(n_iters: int) -> None:
        for _ in range(n_iters):
            grad = q_diag * ws.zeta + q_lin
            if has_eq:
                grad += Ht @ ws.eta
            z_new = project(ws.zeta - alpha * grad)
            if has_eq:
                ws.w = ws.eta + beta * (H @ (2.0 * z_new - ws.zeta) - h)
            ws.zeta = (1.0 - rho) * ws.zeta + rho * z_new
            ws.eta = (1.0 - rho) * ws.eta + rho * ws.w
            ws.z = z_new

    def residuals() -> tuple[float, float]:
        return kkt_residual(prog, ws.z, ws.eta, alpha)

    return step, residuals


def unscale_dual(prog: ConicProgram, eta: np.ndarray) -> np.ndarray:
    """Map duals of a row-scaled program back to the original rows."""
    return np.asarray(eta, dtype=float) / prog.row_scale
