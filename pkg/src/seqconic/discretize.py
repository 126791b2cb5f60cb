"""Exact discretization of the time-dilated dynamics over one interval.

Each interval [t_k, t_k+1) is remapped to dilated time tau in [0, 1); the
interval length s becomes a decision variable. The discrete update

    x_{k+1} = A_k x_k + B_minus u_k + B_plus u_{k+1} + S_k s_k
              + x_prop - (A_k xbar_k + B_minus ubar_k + B_plus ubar_{k+1} + S_k sbar)

is exact for the linearized time-varying system: A_k, B_minus, B_plus, S_k
solve variational initial value problems alongside the nonlinear reference
propagation (initial conditions I, 0, 0, 0), with the Jacobians evaluated
on the propagated reference path and interpolated reference control. The
joint system is integrated with fixed-step classical RK4.

Under a zero-order hold the u_{k+1} sensitivity B_plus is identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import DivergedReferenceError, DomainError
from .vehicle import PhaseTag, RocketParams, _control_vec, _state_vec, eval_dynamics, eval_jacobians

DEFAULT_SUBSTEPS = 16


class HoldKind(Enum):
    FOH = "foh"
    ZOH = "zoh"


@dataclass(frozen=True)
class DiscreteUpdate:
    """One interval's exact-discretization blocks.

    residual = x_prop - (A @ xbar_k + B_minus @ ubar_k + B_plus @ ubar_k1
    + S * sbar): the affine correction that makes the update exact at the
    reference.
    """

    A: np.ndarray        # (n_x, n_x) state transition matrix over the interval
    B_minus: np.ndarray  # (n_x, n_u) left-node control sensitivity
    B_plus: np.ndarray   # (n_x, n_u) right-node control sensitivity (zero for ZOH)
    S: np.ndarray        # (n_x,) dilation-factor sensitivity
    x_prop: np.ndarray   # (n_x,) propagated reference endpoint
    residual: np.ndarray


@dataclass(frozen=True)
class IntervalReference:
    """Reference quantities of one interval of the rocket problem."""

    x_bar_k: np.ndarray
    u_bar_k: np.ndarray
    u_bar_k1: np.ndarray
    s_bar: float
    phase: PhaseTag
    hold: HoldKind


def _hold_weights(tau: float, hold: HoldKind) -> tuple[float, float]:
    if hold is HoldKind.ZOH:
        return 1.0, 0.0
    return 1.0 - tau, tau


def _interp(u0: np.ndarray, u1: np.ndarray, tau: float, hold: HoldKind) -> np.ndarray:
    wm, wp = _hold_weights(tau, hold)
    return wm * u0 + wp * u1


def interp_control(ref: IntervalReference, tau: float) -> np.ndarray:
    """Reference control at dilated time tau in [0, 1)."""
    if not 0.0 <= tau < 1.0:
        raise DomainError(f"tau must lie in [0, 1), got {tau}")
    return _interp(
        _control_vec(ref.u_bar_k), _control_vec(ref.u_bar_k1), tau, ref.hold
    )


Dynamics = Callable[[np.ndarray, np.ndarray], np.ndarray]
Jacobians = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


def discretize_system(
    f: Dynamics,
    jac: Jacobians,
    x0: np.ndarray,
    u0: np.ndarray,
    u1: np.ndarray,
    s: float,
    hold: HoldKind,
    substeps: int = DEFAULT_SUBSTEPS,
) -> DiscreteUpdate:
    """Discretize a generic dilated system around the given reference.

    f(x, u) and jac(x, u) describe the undilated continuous dynamics; the
    dilation s multiplies them. The augmented state (x, Psi_A, Psi_Bm,
    Psi_Bp, Psi_S) is advanced jointly so the variational equations see the
    exact propagated reference.
    """
    if not s > 0.0:
        raise DomainError(f"dilation factor must be positive, got {s}")
    if substeps < 1:
        raise DomainError(f"substeps must be >= 1, got {substeps}")
    x0 = np.asarray(x0, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    n_x, n_u = x0.size, u0.size

    def rhs(tau, st):
        x, PA, PBm, PBp, PS = st
        u = _interp(u0, u1, tau, hold)
        try:
            fx = f(x, u)
            Ac, Bc = jac(x, u)
        except DomainError as exc:
            raise DivergedReferenceError(
                f"reference left the dynamics domain at tau={tau:.4f}: {exc}"
            ) from exc
        A = s * Ac
        B = s * Bc
        wm, wp = _hold_weights(tau, hold)
        return (
            s * fx,
            A @ PA,
            A @ PBm + wm * B,
            A @ PBp + wp * B,
            A @ PS + fx,
        )

    def step(st, k, c):
        return tuple(a + c * b for a, b in zip(st, k))

    state = (
        x0.copy(),
        np.eye(n_x),
        np.zeros((n_x, n_u)),
        np.zeros((n_x, n_u)),
        np.zeros(n_x),
    )
    h = 1.0 / substeps
    for i in range(substeps):
        tau = i * h
        k1 = rhs(tau, state)
        k2 = rhs(tau + 0.5 * h, step(state, k1, 0.5 * h))
        k3 = rhs(tau + 0.5 * h, step(state, k2, 0.5 * h))
        k4 = rhs(tau + h, step(state, k3, h))
        state = tuple(
            a + (h / 6.0) * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
            for a, p1, p2, p3, p4 in zip(state, k1, k2, k3, k4)
        )

    x_prop, A_k, B_m, B_p, S_k = state
    if not all(np.all(np.isfinite(blk)) for blk in state):
        raise DivergedReferenceError("integration produced non-finite values")
    residual = x_prop - (A_k @ x0 + B_m @ u0 + B_p @ u1 + S_k * s)
    return DiscreteUpdate(
        A=A_k, B_minus=B_m, B_plus=B_p, S=S_k, x_prop=x_prop, residual=residual
    )


def discretize_interval(
    ref: IntervalReference, p: RocketParams, substeps: int = DEFAULT_SUBSTEPS
) -> DiscreteUpdate:
    """Discretize one rocket interval around its reference."""

    def f(x, u):
        return eval_dynamics(x, u, p, ref.phase)

    def jac(x, u):
        return eval_jacobians(x, u, p, ref.phase)

    return discretize_system(
        f,
        jac,
        _state_vec(ref.x_bar_k),
        _control_vec(ref.u_bar_k),
        _control_vec(ref.u_bar_k1),
        ref.s_bar,
        ref.hold,
        substeps,
    )


def propagate_system(
    f: Dynamics,
    x0: np.ndarray,
    u0: np.ndarray,
    u1: np.ndarray,
    s: float,
    hold: HoldKind,
    substeps: int = DEFAULT_SUBSTEPS,
) -> np.ndarray:
    """RK4 propagation of the dilated nonlinear dynamics over tau in [0, 1)."""
    if not s > 0.0:
        raise DomainError(f"dilation factor must be positive, got {s}")
    if substeps < 1:
        raise DomainError(f"substeps must be >= 1, got {substeps}")
    x = np.asarray(x0, dtype=float).copy()
    u0 = np.asarray(u0, dtype=float)
    u1 = np.asarray(u1, dtype=float)

    def rhs(tau, xc):
        try:
            return s * f(xc, _interp(u0, u1, tau, hold))
        except DomainError as exc:
            raise DivergedReferenceError(
                f"propagation left the dynamics domain at tau={tau:.4f}: {exc}"
            ) from exc

    h = 1.0 / substeps
    for i in range(substeps):
        tau = i * h
        k1 = rhs(tau, x)
        k2 = rhs(tau + 0.5 * h, x + 0.5 * h * k1)
        k3 = rhs(tau + 0.5 * h, x + 0.5 * h * k2)
        k4 = rhs(tau + h, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x)):
        raise DivergedReferenceError("propagation produced non-finite values")
    return x


def propagate_nonlinear(
    x_k,
    u_k,
    u_k1,
    s: float,
    phase: PhaseTag,
    hold: HoldKind,
    p: RocketParams,
    substeps: int = DEFAULT_SUBSTEPS,
) -> np.ndarray:
    """Propagate the rocket state across one dilated interval."""

    def f(x, u):
        return eval_dynamics(x, u, p, phase)

    return propagate_system(
        f, _state_vec(x_k), _control_vec(u_k), _control_vec(u_k1), s, hold, substeps
    )
