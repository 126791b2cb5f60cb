"""Planar rocket vehicle model.

State x = (m, r_x, r_z, v_x, v_z, theta, omega) with r_x the vertical
(altitude) axis and r_z the horizontal axis in the inertial frame; theta is
the body tilt from the inertial vertical. Control u = (T, delta): total
thrust magnitude and engine gimbal deflection.

Forces:
    thrust (inertial)   F_I = T * (cos(theta + delta), -sin(theta + delta))
    thrust (body, z)    F_Bz = -T * sin(delta)
    aerodynamic (body)  A_B = -(rho * S / 2) * |v| * diag(c_x, c_z) * R^T v
    aerodynamic (inertial) A_I = R A_B,  R = [[c, s], [-s, c]], c = cos(theta)

Equations of motion:
    m'     = -alpha_e * T
    r'     = v
    v'     = (F_I + A_I) / m + (-g0, 0)
    theta' = omega
    omega' = (F_Bz * l_cm - A_Bz * l_cp) / J,   J = m (l_r^2/4 + l_h^2/12)

The aerodynamic moment arm l_cp switches from zero (coast, center of
pressure held at the mass center by the flaps) to a fixed positive value
once the engines ignite.

All functions here are pure; they may be called concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import ConfigurationError, DomainError

N_STATES = 7
N_CONTROLS = 2

# state component indices
IDX_M, IDX_RX, IDX_RZ, IDX_VX, IDX_VZ, IDX_TH, IDX_OM = range(N_STATES)
# control component indices
IDX_T, IDX_DELTA = range(N_CONTROLS)

# below this speed the aero force (and its Jacobian contribution) is zeroed;
# |v| is not differentiable at v = 0 and the force is physically negligible
AERO_SPEED_EPS = 1e-9


class PhaseTag(Enum):
    """Flight phase; selects the aero moment arm and engine count."""

    COAST = "coast"
    HIGH_THRUST = "high_thrust"
    LOW_THRUST = "low_thrust"
    TERMINAL_DESCENT = "terminal_descent"

    @property
    def powered(self) -> bool:
        return self is not PhaseTag.COAST

    @property
    def engine_count(self) -> int:
        if self is PhaseTag.COAST:
            return 0
        return 3 if self is PhaseTag.HIGH_THRUST else 1


@dataclass(frozen=True)
class RocketState:
    """Node state in physical components."""

    m: float
    r: np.ndarray  # (2,) position, r[0] vertical altitude
    v: np.ndarray  # (2,) velocity
    theta: float
    omega: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.m, self.r[0], self.r[1], self.v[0], self.v[1], self.theta, self.omega]
        )

    @staticmethod
    def from_array(x: np.ndarray) -> "RocketState":
        x = np.asarray(x, dtype=float)
        return RocketState(
            m=float(x[IDX_M]),
            r=x[IDX_RX : IDX_RZ + 1].copy(),
            v=x[IDX_VX : IDX_VZ + 1].copy(),
            theta=float(x[IDX_TH]),
            omega=float(x[IDX_OM]),
        )


@dataclass(frozen=True)
class RocketControl:
    """Thrust magnitude and gimbal deflection."""

    T: float
    delta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.T, self.delta])

    @staticmethod
    def from_array(u: np.ndarray) -> "RocketControl":
        u = np.asarray(u, dtype=float)
        return RocketControl(T=float(u[IDX_T]), delta=float(u[IDX_DELTA]))


def _vec2(value) -> np.ndarray:
    a = np.asarray(value, dtype=float).reshape(-1)
    if a.size != 2:
        raise ConfigurationError(f"expected a 2-vector, got shape {a.shape}")
    return a


@dataclass
class RocketParams:
    """Physical constants, mission bounds, boundary values, and grid indices.

    Defaults reproduce the reference landing scenario (Starship-class
    vehicle, four flight phases on a 16-node grid). Angles are radians,
    everything else SI.
    """

    g0: float = 9.81
    Isp: float = 330.0
    l_r: float = 4.5
    l_h: float = 50.0
    l_cm: float = 0.4 * 50.0
    l_cp_coast: float = 0.0
    l_cp_powered: float = 0.2 * 50.0
    rho_air: float = 1.225
    S_area: float = 545.0
    c_x: float = 0.0522
    c_z: float = 0.4068
    T_min: float = 880e3
    T_max: float = 2200e3
    delta_max: float = math.radians(10.0)
    delta_max_td: float = math.radians(1.0)
    delta_dot_max: float = math.radians(15.0)
    h_trigger: float = 100.0
    gamma_gs: float = math.radians(5.0)
    v_max: float = 20.0
    theta_max: float = math.radians(5.0)
    omega_max: float = math.radians(2.5)
    m_dry: float = 85e3
    m_i: float = 100e3
    r_i: np.ndarray = field(default_factory=lambda: np.array([1000.0, 100.0]))
    v_i: np.ndarray = field(default_factory=lambda: np.array([-90.0, 0.0]))
    r_f: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0]))
    v_f: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0]))
    theta_i: float = math.radians(90.0)
    theta_f: float = 0.0
    omega_i: float = 0.0
    omega_f: float = 0.0
    s_min: float = 0.6
    s_max: float = 10.0
    v_terminal: float = 85.0  # informational only; not used by the dynamics
    N: int = 16
    k_ignition: int = 2
    k_switch: int = 7
    k_trigger: int = 12

    def __post_init__(self):
        self.r_i = _vec2(self.r_i)
        self.v_i = _vec2(self.v_i)
        self.r_f = _vec2(self.r_f)
        self.v_f = _vec2(self.v_f)
        positive = [
            "g0", "Isp", "l_r", "l_h", "l_cm", "rho_air", "S_area", "c_x", "c_z",
            "T_min", "T_max", "delta_max", "delta_max_td", "delta_dot_max",
            "h_trigger", "gamma_gs", "v_max", "theta_max", "omega_max",
            "m_dry", "m_i", "s_min", "s_max",
        ]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be strictly positive")
        if self.l_cp_coast < 0 or self.l_cp_powered < 0:
            raise ConfigurationError("aero moment arms must be nonnegative")
        if not self.m_dry < self.m_i:
            raise ConfigurationError("m_dry must be below the initial mass m_i")
        if not self.s_min < self.s_max:
            raise ConfigurationError("s_min must be below s_max")
        if not self.T_min < self.T_max:
            raise ConfigurationError("T_min must be below T_max")
        if not self.delta_max_td < self.delta_max:
            raise ConfigurationError("delta_max_td must be below delta_max")
        if not (1 <= self.k_ignition < self.k_switch < self.k_trigger <= self.N):
            raise ConfigurationError(
                "grid indices must satisfy 1 <= k_ignition < k_switch <= "
                f"k_trigger <= N, got ({self.k_ignition}, {self.k_switch}, "
                f"{self.k_trigger}, {self.N})"
            )

    @property
    def alpha_e(self) -> float:
        """Thrust-specific fuel consumption, 1 / (Isp * g0)."""
        return 1.0 / (self.Isp * self.g0)

    @property
    def inertia_coeff(self) -> float:
        """J / m for a uniform solid cylinder: l_r^2/4 + l_h^2/12."""
        return self.l_r**2 / 4.0 + self.l_h**2 / 12.0

    def l_cp(self, phase: PhaseTag) -> float:
        return self.l_cp_powered if phase.powered else self.l_cp_coast

    def copy(self, **overrides) -> "RocketParams":
        return replace(self, **overrides)


def _state_vec(x) -> np.ndarray:
    if isinstance(x, RocketState):
        return x.as_array()
    a = np.asarray(x, dtype=float)
    if a.shape != (N_STATES,):
        raise DomainError(f"state must have {N_STATES} components, got {a.shape}")
    return a


def _control_vec(u) -> np.ndarray:
    if isinstance(u, RocketControl):
        return u.as_array()
    a = np.asarray(u, dtype=float)
    if a.shape != (N_CONTROLS,):
        raise DomainError(f"control must have {N_CONTROLS} components, got {a.shape}")
    return a


def eval_dynamics(x, u, p: RocketParams, phase: PhaseTag) -> np.ndarray:
    """Continuous state derivative f(x, u) for the given flight phase.

    Raises DomainError on non-finite inputs or nonpositive mass.
    """
    xv = _state_vec(x)
    uv = _control_vec(u)
    if not (np.all(np.isfinite(xv)) and np.all(np.isfinite(uv))):
        raise DomainError("non-finite state or control")
    m = xv[IDX_M]
    if m <= 0.0:
        raise DomainError(f"mass must be positive, got {m}")
    vx, vz = xv[IDX_VX], xv[IDX_VZ]
    theta = xv[IDX_TH]
    T, delta = uv[IDX_T], uv[IDX_DELTA]

    c, s = math.cos(theta), math.sin(theta)
    cthd, sthd = math.cos(theta + delta), math.sin(theta + delta)
    speed = math.hypot(vx, vz)
    kappa = 0.5 * p.rho_air * p.S_area
    l_cp = p.l_cp(phase)

    # thrust, inertial frame
    fi_x = T * cthd
    fi_z = -T * sthd
    # aero, body frame then rotated to inertial
    if speed > AERO_SPEED_EPS:
        vb_x = c * vx - s * vz
        vb_z = s * vx + c * vz
        ab_x = -kappa * speed * p.c_x * vb_x
        ab_z = -kappa * speed * p.c_z * vb_z
        ai_x = c * ab_x + s * ab_z
        ai_z = -s * ab_x + c * ab_z
    else:
        ab_z = 0.0
        ai_x = ai_z = 0.0

    inertia = m * p.inertia_coeff
    f = np.empty(N_STATES)
    f[IDX_M] = -p.alpha_e * T
    f[IDX_RX] = vx
    f[IDX_RZ] = vz
    f[IDX_VX] = (fi_x + ai_x) / m - p.g0
    f[IDX_VZ] = (fi_z + ai_z) / m
    f[IDX_TH] = xv[IDX_OM]
    f[IDX_OM] = (-T * math.sin(delta) * p.l_cm - ab_z * l_cp) / inertia
    return f


def eval_jacobians(x, u, p: RocketParams, phase: PhaseTag) -> tuple[np.ndarray, np.ndarray]:
    """Analytic Jacobians (A, B) = (df/dx, df/du) of eval_dynamics."""
    xv = _state_vec(x)
    uv = _control_vec(u)
    if not (np.all(np.isfinite(xv)) and np.all(np.isfinite(uv))):
        raise DomainError("non-finite state or control")
    m = xv[IDX_M]
    if m <= 0.0:
        raise DomainError(f"mass must be positive, got {m}")
    vx, vz = xv[IDX_VX], xv[IDX_VZ]
    theta = xv[IDX_TH]
    T, delta = uv[IDX_T], uv[IDX_DELTA]

    c, s = math.cos(theta), math.sin(theta)
    cthd, sthd = math.cos(theta + delta), math.sin(theta + delta)
    sind, cosd = math.sin(delta), math.cos(delta)
    speed = math.hypot(vx, vz)
    kappa = 0.5 * p.rho_air * p.S_area
    l_cp = p.l_cp(phase)
    inertia = m * p.inertia_coeff
    v = np.array([vx, vz])

    A = np.zeros((N_STATES, N_STATES))
    B = np.zeros((N_STATES, N_CONTROLS))

    # mass row: linear in T only
    B[IDX_M, IDX_T] = -p.alpha_e
    # position rows
    A[IDX_RX, IDX_VX] = 1.0
    A[IDX_RZ, IDX_VZ] = 1.0
    # tilt row
    A[IDX_TH, IDX_OM] = 1.0

    fi = np.array([T * cthd, -T * sthd])
    dfi_dth = np.array([-T * sthd, -T * cthd])

    if speed > AERO_SPEED_EPS:
        # inertial aero force: A_I = -kappa |v| M(theta) v with M = R C R^T
        cxz = p.c_z - p.c_x
        M = np.array(
            [
                [c * c * p.c_x + s * s * p.c_z, c * s * cxz],
                [c * s * cxz, s * s * p.c_x + c * c * p.c_z],
            ]
        )
        s2, c2 = math.sin(2 * theta), math.cos(2 * theta)
        dM_dth = cxz * np.array([[s2, c2], [c2, -s2]])
        Mv = M @ v
        ai = -kappa * speed * Mv
        dai_dv = -kappa * (np.outer(Mv, v) / speed + speed * M)
        dai_dth = -kappa * speed * (dM_dth @ v)
        # body-frame z aero force drives the pitching moment
        vb_x = c * vx - s * vz
        vb_z = s * vx + c * vz
        ab_z = -kappa * speed * p.c_z * vb_z
        dabz_dv = -kappa * p.c_z * (vb_z * v / speed + speed * np.array([s, c]))
        dabz_dth = -kappa * speed * p.c_z * vb_x
    else:
        ai = np.zeros(2)
        dai_dv = np.zeros((2, 2))
        dai_dth = np.zeros(2)
        ab_z = 0.0
        dabz_dv = np.zeros(2)
        dabz_dth = 0.0

    # velocity rows
    A[IDX_VX : IDX_VZ + 1, IDX_M] = -(fi + ai) / m**2
    A[IDX_VX : IDX_VZ + 1, IDX_VX : IDX_VZ + 1] = dai_dv / m
    A[IDX_VX : IDX_VZ + 1, IDX_TH] = (dfi_dth + dai_dth) / m
    B[IDX_VX : IDX_VZ + 1, IDX_T] = np.array([cthd, -sthd]) / m
    B[IDX_VX : IDX_VZ + 1, IDX_DELTA] = dfi_dth / m

    # angular rate row
    torque = -T * sind * p.l_cm - ab_z * l_cp
    A[IDX_OM, IDX_M] = -torque / (m * inertia)
    A[IDX_OM, IDX_VX : IDX_VZ + 1] = -l_cp * dabz_dv / inertia
    A[IDX_OM, IDX_TH] = -l_cp * dabz_dth / inertia
    B[IDX_OM, IDX_T] = -sind * p.l_cm / inertia
    B[IDX_OM, IDX_DELTA] = -T * cosd * p.l_cm / inertia
    return A, B


def eval_dilated(
    x, u, s: float, p: RocketParams, phase: PhaseTag
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Time-dilated dynamics and sensitivities.

    With dilation factor s, the dynamics in dilated time are F = s f(x, u);
    returns (F, dF/dx, dF/du, dF/ds) = (s f, s A, s B, f).
    """
    if not s > 0.0:
        raise DomainError(f"dilation factor must be positive, got {s}")
    f = eval_dynamics(x, u, p, phase)
    A, B = eval_jacobians(x, u, p, phase)
    return s * f, s * A, s * B, f
