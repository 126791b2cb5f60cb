"""Vectorized strongly convex subproblem with separable projectable sets.

    minimize   1/2 z' Q z + <q, z>
    subject to H z = h,  z in D

Q is diagonal (stored as a vector), H sparse, and D a Cartesian product of
blocks with closed-form Euclidean projections: free, singleton, box (with
infinite bounds allowed, covering one-sided half-lines), and balls.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class Free:
    dim: int

    def project(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y, dtype=float)


@dataclass(frozen=True)
class Singleton:
    value: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value", np.atleast_1d(np.asarray(self.value, dtype=float)))

    @property
    def dim(self) -> int:
        return self.value.size

    def project(self, y: np.ndarray) -> np.ndarray:
        return self.value.copy()


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("box bounds must have matching shapes")
        if np.any(lo > hi):
            raise ValueError(f"box requires lo <= hi, got lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    def project(self, y: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(y, dtype=float), self.lo, self.hi)


# membership slack making ball projection exactly idempotent: a freshly
# projected point can land a few ulps outside the sphere and must be a
# fixed point of the next projection
_BALL_SLACK = 1.0 + 1e-14


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return self.center.size

    def project(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        d = y - self.center
        nrm = float(np.linalg.norm(d))
        if nrm <= self.radius * _BALL_SLACK:
            return y.copy()
        return self.center + (self.radius / nrm) * d


def half_line_above(lo: float) -> Box:
    """One-sided interval [lo, inf), encoded as a degenerate box."""
    return Box(np.array([lo]), np.array([np.inf]))


def half_line_below(hi: float) -> Box:
    """One-sided interval (-inf, hi], encoded as a degenerate box."""
    return Box(np.array([-np.inf]), np.array([hi]))


SetBlock = Free | Singleton | Box | Ball


def project_block(block: SetBlock, y: np.ndarray) -> np.ndarray:
    """Euclidean projection of y onto one block's set."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.size != block.dim:
        raise ValueError(f"point has dim {y.size}, block expects {block.dim}")
    return block.project(y)


def project_all(blocks: list[SetBlock], z: np.ndarray) -> np.ndarray:
    """Blockwise projection of a full-dimension point (separable sets)."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    off = 0
    for b in blocks:
        out[off : off + b.dim] = b.project(z[off : off + b.dim])
        off += b.dim
    if off != z.size:
        raise ValueError(f"blocks cover {off} indices, point has {z.size}")
    return out


class _ProjectionPlan:
    """Index-gathered projection of the whole block list in a few array ops.

    Boxes and singletons collapse into one clip; balls are applied per
    block. Produces bitwise the same result as the per-block loop.
    """

    def __init__(self, blocks: list[SetBlock]):
        box_idx, box_lo, box_hi = [], [], []
        self.balls: list[tuple[slice, Ball]] = []
        off = 0
        for b in blocks:
            rng = slice(off, off + b.dim)
            if isinstance(b, Box):
                box_idx.append(np.arange(rng.start, rng.stop))
                box_lo.append(b.lo)
                box_hi.append(b.hi)
            elif isinstance(b, Singleton):
                box_idx.append(np.arange(rng.start, rng.stop))
                box_lo.append(b.value)
                box_hi.append(b.value)
            elif isinstance(b, Ball):
                self.balls.append((rng, b))
            off += b.dim
        self.box_idx = (
            np.concatenate(box_idx) if box_idx else np.empty(0, dtype=int)
        )
        self.box_lo = np.concatenate(box_lo) if box_lo else np.empty(0)
        self.box_hi = np.concatenate(box_hi) if box_hi else np.empty(0)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        out = z.copy()
        if self.box_idx.size:
            out[self.box_idx] = np.clip(z[self.box_idx], self.box_lo, self.box_hi)
        for rng, ball in self.balls:
            out[rng] = ball.project(z[rng])
        return out


@dataclass
class ConicProgram:
    """Immutable vectorized subproblem; construction validates structure."""

    dim: int
    q_diag: np.ndarray           # diagonal of Q, nonnegative
    q_lin: np.ndarray            # linear cost term
    H: sp.csr_matrix             # equality matrix, possibly 0 rows
    h: np.ndarray
    blocks: list[SetBlock]
    col_scale: np.ndarray = field(default=None)  # stored z = col_scale * physical z
    row_scale: np.ndarray = field(default=None)  # stored row i = original row i / row_scale[i]

    def __post_init__(self):
        self.q_diag = np.asarray(self.q_diag, dtype=float)
        self.q_lin = np.asarray(self.q_lin, dtype=float)
        self.h = np.asarray(self.h, dtype=float)
        self.H = sp.csr_matrix(self.H)
        if self.q_diag.shape != (self.dim,) or self.q_lin.shape != (self.dim,):
            raise ValueError("cost terms must match the program dimension")
        if np.any(self.q_diag < 0):
            raise ValueError("Q diagonal entries must be nonnegative")
        if self.H.shape[1] != self.dim:
            raise ValueError(
                f"H has {self.H.shape[1]} columns, program dimension is {self.dim}"
            )
        if self.h.shape != (self.H.shape[0],):
            raise ValueError("h must have one entry per row of H")
        covered = sum(b.dim for b in self.blocks)
        if covered != self.dim:
            raise ValueError(
                f"blocks cover {covered} indices, program dimension is {self.dim}"
            )
        if self.col_scale is None:
            self.col_scale = np.ones(self.dim)
        if self.row_scale is None:
            self.row_scale = np.ones(self.H.shape[0])

    @property
    def n_eq(self) -> int:
        return self.H.shape[0]

    @cached_property
    def Ht(self) -> sp.csr_matrix:
        return sp.csr_matrix(self.H.T)

    @cached_property
    def project(self) -> _ProjectionPlan:
        return _ProjectionPlan(self.blocks)

    @cached_property
    def block_offsets(self) -> np.ndarray:
        return np.cumsum([0] + [b.dim for b in self.blocks])


def apply_Q(prog: ConicProgram, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (prog.dim,):
        raise ValueError(f"z has shape {z.shape}, expected ({prog.dim},)")
    return prog.q_diag * z


def apply_H(prog: ConicProgram, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (prog.dim,):
        raise ValueError(f"z has shape {z.shape}, expected ({prog.dim},)")
    return prog.H @ z


def apply_Ht(prog: ConicProgram, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (prog.n_eq,):
        raise ValueError(f"w has shape {w.shape}, expected ({prog.n_eq},)")
    return prog.Ht @ w


def kkt_residual(
    prog: ConicProgram, z: np.ndarray, eta: np.ndarray, alpha: float
) -> tuple[float, float]:
    """Optimality certificate: (fixed-point residual, equality residual).

    fixed-point: ||z - proj_D[z - alpha (Qz + q + H'eta)]||_inf
    equality:    ||Hz - h||_inf
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    z = np.asarray(z, dtype=float)
    grad = apply_Q(prog, z) + prog.q_lin
    if prog.n_eq:
        grad = grad + apply_Ht(prog, np.asarray(eta, dtype=float))
        eq = float(np.max(np.abs(apply_H(prog, z) - prog.h)))
    else:
        eq = 0.0
    fixed = float(np.max(np.abs(z - prog.project(z - alpha * grad))))
    return fixed, eq


def _block_descr(b: SetBlock) -> dict:
    if isinstance(b, Free):
        return {"kind": "free", "dim": b.dim}
    if isinstance(b, Singleton):
        return {"kind": "singleton", "value": b.value.tolist()}
    if isinstance(b, Box):
        return {"kind": "box", "lo": b.lo.tolist(), "hi": b.hi.tolist()}
    return {"kind": "ball", "center": b.center.tolist(), "radius": b.radius}


def dump_program(prog: ConicProgram, path) -> None:
    """Write the program (cost, equalities, blocks) to JSON for inspection."""
    coo = prog.H.tocoo()
    payload = {
        "dim": prog.dim,
        "q_diag": prog.q_diag.tolist(),
        "q_lin": prog.q_lin.tolist(),
        "H": {
            "shape": list(prog.H.shape),
            "rows": coo.row.tolist(),
            "cols": coo.col.tolist(),
            "vals": coo.data.tolist(),
        },
        "h": prog.h.tolist(),
        "blocks": [_block_descr(b) for b in prog.blocks],
    }
    with open(path, "w") as f:
        json.dump(payload, f)
