"""Independent reference solvers used only by the tests.

These deliberately avoid the library's own code paths: projections are
re-derived inline, the QP oracle runs an accelerated dual-ascent scheme
with dense numpy linear algebra (or a direct KKT solve when the geometry
is affine), and the LTI discretization oracle uses matrix exponentials.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

# block descriptions: ("free", dim) | ("box", lo, hi) | ("ball", center, radius)
# | ("singleton", value)


def block_dim(block) -> int:
    kind = block[0]
    if kind == "free":
        return block[1]
    if kind == "box":
        return len(block[1])
    if kind == "ball":
        return len(block[1])
    return len(block[1])


def project_point(block, y: np.ndarray) -> np.ndarray:
    """Reference projection, written independently of the library."""
    kind = block[0]
    if kind == "free":
        return y.copy()
    if kind == "box":
        return np.minimum(np.maximum(y, block[1]), block[2])
    if kind == "singleton":
        return np.asarray(block[1], dtype=float).copy()
    center, radius = np.asarray(block[1], dtype=float), block[2]
    d = y - center
    nrm = np.linalg.norm(d)
    if nrm <= radius:
        return y.copy()
    return center + (radius / nrm) * d


def blockwise_argmin(blocks, q_diag, lin):
    """argmin over D of 1/2 z'Qz + lin'z, blockwise (Q diagonal, positive).

    Ball blocks require a uniform Q entry over the block, in which case the
    minimizer is the ball projection of the unconstrained solution.
    """
    z = np.empty(lin.size)
    off = 0
    for b in blocks:
        d = block_dim(b)
        sl = slice(off, off + d)
        u = -lin[sl] / q_diag[sl]
        if b[0] == "free":
            z[sl] = u
        elif b[0] == "box":
            z[sl] = np.minimum(np.maximum(u, b[1]), b[2])
        elif b[0] == "singleton":
            z[sl] = b[1]
        else:
            qb = q_diag[sl]
            assert np.allclose(qb, qb[0]), "ball blocks need uniform curvature"
            z[sl] = project_point(b, u)
        off += d
    return z


def solve_qp_oracle(
    q_diag: np.ndarray,
    q_lin: np.ndarray,
    H: np.ndarray,
    h: np.ndarray,
    blocks,
    max_outer: int = 400_000,
    tol: float = 1e-11,
):
    """Long-run accelerated dual ascent for min 1/2 z'Qz + q'z, Hz=h, z in D.

    The dual gradient is H z*(eta) - h with z*(eta) the blockwise
    Lagrangian minimizer; Nesterov acceleration with function restarts.
    Requires strictly positive q_diag. Returns (z, eta, eq_residual).
    """
    q_diag = np.asarray(q_diag, dtype=float)
    q_lin = np.asarray(q_lin, dtype=float)
    H = np.asarray(H, dtype=float)
    h = np.asarray(h, dtype=float)
    assert np.all(q_diag > 0), "oracle needs strong convexity"
    m = H.shape[0]
    if m == 0:
        z = blockwise_argmin(blocks, q_diag, q_lin)
        return z, np.zeros(0), 0.0

    # dual gradient Lipschitz constant: ||H||^2 / min Q
    sig = np.linalg.svd(H, compute_uv=False)
    step = float(np.min(q_diag)) / (sig[0] ** 2)

    eta = np.zeros(m)
    mom = eta.copy()
    t_acc = 1.0
    best_eta = eta
    best_res = np.inf
    last_restart_res = np.inf
    for it in range(1, max_outer + 1):
        z = blockwise_argmin(blocks, q_diag, q_lin + H.T @ mom)
        g = H @ z - h
        eta_next = mom + step * g
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc**2))
        mom = eta_next + ((t_acc - 1.0) / t_next) * (eta_next - eta)
        eta, t_acc = eta_next, t_next
        if it % 200 == 0:
            z_chk = blockwise_argmin(blocks, q_diag, q_lin + H.T @ eta)
            res = float(np.max(np.abs(H @ z_chk - h)))
            if res < best_res:
                best_res, best_eta = res, eta.copy()
            if res <= tol:
                break
            # restart momentum if the residual stopped improving
            if res > 0.999 * last_restart_res:
                mom = eta.copy()
                t_acc = 1.0
            last_restart_res = res
    z = blockwise_argmin(blocks, q_diag, q_lin + H.T @ best_eta)
    return z, best_eta, float(np.max(np.abs(H @ z - h)))


def solve_kkt_oracle(q_diag, q_lin, H, h):
    """Direct dense KKT solve for the equality-constrained (all-free) case."""
    n, m = q_lin.size, h.size
    K = np.zeros((n + m, n + m))
    K[:n, :n] = np.diag(q_diag)
    K[:n, n:] = H.T
    K[n:, :n] = H
    rhs = np.concatenate([-q_lin, h])
    sol = np.linalg.solve(K, rhs)
    return sol[:n], sol[n:]


def objective(q_diag, q_lin, z) -> float:
    return float(0.5 * z @ (q_diag * z) + q_lin @ z)


def grid_project_oracle(block, y: np.ndarray, span: float = 3.0, n: int = 241):
    """2-D brute-force projection: argmin distance over a dense grid."""
    gx = np.linspace(y[0] - span, y[0] + span, n)
    gy = np.linspace(y[1] - span, y[1] + span, n)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    kind = block[0]
    eps = 1e-12
    if kind == "free":
        member = np.ones(len(pts), dtype=bool)
    elif kind == "box":
        member = np.all(pts >= np.asarray(block[1]) - eps, axis=1) & np.all(
            pts <= np.asarray(block[2]) + eps, axis=1
        )
    elif kind == "ball":
        member = np.linalg.norm(pts - np.asarray(block[1]), axis=1) <= block[2] + eps
    else:
        member = np.all(np.abs(pts - np.asarray(block[1])) <= 1e-9, axis=1)
    if not np.any(member):
        return None, np.inf
    cand = pts[member]
    d = np.linalg.norm(cand - y, axis=1)
    i = int(np.argmin(d))
    return cand[i], float(d[i])


def lti_discretize_oracle(A, B, s, hold):
    """Closed-form dilated-LTI update blocks via augmented matrix exponentials.

    Returns (A_d, B_minus, B_plus) for the hold; for ZOH B_plus is zero and
    B_minus carries the full convolution integral.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n, m = B.shape
    Ad = sla.expm(s * A)
    # Van Loan blocks: exp of [[sA, sB, 0], [0, 0, I], [0, 0, 0]] packs
    # int e^{sA(1-t)} sB dt and int e^{sA(1-t)} sB t dt
    M = np.zeros((n + 2 * m, n + 2 * m))
    M[:n, :n] = s * A
    M[:n, n : n + m] = s * B
    M[n : n + m, n + m :] = np.eye(m)
    E = sla.expm(M)
    B_total = E[:n, n : n + m]
    B_ramp = E[:n, n + m :]
    if hold == "zoh":
        return Ad, B_total, np.zeros((n, m))
    return Ad, B_total - B_ramp, B_ramp
