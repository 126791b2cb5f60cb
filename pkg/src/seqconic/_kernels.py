"""Optional numba-compiled inner loop for the first-order solver.

The kernel advances the primal-dual recursion a fixed number of iterations
in place; residual checks and all decisions stay in pipg.py. Everything is
sequential and deterministic. Falls back to a numpy implementation when
numba is unavailable.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional accelerator
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _csr_matvec(data, indices, indptr, x, out):
    for i in range(out.size):
        acc = 0.0
        for jj in range(indptr[i], indptr[i + 1]):
            acc += data[jj] * x[indices[jj]]
        out[i] = acc


@njit(cache=True)
def residuals(
    q_diag, q_lin,
    h_data, h_indices, h_indptr,
    ht_data, ht_indices, ht_indptr,
    h_rhs,
    box_idx, box_lo, box_hi,
    ball_start, ball_end, ball_coff, ball_center, ball_radius,
    z, eta, alpha,
):
    """(fixed-point, equality) infinity-norm residuals at (z, eta)."""
    n = z.size
    m = h_rhs.size
    pre = np.empty(n)
    _csr_matvec(ht_data, ht_indices, ht_indptr, eta, pre)
    for i in range(n):
        pre[i] = z[i] - alpha * (pre[i] + q_diag[i] * z[i] + q_lin[i])
    for b in range(box_idx.size):
        j = box_idx[b]
        v = pre[j]
        if v < box_lo[b]:
            v = box_lo[b]
        elif v > box_hi[b]:
            v = box_hi[b]
        pre[j] = v
    for b in range(ball_start.size):
        s0, e0, c0 = ball_start[b], ball_end[b], ball_coff[b]
        nrm2 = 0.0
        for j in range(s0, e0):
            d = pre[j] - ball_center[c0 + (j - s0)]
            nrm2 += d * d
        nrm = np.sqrt(nrm2)
        if nrm > ball_radius[b] * (1.0 + 1e-14):
            f = ball_radius[b] / nrm
            for j in range(s0, e0):
                c = ball_center[c0 + (j - s0)]
                pre[j] = c + f * (pre[j] - c)
    fixed = 0.0
    for i in range(n):
        d = abs(z[i] - pre[i])
        if d > fixed:
            fixed = d
    eq = 0.0
    hz = np.empty(m)
    _csr_matvec(h_data, h_indices, h_indptr, z, hz)
    for i in range(m):
        d = abs(hz[i] - h_rhs[i])
        if d > eq:
            eq = d
    return fixed, eq


@njit(cache=True)
def run_iterations(
    q_diag, q_lin,
    h_data, h_indices, h_indptr,
    ht_data, ht_indices, ht_indptr,
    h_rhs,
    box_idx, box_lo, box_hi,
    ball_start, ball_end, ball_coff, ball_center, ball_radius,
    z, w, zeta, eta,
    alpha, beta, rho, n_iters,
):
    n = z.size
    m = h_rhs.size
    grad = np.empty(n)
    refl = np.empty(n)
    hz = np.empty(m)
    for _ in range(n_iters):
        _csr_matvec(ht_data, ht_indices, ht_indptr, eta, grad)
        for i in range(n):
            grad[i] = zeta[i] - alpha * (grad[i] + q_diag[i] * zeta[i] + q_lin[i])
        # grad now holds the pre-projection point; project onto the blocks
        for b in range(box_idx.size):
            j = box_idx[b]
            v = grad[j]
            if v < box_lo[b]:
                v = box_lo[b]
            elif v > box_hi[b]:
                v = box_hi[b]
            grad[j] = v
        for b in range(ball_start.size):
            s0, e0, c0 = ball_start[b], ball_end[b], ball_coff[b]
            nrm2 = 0.0
            for j in range(s0, e0):
                d = grad[j] - ball_center[c0 + (j - s0)]
                nrm2 += d * d
            nrm = np.sqrt(nrm2)
            if nrm > ball_radius[b] * (1.0 + 1e-14):
                f = ball_radius[b] / nrm
                for j in range(s0, e0):
                    c = ball_center[c0 + (j - s0)]
                    grad[j] = c + f * (grad[j] - c)
        # grad now holds z^{j+1}
        for i in range(n):
            refl[i] = 2.0 * grad[i] - zeta[i]
        _csr_matvec(h_data, h_indices, h_indptr, refl, hz)
        for i in range(m):
            w[i] = eta[i] + beta * (hz[i] - h_rhs[i])
        for i in range(n):
            zeta[i] = (1.0 - rho) * zeta[i] + rho * grad[i]
            z[i] = grad[i]
        for i in range(m):
            eta[i] = (1.0 - rho) * eta[i] + rho * w[i]
