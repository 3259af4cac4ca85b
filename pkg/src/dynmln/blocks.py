"""Block Gibbs update of latent coordinate trajectories, one actor at a time.

For actor ``v`` with stacked trajectory ``x_(v)`` (``D`` columns by ``n``
times, column-major as ``(r, i) -> r*n + i``) the full conditional is
Gaussian with precision

    sum_u W[i,v,u] x_u(t_i) x_u(t_i)^T   (block-diagonal in time)
    + diag(tau) kron Sigma^{-1}

and linear term ``b[r,i] = sum_u x_ur(t_i) Rsp[i,v,u]``.  ``W`` carries the
Polya-gamma weights summed over the layers that share these coordinates and
``Rsp`` the matching ``y - 1/2 - omega * offset`` residuals.

The update works in whitened coordinates ``x = L w`` (``Sigma = L L^T``) so
the precision ``tau I + L^T G L`` stays well conditioned when the GP
correlation matrix is nearly singular.  Normal innovations ``Z`` are drawn by
the caller so the numba and numpy kernels consume the RNG identically.
"""
from __future__ import annotations

import numpy as np
from scipy import linalg

from ._accel import njit, pick
from .errors import NumericalError


@njit(nogil=True)
def _update_blocks_nb(X, W, Rsp, tau, L, Z):
    V, D, n = X.shape
    d = D * n
    Lt = np.ascontiguousarray(L.T)
    P = np.empty((d, d))
    bw = np.empty(d)
    g = np.empty((D, D, n))
    b = np.empty((D, n))
    h = np.empty(n)
    wv = np.empty(d)
    for v in range(V):
        g[:] = 0.0
        b[:] = 0.0
        for i in range(n):
            for u in range(V):
                if u == v:
                    continue
                w = W[i, v, u]
                rr = Rsp[i, v, u]
                for r in range(D):
                    xr = X[u, r, i]
                    b[r, i] += xr * rr
                    wxr = w * xr
                    for s in range(r + 1):
                        g[r, s, i] += wxr * X[u, s, i]
        # block (r, s) is L^T diag(g_rs) L, symmetric in (a, c); L lower so i >= max(a, c)
        for r in range(D):
            for s in range(r + 1):
                for a in range(n):
                    for i in range(a, n):
                        h[i] = Lt[a, i] * g[r, s, i]
                    for c in range(a + 1):
                        acc = 0.0
                        for i in range(a, n):
                            acc += h[i] * Lt[c, i]
                        P[r * n + a, s * n + c] = acc
                        P[s * n + c, r * n + a] = acc
                        P[r * n + c, s * n + a] = acc
                        P[s * n + a, r * n + c] = acc
        for r in range(D):
            for a in range(n):
                P[r * n + a, r * n + a] += tau[r]
                acc = 0.0
                for i in range(a, n):
                    acc += L[i, a] * b[r, i]
                bw[r * n + a] = acc
        C = np.linalg.cholesky(P)
        # C y = bw, then C^T w = y + z gives mean + C^{-T} z in one pass
        for j in range(d):
            acc = bw[j]
            for m in range(j):
                acc -= C[j, m] * wv[m]
            wv[j] = acc / C[j, j]
        for j in range(d):
            wv[j] += Z[v, j]
        for j in range(d - 1, -1, -1):
            acc = wv[j]
            for m in range(j + 1, d):
                acc -= C[m, j] * wv[m]
            wv[j] = acc / C[j, j]
        for r in range(D):
            for i in range(n):
                acc = 0.0
                for a in range(i + 1):
                    acc += L[i, a] * wv[r * n + a]
                X[v, r, i] = acc


def _update_blocks_np(X, W, Rsp, tau, L, Z):
    V, D, n = X.shape
    d = D * n
    diag = np.arange(d)
    prior = np.repeat(tau, n)
    for v in range(V):
        g = np.einsum("iu,uri,usi->irs", W[:, v, :], X, X)
        b = np.einsum("iu,uri->ri", Rsp[:, v, :], X)
        P = np.einsum("ia,irs,ic->rasc", L, g, L, optimize=True).reshape(d, d)
        P[diag, diag] += prior
        C = linalg.cholesky(P, lower=True)
        y = linalg.solve_triangular(C, (b @ L).ravel(), lower=True)
        w = linalg.solve_triangular(C, y + Z[v], lower=True, trans="T")
        X[v] = w.reshape(D, n) @ L.T


_impl = pick(_update_blocks_nb, _update_blocks_np)


def update_coordinate_blocks(X, W, Rsp, tau, L, Z, impl=None):
    """Sequentially redraw ``X[v]`` for v = 0..V-1, in place.

    Parameters
    ----------
    X : (V, D, n) array
        Current coordinates; overwritten.
    W, Rsp : (n, V, V) arrays
        Pair weights and residual responses; diagonals must be zero.
    tau : (D,) array
        Prior precision multipliers.
    L : (n, n) array
        Lower Cholesky factor of the GP covariance.
    Z : (V, D*n) array
        Standard normal innovations.
    """
    if X.shape[1] == 0:
        return X
    fn = impl or _impl
    try:
        fn(X, np.ascontiguousarray(W), np.ascontiguousarray(Rsp), np.ascontiguousarray(tau, dtype=float),
           np.ascontiguousarray(L), np.ascontiguousarray(Z))
    except (np.linalg.LinAlgError, linalg.LinAlgError) as exc:
        raise NumericalError(f"coordinate block precision not positive definite: {exc}") from None
    return X
