"""Block update of one actor's trajectories against a dense construction of its conditional."""
import numpy as np
import pytest

from dynmln.blocks import _update_blocks_nb, _update_blocks_np, update_coordinate_blocks
from dynmln.errors import NumericalError
from dynmln.gp import sq_exp_cov

IMPLS = {"numba": _update_blocks_nb, "numpy": _update_blocks_np}


def inputs(V=4, D=2, n=3, kappa=0.5, seed=0):
    rng = np.random.default_rng(seed)
    Sigma = sq_exp_cov(np.arange(1.0, n + 1), kappa)
    L = np.linalg.cholesky(Sigma)
    X = rng.standard_normal((V, D, n))
    W = rng.uniform(0.1, 0.3, (n, V, V))
    W = W + W.transpose(0, 2, 1)
    Rsp = rng.standard_normal((n, V, V))
    Rsp = Rsp + Rsp.transpose(0, 2, 1)
    idx = np.arange(V)
    W[:, idx, idx] = 0
    Rsp[:, idx, idx] = 0
    tau = np.array([1.0, 2.5, 4.0][:D])
    return X, W, Rsp, tau, L, Sigma


def dense_conditional(X, W, Rsp, tau, Sigma, v):
    """Mean and covariance of x_(v) in (r, i) -> r*n + i order from an explicit regression."""
    V, D, n = X.shape
    rows, weights, resp = [], [], []
    for u in range(V):
        if u == v:
            continue
        for i in range(n):
            row = np.zeros(D * n)
            row[np.arange(D) * n + i] = X[u, :, i]
            rows.append(row)
            weights.append(W[i, v, u])
            resp.append(Rsp[i, v, u])
    Xd = np.array(rows)
    prec = Xd.T @ np.diag(weights) @ Xd + np.kron(np.diag(tau), np.linalg.inv(Sigma))
    cov = np.linalg.inv(prec)
    return cov @ (Xd.T @ np.array(resp)), cov


@pytest.mark.parametrize("name", IMPLS)
def test_zero_innovation_gives_sequential_conditional_means(name):
    X, W, Rsp, tau, L, Sigma = inputs()
    V, D, n = X.shape
    expected = X.copy()
    for v in range(V):
        mean, _ = dense_conditional(expected, W, Rsp, tau, Sigma, v)
        expected[v] = mean.reshape(D, n)
    got = X.copy()
    IMPLS[name](got, W, Rsp, tau, L, np.zeros((V, D * n)))
    assert np.allclose(got, expected, rtol=1e-9, atol=1e-11)


@pytest.mark.parametrize("name", IMPLS)
def test_innovation_map_reproduces_conditional_covariance(name):
    X, W, Rsp, tau, L, Sigma = inputs(seed=1)
    V, D, n = X.shape
    _, cov = dense_conditional(X, W, Rsp, tau, Sigma, 0)
    base = X.copy()
    IMPLS[name](base, W, Rsp, tau, L, np.zeros((V, D * n)))
    cols = []
    for j in range(D * n):
        Z = np.zeros((V, D * n))
        Z[0, j] = 1.0
        Xj = X.copy()
        IMPLS[name](Xj, W, Rsp, tau, L, Z)
        cols.append((Xj[0] - base[0]).ravel())
    A = np.array(cols).T
    assert np.allclose(A @ A.T, cov, rtol=1e-9, atol=1e-12)


def test_two_actor_regressor_pattern():
    # with V=2 the regressor for actor 1 holds exactly x_2(t_i) in row i of each column block
    X, W, Rsp, tau, L, Sigma = inputs(V=2, D=2, n=3, seed=2)
    mean, cov = dense_conditional(X, W, Rsp, tau, Sigma, 0)
    G = np.zeros((6, 6))
    for i in range(3):
        xi = X[1, :, i]
        G[np.ix_([i, 3 + i], [i, 3 + i])] = W[i, 0, 1] * np.outer(xi, xi)
    prec = G + np.kron(np.diag(tau), np.linalg.inv(Sigma))
    assert np.allclose(np.linalg.inv(cov), prec, rtol=1e-8)
    got = X.copy()
    _update_blocks_nb(got, W, Rsp, tau, L, np.zeros((2, 6)))
    assert np.allclose(got[0].ravel(), mean, rtol=1e-9)


def test_backends_agree_at_reference_size():
    X, W, Rsp, tau, L, _ = inputs(V=30, D=3, n=17, kappa=0.05, seed=3)
    Z = np.random.default_rng(4).standard_normal((30, 3 * 17))
    a, b = X.copy(), X.copy()
    _update_blocks_nb(a, W, Rsp, tau, L, Z)
    _update_blocks_np(b, W, Rsp, tau, L, Z)
    assert np.max(np.abs(a - b)) < 1e-10


def test_huge_precision_collapses_to_zero():
    X, W, Rsp, _, L, _ = inputs(V=5, D=2, n=4, seed=5)
    Z = np.random.default_rng(6).standard_normal((5, 8))
    update_coordinate_blocks(X, W, Rsp, np.array([1e8, 1e8]), L, Z)
    assert np.max(np.abs(X)) < 1e-3


def test_zero_dimension_is_noop():
    X = np.zeros((3, 0, 2))
    assert update_coordinate_blocks(X, np.zeros((2, 3, 3)), np.zeros((2, 3, 3)), np.zeros(0), np.eye(2), np.zeros((3, 0))) is X


def test_indefinite_precision_raises_numerical_error():
    X, W, Rsp, _, L, _ = inputs(V=3, D=1, n=2, seed=7)
    with pytest.raises(NumericalError):
        update_coordinate_blocks(X, W, Rsp, np.array([-50.0]), L, np.zeros((3, 2)))
