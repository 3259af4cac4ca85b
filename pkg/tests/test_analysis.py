import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dynmln.analysis import (
    auc, auc_by_slice, concentration_cells, concentration_metrics, degree_draws, degree_trajectory,
    density_draws, density_trajectory, edge_prob_mean, ess, ess_many, ess_with_flag, fresh_network_auc,
    group_contact_trajectory, predict_edges, prior_logodds_cov_oracle, summarize_draws,
)
from dynmln.errors import DataError
from dynmln.netdata import CellTable, pair_arrays


def pair_count_auc(scores, labels):
    """Direct count over positive/negative pairs."""
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    total = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return total / (len(pos) * len(neg))


# ------------------------------------------------------------ means


def test_edge_prob_mean_examples():
    one = np.random.default_rng(0).random((1, 2, 3, 6))
    assert np.array_equal(edge_prob_mean(one), one[0])
    two = np.stack([np.full((1, 1, 3), 0.2), np.full((1, 1, 3), 0.6)])
    assert np.allclose(edge_prob_mean(two), 0.4)
    with pytest.raises(DataError):
        edge_prob_mean(np.zeros((0, 1, 1, 3)))


def test_predict_edges_restricts_mean():
    pi = np.random.default_rng(1).random((5, 2, 3, 6))
    pi[:, 1, 2, 4] = 1.0
    cells = CellTable(np.array([1, 0]), np.array([2, 0]), np.array([3, 1]), np.array([1, 0]))
    scores = predict_edges(pi, cells)
    assert scores[0] == 1.0
    mean = edge_prob_mean(pi)
    assert np.array_equal(scores, mean[cells.layer, cells.time, cells.flat])
    bad = CellTable(np.array([0]), np.array([0]), np.array([4]), np.array([0]))
    with pytest.raises(DataError):
        predict_edges(pi, bad)


# ------------------------------------------------------------ functionals


def test_density_examples():
    s = density_trajectory(np.full((10, 1, 2, 3), 0.5))
    assert np.all(s.mean == 0.5) and np.all(s.lo == s.hi)
    assert density_draws(np.array([[[[0.2, 0.4, 0.6]]]]))[0, 0, 0] == pytest.approx(0.4)


def test_density_matches_brute_force_v30():
    pi = np.random.default_rng(2).random((4, 2, 3, 435))
    d = density_draws(pi)
    brute = np.zeros((4, 2, 3))
    for s, k, i in itertools.product(range(4), range(2), range(3)):
        acc = 0.0
        for c in range(435):
            acc += pi[s, k, i, c]
        brute[s, k, i] = acc / 435
    assert np.allclose(d, brute, atol=1e-14)


def test_degree_examples():
    s = degree_trajectory(np.full((3, 1, 1, 435), 0.5), 7)
    assert np.allclose(s.mean, 14.5)
    pi = np.random.default_rng(3).random((3, 1, 1, 10))
    vv, uu = pair_arrays(5)
    pi[..., (vv == 2) | (uu == 2)] = 0.0
    assert np.all(degree_trajectory(pi, 2).hi == 0)
    with pytest.raises(DataError):
        degree_trajectory(pi, 5)


@given(st.integers(3, 12), st.integers(0, 2**31))
def test_degree_sum_identity(V, seed):
    pi = np.random.default_rng(seed).random((3, 2, 2, V * (V - 1) // 2))
    deg = degree_draws(pi).sum(axis=-1)
    assert np.max(np.abs(deg - V * (V - 1) * density_draws(pi))) < 1e-10


def test_group_contact_examples():
    pi = np.random.default_rng(4).random((6, 2, 3, 10))
    one = group_contact_trajectory(pi, ["a"] * 5)
    assert list(one) == [("a", "a")]
    assert np.allclose(one[("a", "a")], density_trajectory(pi).mean)
    two = group_contact_trajectory(pi, {0: "x", 1: "y", 2: "z", 3: "z", 4: "z"})
    # (x, y) covers only the pair (2, 1) in 1-based terms, flat cell 0; (x, x) has no pairs
    assert np.allclose(two[("x", "y")], edge_prob_mean(pi)[..., 0])
    assert ("x", "x") not in two and ("y", "y") not in two


def test_group_contact_matches_enumeration():
    V = 9
    pi = np.random.default_rng(5).random((4, 2, 3, V * (V - 1) // 2))
    labels = np.random.default_rng(6).integers(0, 3, V).tolist()
    got = group_contact_trajectory(pi, labels)
    mean = pi.mean(axis=0)
    vv, uu = pair_arrays(V)
    buckets = {}
    for c, (v, u) in enumerate(zip(vv, uu)):
        key = tuple(sorted((labels[v], labels[u])))
        buckets.setdefault(key, []).append(mean[..., c])
    assert set(got) == set(buckets)
    for key, vals in buckets.items():
        assert np.allclose(got[key], np.mean(vals, axis=0), atol=1e-14)


def test_bands_nested_and_ordered():
    draws = np.random.default_rng(7).standard_normal((500, 2, 4))
    wide, narrow = summarize_draws(draws, 0.95), summarize_draws(draws, 0.80)
    assert np.all(wide.lo <= narrow.lo) and np.all(narrow.hi <= wide.hi)
    assert np.all(wide.lo <= wide.mean) and np.all(wide.mean <= wide.hi)
    rows = list(wide.rows())
    assert rows[0][:2] == (1, 1) and rows[-1][:2] == (2, 4)


# ------------------------------------------------------------ concentration


def test_concentration_examples():
    pi0 = np.random.default_rng(8).uniform(0.1, 0.8, (2, 3, 6))
    assert concentration_metrics(np.repeat(pi0[None], 4, 0), pi0) == (0.0, 0.0, 0.0)
    b, v, t = concentration_metrics(np.repeat(pi0[None] + 0.1, 4, 0), pi0)
    assert b == pytest.approx(0.01, abs=1e-15) and v == pytest.approx(0.0, abs=1e-15) and t == pytest.approx(0.01)
    with pytest.raises(DataError):
        concentration_metrics(np.zeros((2, 2, 3, 6)), pi0[:, :2])


def test_concentration_total_is_mean_squared_deviation():
    g = np.random.default_rng(9)
    pi = g.random((50, 2, 3, 6))
    pi0 = g.random((2, 3, 6))
    bias2, var, total = concentration_cells(pi, pi0)
    assert np.max(np.abs(bias2 + var - total)) == 0.0
    direct = ((pi - pi0) ** 2).mean(axis=0)
    assert np.max(np.abs(total - direct)) < 1e-12


# ------------------------------------------------------------ AUC


def test_auc_examples():
    assert auc([0.9, 0.7, 0.4], [1, 1, 0]) == 1.0
    assert auc([0.3] * 6, [1, 0, 1, 0, 0, 1]) == 0.5
    # pairs (pos, neg): (0.8, 0.8) = 1/2, (0.8, 0.1) = 1, (0.3, 0.8) = 0, (0.3, 0.1) = 1
    assert auc([0.8, 0.8, 0.3, 0.1], [1, 0, 1, 0]) == 0.625
    with pytest.raises(ValueError):
        auc([0.1, 0.2], [1, 1])


@given(st.integers(0, 2**31), st.integers(2, 40))
def test_auc_matches_pair_count(seed, n):
    g = np.random.default_rng(seed)
    scores = g.integers(0, 5, n) / 4.0  # plenty of ties
    labels = g.integers(0, 2, n)
    labels[:2] = [0, 1]
    assert auc(scores, labels) == pytest.approx(pair_count_auc(scores, labels), abs=1e-12)


@given(st.lists(st.integers(-40, 40), min_size=20, max_size=20), st.integers(0, 2**31))
def test_auc_invariant_under_increasing_map(steps, seed):
    # a coarse grid keeps the transformed scores distinct in floating point
    scores = np.array(steps) / 8.0
    labels = np.random.default_rng(seed).integers(0, 2, 20)
    labels[:2] = [0, 1]
    a = auc(scores, labels)
    assert auc(np.exp(scores) * 3 + 1, labels) == a
    assert auc(np.arctan(scores), labels) == a


def test_auc_by_slice():
    cells = CellTable(np.array([0, 0, 0, 1, 1]), np.array([2, 2, 2, 0, 0]), np.array([1, 2, 2, 1, 2]), np.array([0, 0, 1, 0, 0]))
    out = auc_by_slice(cells, [0.9, 0.1, 0.5, 0.3, 0.4], [1, 0, 0, 1, 1])
    assert out[(0, 2)] == 1.0 and np.isnan(out[(1, 0)])


def test_fresh_network_auc_uninformative_and_perfect():
    pi0 = np.array([0.999999, 0.999999, 1e-6, 1e-6, 0.5])
    perfect = fresh_network_auc(pi0, pi0, np.random.default_rng(0), 50)
    assert perfect > 0.85
    flat = fresh_network_auc(np.zeros(5), pi0, np.random.default_rng(0), 50)
    assert flat == 0.5
    with pytest.raises(ValueError):
        fresh_network_auc(np.zeros(3), np.full(3, 1e-12), np.random.default_rng(0), 5)


# ------------------------------------------------------------ ESS


def test_ess_iid():
    vals = [ess(np.random.default_rng(s).standard_normal(4000)) for s in range(10)]
    assert abs(np.mean(vals) / 4000 - 1) < 0.15


def test_ess_ar1():
    N, rho = 4000, 0.5
    vals = []
    for s in range(10):
        g = np.random.default_rng(100 + s)
        e = g.standard_normal(N)
        x = np.empty(N)
        x[0] = e[0] / np.sqrt(1 - rho**2)
        for t in range(1, N):
            x[t] = rho * x[t - 1] + e[t]
        vals.append(ess(x))
    assert abs(np.mean(vals) / (N * (1 - rho) / (1 + rho)) - 1) < 0.15


def test_ess_alternating_and_constant_flagged():
    val, flag = ess_with_flag(np.tile([1.0, -1.0], 50))
    assert flag and val == 100
    val, flag = ess_with_flag(np.ones(30))
    assert flag and val == 30
    with pytest.raises(ValueError):
        ess(np.arange(5.0))


def test_ess_many_columns_match_single():
    x = np.random.default_rng(3).standard_normal((300, 4)).cumsum(axis=0)
    many, _ = ess_many(x)
    assert np.allclose(many, [ess(x[:, j]) for j in range(4)])
    assert np.all((many > 0) & (many <= 300))


# ------------------------------------------------------------ prior covariance


def test_prior_cov_examples():
    ts, tl = np.array([1.0, 2.0]), np.array([0.5])
    k = (0.05, 0.05, 0.05)
    assert prior_logodds_cov_oracle(ts, tl, k, 0.0, "same-cell-lagged") == pytest.approx(1 + 1 + 0.25 + 4)
    assert prior_logodds_cov_oracle(ts, tl, k, 0.0, "cross-layer-lagged") == pytest.approx(2.25)
    assert prior_logodds_cov_oracle(ts, tl, k, 3.0, "distinct-pair") == pytest.approx(np.exp(-0.45))
    for rel in ("same-cell-lagged", "cross-layer-lagged", "distinct-pair"):
        assert prior_logodds_cov_oracle(ts, tl, k, 1e3, rel) == 0.0
    with pytest.raises(ValueError):
        prior_logodds_cov_oracle(ts, tl, k, 0.0, "other")
