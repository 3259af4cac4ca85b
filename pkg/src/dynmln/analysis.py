"""Posterior summaries, prediction scores and diagnostics for edge-probability chains."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DataError
from .netdata import CellTable, pair_arrays, to_square
from .sampler import PosteriorChain


def _samples(chain):
    pi = chain.pi if isinstance(chain, PosteriorChain) else np.asarray(chain)
    if pi.shape[0] == 0:
        raise DataError("chain has no samples")
    return pi


def edge_prob_mean(chain) -> np.ndarray:
    """Posterior mean of every edge probability, shape ``(K, n, C)``.

    This is also the posterior predictive mean of the corresponding edge.
    """
    return _samples(chain).mean(axis=0)


def predict_edges(chain, cells: CellTable) -> np.ndarray:
    """Posterior predictive edge means for ``cells``."""
    pi = _samples(chain)
    S, K, n, C = pi.shape
    flat = cells.flat
    bad = (cells.layer < 0) | (cells.layer >= K) | (cells.time < 0) | (cells.time >= n) | (cells.u < 0) | (flat >= C)
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise DataError(
            f"unknown cell layer={cells.layer[j] + 1} time={cells.time[j] + 1} "
            f"pair=({cells.u[j] + 1},{cells.v[j] + 1})"
        )
    return edge_prob_mean(pi)[cells.layer, cells.time, flat]


# -------------------------------------------------------------- functionals


@dataclass(frozen=True)
class TrajectorySummary:
    """Point-wise posterior mean and equal-tailed band, arrays of shape ``(K, n)``."""

    mean: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    level: float = 0.95

    def rows(self, grid=None):
        K, n = self.mean.shape
        for k in range(K):
            for i in range(n):
                t = i + 1 if grid is None else grid[i]
                yield k + 1, t, self.mean[k, i], self.lo[k, i], self.hi[k, i]


def summarize_draws(draws, level: float = 0.95) -> TrajectorySummary:
    """Summarise ``(S, K, n)`` draws by mean and linear-interpolation quantiles."""
    draws = np.asarray(draws, dtype=float)
    a = 0.5 * (1.0 - level)
    lo, hi = np.quantile(draws, [a, 1.0 - a], axis=0)
    # quantiles can land a few ulps beyond a constant mean
    mean = draws.mean(axis=0)
    return TrajectorySummary(mean, np.minimum(lo, mean), np.maximum(hi, mean), level)


def density_draws(chain) -> np.ndarray:
    """Expected network density per draw, ``(S, K, n)``."""
    return _samples(chain).mean(axis=-1)


def degree_draws(chain) -> np.ndarray:
    """Expected degree of every actor per draw, ``(S, K, n, V)``."""
    pi = _samples(chain)
    V = int(round((1 + np.sqrt(1 + 8 * pi.shape[-1])) / 2))
    vv, uu = pair_arrays(V)
    inc = np.zeros((vv.size, V))
    inc[np.arange(vv.size), vv] = 1.0
    inc[np.arange(vv.size), uu] = 1.0
    return pi @ inc


def density_trajectory(chain, level: float = 0.95) -> TrajectorySummary:
    return summarize_draws(density_draws(chain), level)


def degree_trajectory(chain, v: int, level: float = 0.95) -> TrajectorySummary:
    """Summary of the expected degree of actor ``v`` (0-based)."""
    pi = _samples(chain)
    V = int(round((1 + np.sqrt(1 + 8 * pi.shape[-1])) / 2))
    if not 0 <= v < V:
        raise DataError(f"actor {v + 1} out of range 1..{V}")
    vv, uu = pair_arrays(V)
    cells = np.flatnonzero((vv == v) | (uu == v))
    return summarize_draws(pi[..., cells].sum(axis=-1), level)


def group_contact_trajectory(chain, groups) -> dict:
    """Average posterior-mean edge probability for each unordered pair of labels.

    ``groups`` maps actor index (0-based) to a label, as a sequence or dict.
    Returns ``{(label_a, label_b): (K, n) array}`` with ``label_a <= label_b``;
    label pairs without any actor pair are left out.
    """
    mean = edge_prob_mean(chain)
    V = int(round((1 + np.sqrt(1 + 8 * mean.shape[-1])) / 2))
    labels = [groups[a] for a in range(V)]
    vv, uu = pair_arrays(V)
    out = {}
    for la in sorted(set(labels)):
        for lb in sorted(set(labels)):
            if lb < la:
                continue
            sel = np.array([
                {labels[v], labels[u]} == {la, lb} and (la != lb or labels[v] == la)
                for v, u in zip(vv, uu)
            ])
            if sel.any():
                out[(la, lb)] = mean[..., sel].mean(axis=-1)
    return out


def concentration_cells(chain, pi0):
    """Per-cell squared bias, posterior variance and mean squared deviation."""
    pi = _samples(chain)
    pi0 = np.asarray(pi0, dtype=float)
    if pi0.shape != pi.shape[1:]:
        raise DataError(f"truth shape {pi0.shape} does not match chain cells {pi.shape[1:]}")
    mean = pi.mean(axis=0)
    bias2 = (mean - pi0) ** 2
    var = pi.var(axis=0)
    return bias2, var, bias2 + var


def concentration_metrics(chain, pi0) -> tuple[float, float, float]:
    """Cell-averaged (squared bias, posterior variance, total)."""
    bias2, var, total = concentration_cells(chain, pi0)
    return float(bias2.mean()), float(var.mean()), float(total.mean())


# ----------------------------------------------------------------- scoring


def auc(scores, labels) -> float:
    """Area under the ROC curve via the Mann-Whitney statistic; ties count one half."""
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative label")
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def auc_by_slice(cells: CellTable, scores, labels) -> dict:
    """AUC per ``(layer, time)`` slice (0-based keys); single-class slices map to NaN."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    out = {}
    for k, i in sorted(set(zip(cells.layer.tolist(), cells.time.tolist()))):
        sel = (cells.layer == k) & (cells.time == i)
        lab = labels[sel]
        out[(k, i)] = auc(scores[sel], lab) if 0 < lab.sum() < lab.size else float("nan")
    return out


def fresh_network_auc(scores, pi0, rng: np.random.Generator, n_networks: int = 100) -> float:
    """Mean AUC of ``scores`` over networks drawn cell-wise from ``pi0``.

    ``scores`` and ``pi0`` cover the same cells (one network slice).  Draws
    with a single class are redrawn.
    """
    scores = np.asarray(scores, dtype=float)
    pi0 = np.asarray(pi0, dtype=float)
    vals = []
    for _ in range(100 * n_networks):
        if len(vals) == n_networks:
            break
        y = rng.random(pi0.shape) < pi0
        if 0 < y.sum() < y.size:
            vals.append(auc(scores, y.astype(np.int8)))
    if len(vals) < n_networks:
        raise ValueError("truth probabilities rarely produce both edge classes")
    return float(np.mean(vals))


# --------------------------------------------------------------------- ESS


def _autocorr(x):
    """Biased autocorrelations along axis 0 via FFT; ``x`` is (N, M)."""
    N = x.shape[0]
    xc = x - x.mean(axis=0)
    nfft = 1 << (2 * N - 1).bit_length()
    f = np.fft.rfft(xc, n=nfft, axis=0)
    acov = np.fft.irfft(f * np.conj(f), n=nfft, axis=0)[:N] / N
    with np.errstate(invalid="ignore", divide="ignore"):
        return acov / acov[0], acov[0]


def ess_many(x) -> tuple[np.ndarray, np.ndarray]:
    """ESS of each column of ``x`` (shape ``(N, M)``) and a flag for clipped values.

    Uses the initial positive sequence: autocorrelations are summed in
    consecutive pairs until the first pair with a non-positive sum.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    N = x.shape[0]
    if N < 10:
        raise ValueError("ESS needs at least 10 draws")
    rho, var0 = _autocorr(x)
    m = N // 2
    pairs = rho[0 : 2 * m : 2] + rho[1 : 2 * m : 2]
    keep = np.cumprod(pairs > 0, axis=0).astype(bool)
    tau = -1.0 + 2.0 * np.where(keep, pairs, 0.0).sum(axis=0)
    constant = ~(var0 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = N / tau
    flag = constant | (tau <= 0) | (raw > N)
    return np.where(flag, float(N), raw), flag


def ess_with_flag(series) -> tuple[float, bool]:
    val, flag = ess_many(np.asarray(series, dtype=float)[:, None])
    return float(val[0]), bool(flag[0])


def ess(series) -> float:
    """Effective sample size of one series, clipped to ``(0, N]``."""
    return ess_with_flag(series)[0]


# ---------------------------------------------------------- prior moments

RELATIONS = ("same-cell-lagged", "cross-layer-lagged", "distinct-pair")


def prior_logodds_cov_oracle(tau_shared, tau_layer, kappas, lag: float, relation: str) -> float:
    """Prior covariance of two log-odds given the shrinkage parameters.

    ``kappas = (kappa_mu, kappa_xbar, kappa_x)``; ``lag`` is ``t_i - t_j``.
    Relations: same pair and layer (``same-cell-lagged``, the variance at lag
    0), same pair in two different layers (``cross-layer-lagged``), and two
    different pairs in any layers (``distinct-pair``).
    """
    k_mu, k_xbar, k_x = kappas
    d2 = float(lag) ** 2
    base = np.exp(-k_mu * d2)
    shared = np.sum(np.asarray(tau_shared, dtype=float) ** -2.0) * np.exp(-2.0 * k_xbar * d2)
    layer = np.sum(np.asarray(tau_layer, dtype=float) ** -2.0) * np.exp(-2.0 * k_x * d2)
    if relation == "same-cell-lagged":
        return float(base + shared + layer)
    if relation == "cross-layer-lagged":
        return float(base + shared)
    if relation == "distinct-pair":
        return float(base)
    raise ValueError(f"relation must be one of {RELATIONS}")


# ------------------------------------------------------------------- CSV


def _f(x):
    return repr(float(x))


def write_trajectory_csv(path, summaries: dict | TrajectorySummary, grid=None):
    """``layer,time,mean,lo95,hi95`` rows; a dict adds a leading key column.

    ``time`` is the 1-based grid index unless ``grid`` is given.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if isinstance(summaries, TrajectorySummary):
            w.writerow(["layer", "time", "mean", "lo95", "hi95"])
            for k, t, m, lo, hi in summaries.rows(grid):
                w.writerow([k, t if grid is None else _f(t), _f(m), _f(lo), _f(hi)])
        else:
            w.writerow(["series", "layer", "time", "mean", "lo95", "hi95"])
            for key, s in summaries.items():
                for k, t, m, lo, hi in s.rows(grid):
                    w.writerow([key, k, t if grid is None else _f(t), _f(m), _f(lo), _f(hi)])


def write_scores_csv(path, cells: CellTable, scores, labels=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["layer", "time", "u", "v", "score", "label"])
        for j in range(len(cells)):
            lab = "" if labels is None else int(labels[j])
            w.writerow([cells.layer[j] + 1, cells.time[j] + 1, cells.u[j] + 1, cells.v[j] + 1, _f(scores[j]), lab])


def write_metrics_csv(path, metrics):
    """``metric,value`` rows from a mapping or a sequence of pairs."""
    items = metrics.items() if isinstance(metrics, dict) else metrics
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "value"])
        for name, val in items:
            w.writerow([name, _f(val) if isinstance(val, (float, np.floating)) else val])


def edge_prob_square(chain) -> np.ndarray:
    """Posterior mean edge probabilities as symmetric ``(K, n, V, V)`` matrices."""
    mean = edge_prob_mean(chain)
    V = int(round((1 + np.sqrt(1 + 8 * mean.shape[-1])) / 2))
    return to_square(mean, V)
