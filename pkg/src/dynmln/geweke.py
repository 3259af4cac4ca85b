"""Joint-distribution ("getting it right") check of the Gibbs sampler.

Two simulators of ``p(theta, y)`` are compared on a handful of test
functions of ``theta``:

* marginal-conditional: ``theta`` drawn straight from the prior;
* successive-conditional: alternate ``y ~ p(y | theta)`` and one Gibbs sweep
  ``theta ~ T(theta, y)``.

If every conditional is right both give the prior moments.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from .gp import CovarianceSet
from .netdata import DynMultiNet, MISSING, pair_arrays
from .sampler import FitConfig, LatentState, Streams, gibbs_sweep, init_state, logodds_tensor

STATISTICS = ("mu_t1", "mu_t1_sq", "xbar_sq_norm", "x_sq_norm", "mean_pi")


def monitored_statistics(state: LatentState) -> np.ndarray:
    V = state.xbar.shape[0]
    vv, uu = pair_arrays(V)
    pi = expit(logodds_tensor(state)[..., vv, uu])
    return np.array([
        state.mu[0],
        state.mu[0] ** 2,
        np.sum(state.xbar ** 2),
        np.sum(state.x ** 2),
        pi.mean(),
    ])


@dataclass
class GewekeResult:
    names: tuple
    mc_mean: np.ndarray
    mc_se: np.ndarray
    sc_mean: np.ndarray
    sc_se: np.ndarray
    rounds: int

    @property
    def z(self) -> np.ndarray:
        return (self.mc_mean - self.sc_mean) / np.hypot(self.mc_se, self.sc_se)

    def passed(self, threshold: float = 4.0) -> bool:
        return bool(np.all(np.abs(self.z) < threshold))

    def lines(self):
        for j, name in enumerate(self.names):
            yield (f"{name:>13s}  prior {self.mc_mean[j]: .5f} +/- {self.mc_se[j]:.5f}"
                   f"  gibbs {self.sc_mean[j]: .5f} +/- {self.sc_se[j]:.5f}  z={self.z[j]: .2f}")


def batch_means_se(x: np.ndarray, n_batches: int = 50) -> np.ndarray:
    """Standard error of column means of an autocorrelated series by batch means."""
    N = x.shape[0] - x.shape[0] % n_batches
    b = x[:N].reshape(n_batches, N // n_batches, -1).mean(axis=1)
    return b.std(axis=0, ddof=1) / np.sqrt(n_batches)


def geweke_config(seed: int = 0) -> FitConfig:
    """Small model used by the check; shapes > 2 keep fourth moments finite."""
    return FitConfig(seed=seed, R=1, H=1, variant="joint", iterations=2, burn_in=1,
                     kappa_mu=0.5, kappa_xbar=0.5, kappa_x=0.5, a1=5.0, a2=5.0)


def run_geweke(rounds: int = 50_000, cfg: FitConfig | None = None, n_actors: int = 3, n_layers: int = 2,
               grid=(1.0, 2.0, 3.0), missing_cells=((1, 2, 1),), burn: int = 200, n_batches: int = 50) -> GewekeResult:
    """Run both simulators for ``rounds`` draws each.

    ``missing_cells`` lists 0-based ``(layer, time, flat pair)`` cells kept
    missing so the imputation step is exercised too.
    """
    cfg = cfg or geweke_config()
    grid = np.asarray(grid, dtype=float)
    K, n, V = n_layers, len(grid), n_actors
    C = V * (V - 1) // 2
    obs = np.zeros((K, n, C), dtype=np.int8)
    for k, i, c in missing_cells:
        obs[k, i, c] = MISSING
    net = DynMultiNet(V, grid, obs)
    covs = CovarianceSet.build(grid, cfg.kappa_mu, cfg.kappa_xbar, cfg.kappa_x)
    streams = Streams(cfg.seed)

    mc = np.empty((rounds, len(STATISTICS)))
    mc_streams = streams.child(1)
    for m in range(rounds):
        mc[m] = monitored_statistics(init_state(net, cfg, mc_streams.get(m, 0), covs))

    sc_streams = streams.child(2)
    state = init_state(net, cfg, sc_streams.get(0, 0), covs)
    vv, uu = pair_arrays(V)
    observed = ~state.missing[..., vv, uu]
    k_idx, i_idx, c_idx = np.nonzero(observed)
    sc = np.empty((rounds, len(STATISTICS)))
    for m in range(1, rounds + burn + 1):
        # fresh data for observed cells given the current parameters
        p = expit(logodds_tensor(state)[k_idx, i_idx, vv[c_idx], uu[c_idx]])
        y = (sc_streams.get(m, 99).random(p.size) < p).astype(float)
        state.y[k_idx, i_idx, vv[c_idx], uu[c_idx]] = y
        state.y[k_idx, i_idx, uu[c_idx], vv[c_idx]] = y
        gibbs_sweep(state, covs, sc_streams, m)
        if m > burn:
            sc[m - burn - 1] = monitored_statistics(state)

    return GewekeResult(
        STATISTICS,
        mc.mean(axis=0), mc.std(axis=0, ddof=1) / np.sqrt(rounds),
        sc.mean(axis=0), batch_means_se(sc, n_batches),
        rounds,
    )


def with_seed(cfg: FitConfig, seed: int) -> FitConfig:
    return replace(cfg, seed=seed)
