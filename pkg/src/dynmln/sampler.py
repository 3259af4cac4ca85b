"""Polya-gamma Gibbs sampler for the dynamic multilayer latent space model.

Log-odds of an edge between ``v`` and ``u`` at time ``t_i`` in layer ``k``::

    mu(t_i) + xbar_v(t_i) . xbar_u(t_i) + x^k_v(t_i) . x^k_u(t_i)

with GP priors on every trajectory and multiplicative inverse gamma
shrinkage on the coordinate columns.  One sweep runs, in order: PG
augmentation, imputation of missing cells, baseline, shared coordinates,
layer coordinates (layers in parallel if asked), shrinkage, and records the
edge probabilities.

Randomness: every (sweep, step, layer) gets its own PCG64 stream spawned
from the master seed, so results do not depend on thread scheduling.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import linalg
from scipy.special import expit

from .blocks import update_coordinate_blocks
from .errors import ConfigError, NumericalError
from .gp import CovarianceSet
from .netdata import DynMultiNet, pair_arrays
from .polyagamma import sample_pg1_array
from .shrinkage import ShrinkState, update_layer_deltas, update_shared_deltas

log = logging.getLogger(__name__)

VARIANTS = ("joint", "collapsed", "separate")

STEP_INIT, STEP_AUGMENT, STEP_MU, STEP_SHARED, STEP_LAYER = 0, 1, 2, 3, 4
STEP_DELTA_SHARED, STEP_DELTA_LAYER, STEP_IMPUTE = 5, 6, 8

_PI_LO = np.finfo(float).tiny
_PI_HI = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class FitConfig:
    seed: int
    R: int = 5
    H: int = 5
    variant: str = "joint"
    iterations: int = 5000
    burn_in: int = 1000
    thin: int = 1
    kappa_mu: float = 0.05
    kappa_xbar: float = 0.05
    kappa_x: float = 0.05
    a1: float = 2.0
    a2: float = 2.5
    workers: int = 1

    def validate(self) -> "FitConfig":
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not self.iterations > self.burn_in >= 0:
            raise ConfigError("need iterations > burn_in >= 0")
        if self.thin < 1:
            raise ConfigError("thin must be >= 1")
        if self.R < 0 or self.H < 0:
            raise ConfigError("R and H must be non-negative")
        if self.variant in ("collapsed", "separate") and self.H != 0:
            raise ConfigError(f"variant {self.variant!r} has no layer-specific coordinates; set H=0")
        if min(self.kappa_mu, self.kappa_xbar, self.kappa_x) <= 0:
            raise ConfigError("smoothness parameters must be positive")
        if min(self.a1, self.a2) <= 0:
            raise ConfigError("a1 and a2 must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self

    @property
    def retained(self) -> int:
        return len(range(self.burn_in, self.iterations, self.thin))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "FitConfig":
        return cls(**d)


class Streams:
    """Deterministic RNG substreams keyed by ``prefix + (sweep, step, layer)``."""

    def __init__(self, seed: int, prefix: tuple = ()):
        self.seed = int(seed)
        self.prefix = tuple(prefix)

    def get(self, sweep: int, step: int, layer: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.prefix + (sweep, step, layer))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *key) -> "Streams":
        return Streams(self.seed, self.prefix + tuple(key))


@dataclass
class LatentState:
    """Current values of all unknowns.  Arrays are updated in place by the steps."""

    mu: np.ndarray      # (n,)
    xbar: np.ndarray    # (V, R, n)
    x: np.ndarray       # (K, V, H, n)
    shrink: ShrinkState
    y: np.ndarray       # (K, n, V, V) working response; missing cells hold imputations
    missing: np.ndarray  # (K, n, V, V) bool, symmetric
    omega: np.ndarray = field(default=None)  # (K, n, V, V), symmetric, zero diagonal

    @property
    def dims(self):
        K, V, H, n = self.x.shape
        return K, V, self.xbar.shape[1], H, n

    def copy(self) -> "LatentState":
        return LatentState(
            self.mu.copy(), self.xbar.copy(), self.x.copy(), self.shrink,
            self.y.copy(), self.missing, None if self.omega is None else self.omega.copy(),
        )


# -------------------------------------------------------------- log-odds


def shared_similarity(state: LatentState) -> np.ndarray:
    """``(n, V, V)`` dot products of shared coordinates."""
    return np.einsum("vri,uri->ivu", state.xbar, state.xbar)


def layer_similarity(state: LatentState) -> np.ndarray:
    """``(K, n, V, V)`` dot products of layer-specific coordinates."""
    return np.einsum("kvhi,kuhi->kivu", state.x, state.x)


def logodds_tensor(state: LatentState) -> np.ndarray:
    return state.mu[None, :, None, None] + shared_similarity(state)[None] + layer_similarity(state)


def logodds(state: LatentState, k: int, i: int, v: int, u: int) -> float:
    """Log-odds of the edge ``(v, u)`` at time index ``i`` in layer ``k`` (0-based)."""
    return float(
        state.mu[i]
        + state.xbar[v, :, i] @ state.xbar[u, :, i]
        + state.x[k, v, :, i] @ state.x[k, u, :, i]
    )


def edge_probs(state: LatentState) -> np.ndarray:
    """``(K, n, C)`` edge probabilities in flat cell order, clipped inside (0, 1)."""
    V = state.xbar.shape[0]
    vv, uu = pair_arrays(V)
    return np.clip(expit(logodds_tensor(state)[..., vv, uu]), _PI_LO, _PI_HI)


# ---------------------------------------------------------- initialisation


def _working_response(net: DynMultiNet):
    sq = net.square()
    missing = np.isnan(sq)
    V = net.n_actors
    idx = np.arange(V)
    missing[..., idx, idx] = False
    return np.nan_to_num(sq, nan=0.0), missing


def draw_prior_trajectories(covs: CovarianceSet, shrink: ShrinkState, n_actors: int, rng: np.random.Generator):
    """``(mu, xbar, x)`` from their GP priors given the shrinkage state."""
    V = n_actors
    n = covs.mu.chol.shape[0]
    R = shrink.delta_shared.size
    K, H = shrink.delta_layer.shape
    mu = covs.mu.chol @ rng.standard_normal(n)
    sd_shared = 1.0 / np.sqrt(shrink.tau_shared)
    xbar = np.einsum("ij,vrj->vri", covs.xbar.chol, rng.standard_normal((V, R, n))) * sd_shared[None, :, None]
    sd_layer = 1.0 / np.sqrt(shrink.tau_layer)
    x = np.einsum("ij,kvhj->kvhi", covs.x.chol, rng.standard_normal((K, V, H, n))) * sd_layer[:, None, :, None]
    return mu, xbar, x


def init_state(net: DynMultiNet, cfg: FitConfig, rng: np.random.Generator, covs: CovarianceSet = None) -> LatentState:
    """Draw shrinkage, baseline and coordinates from the prior; impute missing cells by a fair coin."""
    if covs is None:
        covs = CovarianceSet.build(net.grid, cfg.kappa_mu, cfg.kappa_xbar, cfg.kappa_x)
    V, K, n = net.n_actors, net.n_layers, net.n_times
    shrink = ShrinkState.from_prior(cfg.R, K, cfg.H, cfg.a1, cfg.a2, rng)
    mu, xbar, x = draw_prior_trajectories(covs, shrink, V, rng)
    y, missing = _working_response(net)
    if missing.any():
        vv, uu = pair_arrays(V)
        flat_missing = missing[..., vv, uu]
        coin = (rng.random(int(flat_missing.sum())) < 0.5).astype(float)
        _set_cells(y, flat_missing, coin, vv, uu)
    return LatentState(mu, np.ascontiguousarray(xbar), np.ascontiguousarray(x), shrink, y, missing)


def _set_cells(sq, flat_mask, values, vv, uu):
    k, i, c = np.nonzero(flat_mask)
    sq[k, i, vv[c], uu[c]] = values
    sq[k, i, uu[c], vv[c]] = values


# ------------------------------------------------------------------ steps


def step_augment(state: LatentState, rng: np.random.Generator) -> None:
    """Draw every omega from PG(1, current log-odds)."""
    K, V, R, H, n = state.dims
    vv, uu = pair_arrays(V)
    z = logodds_tensor(state)[..., vv, uu]
    draws = sample_pg1_array(z, rng).reshape(z.shape)
    omega = np.zeros((K, n, V, V))
    omega[..., vv, uu] = draws
    omega[..., uu, vv] = draws
    state.omega = omega


def step_impute(state: LatentState, rng: np.random.Generator) -> None:
    """Redraw missing cells from Bernoulli(current edge probability)."""
    if not state.missing.any():
        return
    V = state.xbar.shape[0]
    vv, uu = pair_arrays(V)
    flat_missing = state.missing[..., vv, uu]
    p = expit(logodds_tensor(state)[..., vv, uu][flat_missing])
    _set_cells(state.y, flat_missing, (rng.random(p.size) < p).astype(float), vv, uu)


def _residual(y, omega, offset):
    """``y - 1/2 - omega * offset`` with a zero diagonal."""
    r = y - 0.5 - omega * offset
    idx = np.arange(y.shape[-1])
    r[..., idx, idx] = 0.0
    return r


def step_mu(state: LatentState, covs: CovarianceSet, rng: np.random.Generator) -> None:
    """Gaussian full conditional of the baseline trajectory."""
    K, V, R, H, n = state.dims
    vv, uu = pair_arrays(V)
    off = (shared_similarity(state)[None] + layer_similarity(state))[..., vv, uu]
    om = state.omega[..., vv, uu]
    prec_diag = om.sum(axis=(0, 2))
    eta = (state.y[..., vv, uu] - 0.5 - om * off).sum(axis=(0, 2))
    L = covs.mu.chol
    # whitened: mu = L w, precision I + L^T diag(prec_diag) L
    P = (L.T * prec_diag) @ L
    P[np.diag_indices(n)] += 1.0
    try:
        C = linalg.cholesky(P, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"baseline precision not positive definite: {exc}") from None
    m = linalg.solve_triangular(C, L.T @ eta, lower=True)
    w = linalg.solve_triangular(C, m + rng.standard_normal(n), lower=True, trans="T")
    state.mu = L @ w


def step_shared(state: LatentState, covs: CovarianceSet, rng: np.random.Generator) -> None:
    """Block-update each actor's shared trajectories given all layers."""
    K, V, R, H, n = state.dims
    if R == 0:
        return
    offset = state.mu[None, :, None, None] + layer_similarity(state)
    W = state.omega.sum(axis=0)
    Rsp = _residual(state.y, state.omega, offset).sum(axis=0)
    Z = rng.standard_normal((V, R * n))
    update_coordinate_blocks(state.xbar, W, Rsp, state.shrink.tau_shared, covs.xbar.chol, Z)


def _layer_update(state, covs, k, S_shared, rng):
    K, V, R, H, n = state.dims
    offset = state.mu[:, None, None] + S_shared
    Rsp = _residual(state.y[k], state.omega[k], offset)
    Z = rng.standard_normal((V, H * n))
    update_coordinate_blocks(state.x[k], state.omega[k], Rsp, state.shrink.tau_layer[k], covs.x.chol, Z)


def step_layer(state: LatentState, covs: CovarianceSet, rngs, workers: int = 1) -> None:
    """Block-update layer-specific trajectories; layers are independent given the rest.

    ``rngs`` holds one generator per layer.
    """
    K, V, R, H, n = state.dims
    if H == 0:
        return
    S_shared = shared_similarity(state)
    if workers > 1 and K > 1:
        with ThreadPoolExecutor(max_workers=min(workers, K)) as pool:
            futures = [pool.submit(_layer_update, state, covs, k, S_shared, rngs[k]) for k in range(K)]
            for f in futures:
                f.result()
    else:
        for k in range(K):
            _layer_update(state, covs, k, S_shared, rngs[k])


def step_shrink_shared(state: LatentState, covs: CovarianceSet, rng) -> None:
    state.shrink = update_shared_deltas(state.shrink, state.xbar, covs.xbar, rng)


def step_shrink_layer(state: LatentState, covs: CovarianceSet, rngs) -> None:
    for k in range(state.x.shape[0]):
        state.shrink = update_layer_deltas(state.shrink, k, state.x[k], covs.x, rngs[k])


def gibbs_sweep(state: LatentState, covs: CovarianceSet, streams: Streams, sweep: int, workers: int = 1) -> None:
    """One full scan; ``sweep`` (>= 1) keys the RNG substreams."""
    K = state.x.shape[0]
    step_augment(state, streams.get(sweep, STEP_AUGMENT))
    step_impute(state, streams.get(sweep, STEP_IMPUTE))
    step_mu(state, covs, streams.get(sweep, STEP_MU))
    step_shared(state, covs, streams.get(sweep, STEP_SHARED))
    step_layer(state, covs, [streams.get(sweep, STEP_LAYER, k) for k in range(K)], workers)
    step_shrink_shared(state, covs, streams.get(sweep, STEP_DELTA_SHARED))
    step_shrink_layer(state, covs, [streams.get(sweep, STEP_DELTA_LAYER, k) for k in range(K)])


# ------------------------------------------------------------------ chains


@dataclass
class PosteriorChain:
    """Retained edge-probability draws.

    ``pi`` has shape ``(S, K, n, C)``; ``mu`` has shape ``(S, G, n)`` with one
    baseline trajectory per independent sub-chain (``G = K`` for the separate
    variant, else 1).
    """

    pi: np.ndarray
    sweeps: np.ndarray
    config: FitConfig
    n_actors: int
    grid: np.ndarray
    mu: np.ndarray = None
    rng_scheme: str = "SeedSequence(seed, spawn_key=prefix+(sweep,step,layer)) -> PCG64"

    def __post_init__(self):
        if self.pi.ndim != 4:
            raise ValueError("pi must have shape (S, K, n, C)")

    @property
    def n_samples(self) -> int:
        return self.pi.shape[0]

    @property
    def n_layers(self) -> int:
        return self.pi.shape[1]

    @property
    def n_times(self) -> int:
        return self.pi.shape[2]


def _run_engine(net, cfg, streams, progress=None):
    covs = CovarianceSet.build(net.grid, cfg.kappa_mu, cfg.kappa_xbar, cfg.kappa_x)
    state = init_state(net, cfg, streams.get(0, STEP_INIT), covs)
    S = cfg.retained
    pi = np.empty((S,) + (net.n_layers, net.n_times, net.n_pairs))
    mu = np.empty((S, net.n_times))
    sweeps = np.empty(S, dtype=np.int64)
    j = 0
    for s in range(1, cfg.iterations + 1):
        try:
            gibbs_sweep(state, covs, streams, s, cfg.workers)
        except NumericalError as exc:
            raise NumericalError(f"sweep {s}: {exc}") from None
        if s > cfg.burn_in and (s - cfg.burn_in - 1) % cfg.thin == 0:
            pi[j] = edge_probs(state)
            mu[j] = state.mu
            sweeps[j] = s
            j += 1
        if progress is not None:
            progress(s)
        elif s % 500 == 0:
            log.debug("sweep %d/%d", s, cfg.iterations)
    return pi, mu, sweeps


def run_chain(net: DynMultiNet, cfg: FitConfig, progress=None) -> PosteriorChain:
    """Run the sampler for ``cfg.variant`` and return the retained draws."""
    cfg.validate()
    streams = Streams(cfg.seed)
    if cfg.variant == "separate":
        parts = [_run_engine(net.layer(k), cfg, streams.child(k + 1), progress) for k in range(net.n_layers)]
        pi = np.concatenate([p[0] for p in parts], axis=1)
        mu = np.stack([p[1] for p in parts], axis=1)
        sweeps = parts[0][2]
    else:
        pi, mu, sweeps = _run_engine(net, cfg, streams, progress)
        mu = mu[:, None, :]
    return PosteriorChain(pi, sweeps, cfg, net.n_actors, np.array(net.grid), mu)


def competitor_configs(cfg: FitConfig) -> dict:
    """Joint config plus collapsed and separate configs with the same total dimension."""
    total = cfg.R + cfg.H
    return {
        "joint": replace(cfg, variant="joint"),
        "collapsed": replace(cfg, variant="collapsed", R=total, H=0),
        "separate": replace(cfg, variant="separate", R=total, H=0),
    }
