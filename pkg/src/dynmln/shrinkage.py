"""Multiplicative inverse gamma shrinkage.

Precision multipliers are cumulative products ``tau_r = delta_1 * ... * delta_r``
with ``delta_1 ~ Ga(a1, 1)`` and ``delta_m ~ Ga(a2, 1)`` for ``m >= 2``; the
coordinate prior variance is ``1 / tau_r`` times the GP correlation.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


def tau_from_delta(delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0):
        raise ValueError("all delta entries must be positive")
    return np.cumprod(delta, axis=-1)


def sample_delta_prior(a1, a2, size, rng):
    """Prior draws of ``delta`` with trailing dimension ``size``."""
    shape = np.full(size, a2, dtype=float)
    if size:
        shape[0] = a1
    return rng.gamma(shape)


def gibbs_deltas(delta, quad, dim_count, a1, a2, rng) -> np.ndarray:
    """One sequential sweep r = 1..D over the gamma full conditionals of ``delta``.

    ``quad[m]`` is ``sum_v x_vm^T Sigma^{-1} x_vm`` for column ``m`` and
    ``dim_count`` is ``V * n`` (the number of scalar coordinates per column).
    Each update reuses the freshest values of the other deltas.
    """
    delta = np.array(delta, dtype=float)
    D = delta.size
    for r in range(D):
        # theta_m^{(-r)} = prod_{t <= m, t != r} delta_t, for m >= r
        theta = np.cumprod(delta)[r:] / delta[r]
        shape = (a1 if r == 0 else a2) + 0.5 * dim_count * (D - r)
        rate = 1.0 + 0.5 * np.dot(theta, quad[r:])
        delta[r] = rng.gamma(shape, 1.0 / rate)
    return delta


@dataclass(frozen=True)
class ShrinkState:
    delta_shared: np.ndarray  # (R,)
    delta_layer: np.ndarray   # (K, H)
    a1: float = 2.0
    a2: float = 2.5

    @property
    def tau_shared(self) -> np.ndarray:
        return tau_from_delta(self.delta_shared)

    @property
    def tau_layer(self) -> np.ndarray:
        return tau_from_delta(self.delta_layer)

    @classmethod
    def from_prior(cls, R, K, H, a1, a2, rng) -> "ShrinkState":
        shared = sample_delta_prior(a1, a2, R, rng)
        layer = np.stack([sample_delta_prior(a1, a2, H, rng) for _ in range(K)]) if K else np.zeros((0, H))
        return cls(shared, layer.reshape(K, H), a1, a2)


def update_shared_deltas(state: ShrinkState, xbar, gp_xbar, rng) -> ShrinkState:
    """Gamma full-conditional update of the shared deltas.

    ``xbar`` has shape ``(V, R, n)``; ``gp_xbar`` is the :class:`~dynmln.gp.GPFactor`
    of the shared-coordinate covariance.
    """
    V, R, n = xbar.shape
    if R != state.delta_shared.size:
        raise ValueError(f"xbar has {R} columns, state has {state.delta_shared.size}")
    if R == 0:
        return state
    quad = gp_xbar.quad(xbar).sum(axis=0)
    delta = gibbs_deltas(state.delta_shared, quad, V * n, state.a1, state.a2, rng)
    return replace(state, delta_shared=delta)


def update_layer_deltas(state: ShrinkState, k: int, x_k, gp_x, rng) -> ShrinkState:
    """Update ``delta_layer[k]`` from the layer-``k`` coordinates ``x_k`` of shape ``(V, H, n)``."""
    V, H, n = x_k.shape
    if H != state.delta_layer.shape[1]:
        raise ValueError(f"x_k has {H} columns, state has {state.delta_layer.shape[1]}")
    if H == 0:
        return state
    quad = gp_x.quad(x_k).sum(axis=0)
    layer = np.array(state.delta_layer)
    layer[k] = gibbs_deltas(layer[k], quad, V * n, state.a1, state.a2, rng)
    return replace(state, delta_layer=layer)
