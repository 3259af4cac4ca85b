"""Squared-exponential GP covariances on a fixed time grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import NumericalError

# the matrix is tried as given first, then with escalating diagonal jitter
JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)


def sq_exp_cov(grid, kappa: float) -> np.ndarray:
    """Correlation matrix ``exp(-kappa * (t_i - t_j)**2)`` over ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a strictly increasing vector")
    lag = grid[:, None] - grid[None, :]
    return np.exp(-kappa * lag * lag)


def chol_jitter(sigma, name: str = "matrix") -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``sigma + jitter*I`` with the smallest jitter that works.

    Returns ``(L, jitter)``; raises :class:`NumericalError` if ``sigma`` is
    not symmetric or the largest jitter still fails.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12):
        raise NumericalError(f"{name} is not a symmetric square matrix")
    eye = np.eye(sigma.shape[0])
    for jitter in JITTER_LADDER:
        try:
            return linalg.cholesky(sigma + jitter * eye, lower=True), jitter
        except linalg.LinAlgError:
            continue
    raise NumericalError(f"Cholesky of {name} failed at jitter {JITTER_LADDER[-1]:g}")


def mvn_sample(mean, chol, rng: np.random.Generator) -> np.ndarray:
    """Draw ``mean + chol @ z`` with ``z`` standard normal."""
    mean = np.asarray(mean, dtype=float)
    chol = np.asarray(chol, dtype=float)
    if chol.ndim != 2 or chol.shape[0] != mean.shape[0]:
        raise ValueError(f"dimension mismatch: mean {mean.shape}, factor {chol.shape}")
    return mean + chol @ rng.standard_normal(chol.shape[1])


@dataclass(frozen=True)
class GPFactor:
    cov: np.ndarray   # sigma + jitter*I
    chol: np.ndarray  # lower factor of cov
    inv: np.ndarray
    jitter: float
    kappa: float

    @classmethod
    def build(cls, grid, kappa, name="matrix"):
        sigma = sq_exp_cov(grid, kappa)
        L, jitter = chol_jitter(sigma, name)
        eye = np.eye(len(sigma))
        Linv = linalg.solve_triangular(L, eye, lower=True)
        cov = sigma + jitter * eye
        for a in (cov, L, Linv):
            a.flags.writeable = False
        inv = Linv.T @ Linv
        inv.flags.writeable = False
        return cls(cov, L, inv, jitter, float(kappa))

    def quad(self, x) -> np.ndarray:
        """``x^T cov^{-1} x`` along the last axis, computed by a triangular solve."""
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, x.shape[-1]).T
        w = linalg.solve_triangular(self.chol, flat, lower=True)
        return np.einsum("ij,ij->j", w, w).reshape(x.shape[:-1])


@dataclass(frozen=True)
class CovarianceSet:
    """The baseline, shared and layer-specific GP covariances for one grid."""

    mu: GPFactor
    xbar: GPFactor
    x: GPFactor

    @classmethod
    def build(cls, grid, kappa_mu, kappa_xbar, kappa_x):
        return cls(
            GPFactor.build(grid, kappa_mu, "Sigma_mu"),
            GPFactor.build(grid, kappa_xbar, "Sigma_xbar"),
            GPFactor.build(grid, kappa_x, "Sigma_x"),
        )
