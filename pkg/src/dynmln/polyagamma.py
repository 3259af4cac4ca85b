"""Exact sampling of Polya-gamma PG(1, c) variables.

The sampler is Devroye's alternating-series accept/reject method as adapted
to PG(1, c) by Polson, Scott and Windle: propose from a mixture of a
truncated inverse Gaussian (left of ``TRUNC``) and an exponential tail, then
accept by squeezing the Jacobi density between partial sums of its series.

``sample_pg1_array`` dispatches to a numba kernel (scalar loop) or a numpy
kernel (vectorised rejection rounds); both are exact.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import log_ndtr

from ._accel import njit, pick

TRUNC = 0.64
TRUNC_RECIP = 1.0 / TRUNC
_LOG_4_OVER_PI = math.log(4.0 / math.pi)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_HALF_PI = math.log(0.5 * math.pi)


# ------------------------------------------------------------------ moments


def pg1_mean(c):
    """E[PG(1, c)] = tanh(c/2) / (2c), with the limit 1/4 at c = 0."""
    c = np.abs(np.asarray(c, dtype=float))
    small = c < 1e-4
    safe = np.where(small, 1.0, c)
    out = np.where(small, 0.25 * (1.0 - c * c / 12.0), np.tanh(0.5 * safe) / (2.0 * safe))
    return out if out.ndim else float(out)


def pg1_var(c):
    """Var[PG(1, c)] = (sinh c - c) / (4 c^3 cosh^2(c/2)), limit 1/24 at c = 0."""
    c = np.abs(np.asarray(c, dtype=float))
    small = c < 1e-3
    safe = np.where(small, 1.0, c)
    # large c: cosh^2(c/2) ~ e^c / 4 and sinh c ~ e^c / 2, ratio handled in logs
    with np.errstate(over="ignore", invalid="ignore"):
        exact = (np.sinh(safe) - safe) / (4.0 * safe**3 * np.cosh(0.5 * safe) ** 2)
    exact = np.where(safe > 600.0, 0.5 / safe**3, exact)
    out = np.where(small, 1.0 / 24.0 - c * c / 120.0, exact)
    return out if out.ndim else float(out)


def pg1_series_moments(c, terms: int = 200):
    """Mean and variance from the infinite-sum-of-gammas representation, truncated.

    PG(1, c) = (1 / 2 pi^2) * sum_k g_k / ((k - 1/2)^2 + c^2 / (4 pi^2)),
    g_k ~ Gamma(1, 1).  The truncated mean is corrected with the analytic tail
    sum of ``1/d_k``; the variance tail is O(terms^-3) and left out.
    """
    k = np.arange(1, terms + 1) - 0.5
    d = k * k + (float(c) / (2.0 * np.pi)) ** 2
    mean = np.sum(1.0 / d) / (2.0 * np.pi**2)
    # integral tail of 1/(x^2 + a^2) from terms to inf
    a = abs(float(c)) / (2.0 * np.pi)
    if a > 0:
        tail = (np.pi / 2 - np.arctan(terms / a)) / a
    else:
        tail = 1.0 / terms
    mean += tail / (2.0 * np.pi**2)
    var = np.sum(1.0 / (d * d)) / (4.0 * np.pi**4)
    return float(mean), float(var)


def pg1_series_draw(c, rng, size, terms: int = 200):
    """Approximate draws by truncating the sum of gammas (test oracle only)."""
    k = np.arange(1, terms + 1) - 0.5
    d = k * k + (float(c) / (2.0 * np.pi)) ** 2
    g = rng.standard_exponential((size, terms))
    return g @ (1.0 / d) / (2.0 * np.pi**2)


# ------------------------------------------------------------ numba kernel


@njit
def _log_ndtr_nb(x):
    if x > -20.0:
        return math.log(0.5 * math.erfc(-x / math.sqrt(2.0)))
    x2 = x * x
    return -0.5 * x2 - math.log(-x) - _HALF_LOG_2PI + math.log1p(-1.0 / x2 + 3.0 / (x2 * x2))


@njit
def _mass_texpon_nb(z):
    fz = 0.125 * math.pi * math.pi + 0.5 * z * z
    rt = math.sqrt(1.0 / TRUNC)
    b = rt * (TRUNC * z - 1.0)
    a = -rt * (TRUNC * z + 1.0)
    x0 = math.log(fz) + fz * TRUNC
    xb = x0 - z + _log_ndtr_nb(b)
    xa = x0 + z + _log_ndtr_nb(a)
    hi = max(xa, xb)
    log_qdivp = _LOG_4_OVER_PI + hi + math.log(math.exp(xa - hi) + math.exp(xb - hi))
    if log_qdivp > 700.0:
        return 0.0
    return 1.0 / (1.0 + math.exp(log_qdivp))


@njit
def _series_coef_nb(n, x):
    k = (n + 0.5) * math.pi
    if x > TRUNC:
        return k * math.exp(-0.5 * k * k * x)
    if x > 0.0:
        return math.exp(-1.5 * (_LOG_HALF_PI + math.log(x)) + math.log(k) - 2.0 * (n + 0.5) * (n + 0.5) / x)
    return 0.0


@njit
def _rtigauss_nb(z, rng):
    x = TRUNC + 1.0
    if z < TRUNC_RECIP:
        while True:
            e1 = rng.standard_exponential()
            e2 = rng.standard_exponential()
            while e1 * e1 > 2.0 * e2 / TRUNC:
                e1 = rng.standard_exponential()
                e2 = rng.standard_exponential()
            x = 1.0 + e1 * TRUNC
            x = TRUNC / (x * x)
            if rng.random() <= math.exp(-0.5 * z * z * x):
                return x
    mu = 1.0 / z
    while x > TRUNC:
        y = rng.standard_normal()
        y *= y
        half_mu = 0.5 * mu
        mu_y = mu * y
        x = mu + half_mu * mu_y - half_mu * math.sqrt(4.0 * mu_y + mu_y * mu_y)
        if rng.random() > mu / (mu + x):
            x = mu * mu / x
    return x


@njit
def _pg1_one_nb(c, rng):
    z = 0.5 * abs(c)
    fz = 0.125 * math.pi * math.pi + 0.5 * z * z
    mass = _mass_texpon_nb(z)
    while True:
        if rng.random() < mass:
            x = TRUNC + rng.standard_exponential() / fz
        else:
            x = _rtigauss_nb(z, rng)
        s = _series_coef_nb(0, x)
        y = rng.random() * s
        n = 0
        while True:
            n += 1
            if n % 2 == 1:
                s -= _series_coef_nb(n, x)
                if y <= s:
                    return 0.25 * x
            else:
                s += _series_coef_nb(n, x)
                if y > s:
                    break


@njit(nogil=True)
def _pg1_fill_nb(c, out, rng):
    for j in range(c.size):
        out[j] = _pg1_one_nb(c[j], rng)


def _pg1_array_numba(c, rng):
    c = np.ascontiguousarray(c, dtype=np.float64).ravel()
    out = np.empty_like(c)
    _pg1_fill_nb(c, out, rng)
    return out


# ------------------------------------------------------------ numpy kernel


def _mass_texpon_np(z):
    fz = 0.125 * np.pi**2 + 0.5 * z * z
    rt = np.sqrt(1.0 / TRUNC)
    x0 = np.log(fz) + fz * TRUNC
    xb = x0 - z + log_ndtr(rt * (TRUNC * z - 1.0))
    xa = x0 + z + log_ndtr(-rt * (TRUNC * z + 1.0))
    log_qdivp = _LOG_4_OVER_PI + np.logaddexp(xa, xb)
    return np.exp(-np.logaddexp(0.0, log_qdivp))


def _series_coef_np(n, x):
    k = (n + 0.5) * np.pi
    xs = np.maximum(x, 1e-300)
    right = k * np.exp(-0.5 * k * k * x)
    left = np.exp(-1.5 * (_LOG_HALF_PI + np.log(xs)) + np.log(k) - 2.0 * (n + 0.5) ** 2 / xs)
    return np.where(x > TRUNC, right, np.where(x > 0, left, 0.0))


def _rtigauss_np(z, rng):
    x = np.empty_like(z)
    # mu = 1/z above the truncation point: truncated Levy proposal, exp(-z^2 x / 2) acceptance
    idx = np.flatnonzero(z < TRUNC_RECIP)
    while idx.size:
        m = idx.size
        e1 = rng.standard_exponential(m)
        e2 = rng.standard_exponential(m)
        bad = np.flatnonzero(e1 * e1 > 2.0 * e2 / TRUNC)
        while bad.size:
            e1[bad] = rng.standard_exponential(bad.size)
            e2[bad] = rng.standard_exponential(bad.size)
            bad = bad[e1[bad] * e1[bad] > 2.0 * e2[bad] / TRUNC]
        xx = TRUNC / (1.0 + e1 * TRUNC) ** 2
        ok = rng.random(m) <= np.exp(-0.5 * z[idx] ** 2 * xx)
        x[idx[ok]] = xx[ok]
        idx = idx[~ok]
    # mu below the truncation point: inverse-Gaussian draws rejected until <= TRUNC
    idx = np.flatnonzero(z >= TRUNC_RECIP)
    while idx.size:
        m = idx.size
        mu = 1.0 / z[idx]
        y = rng.standard_normal(m) ** 2
        mu_y = mu * y
        xx = mu + 0.5 * mu * mu_y - 0.5 * mu * np.sqrt(4.0 * mu_y + mu_y * mu_y)
        flip = rng.random(m) > mu / (mu + xx)
        xx = np.where(flip, mu * mu / xx, xx)
        ok = xx <= TRUNC
        x[idx[ok]] = xx[ok]
        idx = idx[~ok]
    return x


def _pg1_array_numpy(c, rng):
    z = 0.5 * np.abs(np.asarray(c, dtype=np.float64).ravel())
    out = np.empty_like(z)
    fz = 0.125 * np.pi**2 + 0.5 * z * z
    mass = _mass_texpon_np(z)
    todo = np.arange(z.size)
    while todo.size:
        m = todo.size
        zz = z[todo]
        use_exp = rng.random(m) < mass[todo]
        x = np.empty(m)
        x[use_exp] = TRUNC + rng.standard_exponential(int(use_exp.sum())) / fz[todo[use_exp]]
        x[~use_exp] = _rtigauss_np(zz[~use_exp], rng)
        s = _series_coef_np(0, x)
        y = rng.random(m) * s
        accepted = np.zeros(m, dtype=bool)
        open_ = np.arange(m)
        n = 0
        while open_.size:
            n += 1
            xs = x[open_]
            if n % 2 == 1:
                s[open_] -= _series_coef_np(n, xs)
                hit = y[open_] <= s[open_]
                accepted[open_[hit]] = True
                open_ = open_[~hit]
            else:
                s[open_] += _series_coef_np(n, xs)
                open_ = open_[y[open_] <= s[open_]]
        out[todo[accepted]] = 0.25 * x[accepted]
        todo = todo[~accepted]
    return out


_pg1_array = pick(_pg1_array_numba, _pg1_array_numpy)


def sample_pg1_array(c, rng: np.random.Generator) -> np.ndarray:
    """Independent PG(1, c_j) draws for every entry of ``c``, returned flat."""
    return _pg1_array(c, rng)


def sample_pg1(c: float, rng: np.random.Generator) -> float:
    """One exact PG(1, c) draw."""
    c = float(c)
    if not math.isfinite(c):
        raise ValueError(f"PG tilt must be finite, got {c}")
    return float(sample_pg1_array(np.array([c]), rng)[0])
