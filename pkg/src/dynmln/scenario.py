"""Synthetic dynamic multilayer contact networks and an exact log-odds factorizer.

The default scenario has 30 actors in three blocks of ten (young, adult
women, adult men) over two days observed at 17 times.  Representative
probability matrices sit at times 1, 5, 9, 13, 17 (meals at 1/9/17, morning
at 5, afternoon at 13); the rest are convex combinations of the neighbouring
anchors, except times 4 and 6 which copy time 5.  Day two repeats day one
except at time 5 (five sick children stay home) and time 13 (five sick men
stay home).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import CapacityError
from .netdata import DynMultiNet, pair_arrays

YOUNG = np.arange(0, 10)
WOMEN = np.arange(10, 20)
MEN = np.arange(20, 30)
MEN_SITE_A = np.arange(20, 25)
MEN_SITE_B = np.arange(25, 30)
SICK_YOUNG = np.arange(0, 5)
SICK_MEN = np.arange(20, 25)


@dataclass(frozen=True)
class ScenarioLevels:
    """Probability levels used to draw the representative matrices.

    ``women_meal`` and ``afternoon_young_women`` encode "moderate" and
    "increased" contact and have no published value.
    """

    within: float = 0.8
    between: float = 0.1
    women_meal: float = 0.4
    afternoon_young_women: float = 0.4
    sick_up: float = 0.7
    sick_down: float = 0.05


@dataclass(frozen=True)
class ScenarioSpec:
    n_actors: int
    grid: np.ndarray
    anchor_times: tuple              # 0-based grid indices
    anchor_probs: np.ndarray         # (K, A, V, V)
    kink: bool = True
    levels: ScenarioLevels = field(default_factory=ScenarioLevels)

    @property
    def n_layers(self) -> int:
        return self.anchor_probs.shape[0]

    @property
    def n_times(self) -> int:
        return len(self.grid)

    def manifest(self, **extra) -> dict:
        out = {
            "n_actors": self.n_actors,
            "n_layers": self.n_layers,
            "grid": ",".join(repr(float(t)) for t in self.grid),
            "anchor_times": ",".join(str(a + 1) for a in self.anchor_times),
            "kink": self.kink,
        }
        out.update({f"level.{k}": v for k, v in asdict(self.levels).items()})
        out["assumed_levels"] = "women_meal,afternoon_young_women,sick_up,sick_down,within,between"
        out.update(extra)
        return out


def _block(mat, rows, cols, p):
    mat[np.ix_(rows, cols)] = p
    mat[np.ix_(cols, rows)] = p


def meal_matrix(lv: ScenarioLevels) -> np.ndarray:
    m = np.full((30, 30), lv.between)
    for grp in (YOUNG, WOMEN, MEN):
        _block(m, grp, grp, lv.within)
    _block(m, WOMEN, YOUNG, lv.women_meal)
    _block(m, WOMEN, MEN, lv.women_meal)
    np.fill_diagonal(m, 0.0)
    return m


def morning_matrix(lv: ScenarioLevels) -> np.ndarray:
    m = np.full((30, 30), lv.between)
    for grp in (YOUNG, WOMEN, MEN_SITE_A, MEN_SITE_B):
        _block(m, grp, grp, lv.within)
    np.fill_diagonal(m, 0.0)
    return m


def afternoon_matrix(lv: ScenarioLevels) -> np.ndarray:
    m = morning_matrix(lv)
    _block(m, YOUNG, WOMEN, lv.afternoon_young_women)
    return m


def _sick_at_home(base, sick, peers, lv):
    m = base.copy()
    _block(m, sick, WOMEN, lv.sick_up)
    _block(m, sick, peers, lv.sick_down)
    np.fill_diagonal(m, 0.0)
    return m


def build_default_scenario(levels: ScenarioLevels | None = None, kink: bool = True) -> ScenarioSpec:
    lv = levels or ScenarioLevels()
    meal, morning, afternoon = meal_matrix(lv), morning_matrix(lv), afternoon_matrix(lv)
    day1 = [meal, morning, meal, afternoon, meal]
    day2 = [
        meal,
        _sick_at_home(morning, SICK_YOUNG, YOUNG, lv),
        meal,
        _sick_at_home(afternoon, SICK_MEN, MEN, lv),
        meal,
    ]
    probs = np.array([day1, day2])
    return ScenarioSpec(30, np.arange(1.0, 18.0), (0, 4, 8, 12, 16), probs, kink, lv)


def interpolate_probs(spec: ScenarioSpec, square: bool = False) -> np.ndarray:
    """Edge probabilities at every grid point, shape ``(K, n, C)`` (or ``(K, n, V, V)``).

    Between anchors ``a < b`` the matrix at ``i`` is ``w*P_a + (1-w)*P_b``
    with ``w = (b - i) / (b - a)``.
    """
    anchors = list(spec.anchor_times)
    if anchors[0] != 0 or anchors[-1] != spec.n_times - 1:
        raise ValueError("anchors must cover the first and last grid points")
    K, V = spec.n_layers, spec.n_actors
    full = np.empty((K, spec.n_times, V, V))
    for j, (a, b) in enumerate(zip(anchors[:-1], anchors[1:])):
        for i in range(a, b + 1):
            w = (b - i) / (b - a)
            full[:, i] = w * spec.anchor_probs[:, j] + (1.0 - w) * spec.anchor_probs[:, j + 1]
    if spec.kink and spec.n_times >= 6 and 4 in anchors:
        full[:, 3] = full[:, 4]
        full[:, 5] = full[:, 4]
    if square:
        return full
    vv, uu = pair_arrays(V)
    return full[..., vv, uu]


def sample_networks(pi0, grid, rng: np.random.Generator, replicates: int = 1) -> list[DynMultiNet]:
    """Independent Bernoulli draws of every cell of ``pi0`` (shape ``(K, n, C)``)."""
    pi0 = np.asarray(pi0, dtype=float)
    C = pi0.shape[-1]
    V = int(round((1 + np.sqrt(1 + 8 * C)) / 2))
    return [DynMultiNet(V, grid, (rng.random(pi0.shape) < pi0).astype(np.int8)) for _ in range(replicates)]


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(replicate,))))


# ------------------------------------------------------------ factorizer


def _psd_factor(S, eig_tol=1e-10, dominance=1e-6):
    """Coordinates ``U sqrt(lam)`` of a PSD completion of the off-diagonal part of ``S``."""
    V = S.shape[0]
    off = S - np.diag(np.diag(S))
    if not np.any(off):
        return np.zeros((V, 0))
    full = off + np.diag(np.abs(off).sum(axis=1) + dominance)
    lam, U = np.linalg.eigh(full)
    keep = lam > eig_tol
    return U[:, keep] * np.sqrt(lam[keep])


def prop1_factorize(z_target, mu, R: int | None = None, H: int | None = None, split=None):
    """Exact shared/layer coordinates reproducing given log-odds off the diagonal.

    ``z_target`` has shape ``(K, n, V, V)`` (symmetric per slice) and ``mu``
    shape ``(n,)``.  ``split(resid) -> (S_shared (n,V,V), S_layer (K,n,V,V))``
    divides ``z - mu`` between shared and layer similarities; the default is
    the cross-layer mean and its residuals.  Returns ``(xbar, x)`` with
    shapes ``(V, R, n)`` and ``(K, V, H, n)``; ``R``/``H`` default to the
    smallest sufficient sizes.
    """
    z = np.asarray(z_target, dtype=float)
    K, n, V, _ = z.shape
    resid = z - np.asarray(mu, dtype=float)[None, :, None, None]
    if split is None:
        shared = resid.mean(axis=0)
        layer = resid - shared[None]
    else:
        shared, layer = split(resid)
    fac_shared = [_psd_factor(shared[i]) for i in range(n)]
    fac_layer = [[_psd_factor(layer[k, i]) for i in range(n)] for k in range(K)]
    need_R = max(f.shape[1] for f in fac_shared)
    need_H = max((f.shape[1] for row in fac_layer for f in row), default=0)
    R = need_R if R is None else R
    H = need_H if H is None else H
    if R < need_R:
        raise CapacityError(f"shared dimension R={R} too small; need R >= {need_R}", need_R)
    if H < need_H:
        raise CapacityError(f"layer dimension H={H} too small; need H >= {need_H}", need_H)
    xbar = np.zeros((V, R, n))
    x = np.zeros((K, V, H, n))
    for i, f in enumerate(fac_shared):
        xbar[:, : f.shape[1], i] = f
    for k in range(K):
        for i, f in enumerate(fac_layer[k]):
            x[k, :, : f.shape[1], i] = f
    return xbar, x


def reconstruct_logodds(mu, xbar, x) -> np.ndarray:
    """``(K, n, V, V)`` log-odds implied by a coordinate set (diagonal included)."""
    return (
        np.asarray(mu)[None, :, None, None]
        + np.einsum("vri,uri->ivu", xbar, xbar)[None]
        + np.einsum("kvhi,kuhi->kivu", x, x)
    )
