"""Observed dynamic multilayer networks: storage, file formats and hold-out masks.

Cells are stored for lower-triangular pairs only.  Pair ``(v, u)`` with
``v > u`` (0-based) lives at flat index ``v*(v-1)/2 + u``, which is the row
order of ``np.tril_indices(V, -1)``.  Cell values are int8 codes: 0, 1, or
``MISSING``.
"""
from __future__ import annotations

import csv
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

MISSING = -1
NA_TOKEN = "NA"
EDGE_HEADER = ["layer", "time_index", "u", "v", "value"]


def n_pairs(n_actors: int) -> int:
    return n_actors * (n_actors - 1) // 2


def pair_index(v, u):
    """Flat index of the pair ``(v, u)``, ``v > u``, 0-based."""
    return v * (v - 1) // 2 + u


def pair_arrays(n_actors: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(v, u)`` index arrays in flat cell order."""
    return np.tril_indices(n_actors, -1)


def to_square(flat, n_actors, diag=0.0):
    """Expand ``(..., C)`` lower-triangular values into symmetric ``(..., V, V)``."""
    flat = np.asarray(flat)
    vv, uu = pair_arrays(n_actors)
    out = np.full(flat.shape[:-1] + (n_actors, n_actors), diag, dtype=np.result_type(flat, diag))
    out[..., vv, uu] = flat
    out[..., uu, vv] = flat
    return out


def _readonly(a):
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DynMultiNet:
    """Binary undirected networks over ``K`` layers and an ``n``-point time grid.

    ``obs`` has shape ``(K, n, V(V-1)/2)``.
    """

    n_actors: int
    grid: np.ndarray
    obs: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        obs = np.asarray(self.obs, dtype=np.int8)
        if self.n_actors < 2:
            raise DataError(f"need at least 2 actors, got {self.n_actors}")
        if grid.ndim != 1 or grid.size < 1:
            raise DataError("time grid must be a non-empty vector")
        if np.any(np.diff(grid) <= 0):
            raise DataError("time grid must be strictly increasing")
        if obs.ndim != 3 or obs.shape[0] < 1 or obs.shape[1:] != (grid.size, n_pairs(self.n_actors)):
            raise DataError(
                f"obs shape {obs.shape} does not match (K, {grid.size}, {n_pairs(self.n_actors)})"
            )
        if not np.all((obs == 0) | (obs == 1) | (obs == MISSING)):
            raise DataError("cells must be 0, 1 or missing")
        object.__setattr__(self, "grid", _readonly(grid))
        object.__setattr__(self, "obs", _readonly(obs))

    @property
    def n_layers(self) -> int:
        return self.obs.shape[0]

    @property
    def n_times(self) -> int:
        return self.obs.shape[1]

    @property
    def n_pairs(self) -> int:
        return self.obs.shape[2]

    @property
    def missing(self) -> np.ndarray:
        return self.obs == MISSING

    def square(self) -> np.ndarray:
        """Dense ``(K, n, V, V)`` float array; NaN marks missing, diagonal 0."""
        vals = np.where(self.missing, np.nan, self.obs.astype(float))
        return to_square(vals, self.n_actors)

    def layer(self, k: int) -> "DynMultiNet":
        return DynMultiNet(self.n_actors, self.grid, self.obs[k : k + 1])

    def with_cells(self, cells: "CellTable") -> "DynMultiNet":
        """Copy with the given cells overwritten by ``cells.value``."""
        obs = np.array(self.obs)
        obs[cells.layer, cells.time, pair_index(cells.v, cells.u)] = cells.value
        return DynMultiNet(self.n_actors, self.grid, obs)

    def __eq__(self, other):
        if not isinstance(other, DynMultiNet):
            return NotImplemented
        return (
            self.n_actors == other.n_actors
            and np.array_equal(self.grid, other.grid)
            and np.array_equal(self.obs, other.obs)
        )

    __hash__ = None


@dataclass(frozen=True)
class CellTable:
    """A list of cells ``(layer, time, v, u)`` (0-based, ``v > u``) with a value each."""

    layer: np.ndarray
    time: np.ndarray
    v: np.ndarray
    u: np.ndarray
    value: np.ndarray = field(default=None)

    def __post_init__(self):
        for name in ("layer", "time", "v", "u"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64).ravel())
        if self.value is not None:
            object.__setattr__(self, "value", np.asarray(self.value).ravel())
        if np.any(self.v <= self.u):
            raise DataError("cells must satisfy v > u")

    def __len__(self):
        return self.layer.size

    @property
    def flat(self) -> np.ndarray:
        return pair_index(self.v, self.u)

    @classmethod
    def empty(cls) -> "CellTable":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z, z, z, np.zeros(0, dtype=np.int8))

    @classmethod
    def from_mask(cls, mask, values=None) -> "CellTable":
        """Cells where a ``(K, n, C)`` mask is true."""
        k, i, c = np.nonzero(mask)
        n_act = int(round((1 + np.sqrt(1 + 8 * mask.shape[2])) / 2))
        vv, uu = pair_arrays(n_act)
        val = None if values is None else np.asarray(values)[k, i, c]
        return cls(k, i, vv[c], uu[c], val)

    def write_csv(self, path, value_name="value"):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["layer", "time_index", "u", "v", value_name])
            for row in zip(self.layer, self.time, self.u, self.v, self.value):
                k, i, u, v, val = row
                w.writerow([k + 1, i + 1, u + 1, v + 1, _fmt_value(val)])

    @classmethod
    def read_csv(cls, path) -> "CellTable":
        cols = {name: [] for name in ("layer", "time", "v", "u", "value")}
        with open(path, newline="") as fh:
            rows = csv.reader(fh)
            header = next(rows, None)
            if header is None or [h.strip() for h in header[:4]] != EDGE_HEADER[:4]:
                raise DataError(f"{path}: expected header layer,time_index,u,v,<value>", 1)
            for lineno, row in enumerate(rows, start=2):
                if not row or not "".join(row).strip():
                    continue
                try:
                    k, i, a, b = (int(x) for x in row[:4])
                    val = float(row[4])
                except (ValueError, IndexError):
                    raise DataError(f"malformed row {row!r}", lineno) from None
                if a == b:
                    raise DataError("self-loop", lineno)
                cols["layer"].append(k - 1)
                cols["time"].append(i - 1)
                cols["v"].append(max(a, b) - 1)
                cols["u"].append(min(a, b) - 1)
                cols["value"].append(val)
        return cls(**cols)


def _fmt_value(val):
    if isinstance(val, (float, np.floating)):
        if np.isnan(val):
            return NA_TOKEN
        if float(val).is_integer():
            return str(int(val))
        return repr(float(val))
    return NA_TOKEN if val == MISSING else str(int(val))


# --------------------------------------------------------------------- I/O

_HEADER_RE = re.compile(r"^#dynmln\s+(.*)$")


def _parse_meta(line, lineno=1):
    m = _HEADER_RE.match(line.strip())
    if not m:
        raise DataError("expected '#dynmln v=<V> k=<K> grid=<reals>' header", lineno)
    meta = {}
    for tok in m.group(1).split():
        key, sep, val = tok.partition("=")
        if not sep:
            raise DataError(f"bad header token {tok!r}", lineno)
        meta[key.lower()] = val
    try:
        V = int(meta["v"])
        K = int(meta["k"])
        grid = np.array([float(g) for g in meta["grid"].split(",")])
    except (KeyError, ValueError) as exc:
        raise DataError(f"incomplete header: {exc}", lineno) from None
    if V < 2 or K < 1:
        raise DataError(f"invalid dimensions v={V} k={K}", lineno)
    if np.any(np.diff(grid) <= 0):
        raise DataError("grid must be strictly increasing", lineno)
    return V, K, grid


def _meta_line(net: DynMultiNet) -> str:
    grid = ",".join(repr(float(t)) for t in net.grid)
    return f"#dynmln v={net.n_actors} k={net.n_layers} grid={grid}"


def _parse_cell_value(tok, lineno):
    tok = tok.strip()
    if tok == NA_TOKEN:
        return MISSING
    if tok in ("0", "1"):
        return int(tok)
    raise DataError(f"value must be 0, 1 or NA, got {tok!r}", lineno)


def load_network(path, format: str = "edge-csv") -> DynMultiNet:
    """Read a network in ``edge-csv`` (single file) or ``dense-csv`` (directory) format."""
    if format == "edge-csv":
        return _load_edge_csv(Path(path))
    if format == "dense-csv":
        return _load_dense_csv(Path(path))
    raise ValueError(f"unknown format {format!r}")


def _load_edge_csv(path: Path) -> DynMultiNet:
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataError(f"{path}: empty file", 1)
    V, K, grid = _parse_meta(lines[0], 1)
    n = grid.size
    obs = np.zeros((K, n, n_pairs(V)), dtype=np.int8)
    seen = {}
    header_seen = False
    for lineno, row in enumerate(csv.reader(lines[1:]), start=2):
        if not row or not "".join(row).strip():
            continue
        if not header_seen:
            if [c.strip() for c in row] != EDGE_HEADER:
                raise DataError(f"expected header {','.join(EDGE_HEADER)}", lineno)
            header_seen = True
            continue
        if len(row) != 5:
            raise DataError(f"malformed row: expected 5 fields, got {len(row)}", lineno)
        try:
            k, i, a, b = (int(x) for x in row[:4])
        except ValueError:
            raise DataError(f"malformed row {','.join(row)!r}", lineno) from None
        val = _parse_cell_value(row[4], lineno)
        if a == b:
            raise DataError(f"self-loop on actor {a}", lineno)
        if not (1 <= k <= K and 1 <= i <= n and 1 <= a <= V and 1 <= b <= V):
            raise DataError(f"index out of range in row {','.join(row)!r}", lineno)
        key = (k - 1, i - 1, pair_index(max(a, b) - 1, min(a, b) - 1))
        if key in seen and seen[key] != val:
            raise DataError(f"conflicting duplicate for cell {row[:4]}", lineno)
        seen[key] = val
        obs[key] = val
    if not header_seen:
        raise DataError(f"{path}: missing column header", len(lines))
    return DynMultiNet(V, grid, obs)


def _load_dense_csv(path: Path) -> DynMultiNet:
    directory = path if path.is_dir() else path.parent
    manifest = directory / "manifest.txt"
    with open(manifest) as fh:
        V, K, grid = _parse_meta(fh.readline(), 1)
    n = grid.size
    obs = np.zeros((K, n, n_pairs(V)), dtype=np.int8)
    vv, uu = pair_arrays(V)
    for k in range(K):
        for i in range(n):
            fname = directory / f"Y_k{k + 1}_t{i + 1}.csv"
            with open(fname, newline="") as fh:
                rows = [r for r in csv.reader(fh) if r and "".join(r).strip()]
            if len(rows) != V or any(len(r) != V for r in rows):
                raise DataError(f"{fname.name}: expected a {V}x{V} matrix")
            mat = np.empty((V, V), dtype=np.int8)
            for a, r in enumerate(rows):
                for b, tok in enumerate(r):
                    mat[a, b] = MISSING if a == b else _parse_cell_value(tok, a + 1)
            if not np.array_equal(mat, mat.T):
                raise DataError(f"{fname.name}: matrix is not symmetric")
            obs[k, i] = mat[vv, uu]
    return DynMultiNet(V, grid, obs)


def write_network(net: DynMultiNet, path, format: str = "edge-csv") -> None:
    """Write ``net``; edge-csv lists only 1 and NA cells (absent rows read back as 0)."""
    path = Path(path)
    if format == "edge-csv":
        vv, uu = pair_arrays(net.n_actors)
        with open(path, "w", newline="") as fh:
            fh.write(_meta_line(net) + "\n")
            w = csv.writer(fh)
            w.writerow(EDGE_HEADER)
            for k, i, c in zip(*np.nonzero(net.obs != 0)):
                w.writerow([k + 1, i + 1, uu[c] + 1, vv[c] + 1, _fmt_value(net.obs[k, i, c])])
    elif format == "dense-csv":
        path.mkdir(parents=True, exist_ok=True)
        (path / "manifest.txt").write_text(_meta_line(net) + "\n")
        sq = to_square(net.obs, net.n_actors, diag=0)
        for k in range(net.n_layers):
            for i in range(net.n_times):
                with open(path / f"Y_k{k + 1}_t{i + 1}.csv", "w", newline="") as fh:
                    w = csv.writer(fh)
                    for row in sq[k, i]:
                        w.writerow([_fmt_value(x) for x in row])
    else:
        raise ValueError(f"unknown format {format!r}")


# ------------------------------------------------------------------ hold-out


@dataclass(frozen=True)
class Selector:
    """One hold-out rule.  Indices are 1-based as in the text format."""

    layer: int
    t_start: int
    t_end: int
    pairs: tuple | None = None  # ((u, v), ...) or None for all pairs

    def __str__(self):
        pairs = "all" if self.pairs is None else ";".join(f"({a},{b})" for a, b in self.pairs)
        return f"layer={self.layer} times={self.t_start}..{self.t_end} pairs={pairs}"


@dataclass(frozen=True)
class HoldoutSpec:
    entries: tuple = ()

    @classmethod
    def parse(cls, text: str) -> "HoldoutSpec":
        return cls(tuple(parse_selector(line, n) for n, line in _content_lines(text)))

    @classmethod
    def read(cls, path) -> "HoldoutSpec":
        return cls.parse(Path(path).read_text())

    def __str__(self):
        return "\n".join(str(s) for s in self.entries)


def _content_lines(text):
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if line:
            yield n, line


_PAIR_RE = re.compile(r"\(\s*(\d+)\s*,\s*(\d+)\s*\)")


def parse_selector(line: str, lineno=None) -> Selector:
    fields = {}
    for tok in line.split(None, 2):
        key, sep, val = tok.partition("=")
        if not sep:
            raise DataError(f"bad selector token {tok!r}", lineno)
        fields[key] = val.strip()
    try:
        layer = int(fields["layer"])
        a, sep, b = fields["times"].partition("..")
        t0, t1 = int(a), int(b) if sep else int(a)
    except (KeyError, ValueError):
        raise DataError(f"selector needs layer=<k> times=<a>..<b>: {line!r}", lineno) from None
    if t1 < t0:
        raise DataError(f"empty time range {t0}..{t1}", lineno)
    pairs = None
    ptxt = fields.get("pairs", "all")
    if ptxt != "all":
        pairs = tuple((int(x), int(y)) for x, y in _PAIR_RE.findall(ptxt))
        if not pairs:
            raise DataError(f"cannot parse pairs {ptxt!r}", lineno)
        if any(x == y for x, y in pairs):
            raise DataError("self-loop in pair list", lineno)
    return Selector(layer, t0, t1, pairs)


def holdout_mask(net: DynMultiNet, spec: HoldoutSpec) -> np.ndarray:
    mask = np.zeros(net.obs.shape, dtype=bool)
    for sel in spec.entries:
        if not (1 <= sel.layer <= net.n_layers and 1 <= sel.t_start and sel.t_end <= net.n_times):
            raise DataError(f"selector out of range: {sel}")
        times = slice(sel.t_start - 1, sel.t_end)
        if sel.pairs is None:
            cells = slice(None)
        else:
            if any(not (1 <= x <= net.n_actors and 1 <= y <= net.n_actors) for x, y in sel.pairs):
                raise DataError(f"pair index out of range: {sel}")
            cells = [pair_index(max(x, y) - 1, min(x, y) - 1) for x, y in sel.pairs]
        sub = np.zeros(net.obs.shape, dtype=bool)
        sub[sel.layer - 1, times, cells] = True
        if not np.any(sub & ~net.missing):
            warnings.warn(f"hold-out selector matches no observed cells: {sel}", stacklevel=3)
        mask |= sub
    return mask & ~net.missing


def apply_holdout(net: DynMultiNet, spec: HoldoutSpec) -> tuple[DynMultiNet, CellTable]:
    """Mask the selected cells.  Returns the masked network and the removed values.

    Cells already missing are not selected, so the truth table only ever
    holds observed 0/1 values.
    """
    mask = holdout_mask(net, spec)
    truth = CellTable.from_mask(mask, net.obs)
    obs = np.where(mask, MISSING, net.obs).astype(np.int8)
    return DynMultiNet(net.n_actors, net.grid, obs), truth
