"""Chain directories.

Layout::

    config.json    fit configuration plus shape metadata
    pi.bin         one record per retained sweep: little-endian float64
                   edge probabilities in (layer, time, v, u) order, v > u
    mu.bin         baseline trajectories, one record per retained sweep
    index.txt      retained sweep numbers, one per line
    manifest.json  run provenance and sha256 of every artifact above
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import DataError
from .sampler import FitConfig, PosteriorChain

ARTIFACTS = ("config.json", "pi.bin", "mu.bin", "index.txt")
_F8 = np.dtype("<f8")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_chain(chain: PosteriorChain, directory, manifest: dict | None = None) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    S, K, n, C = chain.pi.shape
    meta = {
        "fit": chain.config.to_dict(),
        "n_actors": chain.n_actors,
        "n_layers": K,
        "n_times": n,
        "n_pairs": C,
        "grid": [float(t) for t in chain.grid],
        "n_samples": S,
        "mu_chains": int(chain.mu.shape[1]),
        "cell_order": "layer,time,v,u lexicographic with v>u",
        "rng": chain.rng_scheme,
    }
    _dump_json(meta, d / "config.json")
    np.ascontiguousarray(chain.pi, dtype=_F8).tofile(d / "pi.bin")
    np.ascontiguousarray(chain.mu, dtype=_F8).tofile(d / "mu.bin")
    (d / "index.txt").write_text("".join(f"{s}\n" for s in chain.sweeps))
    man = dict(manifest or {})
    man["artifacts"] = {name: sha256_file(d / name) for name in ARTIFACTS}
    _dump_json(man, d / "manifest.json")
    return d


def verify_chain(directory) -> dict:
    """Check artifact hashes against the manifest; returns the manifest."""
    d = Path(directory)
    try:
        man = json.loads((d / "manifest.json").read_text())
    except FileNotFoundError:
        raise DataError(f"{d}: no manifest.json") from None
    for name, digest in man.get("artifacts", {}).items():
        p = d / name
        if not p.exists() or sha256_file(p) != digest:
            raise DataError(f"{d}: artifact {name} does not match its manifest hash")
    missing = [a for a in ARTIFACTS if a not in man.get("artifacts", {})]
    if missing:
        raise DataError(f"{d}: manifest lacks hashes for {missing}")
    return man


def read_meta(directory) -> dict:
    return json.loads((Path(directory) / "config.json").read_text())


def load_chain(directory, verify: bool = True) -> PosteriorChain:
    d = Path(directory)
    if verify:
        verify_chain(d)
    meta = read_meta(d)
    S, K, n, C = meta["n_samples"], meta["n_layers"], meta["n_times"], meta["n_pairs"]
    pi = np.fromfile(d / "pi.bin", dtype=_F8)
    if pi.size != S * K * n * C:
        raise DataError(f"{d}: pi.bin holds {pi.size} values, expected {S * K * n * C}")
    mu = np.fromfile(d / "mu.bin", dtype=_F8).reshape(S, meta["mu_chains"], n)
    sweeps = np.array([int(s) for s in (d / "index.txt").read_text().split()], dtype=np.int64)
    return PosteriorChain(
        pi.reshape(S, K, n, C).astype(float), sweeps, FitConfig.from_dict(meta["fit"]),
        meta["n_actors"], np.array(meta["grid"]), mu.astype(float), meta["rng"],
    )


def iter_pi_records(directory):
    """Yield the ``(K, n, C)`` edge-probability record of each retained sweep."""
    d = Path(directory)
    meta = read_meta(d)
    shape = (meta["n_layers"], meta["n_times"], meta["n_pairs"])
    size = int(np.prod(shape))
    with open(d / "pi.bin", "rb") as fh:
        for _ in range(meta["n_samples"]):
            rec = np.frombuffer(fh.read(size * 8), dtype=_F8)
            yield rec.reshape(shape).astype(float)
