"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 20]

Both implementations are imported directly, so ``DYNMLN_NO_JIT`` does not
matter here.  The block kernels get identical inputs and are also checked
for agreement.
"""
import argparse
import time

import numpy as np

from dynmln.blocks import _update_blocks_nb, _update_blocks_np
from dynmln.gp import GPFactor
from dynmln.polyagamma import _pg1_array_numba, _pg1_array_numpy


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), float(np.median(times))


def block_inputs(V, D, n, seed=0):
    rng = np.random.default_rng(seed)
    L = GPFactor.build(np.arange(1.0, n + 1), 0.05).chol
    X = rng.standard_normal((V, D, n)) * 0.5
    W = rng.uniform(0.05, 0.25, (n, V, V))
    W = 0.5 * (W + W.transpose(0, 2, 1))
    Rsp = rng.standard_normal((n, V, V))
    Rsp = 0.5 * (Rsp + Rsp.transpose(0, 2, 1))
    idx = np.arange(V)
    W[:, idx, idx] = 0.0
    Rsp[:, idx, idx] = 0.0
    tau = np.cumprod(np.full(D, 1.5))
    Z = rng.standard_normal((V, D * n))
    return X, W, Rsp, tau, L, Z


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    rng = np.random.default_rng(1)
    c = rng.normal(0.0, 2.0, 2 * 17 * 435)
    _pg1_array_numba(c[:10], np.random.default_rng(0))  # compile
    print(f"{'kernel':<28s}{'numba ms':>10s}{'numpy ms':>10s}{'speedup':>9s}")
    nb = best_of(lambda: _pg1_array_numba(c, np.random.default_rng(2)), args.repeat)
    npy = best_of(lambda: _pg1_array_numpy(c, np.random.default_rng(2)), args.repeat)
    print(f"{'PG(1,c) x ' + str(c.size):<28s}{1e3 * nb[0]:10.2f}{1e3 * npy[0]:10.2f}{npy[0] / nb[0]:9.1f}")

    for V, D, n in ((30, 5, 17), (30, 10, 17), (60, 5, 17)):
        base = block_inputs(V, D, n)
        warm = [a.copy() for a in block_inputs(4, D, n)]
        _update_blocks_nb(*warm)

        def run(fn):
            X = base[0].copy()
            fn(X, *base[1:])
            return X

        diff = np.max(np.abs(run(_update_blocks_nb) - run(_update_blocks_np)))
        nb = best_of(lambda: run(_update_blocks_nb), args.repeat)
        npy = best_of(lambda: run(_update_blocks_np), args.repeat)
        label = f"blocks V={V} D={D} n={n}"
        print(f"{label:<28s}{1e3 * nb[0]:10.2f}{1e3 * npy[0]:10.2f}{npy[0] / nb[0]:9.1f}   max|diff|={diff:.1e}")


if __name__ == "__main__":
    main()
