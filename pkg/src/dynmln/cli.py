"""Command-line entry point: ``dynmln <command> [flags]``.

Commands: simulate, fit, predict, summarize, diagnose, evaluate.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    auc, auc_by_slice, concentration_metrics, degree_trajectory, density_trajectory, ess_many,
    fresh_network_auc, group_contact_trajectory, predict_edges, write_metrics_csv, write_scores_csv,
    write_trajectory_csv, _f,
)
from .chainio import load_chain, sha256_file, verify_chain, write_chain
from .errors import ConfigError, DataError, NumericalError
from .netdata import CellTable, HoldoutSpec, apply_holdout, load_network, write_network
from .sampler import FitConfig, run_chain
from .scenario import ScenarioLevels, build_default_scenario, interpolate_probs, replicate_rng, sample_networks

log = logging.getLogger("dynmln")

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 2, 3, 4


def _manifest(args, argv, outputs, started, **extra) -> dict:
    inputs = {}
    for key in ("data", "chain", "cells", "truth", "pi0", "holdout_file", "groups"):
        p = getattr(args, key, None)
        if p is not None and Path(p).is_file():
            inputs[str(p)] = sha256_file(p)
    out = {
        "command": ["dynmln"] + list(argv),
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "inputs": inputs,
        "outputs": [str(o) for o in outputs],
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    out.update(extra)
    return out


def _write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ----------------------------------------------------------------- simulate


def cmd_simulate(args, argv):
    started = time.perf_counter()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    levels = ScenarioLevels(
        within=args.within, between=args.between, women_meal=args.women_meal,
        afternoon_young_women=args.afternoon_young_women, sick_up=args.sick_up, sick_down=args.sick_down,
    )
    spec = build_default_scenario(levels, kink=not args.no_kink)
    pi0 = interpolate_probs(spec)
    if args.holdout_file:
        holdout = HoldoutSpec.read(args.holdout_file)
    else:
        holdout = HoldoutSpec.parse("\n".join(args.holdout or []))
    lines = [f"{k}={v}" for k, v in spec.manifest(seed=args.seed, replicates=args.replicates).items()]
    (out / "scenario.txt").write_text("\n".join(lines) + "\n")
    CellTable.from_mask(np.ones(pi0.shape, dtype=bool), pi0).write_csv(out / "pi0.csv", value_name="prob")
    outputs = [out / "scenario.txt", out / "pi0.csv"]
    if holdout.entries:
        (out / "holdout.txt").write_text(str(holdout) + "\n")
        outputs.append(out / "holdout.txt")
    for r in range(args.replicates):
        rep = out / f"rep{r + 1:03d}"
        rep.mkdir(exist_ok=True)
        net = sample_networks(pi0, spec.grid, replicate_rng(args.seed, r))[0]
        name = "network.csv" if args.format == "edge-csv" else "network"
        if holdout.entries:
            masked, truth = apply_holdout(net, holdout)
            write_network(masked, rep / name, args.format)
            write_network(net, rep / ("full.csv" if args.format == "edge-csv" else "full"), args.format)
            truth.write_csv(rep / "truth.csv")
            outputs += [rep / name, rep / "truth.csv"]
        else:
            write_network(net, rep / name, args.format)
            outputs.append(rep / name)
    man = _manifest(args, argv, outputs, started)
    man["artifacts"] = {str(p.relative_to(out)): sha256_file(p) for p in outputs if p.is_file()}
    _write_json(man, out / "manifest.json")
    print(f"wrote {args.replicates} replicate(s) to {out}")


# ---------------------------------------------------------------------- fit


def _fit_config(args) -> FitConfig:
    kmu = args.kappa_mu if args.kappa_mu is not None else args.kappa
    kxb = args.kappa_xbar if args.kappa_xbar is not None else args.kappa
    kx = args.kappa_x if args.kappa_x is not None else args.kappa
    H = args.H
    if H is None:
        H = 5 if args.variant == "joint" else 0
    R = args.R
    if R is None:
        R = 5 if args.variant == "joint" else 10
    return FitConfig(
        seed=args.seed, R=R, H=H, variant=args.variant, iterations=args.iters, burn_in=args.burnin,
        thin=args.thin, kappa_mu=kmu, kappa_xbar=kxb, kappa_x=kx, a1=args.a1, a2=args.a2, workers=args.workers,
    ).validate()


def cmd_fit(args, argv):
    started = time.perf_counter()
    cfg = _fit_config(args)
    net = load_network(args.data, args.format)
    chain = run_chain(net, cfg)
    man = _manifest(args, argv, [args.out], started, config=cfg.to_dict())
    write_chain(chain, args.out, man)
    print(f"{cfg.variant}: {chain.n_samples} draws written to {args.out}")


# ------------------------------------------------------------------ reports


def _chain(args):
    verify_chain(args.chain)
    return load_chain(args.chain, verify=False)


def cmd_predict(args, argv):
    chain = _chain(args)
    cells = CellTable.read_csv(args.cells)
    scores = predict_edges(chain, cells)
    labels = None
    if cells.value is not None and np.all(np.isin(cells.value, (0.0, 1.0))):
        labels = cells.value.astype(int)
    write_scores_csv(args.out, cells, scores, labels)
    print(f"scored {len(cells)} cells -> {args.out}")


def _read_groups(path, V):
    labels = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#") or line.lower().startswith("actor"):
            continue
        a, sep, lab = line.partition(",")
        if not sep:
            raise DataError("expected 'actor,label'", n)
        try:
            labels[int(a) - 1] = lab.strip()
        except ValueError:
            raise DataError(f"bad actor index {a!r}", n) from None
    missing = [v + 1 for v in range(V) if v not in labels]
    if missing:
        raise DataError(f"{path}: no label for actors {missing}")
    return labels


def cmd_summarize(args, argv):
    chain = _chain(args)
    if args.functional == "density":
        write_trajectory_csv(args.out, density_trajectory(chain, args.level))
    elif args.functional == "degree":
        actors = args.actor or [1]
        summaries = {f"actor{a}": degree_trajectory(chain, a - 1, args.level) for a in actors}
        if len(summaries) == 1:
            write_trajectory_csv(args.out, next(iter(summaries.values())))
        else:
            write_trajectory_csv(args.out, summaries)
    else:
        if not args.groups:
            raise ConfigError("--functional groups needs --groups FILE")
        res = group_contact_trajectory(chain, _read_groups(args.groups, chain.n_actors))
        with open(args.out, "w") as fh:
            fh.write("group_a,group_b,layer,time,mean\n")
            for (la, lb), arr in res.items():
                for k in range(arr.shape[0]):
                    for i in range(arr.shape[1]):
                        fh.write(f"{la},{lb},{k + 1},{i + 1},{_f(arr[k, i])}\n")
    print(f"{args.functional} summary -> {args.out}")


def cmd_diagnose(args, argv):
    chain = _chain(args)
    S, K, n, C = chain.pi.shape
    values, flags = ess_many(chain.pi.reshape(S, -1))
    vv, uu = np.tril_indices(chain.n_actors, -1)
    with open(args.out, "w") as fh:
        fh.write("layer,time,u,v,ess,flagged\n")
        for j in range(values.size):
            k, rem = divmod(j, n * C)
            i, c = divmod(rem, C)
            fh.write(f"{k + 1},{i + 1},{uu[c] + 1},{vv[c] + 1},{_f(values[j])},{int(flags[j])}\n")
    med = float(np.median(values))
    print(f"median ESS {med:.1f} of {S} retained draws ({100 * med / S:.1f}%) -> {args.out}")


def cmd_evaluate(args, argv):
    chain = _chain(args)
    if not args.truth or not Path(args.truth).is_file():
        raise DataError(f"truth file not found: {args.truth}")
    truth = CellTable.read_csv(args.truth)
    scores = predict_edges(chain, truth)
    labels = truth.value.astype(int)
    metrics = [("cells", len(truth))]
    if 0 < labels.sum() < labels.size:
        metrics.append(("auc.all", auc(scores, labels)))
    for (k, i), val in auc_by_slice(truth, scores, labels).items():
        metrics.append((f"auc.layer{k + 1}.t{i + 1}", val))
    if args.pi0:
        pi0_cells = CellTable.read_csv(args.pi0)
        pi0 = np.empty(chain.pi.shape[1:])
        pi0[pi0_cells.layer, pi0_cells.time, pi0_cells.flat] = pi0_cells.value
        b2, var, tot = concentration_metrics(chain, pi0)
        metrics += [("squared_bias", b2), ("variance", var), ("total", tot)]
        if args.fresh_networks:
            if args.seed is None:
                raise ConfigError("--fresh-networks needs --seed")
            mean = chain.pi.mean(axis=0)
            for j, (k, i) in enumerate(sorted(set(zip(truth.layer.tolist(), truth.time.tolist())))):
                rng = replicate_rng(args.seed, j)
                val = fresh_network_auc(mean[k, i], pi0[k, i], rng, args.fresh_networks)
                metrics.append((f"auc_fresh.layer{k + 1}.t{i + 1}", val))
    write_metrics_csv(args.out, metrics)
    for name, val in metrics:
        print(f"{name},{val}")


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dynmln", description="Dynamic multilayer latent space network models.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate the synthetic household scenario")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--default", action="store_true", help="default scenario (the only one built in)")
    s.add_argument("--replicates", type=int, default=1)
    s.add_argument("--holdout", action="append", help="selector, e.g. 'layer=2 times=13..17'")
    s.add_argument("--holdout-file")
    s.add_argument("--format", choices=("edge-csv", "dense-csv"), default="edge-csv")
    s.add_argument("--no-kink", action="store_true", help="plain interpolation at t4 and t6")
    lv = ScenarioLevels()
    for name in ("within", "between", "women_meal", "afternoon_young_women", "sick_up", "sick_down"):
        s.add_argument("--" + name.replace("_", "-"), dest=name, type=float, default=getattr(lv, name))
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="run the Gibbs sampler and persist the chain")
    f.add_argument("--data", required=True)
    f.add_argument("--format", choices=("edge-csv", "dense-csv"), default="edge-csv")
    f.add_argument("--out", required=True)
    f.add_argument("--seed", type=int, required=True)
    f.add_argument("--variant", choices=("joint", "collapsed", "separate"), default="joint")
    f.add_argument("--R", type=int)
    f.add_argument("--H", type=int)
    f.add_argument("--iters", type=int, default=5000)
    f.add_argument("--burnin", type=int, default=1000)
    f.add_argument("--thin", type=int, default=1)
    f.add_argument("--kappa", type=float, default=0.05, help="common smoothness for all three processes")
    f.add_argument("--kappa-mu", type=float)
    f.add_argument("--kappa-xbar", type=float)
    f.add_argument("--kappa-x", type=float)
    f.add_argument("--a1", type=float, default=2.0)
    f.add_argument("--a2", type=float, default=2.5)
    f.add_argument("--workers", type=int, default=1, help="threads for the per-layer update")
    f.set_defaults(func=cmd_fit)

    pr = sub.add_parser("predict", help="posterior predictive edge means for listed cells")
    pr.add_argument("--chain", required=True)
    pr.add_argument("--cells", required=True, help="cell CSV (layer,time_index,u,v,value)")
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_predict)

    sm = sub.add_parser("summarize", help="trajectory summaries of network functionals")
    sm.add_argument("--chain", required=True)
    sm.add_argument("--functional", choices=("density", "degree", "groups"), default="density")
    sm.add_argument("--actor", type=int, action="append", help="1-based actor for --functional degree")
    sm.add_argument("--groups", help="CSV actor,label for --functional groups")
    sm.add_argument("--level", type=float, default=0.95)
    sm.add_argument("--out", required=True)
    sm.set_defaults(func=cmd_summarize)

    dg = sub.add_parser("diagnose", help="effective sample size of every edge probability")
    dg.add_argument("--chain", required=True)
    dg.add_argument("--out", required=True)
    dg.set_defaults(func=cmd_diagnose)

    ev = sub.add_parser("evaluate", help="AUC on held-out cells and concentration metrics")
    ev.add_argument("--chain", required=True)
    ev.add_argument("--truth", required=True)
    ev.add_argument("--pi0", help="true edge probabilities (layer,time_index,u,v,prob)")
    ev.add_argument("--fresh-networks", type=int, default=0,
                    help="also average AUC over this many networks drawn from --pi0 per held-out slice")
    ev.add_argument("--seed", type=int)
    ev.add_argument("--out", required=True)
    ev.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            args.func(args, argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
