"""Command-line interface: ``projann <command> [options]``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time

import numpy as np

from . import datasets, experiments
from .datasets import GaussianSpec, PlantedSpec
from .embedding import heuristic_dimension, sample_projection
from .index import AnnConfig, build_index
from .verify import run_checks

log = logging.getLogger("projann")


def _grid(text):
    return [int(float(v)) for v in text.split(",") if v.strip()]


def _pair(text):
    lo, hi = (float(v) for v in text.split(","))
    return lo, hi


def _dataset_paths(prefix):
    return f"{prefix}.X.ldnn", f"{prefix}.Q.ldnn", f"{prefix}.planted.csv"


def cmd_gen(args):
    x_path, q_path, side_path = _dataset_paths(args.out)
    if args.family == "planted":
        spec = PlantedSpec(n=args.n, d=args.d, n_queries=args.queries, R=args.R,
                           epsilon=args.eps, coord_range=args.range, seed=args.seed)
        X, Q, planted = datasets.gen_planted(spec, validate=args.validate)
        datasets.write_planted_sidecar(side_path, X, Q, planted)
    else:
        spec = GaussianSpec(n_per_query=args.per_query, d=args.d, n_queries=args.queries,
                            var_range=args.var_range, coord_range=args.range, seed=args.seed)
        X, Q = datasets.gen_gaussian(spec)
    datasets.write_dataset(x_path, X)
    datasets.write_dataset(q_path, Q)
    print(f"wrote {x_path} ({X.shape[0]}x{X.shape[1]}) and {q_path} ({Q.shape[0]} queries)")
    return 0


def _config(args):
    return AnnConfig(
        epsilon=args.eps, delta=args.delta, k_rule=args.k_rule, k=args.k,
        dprime_rule=args.dprime_rule, d_prime=args.dprime,
        expansion_c=args.expansion_c, expansion_rho=args.expansion_rho,
        projection_mode=args.mode, seed=args.seed, tree_epsilon=args.tree_eps,
    )


def cmd_build(args):
    X = datasets.read_dataset(args.data)
    t0 = time.perf_counter()
    index = build_index(X, _config(args))
    elapsed = time.perf_counter() - t0
    print(f"n={index.n} d={X.shape[1]} d'={index.d_prime} k={index.k} "
          f"depth={index.tree.depth()} leaves={len(index.tree.leaves())} "
          f"clamped={index.clamped} build_s={elapsed:.3f}")
    return 0


def cmd_query(args):
    X = datasets.read_dataset(args.data)
    Q = datasets.read_dataset(args.queries)
    index = build_index(X, _config(args))
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["query_idx", "point_idx", "distance"])
        for j, q in enumerate(Q):
            ans = index.query(q, early_stop_radius=args.early_stop)
            w.writerow([j, ans.index, repr(ans.dist)])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _emit(records, path):
    if path:
        experiments.write_records(path, records)
        print(f"wrote {len(records)} records to {path}")


def cmd_exp_k(args):
    if args.data:
        X = datasets.read_dataset(args.data)
        Q = datasets.read_dataset(args.queries)
        dp = min(X.shape[1], args.dprime or heuristic_dimension(X.shape[0]))
        ks = []
        for rep in range(args.proj_reps):
            pmap = sample_projection(X.shape[1], dp, "gaussian", args.seed * 1000 + rep)
            if args.family == "planted":
                if not args.planted:
                    raise ValueError("planted variant needs --planted sidecar")
                ks += experiments.planted_ks(X, Q, datasets.read_planted_sidecar(args.planted), pmap)
            else:
                ks += experiments.gaussian_ks(X, Q, pmap, args.eps)
        k_avg = float(np.mean(ks))
        rec = experiments.ExperimentRecord(f"exp-k-{args.family}", X.shape[0], X.shape[1], dp,
                                           int(np.ceil(k_avg)), args.eps, args.delta, args.seed,
                                           "k_avg", k_avg)
        print(f"n={X.shape[0]} d'={dp} k_avg={k_avg:.3f}")
        _emit([rec], args.out)
        return 0
    records, averages = experiments.run_exp_k(
        family=args.family, n_grid=args.n_grid, d=args.d, epsilon=args.eps,
        n_queries=args.queries_count, R=args.R, seed=args.seed, d_prime=args.dprime,
        proj_reps=args.proj_reps, delta=args.delta,
    )
    for n, k_avg in averages:
        print(f"n={n} k_avg={k_avg:.3f}")
    fit_range = args.fit_range or experiments.upper_half([n for n, _ in averages])
    coef, expo = experiments.fit_power_law(averages, fit_range)
    print(f"fit over n in [{fit_range[0]:g}, {fit_range[1]:g}]: k ~ {coef:.4g} * n^{expo:.4f}")
    _emit(records, args.out)
    return 0


def cmd_exp_time(args):
    if args.data:
        X = datasets.read_dataset(args.data)
        Q = datasets.read_dataset(args.queries)
        planted = datasets.read_planted_sidecar(args.planted) if args.planted else None
        records, acc = experiments.exp_time_dataset(
            X, Q, planted, args.eps, args.R, args.seed, args.delta, args.k, args.dprime,
            args.reps, args.threshold)
        accuracies = [acc]
    else:
        records, accuracies = experiments.run_exp_time(
            n_grid=args.n_grid, d=args.d, epsilon=args.eps, n_queries=args.queries_count,
            R=args.R, seed=args.seed, delta=args.delta, k=args.k, d_prime=args.dprime,
            reps=args.reps, threshold=args.threshold)
    for rec in records:
        print(f"n={rec.n} {rec.metric_name}={rec.metric_value:.6g}")
    _emit(records, args.out)
    failed = [a for a in accuracies if a < args.threshold]
    if failed:
        print(f"FAIL: accuracy below {args.threshold} on {len(failed)} dataset(s)", file=sys.stderr)
        return 1
    return 0


def cmd_verify(args):
    results = run_checks(quick=args.quick, fault=args.inject_fault, seed=args.seed)
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'} {r.name:<22} {r.seconds:7.2f}s  {r.detail}")
    return 0 if all(r.ok for r in results) else 1


def cmd_fit(args):
    records = [r for r in experiments.read_records(args.csv) if r.metric_name == args.metric]
    pts = [(r.n, r.metric_value) for r in records]
    fit_range = args.fit_range or experiments.upper_half(sorted({n for n, _ in pts}))
    coef, expo = experiments.fit_power_law(pts, fit_range)
    print(f"coefficient={coef:.6g} exponent={expo:.6f}")
    return 0


def _add_index_flags(p):
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--k-rule", choices=["explicit", "n_pow_rho", "sqrt_n", "ln_n"], default="sqrt_n")
    p.add_argument("--k", type=int)
    p.add_argument("--dprime-rule", choices=["theorem1", "heuristic_logn", "expansion", "explicit"],
                   default="heuristic_logn")
    p.add_argument("--dprime", type=int)
    p.add_argument("--expansion-c", type=float)
    p.add_argument("--expansion-rho", type=int)
    p.add_argument("--mode", choices=["gaussian", "orthonormal"], default="gaussian")
    p.add_argument("--tree-eps", type=float, help="tree search epsilon (defaults to --eps)")
    p.add_argument("--seed", type=int, default=0)


def make_parser():
    parser = argparse.ArgumentParser(prog="projann", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("family", choices=["planted", "gaussian"])
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--d", type=int, default=200)
    p.add_argument("--queries", type=int, default=100)
    p.add_argument("--R", type=float, default=2.0)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--per-query", type=int, default=100)
    p.add_argument("--var-range", type=_pair, default=(15.0, 25.0))
    p.add_argument("--range", type=_pair, default=(-20.0, 20.0))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--validate", action="store_true", help="full scan of the planted property")
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("build", help="build an index and print its shape")
    p.add_argument("--data", required=True)
    _add_index_flags(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="answer queries from a query file")
    p.add_argument("--data", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--early-stop", type=float)
    p.add_argument("--out")
    _add_index_flags(p)
    p.set_defaults(func=cmd_query)

    for name, func in (("exp-k", cmd_exp_k), ("exp-time", cmd_exp_time)):
        p = sub.add_parser(name)
        p.add_argument("--data", help="dataset file (otherwise datasets are generated)")
        p.add_argument("--queries", help="query file for --data")
        p.add_argument("--planted", help="planted sidecar CSV for --data")
        p.add_argument("--n-grid", type=_grid,
                       default=list(experiments.DEFAULT_N_GRID) if name == "exp-k" else [10_000])
        p.add_argument("--d", type=int, default=200)
        p.add_argument("--eps", type=float, default=0.5)
        p.add_argument("--delta", type=float, default=0.1)
        p.add_argument("--R", type=float, default=2.0)
        p.add_argument("--queries-count", type=int, default=100)
        p.add_argument("--dprime", type=int)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        if name == "exp-k":
            p.add_argument("--family", choices=["planted", "gaussian"], default="planted")
            p.add_argument("--proj-reps", type=int, default=1)
            p.add_argument("--fit-range", type=_pair)
        else:
            p.add_argument("--k", type=int, help="candidate count (default ceil(sqrt(n)))")
            p.add_argument("--reps", type=int, default=3)
            p.add_argument("--threshold", type=float, default=0.90)
        p.set_defaults(func=func)

    p = sub.add_parser("verify", help="run the invariant suites")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fit", help="power-law fit of a metric from an experiment CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--metric", default="k_avg")
    p.add_argument("--fit-range", type=_pair)
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (datasets.InfeasibleSpecError, datasets.DatasetFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
