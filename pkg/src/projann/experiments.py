"""Experiment drivers behind the ``exp-k`` and ``exp-time`` commands.

Both write :class:`ExperimentRecord` rows; every random choice is derived
from ``base_seed + grid index`` so reruns reproduce all non-timing columns.
"""
from __future__ import annotations

import csv
import math
import statistics
import time
from dataclasses import asdict, dataclass

import numpy as np

from .datasets import GaussianSpec, PlantedSpec, gen_gaussian, gen_planted
from .embedding import heuristic_dimension, project, sample_projection
from .index import AnnConfig, build_index
from .kann_tree import point_distances
from .oracle import eps_nn_set, rank

CSV_HEADER = ["experiment", "n", "d", "d_prime", "k", "epsilon", "delta", "seed",
              "metric_name", "metric_value"]
DEFAULT_N_GRID = (2000, 4000, 6000, 8000, 10000, 15000, 20000)
# planted neighbors sit at distance R only up to rounding
RADIUS_SLACK = 1e-9


@dataclass(frozen=True)
class ExperimentRecord:
    experiment: str
    n: int
    d: int
    d_prime: int
    k: int
    epsilon: float
    delta: float
    seed: int
    metric_name: str
    metric_value: float

    def __post_init__(self):
        if not math.isfinite(self.metric_value):
            raise ValueError(f"non-finite metric {self.metric_name}={self.metric_value}")


def write_records(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for rec in records:
            row = asdict(rec)
            w.writerow([repr(v) if isinstance(v, float) else v for v in (row[h] for h in CSV_HEADER)])


def read_records(path) -> list[ExperimentRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        out = []
        for row in reader:
            out.append(ExperimentRecord(
                experiment=row["experiment"], n=int(row["n"]), d=int(row["d"]),
                d_prime=int(row["d_prime"]), k=int(row["k"]), epsilon=float(row["epsilon"]),
                delta=float(row["delta"]), seed=int(row["seed"]),
                metric_name=row["metric_name"], metric_value=float(row["metric_value"]),
            ))
        return out


def fit_power_law(points, fit_range=None) -> tuple[float, float]:
    """Least-squares fit of ``k = a * n**b`` on log-log axes.

    Parameters
    ----------
    points : iterable of (n, k) pairs, all positive
    fit_range : (lo, hi), optional
        Only pairs with ``lo <= n <= hi`` are used.

    Returns
    -------
    (a, b) : coefficient and exponent
    """
    pts = [(float(n), float(k)) for n, k in points]
    if fit_range is not None:
        lo, hi = fit_range
        pts = [(n, k) for n, k in pts if lo <= n <= hi]
    if len(pts) < 2:
        raise ValueError(f"need at least 2 points in the fit range, got {len(pts)}")
    if any(n <= 0 or k <= 0 for n, k in pts):
        raise ValueError("power-law fit needs positive values")
    x = np.log([n for n, _ in pts])
    y = np.log([k for _, k in pts])
    if np.ptp(x) == 0:
        raise ValueError("need at least two distinct n values")
    slope, intercept = np.polyfit(x, y, 1)
    return float(math.exp(intercept)), float(slope)


def upper_half(grid) -> tuple[float, float]:
    g = sorted(grid)
    return g[len(g) // 2], g[-1]


def planted_ks(X, Q, planted, pmap) -> list[int]:
    """Rank of each planted neighbor among the projected data, per query."""
    fX = project(pmap, X)
    fQ = project(pmap, Q)
    return [rank(fX, fQ[qi], fX[pi]) for qi, pi in planted]


def gaussian_ks(X, Q, pmap, epsilon: float) -> list[int]:
    """For each query, the rank of its best-projected epsilon-approximate neighbor."""
    fX = project(pmap, X)
    fQ = project(pmap, Q)
    ks = []
    for j in range(Q.shape[0]):
        S = np.asarray(eps_nn_set(X, Q[j], epsilon))
        best = S[int(np.argmin(point_distances(fX[S], fQ[j])))]
        ks.append(rank(fX, fQ[j], fX[best]))
    return ks


def run_exp_k(family="planted", n_grid=DEFAULT_N_GRID, d=200, epsilon=0.5, n_queries=100,
              R=2.0, seed=0, d_prime=None, proj_reps=1, per_query=True, delta=0.1):
    """Measure the k needed to retrieve an approximate neighbor, over a grid of n.

    Returns ``(records, averages)`` where ``averages`` lists ``(n, k_avg)``.
    """
    if family not in ("planted", "gaussian"):
        raise ValueError(f"unknown dataset family {family!r}")
    records, averages = [], []
    exp_id = f"exp-k-{family}"
    for g, n in enumerate(n_grid):
        cell_seed = seed + g
        if family == "planted":
            X, Q, planted = gen_planted(PlantedSpec(n=n, d=d, n_queries=n_queries, R=R,
                                                    epsilon=epsilon, seed=cell_seed))
        else:
            X, Q = gen_gaussian(GaussianSpec(n_per_query=max(1, n // n_queries), d=d,
                                             n_queries=n_queries, seed=cell_seed))
        dp = min(d, d_prime or heuristic_dimension(X.shape[0]))
        all_ks = []
        for rep in range(proj_reps):
            pmap = sample_projection(d, dp, "gaussian", cell_seed * 1000 + rep)
            ks = planted_ks(X, Q, planted, pmap) if family == "planted" else gaussian_ks(X, Q, pmap, epsilon)
            all_ks.extend(ks)
            if per_query:
                for qi, k in enumerate(ks):
                    records.append(ExperimentRecord(exp_id, X.shape[0], d, dp, k, epsilon, delta,
                                                    cell_seed, f"k_q{qi}", float(k)))
        k_avg = float(np.mean(all_ks))
        averages.append((X.shape[0], k_avg))
        records.append(ExperimentRecord(exp_id, X.shape[0], d, dp, math.ceil(k_avg), epsilon,
                                        delta, cell_seed, "k_avg", k_avg))
    return records, averages


def _median_time(fn, reps=3) -> float:
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def exp_time_dataset(X, Q, planted, epsilon=0.5, R=2.0, seed=0, delta=0.1, k=None,
                     d_prime=None, reps=3, threshold=0.90):
    """Query-time and accuracy comparison of the index against a linear scan.

    Returns ``(records, accuracy)``.  Accuracy is the fraction of queries
    answered with a point within ``R`` (relative slack ``RADIUS_SLACK``).
    """
    radius = R * (1.0 + RADIUS_SLACK)
    n, d = X.shape
    config = AnnConfig(
        epsilon=epsilon, delta=delta,
        k_rule="sqrt_n" if k is None else "explicit", k=k,
        dprime_rule="heuristic_logn" if d_prime is None else "explicit", d_prime=d_prime,
        seed=seed,
    )
    index = build_index(X, config)
    queries = [Q[qi] for qi, _ in planted] if planted else list(Q)
    answers = [index.query(q, early_stop_radius=radius) for q in queries]
    accuracy = sum(a.dist <= radius for a in answers) / len(answers)

    def run_index():
        for q in queries:
            index.query(q, early_stop_radius=radius)

    def run_brute():
        for q in queries:
            int(np.argmin(point_distances(X, q)))

    t_index = _median_time(run_index, reps) / len(queries)
    t_brute = _median_time(run_brute, reps) / len(queries)
    base = dict(experiment="exp-time", n=n, d=d, d_prime=index.d_prime, k=index.k,
                epsilon=epsilon, delta=delta, seed=seed)
    records = [
        ExperimentRecord(**base, metric_name="accuracy", metric_value=float(accuracy)),
        ExperimentRecord(**base, metric_name="accuracy_ok", metric_value=float(accuracy >= threshold)),
        ExperimentRecord(**base, metric_name="query_time_index_s", metric_value=t_index),
        ExperimentRecord(**base, metric_name="query_time_brute_s", metric_value=t_brute),
    ]
    return records, accuracy


def run_exp_time(n_grid=(10000,), d=200, epsilon=0.5, n_queries=100, R=2.0, seed=0,
                 delta=0.1, k=None, d_prime=None, reps=3, threshold=0.90):
    records, accuracies = [], []
    for g, n in enumerate(n_grid):
        X, Q, planted = gen_planted(PlantedSpec(n=n, d=d, n_queries=n_queries, R=R,
                                                epsilon=epsilon, seed=seed + g))
        recs, acc = exp_time_dataset(X, Q, planted, epsilon, R, seed + g, delta, k, d_prime,
                                     reps, threshold)
        records.extend(recs)
        accuracies.append(acc)
    return records, accuracies
