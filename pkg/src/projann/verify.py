"""Invariant checks run by ``projann verify``."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .datasets import PlantedSpec, gen_planted, verify_planted
from .embedding import (
    DimensionParams,
    lemma_gap_i,
    lemma_gap_x,
    make_rng,
    sample_projection,
    tail_bound,
    target_dimension,
)
from .kann_tree import KannTree, point_distances
from .oracle import bad_candidate_count, brute_knn


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str
    seconds: float = 0.0


def check_scale_gap_grid() -> tuple[bool, str]:
    worst = min(
        (lemma_gap_i(i, j / 100), i, j / 100) for i in range(61) for j in range(1, 100)
    )
    return worst[0] > 0, f"min gap {worst[0]:.3e} at i={worst[1]}, eps={worst[2]}"


def check_ratio_gap_grid() -> tuple[bool, str]:
    xs = np.logspace(-6, 6, 1000)
    gaps = np.array([lemma_gap_x(float(x)) for x in xs])
    j = int(np.argmin(gaps))
    return bool(np.all(gaps > 0)), f"min gap {gaps[j]:.3e} at x={xs[j]:.3e}"


def tail_frequencies(n_vectors=100_000, d=100, d_prime=20, betas=(0.5, 1.5), seed=0):
    """Empirical tail frequencies of ``||A^T p||^2`` against ``beta^2 d'/d``.

    Each trial uses a freshly sampled gaussian map (normalized so that
    ``E||A^T p||^2 = d'/d``) and a random unit vector ``p``.
    """
    rng = make_rng(seed)
    counts = dict.fromkeys(betas, 0)
    for t in range(n_vectors):
        A = sample_projection(d, d_prime, "gaussian", seed + 1 + t).normalized
        p = rng.standard_normal(d)
        p /= np.linalg.norm(p)
        v = p @ A
        sq = float(v @ v)
        for beta in betas:
            edge = beta * beta * d_prime / d
            if (beta < 1 and sq <= edge) or (beta > 1 and sq >= edge):
                counts[beta] += 1
    return {beta: counts[beta] / n_vectors for beta in betas}


def check_tail_frequencies(n_vectors=100_000, seed=0) -> tuple[bool, str]:
    freq = tail_frequencies(n_vectors, seed=seed)
    parts, ok = [], True
    for beta, f in freq.items():
        bound = tail_bound(beta, 20)
        ok &= f <= 2 * bound
        parts.append(f"beta={beta}: freq {f:.2e} vs 2*bound {2 * bound:.2e}")
    return ok, "; ".join(parts)


def random_instance(seed, n, dim):
    rng = make_rng(seed)
    return rng.uniform(-1.0, 1.0, size=(n, dim)), rng.uniform(-1.2, 1.2, size=dim)


def check_tree_oracle(instances=100, n=2000, seed=0) -> tuple[bool, str]:
    dims, ks = (2, 5, 16), (1, 10, 50)
    for t in range(instances):
        s = seed + t
        dim, k = dims[t % 3], ks[(t // 3) % 3]
        X, q = random_instance(s, n, dim)
        got = KannTree(X).search(q, k, 0.0)
        want = brute_knn(X, q, k)
        if [(a.index, a.dist) for a in got] != [(b.index, b.dist) for b in want]:
            return False, f"mismatch on instance seed={s} (d'={dim}, k={k})"
    return True, f"{instances} instances exact"


def unvisited_violations(tree: KannTree, q, k, epsilon, fault=False) -> int:
    visited: set[int] = set()
    res = tree.search(q, k, epsilon, visited=visited, _fault=fault)
    r_k = res[-1].dist
    unvisited = np.setdiff1d(np.arange(tree.n), np.fromiter(visited, dtype=np.int64))
    if len(unvisited) == 0:
        return 0
    dist = point_distances(tree.points[unvisited], np.asarray(q, dtype=np.float64))
    return int(np.count_nonzero(dist <= r_k / (1.0 + epsilon)))


def check_unvisited(queries=50, n=2000, dim=5, k=10, epsilon=0.5, seed=0, fault=False):
    X, _ = random_instance(seed, n, dim)
    tree = KannTree(X)
    rng = make_rng(seed + 7)
    total = 0
    for _ in range(queries):
        total += unvisited_violations(tree, rng.uniform(-1.2, 1.2, size=dim), k, epsilon, fault)
    return total == 0, f"{total} violations over {queries} queries"


def check_planted(n=10_000, d=200, seed=1) -> tuple[bool, str]:
    spec = PlantedSpec(n=n, d=d, n_queries=100, R=2.0, epsilon=0.5, seed=seed)
    X, Q, planted = gen_planted(spec)
    try:
        verify_planted(X, Q, planted, spec.R, spec.epsilon)
    except AssertionError as exc:
        return False, f"seed={seed}: {exc}"
    return True, f"n={n}, d={d}: planted property holds"


def check_bad_candidates(trials=200, n=2000, d=500, k=100, delta=0.1, epsilon=0.5, seed=0):
    """Fraction of projections with at least ``k`` bad candidates stays below delta."""
    c = 1.0 + epsilon
    d_prime = min(d, target_dimension(DimensionParams(n, k, epsilon, delta, c)))
    X, Q, planted = gen_planted(PlantedSpec(n=n, d=d, n_queries=100, epsilon=epsilon, seed=seed))
    failures = 0
    for t in range(trials):
        qi, pi = planted[t % len(planted)]
        pmap = sample_projection(d, d_prime, "gaussian", seed + 1 + t)
        failures += bad_candidate_count(X, Q[qi], X[pi], pmap, epsilon, c) >= k
    rate = failures / trials
    return rate <= delta, f"d'={d_prime}: Pr[N>=k] ~ {rate:.3f} (delta={delta})"


def run_checks(quick=False, fault=False, seed=0) -> list[CheckResult]:
    plan = [
        ("scale-gap-grid", check_scale_gap_grid),
        ("ratio-gap-grid", check_ratio_gap_grid),
        ("norm-tail", lambda: check_tail_frequencies(10_000 if quick else 100_000, seed)),
        ("tree-vs-oracle", lambda: check_tree_oracle(12 if quick else 100, seed=seed)),
        ("unvisited-audit", lambda: check_unvisited(10 if quick else 50, seed=seed, fault=fault)),
        ("planted-property", lambda: check_planted(2000 if quick else 10_000, seed=seed + 1)),
        ("bad-candidates", lambda: check_bad_candidates(20 if quick else 200, seed=seed)),
    ]
    results = []
    for name, fn in plan:
        t0 = time.perf_counter()
        ok, detail = fn()
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return results
