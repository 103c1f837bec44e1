import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from projann.kann_tree import (
    DEPTH_CONSTANT,
    LEAF,
    SHRINK,
    KannTree,
    build_tree,
    point_distances,
    range_search,
    search_kann,
)
from projann.oracle import brute_knn
from projann.verify import unvisited_violations


def uniform(n, dim, seed=0):
    return np.random.default_rng(seed).uniform(0.0, 1.0, size=(n, dim))


def clustered(n, dim, seed=0):
    # dense blob plus sparse background forces shrink nodes
    rng = np.random.default_rng(seed)
    blob = 0.5 + 1e-4 * rng.standard_normal((n - n // 10, dim))
    return np.vstack([blob, rng.uniform(0, 1, size=(n // 10, dim))])


def test_single_point():
    tree = build_tree(np.array([[1.0, 2.0]]))
    assert tree.root.kind == LEAF
    assert tree.root.indices.tolist() == [0]
    assert search_kann(tree, np.array([0.0, 0.0]), 1)[0].index == 0


def test_empty_rejected():
    with pytest.raises(ValueError):
        KannTree(np.empty((0, 3)))


def test_buckets_partition_points():
    tree = build_tree(uniform(1000, 5), bucket_size=8)
    leaves = tree.leaves()
    assert all(len(leaf.indices) <= 8 for leaf in leaves)
    got = np.sort(np.concatenate([leaf.indices for leaf in leaves]))
    assert got.tolist() == list(range(1000))


def test_identical_points_single_leaf():
    tree = build_tree(np.ones((500, 3)), bucket_size=4)
    assert tree.root.kind == LEAF and len(tree.root.indices) == 500
    res = tree.search(np.zeros(3), 7)
    assert [r.index for r in res] == list(range(7))


@pytest.mark.parametrize("make", [uniform, clustered])
def test_cells_contain_their_points(make):
    tree = KannTree(make(3000, 4, seed=2))
    for node in tree.leaves():
        pts = tree.points[node.indices]
        assert np.all(pts >= node.lo) and np.all(pts <= node.hi)


def test_clustered_input_uses_shrink():
    tree = KannTree(clustered(4000, 3, seed=1))
    assert any(node.kind == SHRINK for node in tree.nodes)


@pytest.mark.parametrize("make", [uniform, clustered])
@pytest.mark.parametrize("n", [100, 2000, 20000])
def test_depth_is_logarithmic(make, n):
    tree = KannTree(make(n, 3, seed=n))
    assert tree.depth() <= DEPTH_CONSTANT * math.log2(n) + 1


def test_depth_on_geometric_sequence():
    # points at 2^-i along a line defeat plain midpoint splitting
    pts = np.array([[2.0**-i, 0.0] for i in range(60)] + [[1.0, 1.0]])
    tree = KannTree(pts, bucket_size=1)
    assert tree.depth() <= DEPTH_CONSTANT * math.log2(len(pts)) + 1


def test_exact_point_query():
    X = uniform(500, 3, seed=5)
    tree = KannTree(X)
    for i in (0, 17, 499):
        res = tree.search(X[i], 1, epsilon=0.9)
        assert res[0].index == i and res[0].dist == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_exact_mode_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    dim = [2, 3, 5, 8, 16][seed % 5]
    X = rng.standard_normal((1500, dim))
    q = rng.standard_normal(dim)
    k = [1, 7, 50][seed % 3]
    got = KannTree(X).search(q, k, 0.0)
    want = brute_knn(X, q, k)
    assert [(g.index, g.dist) for g in got] == [(w.index, w.dist) for w in want]


def test_exact_mode_ties_broken_by_index():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [5.0, 5.0]] * 4)
    got = KannTree(X, bucket_size=2).search(np.zeros(2), 6)
    assert [g.index for g in got] == [0, 1, 2, 3, 5, 6]


def test_approximate_guarantee_against_oracle():
    rng = np.random.default_rng(9)
    X = rng.uniform(size=(2000, 5))
    tree = KannTree(X)
    for _ in range(30):
        q = rng.uniform(size=5)
        got = tree.search(q, 10, 0.5)
        want = brute_knn(X, q, 10)
        for g, w in zip(got, want):
            assert g.dist <= 1.5 * w.dist + 1e-12


def test_results_sorted_and_recomputable():
    X = uniform(1000, 4, seed=3)
    q = np.full(4, 0.3)
    res = KannTree(X).search(q, 25, 0.3)
    dists = [r.dist for r in res]
    assert dists == sorted(dists)
    assert len({r.index for r in res}) == 25
    for r in res:
        assert r.dist == point_distances(X[r.index:r.index + 1], q)[0]


@pytest.mark.parametrize("eps", [0.0, 0.5, 2.0])
def test_unvisited_points_are_far(eps):
    X = uniform(2000, 5, seed=4)
    tree = KannTree(X)
    rng = np.random.default_rng(1)
    for _ in range(20):
        assert unvisited_violations(tree, rng.uniform(size=5), 10, eps) == 0


def test_fault_injection_breaks_audit():
    X = uniform(2000, 5, seed=4)
    tree = KannTree(X)
    rng = np.random.default_rng(1)
    total = sum(unvisited_violations(tree, rng.uniform(size=5), 10, 0.5, fault=True)
                for _ in range(20))
    assert total > 0


def test_visited_contains_results():
    X = uniform(800, 3, seed=8)
    visited = set()
    res = KannTree(X).search(np.full(3, 0.5), 12, 0.5, visited=visited)
    assert {r.index for r in res} <= visited


def test_search_validation():
    tree = KannTree(uniform(10, 2))
    with pytest.raises(ValueError):
        tree.search(np.zeros(2), 11)
    with pytest.raises(ValueError):
        tree.search(np.zeros(2), 0)
    with pytest.raises(ValueError):
        tree.search(np.zeros(3), 1)
    with pytest.raises(ValueError):
        tree.range_search(np.zeros(3), 1.0)


def test_range_zero_radius():
    X = uniform(300, 3, seed=6)
    tree = KannTree(X)
    assert tree.range_search(X[42], 0.0) == [42]


def test_range_everything():
    X = uniform(300, 3, seed=6)
    lo, hi = X.min(axis=0), X.max(axis=0)
    assert range_search(KannTree(X), X[0], 2 * np.linalg.norm(hi - lo)) == list(range(300))


def test_range_matches_linear_scan():
    rng = np.random.default_rng(12)
    X = rng.standard_normal((2000, 4))
    tree = KannTree(X)
    sample = X[rng.choice(2000, 200, replace=False)]
    diffs = sample[:, None, :] - sample[None, :, :]
    median = float(np.median(np.sqrt((diffs**2).sum(-1))))
    for _ in range(10):
        q = rng.standard_normal(4)
        want = np.flatnonzero(point_distances(X, q) <= median).tolist()
        assert tree.range_search(q, median) == want


@given(st.integers(1, 300), st.integers(1, 6), st.integers(0, 2**32 - 1),
       st.integers(1, 10), st.sampled_from([0.0, 0.25, 1.0]))
@settings(max_examples=60, deadline=None)
def test_property_search_contract(n, dim, seed, k, eps):
    rng = np.random.default_rng(seed)
    # coarse grid so duplicates and ties appear
    X = rng.integers(0, 4, size=(n, dim)).astype(float)
    q = rng.uniform(-1, 5, size=dim)
    k = min(k, n)
    tree = KannTree(X, bucket_size=int(rng.integers(1, 9)))
    got = tree.search(q, k, eps)
    want = brute_knn(X, q, k)
    assert len(got) == k
    if eps == 0.0:
        assert [(g.index, g.dist) for g in got] == [(w.index, w.dist) for w in want]
    for g, w in zip(got, want):
        assert g.dist <= (1 + eps) * w.dist + 1e-12
    assert unvisited_violations(tree, q, k, eps) == 0
    r = float(rng.uniform(0, 3))
    assert tree.range_search(q, r) == np.flatnonzero(point_distances(X, q) <= r).tolist()
