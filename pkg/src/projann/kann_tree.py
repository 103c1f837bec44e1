"""Box-decomposition tree with priority search for approximate k-NN.

Cells are axis-aligned boxes.  A cell is cut at the midpoint of its
longest side; when more than 3/4 of its points would land on one side the
cut is replaced by a *shrink*: an inner box obtained by repeated midpoint
cuts around the dense cluster, with the remaining points kept in an
"outside" child.  Every two levels therefore shrink the point count by at
least 3/4, which bounds the depth by ``2 log_{4/3} n + 1``, that is
``DEPTH_CONSTANT * log2(n) + 1``.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

SPLIT, SHRINK, LEAF = 0, 1, 2
DEPTH_CONSTANT = 2.0 / math.log2(4.0 / 3.0)  # ~4.82
_DENSE = 0.75


@dataclass(frozen=True)
class Neighbor:
    index: int
    dist: float


def point_distances(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Euclidean distances from ``q`` to each row of ``points``.

    Every exact comparison in the package goes through this function so that
    tree and brute-force results agree bit for bit.
    """
    diff = points - q
    return np.sqrt((diff * diff).sum(axis=1))


def _box_distance(lo, hi, q) -> float:
    gap = np.maximum(lo - q, 0.0) + np.maximum(q - hi, 0.0)
    return math.sqrt(float((gap * gap).sum()))


class _Node:
    __slots__ = ("kind", "lo", "hi", "order", "axis", "threshold", "children", "indices")

    def __init__(self, kind, lo, hi, order):
        self.kind = kind
        self.lo = lo
        self.hi = hi
        self.order = order
        self.axis = -1
        self.threshold = 0.0
        self.children = ()
        self.indices = None


def _split(points, idx, lo, hi):
    """Midpoint cut of box ``[lo, hi]`` on its longest side (lowest axis on ties).

    Returns None when the box is too thin for the midpoint to separate it.
    """
    axis = int(np.argmax(hi - lo))
    thr = 0.5 * (lo[axis] + hi[axis])
    if not lo[axis] < thr < hi[axis]:
        return None
    mask = points[idx, axis] <= thr
    left_hi = hi.copy()
    left_hi[axis] = thr
    right_lo = lo.copy()
    right_lo[axis] = thr
    return axis, thr, (idx[mask], lo, left_hi), (idx[~mask], right_lo, hi)


class KannTree:
    """Space-partitioning tree over an ``(n, d)`` point array.

    Parameters
    ----------
    points : array_like
        Points to index.  The tree keeps a float64 copy.
    bucket_size : int
        Maximum number of points in a leaf, except for leaves whose points
        all coincide.
    """

    def __init__(self, points, bucket_size: int = 8):
        P = np.ascontiguousarray(points, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] == 0 or P.shape[1] == 0:
            raise ValueError(f"need a non-empty (n, d) point array, got shape {P.shape}")
        if bucket_size < 1:
            raise ValueError("bucket_size must be positive")
        P.setflags(write=False)
        self.points = P
        self.bucket_size = int(bucket_size)
        self.bounding_box = (P.min(axis=0), P.max(axis=0))
        self.nodes: list[_Node] = []
        self.root = self._build(np.arange(len(P)), *self.bounding_box)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def _new(self, kind, lo, hi) -> _Node:
        node = _Node(kind, lo, hi, len(self.nodes))
        self.nodes.append(node)
        return node

    def _leaf(self, idx, lo, hi) -> _Node:
        leaf = self._new(LEAF, lo, hi)
        leaf.indices = idx
        return leaf

    def _split_node(self, lo, hi, cut) -> _Node:
        axis, thr, left, right = cut
        node = self._new(SPLIT, lo, hi)
        node.axis, node.threshold = axis, thr
        node.children = (self._build(*left), self._build(*right))
        return node

    def _build(self, idx, lo, hi) -> _Node:
        P = self.points
        m = len(idx)
        if m <= self.bucket_size or np.all(P[idx] == P[idx[0]]):
            return self._leaf(idx, lo, hi)
        limit = _DENSE * m
        while True:
            cut = _split(P, idx, lo, hi)
            if cut is None:
                return self._leaf(idx, lo, hi)
            left, right = cut[2], cut[3]
            if max(len(left[0]), len(right[0])) <= limit:
                return self._split_node(lo, hi, cut)
            # shrink: follow the heavy side until its own cut is balanced
            inner = left if len(left[0]) >= len(right[0]) else right
            while True:
                inner_cut = _split(P, *inner)
                if inner_cut is None:
                    break
                a, b = inner_cut[2], inner_cut[3]
                heavy = a if len(a[0]) >= len(b[0]) else b
                if len(heavy[0]) <= limit:
                    break
                inner = heavy
            if len(inner[0]) == m:
                # nothing outside the inner box: tighten the cell and retry
                idx, lo, hi = inner
                continue
            outside = np.setdiff1d(idx, inner[0], assume_unique=True)
            node = self._new(SHRINK, lo, hi)
            if inner_cut is None:
                inside = self._leaf(*inner)
            else:
                inside = self._split_node(inner[1], inner[2], inner_cut)
            node.children = (inside, self._build(outside, lo, hi))
            return node

    def depth(self) -> int:
        best = 0
        stack = [(self.root, 0)]
        while stack:
            node, dep = stack.pop()
            best = max(best, dep)
            stack.extend((c, dep + 1) for c in node.children)
        return best

    def leaves(self):
        return [node for node in self.nodes if node.kind == LEAF]

    def _check_query(self, q):
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (self.dim,):
            raise ValueError(f"query must have shape ({self.dim},), got {q.shape}")
        return q

    def search(self, q, k: int, epsilon: float = 0.0, visited: set | None = None,
               _fault: bool = False) -> list[Neighbor]:
        """Approximate k nearest neighbors of ``q`` by priority search.

        Cells are visited in increasing distance from ``q``; the search stops
        once the next cell lies farther than ``r_k / (1 + epsilon)``, where
        ``r_k`` is the current k-th best distance.  Points never examined are
        therefore farther than ``r_k / (1 + epsilon)``.  Pass a set as
        ``visited`` to collect the indices of every examined point.

        ``_fault`` shrinks the stopping radius fourfold; it exists only to
        exercise the audit in tests.
        """
        q = self._check_query(q)
        if not 1 <= k <= self.n:
            raise ValueError(f"k must lie in [1, {self.n}], got {k}")
        if epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        P = self.points
        factor = 1.0 + epsilon
        if _fault:
            factor *= 4.0
        best: list[tuple[float, int]] = []  # max-heap on (dist, index)
        queue = [(_box_distance(self.root.lo, self.root.hi, q), self.root.order, self.root)]
        while queue:
            cell_dist, _, node = heapq.heappop(queue)
            if len(best) == k and cell_dist > -best[0][0] / factor:
                break
            if node.kind != LEAF:
                for child in node.children:
                    heapq.heappush(queue, (_box_distance(child.lo, child.hi, q), child.order, child))
                continue
            idx = node.indices
            if visited is not None:
                visited.update(idx.tolist())
            for i, dist in zip(idx.tolist(), point_distances(P[idx], q).tolist()):
                if len(best) < k:
                    heapq.heappush(best, (-dist, -i))
                elif (dist, i) < (-best[0][0], -best[0][1]):
                    heapq.heapreplace(best, (-dist, -i))
        return [Neighbor(-i, -d) for d, i in sorted(best, key=lambda t: (-t[0], -t[1]))]

    def range_search(self, q, r: float) -> list[int]:
        """Indices of all points within distance ``r`` of ``q`` (closed ball), sorted."""
        q = self._check_query(q)
        if r < 0:
            raise ValueError("radius must be non-negative")
        P = self.points
        found = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if _box_distance(node.lo, node.hi, q) > r:
                continue
            if node.kind == LEAF:
                idx = node.indices
                found.append(idx[point_distances(P[idx], q) <= r])
            else:
                stack.extend(node.children)
        if not found:
            return []
        return sorted(np.concatenate(found).tolist())


def build_tree(points, bucket_size: int = 8) -> KannTree:
    return KannTree(points, bucket_size)


def search_kann(tree: KannTree, q, k: int, epsilon: float = 0.0) -> list[Neighbor]:
    return tree.search(q, k, epsilon)


def range_search(tree: KannTree, q, r: float) -> list[int]:
    return tree.range_search(q, r)
