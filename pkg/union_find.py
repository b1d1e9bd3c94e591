"""
Latticeworks v1.0 - Union-Find Module
======================================
numba kernels for cluster labeling and connectivity queries on open
edge subsets. Labels are the smallest vertex id of each component, so
they do not depend on union order.
"""

import numpy as np
from numba import njit

from logger import get_logger

logger = get_logger(__name__)


# === KERNELS ===

@njit(nogil=True, cache=True)
def _uf_find(parent, x):
    """Find root with path compression."""
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


@njit(nogil=True, cache=True)
def _uf_union(parent, rank, size, a, b):
    """Union by rank."""
    ra = _uf_find(parent, a)
    rb = _uf_find(parent, b)
    if ra == rb:
        return
    if rank[ra] < rank[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]
    if rank[ra] == rank[rb]:
        rank[ra] += 1


@njit(nogil=True, cache=True)
def _label_kernel(n, eu, ev, open_mask):
    parent = np.arange(n, dtype=np.int64)
    rank = np.zeros(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    for e in range(eu.shape[0]):
        if open_mask[e]:
            _uf_union(parent, rank, size, eu[e], ev[e])

    root_min = np.full(n, -1, dtype=np.int64)
    labels = np.empty(n, dtype=np.int64)
    n_comp = 0
    for v in range(n):
        r = _uf_find(parent, v)
        if root_min[r] < 0:
            root_min[r] = v
            n_comp += 1
        labels[v] = root_min[r]
    return labels, n_comp


@njit(nogil=True, cache=True)
def _count_kernel(n, eu, ev, open_mask):
    parent = np.arange(n, dtype=np.int64)
    rank = np.zeros(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    n_comp = n
    for e in range(eu.shape[0]):
        if open_mask[e]:
            ra = _uf_find(parent, eu[e])
            rb = _uf_find(parent, ev[e])
            if ra != rb:
                _uf_union(parent, rank, size, ra, rb)
                n_comp -= 1
    return n_comp


@njit(nogil=True, cache=True)
def _connected_off_edge(indptr, nbrs, eids, open_mask, skip, src, dst, mark_a, mark_b, queue_a, queue_b, stamp):
    """
    Is src joined to dst by open edges other than `skip`?

    Two breadth-first searches grow alternately from both ends; the
    smaller frontier stops the query early on small clusters. Marks are
    stamped so the scratch arrays need no clearing between calls.
    """
    if src == dst:
        return True
    head_a, tail_a = 0, 1
    head_b, tail_b = 0, 1
    queue_a[0] = src
    queue_b[0] = dst
    mark_a[src] = stamp
    mark_b[dst] = stamp
    while head_a < tail_a and head_b < tail_b:
        if tail_a - head_a <= tail_b - head_b:
            x = queue_a[head_a]
            head_a += 1
            for k in range(indptr[x], indptr[x + 1]):
                e = eids[k]
                if e == skip or not open_mask[e]:
                    continue
                y = nbrs[k]
                if mark_b[y] == stamp:
                    return True
                if mark_a[y] != stamp:
                    mark_a[y] = stamp
                    queue_a[tail_a] = y
                    tail_a += 1
        else:
            x = queue_b[head_b]
            head_b += 1
            for k in range(indptr[x], indptr[x + 1]):
                e = eids[k]
                if e == skip or not open_mask[e]:
                    continue
                y = nbrs[k]
                if mark_a[y] == stamp:
                    return True
                if mark_b[y] != stamp:
                    mark_b[y] = stamp
                    queue_b[tail_b] = y
                    tail_b += 1
    return False


# === PUBLIC API ===

def label_components(n: int, eu: np.ndarray, ev: np.ndarray, open_mask: np.ndarray):
    """
    Component labels of the open subgraph

    Returns:
        (labels, component count); labels[v] = smallest vertex id in v's component
    """
    return _label_kernel(n, eu, ev, np.asarray(open_mask, dtype=np.bool_))


def count_components(n: int, eu: np.ndarray, ev: np.ndarray, open_mask: np.ndarray) -> int:
    return int(_count_kernel(n, eu, ev, np.asarray(open_mask, dtype=np.bool_)))


class ConnectivityOracle:
    """Reusable scratch space for repeated off-edge connectivity queries"""

    def __init__(self, indptr: np.ndarray, nbrs: np.ndarray, eids: np.ndarray):
        self.indptr = indptr
        self.nbrs = nbrs
        self.eids = eids
        n = indptr.shape[0] - 1
        self._mark_a = np.zeros(n, dtype=np.int64)
        self._mark_b = np.zeros(n, dtype=np.int64)
        self._queue_a = np.empty(n, dtype=np.int64)
        self._queue_b = np.empty(n, dtype=np.int64)
        self._stamp = 0

    def connected_off_edge(self, open_mask: np.ndarray, edge: int, u: int, v: int) -> bool:
        self._stamp += 1
        return bool(_connected_off_edge(
            self.indptr, self.nbrs, self.eids, open_mask, edge, u, v,
            self._mark_a, self._mark_b, self._queue_a, self._queue_b, self._stamp,
        ))
