"""Pure-Python graph kernels (fallback when the compiled extension is absent).

Operates on CSR adjacency (int64 indptr/indices).  Semantics are pinned by
tests run against both backends: BFS discovers neighbors in CSR order, so
the parent array is the smallest-index predecessor at minimal depth, and
path counting enumerates node-simple paths with edge multiplicity,
saturating at the cap.
"""

from __future__ import annotations

import numpy as np


def bfs_tree(indptr, indices, source: int):
    """Hop distances and deterministic BFS parents from ``source``.

    Returns (dist, parent) int64 arrays; -1 marks unreached / no parent.
    """
    n = len(indptr) - 1
    dist = [-1] * n
    parent = [-1] * n
    ip = indptr.tolist() if hasattr(indptr, "tolist") else list(indptr)
    idx = indices.tolist() if hasattr(indices, "tolist") else list(indices)
    dist[source] = 0
    frontier = [source]
    while frontier:
        next_frontier = []
        for u in frontier:
            for k in range(ip[u], ip[u + 1]):
                v = idx[k]
                if dist[v] == -1:
                    dist[v] = dist[u] + 1
                    parent[v] = u
                    next_frontier.append(v)
        frontier = next_frontier
    return np.asarray(dist, dtype=np.int64), np.asarray(parent, dtype=np.int64)


def count_simple_paths(indptr, indices, source: int, target: int, cap: int) -> int:
    """Number of node-simple source->target paths (edge-distinct), up to cap."""
    if cap <= 0:
        return 0
    if source == target:
        return 1
    n = len(indptr) - 1
    ip = indptr.tolist() if hasattr(indptr, "tolist") else list(indptr)
    idx = indices.tolist() if hasattr(indices, "tolist") else list(indices)
    on_path = bytearray(n)
    on_path[source] = 1
    stack = [source]
    edge_cursor = [ip[source]]
    count = 0
    while stack:
        u = stack[-1]
        k = edge_cursor[-1]
        if k >= ip[u + 1]:
            stack.pop()
            edge_cursor.pop()
            on_path[u] = 0
            continue
        edge_cursor[-1] = k + 1
        v = idx[k]
        if v == target:
            count += 1
            if count >= cap:
                return cap
            continue
        if on_path[v]:
            continue
        on_path[v] = 1
        stack.append(v)
        edge_cursor.append(ip[v])
    return count
