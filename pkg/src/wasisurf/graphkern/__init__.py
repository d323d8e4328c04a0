"""Graph traversal kernels behind the reachability analyses.

Two interchangeable backends: a Cython extension built at install time and
a pure-Python fallback.  Selection happens once at import; set
``WASISURF_FORCE_PURE=1`` to pin the fallback (the benchmark and the
equivalence tests import both explicitly).
"""

from __future__ import annotations

import os

import numpy as np

from wasisurf.graphkern import _pure

if os.environ.get("WASISURF_FORCE_PURE"):
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from wasisurf.graphkern import _speedups as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

bfs_tree = _impl.bfs_tree
count_simple_paths = _impl.count_simple_paths


def build_csr(n_nodes: int, edges: list[tuple[int, int]]):
    """CSR adjacency from an edge list; parallel edges are preserved.

    Edges are sorted before packing, so neighbor order (and therefore BFS
    parent choice) is deterministic regardless of input order.
    """
    ordered = sorted(edges)
    indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    for u, _v in ordered:
        indptr[u + 1] += 1
    np.cumsum(indptr, out=indptr)
    indices = np.fromiter((v for _u, v in ordered), dtype=np.int64, count=len(ordered))
    return indptr, indices
