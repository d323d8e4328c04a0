# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled graph kernels; behavior pinned to wasisurf.graphkern._pure."""

import numpy as np


def bfs_tree(indptr, indices, long long source):
    cdef long long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef long long[::1] idx = np.ascontiguousarray(indices, dtype=np.int64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    dist_arr = np.full(n, -1, dtype=np.int64)
    parent_arr = np.full(n, -1, dtype=np.int64)
    cdef long long[::1] dist = dist_arr
    cdef long long[::1] parent = parent_arr
    queue_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 0
    cdef long long u, v
    cdef long long k
    dist[source] = 0
    queue[tail] = source
    tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        for k in range(ip[u], ip[u + 1]):
            v = idx[k]
            if dist[v] == -1:
                dist[v] = dist[u] + 1
                parent[v] = u
                queue[tail] = v
                tail += 1
    return dist_arr, parent_arr


def count_simple_paths(indptr, indices, long long source, long long target, long long cap):
    cdef long long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef long long[::1] idx = np.ascontiguousarray(indices, dtype=np.int64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    if cap <= 0:
        return 0
    if source == target:
        return 1
    on_path_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] on_path = on_path_arr
    stack_arr = np.empty(n + 1, dtype=np.int64)
    cursor_arr = np.empty(n + 1, dtype=np.int64)
    cdef long long[::1] stack = stack_arr
    cdef long long[::1] cursor = cursor_arr
    cdef Py_ssize_t depth = 0
    cdef long long u, v, k, count = 0
    on_path[source] = 1
    stack[0] = source
    cursor[0] = ip[source]
    while depth >= 0:
        u = stack[depth]
        k = cursor[depth]
        if k >= ip[u + 1]:
            on_path[u] = 0
            depth -= 1
            continue
        cursor[depth] = k + 1
        v = idx[k]
        if v == target:
            count += 1
            if count >= cap:
                return int(cap)
            continue
        if on_path[v]:
            continue
        depth += 1
        on_path[v] = 1
        stack[depth] = v
        cursor[depth] = ip[v]
    return int(count)
