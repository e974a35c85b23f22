"""Compiled union-find kernels for percolation trials.

A trial is a row of thresholds ``t`` (one per edge or per node); the element
is open at occupation probability ``p`` iff ``t < p``.  Nodes ``n`` and
``n + 1`` are virtual terminals glued to the left and right boundary sets,
and the patch spans once they share a cluster.

The critical kernels return, per trial, the smallest ``p`` at which the
patch spans.  Thresholds below ``lo`` are merged unsorted, only the window
``[lo, hi)`` is sorted, and anything above ``hi`` is sorted on demand; if
the patch already spans below ``lo`` the trial is redone with a full sort.
The answer is exact for any window.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True, nogil=True)
def _link(parent, size, ra, rb):
    """Join two distinct roots, return the new root."""
    if size[ra] < size[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]
    return ra


@njit(cache=True, nogil=True)
def _union(parent, size, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra != rb:
        _link(parent, size, ra, rb)


@njit(cache=True, nogil=True)
def _start(parent, size, n_nodes, left, right, present):
    for i in range(parent.shape[0]):
        parent[i] = i
        size[i] = 1
    for i in range(n_nodes):
        if present[i]:
            if left[i]:
                _union(parent, size, i, n_nodes)
            if right[i]:
                _union(parent, size, i, n_nodes + 1)


@njit(cache=True, nogil=True)
def _sort_window(t, items, k, lo, hi, order, counts):
    """Write ``items[:k]`` into ``order[:k]`` sorted by ``t`` (values in [lo, hi))."""
    if k == 0:
        return
    scale = k / (hi - lo)
    for b in range(k + 1):
        counts[b] = 0
    for a in range(k):
        b = min(int((t[items[a]] - lo) * scale), k - 1)
        counts[b + 1] += 1
    for b in range(k):
        counts[b + 1] += counts[b]
    for a in range(k):
        b = min(int((t[items[a]] - lo) * scale), k - 1)
        order[counts[b]] = items[a]
        counts[b] += 1
    # buckets are now contiguous and in order; finish with insertion sort,
    # which is linear here because each bucket holds O(1) items on average
    for a in range(1, k):
        item = order[a]
        key = t[item]
        j = a - 1
        while j >= 0 and t[order[j]] > key:
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = item


@njit(cache=True, nogil=True)
def _bond_one(eu, ev, n_nodes, left, right, t, lo, hi, parent, size, every, items, order, counts):
    m = eu.shape[0]
    L = n_nodes
    R = n_nodes + 1
    _start(parent, size, n_nodes, left, right, every)
    k = 0
    for e in range(m):
        te = t[e]
        if te < lo:
            _union(parent, size, eu[e], ev[e])
        elif te < hi:
            items[k] = e
            k += 1
    root_l = _find(parent, L)
    root_r = _find(parent, R)
    if root_l == root_r:
        if lo <= 0.0:
            return 0.0
        return _bond_one(eu, ev, n_nodes, left, right, t, 0.0, 1.0 + 1e-9, parent, size, every, items, order, counts)
    for stage in range(2):
        if stage == 1:
            k = 0
            for e in range(m):
                if t[e] >= hi:
                    items[k] = e
                    k += 1
            lo = hi
            hi = 1.0 + 1e-9
        _sort_window(t, items, k, lo, hi, order, counts)
        for a in range(k):
            e = order[a]
            ra = _find(parent, eu[e])
            rb = _find(parent, ev[e])
            if ra == rb:
                continue
            joined = (ra == root_l and rb == root_r) or (ra == root_r and rb == root_l)
            new = _link(parent, size, ra, rb)
            if joined:
                return t[e]
            if ra == root_l or rb == root_l:
                root_l = new
            if ra == root_r or rb == root_r:
                root_r = new
    return np.inf


@njit(cache=True, nogil=True)
def bond_critical(eu, ev, n_nodes, left, right, thresholds, lo, hi):
    """Critical ``p`` for each row of ``thresholds`` (``inf`` if never spanning)."""
    m = eu.shape[0]
    parent = np.empty(n_nodes + 2, dtype=np.int64)
    size = np.empty(n_nodes + 2, dtype=np.int64)
    every = np.ones(n_nodes, dtype=np.bool_)
    items = np.empty(m, dtype=np.int64)
    order = np.empty(m, dtype=np.int64)
    counts = np.empty(m + 1, dtype=np.int64)
    out = np.empty(thresholds.shape[0])
    for trial in range(thresholds.shape[0]):
        out[trial] = _bond_one(eu, ev, n_nodes, left, right, thresholds[trial], lo, hi,
                               parent, size, every, items, order, counts)
    return out


@njit(cache=True, nogil=True)
def _site_one(indptr, indices, n_nodes, left, right, t, lo, hi, parent, size, present, items, order, counts):
    L = n_nodes
    R = n_nodes + 1
    for i in range(parent.shape[0]):
        parent[i] = i
        size[i] = 1
    k = 0
    for x in range(n_nodes):
        present[x] = t[x] < lo
        if not present[x] and t[x] < hi:
            items[k] = x
            k += 1
    for x in range(n_nodes):
        if present[x]:
            if left[x]:
                _union(parent, size, x, L)
            if right[x]:
                _union(parent, size, x, R)
            for j in range(indptr[x], indptr[x + 1]):
                y = indices[j]
                if y > x and present[y]:
                    _union(parent, size, x, y)
    if _find(parent, L) == _find(parent, R):
        if lo <= 0.0:
            return 0.0
        return _site_one(indptr, indices, n_nodes, left, right, t, 0.0, 1.0 + 1e-9,
                         parent, size, present, items, order, counts)
    for stage in range(2):
        if stage == 1:
            k = 0
            for x in range(n_nodes):
                if t[x] >= hi:
                    items[k] = x
                    k += 1
            lo = hi
            hi = 1.0 + 1e-9
        _sort_window(t, items, k, lo, hi, order, counts)
        for a in range(k):
            x = order[a]
            present[x] = True
            if left[x]:
                _union(parent, size, x, L)
            if right[x]:
                _union(parent, size, x, R)
            for j in range(indptr[x], indptr[x + 1]):
                y = indices[j]
                if present[y]:
                    _union(parent, size, x, y)
            if _find(parent, L) == _find(parent, R):
                return t[x]
    return np.inf


@njit(cache=True, nogil=True)
def site_critical(indptr, indices, n_nodes, left, right, thresholds, lo, hi):
    """Site version of :func:`bond_critical`; rows hold one threshold per node."""
    parent = np.empty(n_nodes + 2, dtype=np.int64)
    size = np.empty(n_nodes + 2, dtype=np.int64)
    present = np.empty(n_nodes, dtype=np.bool_)
    items = np.empty(n_nodes, dtype=np.int64)
    order = np.empty(n_nodes, dtype=np.int64)
    counts = np.empty(n_nodes + 1, dtype=np.int64)
    out = np.empty(thresholds.shape[0])
    for trial in range(thresholds.shape[0]):
        out[trial] = _site_one(indptr, indices, n_nodes, left, right, thresholds[trial], lo, hi,
                               parent, size, present, items, order, counts)
    return out


@njit(cache=True, nogil=True)
def spans(eu, ev, n_nodes, left, right, edge_open, node_present):
    """Whether the open edges between present nodes join left to right."""
    parent = np.empty(n_nodes + 2, dtype=np.int64)
    size = np.empty(n_nodes + 2, dtype=np.int64)
    _start(parent, size, n_nodes, left, right, node_present)
    for e in range(eu.shape[0]):
        if edge_open[e] and node_present[eu[e]] and node_present[ev[e]]:
            _union(parent, size, eu[e], ev[e])
    return _find(parent, n_nodes) == _find(parent, n_nodes + 1)
