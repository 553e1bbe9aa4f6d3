"""Compiled kernels for CART growth and forest prediction.

Pure-numpy split search measured ~50x too slow for the grid-search
budget, so the per-node loops live here under numba.  Everything is
integer/float arithmetic on preallocated arrays; results are bit-exact
reproducible for a given seed.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@njit(cache=True, nogil=True, inline="always")
def _splitmix(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True, nogil=True)
def grow_tree(X, y, sample_idx, max_depth, min_leaf, n_cand, seed):
    """Grow one regression tree on the rows listed in ``sample_idx``.

    Greedy variance-reduction splits; at each node the candidate columns
    are a seeded sample (without replacement) of ``n_cand`` of the
    ``X.shape[1]`` columns.  Returns flattened node arrays and the node
    count; ``feature == -1`` marks leaves.
    """
    d = X.shape[1]
    m_total = sample_idx.shape[0]
    max_nodes = 2 * m_total + 1

    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    value = np.zeros(max_nodes, np.float64)
    count = np.zeros(max_nodes, np.int64)

    idx = sample_idx.copy()
    perm = np.empty(d, np.int64)
    # stack rows: node id, segment start, segment end, depth
    stack = np.empty((max_nodes, 4), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = m_total
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    state = np.uint64(seed)

    while top > 0:
        top -= 1
        node = stack[top, 0]
        s = stack[top, 1]
        e = stack[top, 2]
        depth = stack[top, 3]
        m = e - s

        tot = 0.0
        y_lo = y[idx[s]]
        y_hi = y_lo
        for i in range(s, e):
            v = y[idx[i]]
            tot += v
            if v < y_lo:
                y_lo = v
            if v > y_hi:
                y_hi = v
        count[node] = m
        if y_lo == y_hi:
            value[node] = y_lo  # constant target: exact leaf
            continue
        value[node] = tot / m
        if depth >= max_depth or m < 2 * min_leaf or m < 2:
            continue

        for j in range(d):
            perm[j] = j
        k = n_cand if n_cand < d else d

        best_gain = -1.0
        best_f = np.int64(-1)
        best_t = 0.0
        for c in range(k):
            state, z = _splitmix(state)
            r = c + np.int64(z % np.uint64(d - c))
            tmp_f = perm[c]
            perm[c] = perm[r]
            perm[r] = tmp_f
            f = perm[c]

            vals = np.empty(m, np.float64)
            ys = np.empty(m, np.float64)
            for i in range(m):
                vals[i] = X[idx[s + i], f]
                ys[i] = y[idx[s + i]]
            order = np.argsort(vals, kind="mergesort")

            csum = 0.0
            for i in range(m - 1):
                csum += ys[order[i]]
                v = vals[order[i]]
                nv = vals[order[i + 1]]
                if v == nv:
                    continue
                nl = i + 1
                nr = m - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                sr = tot - csum
                gain = csum * csum / nl + sr * sr / nr
                if gain > best_gain:
                    t = 0.5 * (v + nv)
                    if not (v < t < nv):
                        t = v  # adjacent floats: split exactly after v
                    best_gain = gain
                    best_f = f
                    best_t = t

        if best_f < 0:
            continue

        buf = np.empty(m, np.int64)
        nl = 0
        for i in range(s, e):
            if X[idx[i], best_f] <= best_t:
                buf[nl] = idx[i]
                nl += 1
        pos = nl
        for i in range(s, e):
            if X[idx[i], best_f] > best_t:
                buf[pos] = idx[i]
                pos += 1
        for i in range(m):
            idx[s + i] = buf[i]

        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_t
        left[node] = lid
        right[node] = rid
        stack[top, 0] = lid
        stack[top, 1] = s
        stack[top, 2] = s + nl
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = rid
        stack[top, 1] = s + nl
        stack[top, 2] = e
        stack[top, 3] = depth + 1
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        count[:n_nodes].copy(),
    )


@njit(cache=True, nogil=True)
def predict_tree(feature, threshold, left, right, value, X):
    n = X.shape[0]
    out = np.empty(n, np.float64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


@njit(cache=True, nogil=True)
def predict_forest(feature, threshold, left, right, value, offsets, X):
    """Mean prediction over trees packed end-to-end (``offsets`` per tree)."""
    n = X.shape[0]
    n_trees = offsets.shape[0] - 1
    out = np.zeros(n, np.float64)
    for t in range(n_trees):
        base = offsets[t]
        for i in range(n):
            node = base
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = base + left[node]
                else:
                    node = base + right[node]
            out[i] += value[node]
    for i in range(n):
        out[i] /= n_trees
    return out
