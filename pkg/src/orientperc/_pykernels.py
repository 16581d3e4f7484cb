"""Pure-Python/numpy kernels.

Same functions and results as the compiled ``_ckernels`` module; used when
the extension is not built or ``ORIENTPERC_PURE=1`` is set.
"""

import math

import numpy as np

from .rng import GAMMA, MASK64, bernoulli_threshold, mix64, mix64_array

NAME = "python"

_ONE = np.uint64(1)


def _out_masks(vertex_count, eu, ev, orient):
    out = [np.zeros(orient.shape, np.uint64) for _ in range(vertex_count)]
    for e, (u, v) in enumerate(zip(eu, ev)):
        fwd = (orient >> np.uint64(e)) & _ONE
        out[u] |= fwd << np.uint64(v)
        out[v] |= (fwd ^ _ONE) << np.uint64(u)
    return out


def reach_masks(vertex_count, eu, ev, source_mask, orient):
    """Wet-vertex bitmask for every orientation bitmask in ``orient``."""
    orient = np.ascontiguousarray(orient, dtype=np.uint64)
    out = _out_masks(vertex_count, eu, ev, orient)
    wet = np.full(orient.shape, np.uint64(source_mask))
    while True:
        new = wet.copy()
        for v in range(vertex_count):
            has_v = ((wet >> np.uint64(v)) & _ONE).astype(bool)
            new[has_v] |= out[v][has_v]
        if np.array_equal(new, wet):
            return wet
        wet = new


def enumerate_reach(vertex_count, eu, ev, source_mask, lo, hi):
    return reach_masks(vertex_count, eu, ev, source_mask,
                       np.arange(lo, hi, dtype=np.uint64))


def tree_two_pass(n, up):
    """Wetness of every heap index of T_n for one explicit orientation.

    ``up[c]`` is 1 when the edge from heap child ``c`` to its parent points
    towards the root.  Returns ``(X, Y)``: bidirectional and downwards
    wetness, as uint8 arrays of length ``2**(n+1)`` (index 0 unused).
    """
    size = 1 << (n + 1)
    first_leaf = 1 << n
    up = np.asarray(up, dtype=np.uint8)
    Y = np.zeros(size, np.uint8)
    Y[first_leaf:] = 1
    for c in range(size - 1, 1, -1):
        if Y[c] and up[c]:
            Y[c >> 1] = 1
    X = Y.copy()
    for v in range(2, first_leaf):
        if not X[v] and not up[v] and X[v >> 1]:
            X[v] = 1
    return X, Y


_UP, _Y, _X = 1, 2, 4


def _wet_sparse(n, st, ups):
    """Wet the tree given the ascending list of up-oriented child indices.

    ``st`` is a zeroed flag array; returns the touched indices (for reset),
    the Y-wet internal vertices, and the number of X-only vertices.
    """
    first_leaf = 1 << n
    touched = []
    for c in ups:
        st[c] |= _UP
        touched.append(c)
    ywet = []
    for c in reversed(ups):
        if c >= first_leaf or st[c] & _Y:
            par = c >> 1
            if not st[par] & _Y:
                st[par] |= _Y
                touched.append(par)
                ywet.append(par)
    stack = list(ywet)
    flooded = 0
    while stack:
        w = stack.pop()
        for ch in (2 * w, 2 * w + 1):
            if ch < first_leaf and not st[ch] & (_UP | _Y | _X):
                st[ch] |= _X
                touched.append(ch)
                flooded += 1
                stack.append(ch)
    return touched, ywet, flooded


def tree_wet_sparse(n, up_children):
    """Same output as :func:`tree_two_pass`, via the sparse flood algorithm."""
    size = 1 << (n + 1)
    st = [0] * size
    _wet_sparse(n, st, sorted(int(c) for c in up_children))
    X = np.zeros(size, np.uint8)
    Y = np.zeros(size, np.uint8)
    Y[1 << n:] = 1
    X[1 << n:] = 1
    for i in range(1, 1 << n):
        if st[i] & _Y:
            Y[i] = X[i] = 1
        elif st[i] & _X:
            X[i] = 1
    return X, Y


def _level(n, i):
    return n - (i.bit_length() - 1)


def _sparse_ups(key, n_edges, p):
    """Ascending child indices of up edges via geometric skipping."""
    if p <= 0.0:
        return []
    if p >= 1.0:
        return list(range(2, n_edges + 2))
    lq = math.log1p(-p)
    ups = []
    pos = 0
    k = 0
    while True:
        k += 1
        x = mix64((key + k * GAMMA) & MASK64)
        u = ((x >> 11) + 1) * (1.0 / (1 << 53))
        skip = math.log(u) / lq
        if skip >= n_edges - pos:
            return ups
        pos += int(skip)
        ups.append(pos + 2)
        pos += 1


def _dense_up(key, n_edges, thr):
    idx = np.arange(1, n_edges + 1, dtype=np.uint64)
    draws = mix64_array(np.uint64(key) + idx * np.uint64(GAMMA))
    up = np.zeros(n_edges + 2, np.uint8)
    up[2:] = (draws >> np.uint64(11)) < np.uint64(thr)
    return up


def tree_simulate(n, p, dense, keys, watch):
    """Run one tree replica per key.

    Returns ``(cluster, downwards, max_level, root_wet, watched)`` where
    ``watched[s, j]`` is the X-wetness of heap index ``watch[j]`` in replica s.
    """
    keys = np.asarray(keys, dtype=np.uint64)
    watch = np.asarray(watch, dtype=np.int64)
    samples = len(keys)
    cluster = np.zeros(samples, np.int64)
    down = np.zeros(samples, np.int64)
    maxlvl = np.zeros(samples, np.int64)
    root = np.zeros(samples, np.uint8)
    watched = np.zeros((samples, len(watch)), np.uint8)
    n_edges = (1 << (n + 1)) - 2
    first_leaf = 1 << n
    if dense:
        thr = bernoulli_threshold(p)
        for s, key in enumerate(keys):
            X, Y = tree_two_pass(n, _dense_up(int(key), n_edges, thr))
            cluster[s] = int(X[1:first_leaf].sum())
            down[s] = int(Y[1:first_leaf].sum())
            ywet = np.flatnonzero(Y[1:first_leaf]) + 1
            maxlvl[s] = _level(n, int(ywet[0])) if len(ywet) else 0
            root[s] = Y[1]
            if len(watch):
                watched[s] = X[watch]
        return cluster, down, maxlvl, root, watched
    st = [0] * (1 << (n + 1))
    for s, key in enumerate(keys):
        ups = _sparse_ups(int(key), n_edges, p)
        touched, ywet, flooded = _wet_sparse(n, st, ups)
        down[s] = len(ywet)
        cluster[s] = len(ywet) + flooded
        maxlvl[s] = max((_level(n, i) for i in ywet), default=0)
        root[s] = 1 if st[1] & _Y else 0
        for j, w in enumerate(watch):
            w = int(w)
            watched[s, j] = 1 if (w >= first_leaf or st[w] & (_Y | _X)) else 0
        for i in touched:
            st[i] = 0
    return cluster, down, maxlvl, root, watched
