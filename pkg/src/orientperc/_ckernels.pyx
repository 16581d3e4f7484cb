# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p
from libc.stdint cimport uint8_t, uint64_t, int64_t
from libc.stdlib cimport malloc, calloc, free

cnp.import_array()

NAME = "compiled"

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef void _reach_one(int nv, int ne, const int64_t* eu, const int64_t* ev,
                     uint64_t src, uint64_t o, uint64_t* out,
                     uint64_t* result) noexcept nogil:
    cdef int e, v
    cdef uint64_t wet, frontier, nxt, bit
    for v in range(nv):
        out[v] = 0
    for e in range(ne):
        if (o >> e) & 1:
            out[eu[e]] |= (<uint64_t>1) << ev[e]
        else:
            out[ev[e]] |= (<uint64_t>1) << eu[e]
    wet = src
    frontier = src
    while frontier:
        nxt = 0
        while frontier:
            bit = frontier & (~frontier + 1)
            v = 0
            while (bit >> v) != 1:
                v += 1
            nxt |= out[v]
            frontier ^= bit
        frontier = nxt & ~wet
        wet |= nxt
    result[0] = wet


def reach_masks(int vertex_count, eu, ev, source_mask, orient):
    cdef cnp.ndarray[int64_t, ndim=1] a_u = np.ascontiguousarray(eu, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] a_v = np.ascontiguousarray(ev, dtype=np.int64)
    cdef cnp.ndarray[uint64_t, ndim=1] a_o = np.ascontiguousarray(orient, dtype=np.uint64)
    cdef Py_ssize_t m = a_o.shape[0], i
    cdef cnp.ndarray[uint64_t, ndim=1] res = np.empty(m, dtype=np.uint64)
    cdef uint64_t src = <uint64_t>source_mask
    cdef int ne = a_u.shape[0]
    cdef uint64_t out[64]
    cdef const int64_t* pu = &a_u[0] if ne else NULL
    cdef const int64_t* pv = &a_v[0] if ne else NULL
    with nogil:
        for i in range(m):
            _reach_one(vertex_count, ne, pu, pv, src, a_o[i], out, &res[i])
    return res


def enumerate_reach(int vertex_count, eu, ev, source_mask, lo, hi):
    cdef cnp.ndarray[int64_t, ndim=1] a_u = np.ascontiguousarray(eu, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] a_v = np.ascontiguousarray(ev, dtype=np.int64)
    cdef uint64_t start = <uint64_t>lo, stop = <uint64_t>hi, o
    cdef cnp.ndarray[uint64_t, ndim=1] res = np.empty(stop - start, dtype=np.uint64)
    cdef uint64_t src = <uint64_t>source_mask
    cdef int ne = a_u.shape[0]
    cdef uint64_t out[64]
    cdef const int64_t* pu = &a_u[0] if ne else NULL
    cdef const int64_t* pv = &a_v[0] if ne else NULL
    with nogil:
        o = start
        while o < stop:
            _reach_one(vertex_count, ne, pu, pv, src, o, out, &res[o - start])
            o += 1
    return res


def tree_two_pass(int n, up):
    cdef Py_ssize_t size = (<Py_ssize_t>1) << (n + 1)
    cdef Py_ssize_t first_leaf = (<Py_ssize_t>1) << n
    cdef cnp.ndarray[uint8_t, ndim=1] a_up = np.ascontiguousarray(up, dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=1] X = np.zeros(size, dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=1] Y = np.zeros(size, dtype=np.uint8)
    _two_pass(n, &a_up[0], &X[0], &Y[0])
    return X, Y


cdef void _two_pass(int n, const uint8_t* up, uint8_t* X, uint8_t* Y) noexcept nogil:
    cdef Py_ssize_t size = (<Py_ssize_t>1) << (n + 1)
    cdef Py_ssize_t first_leaf = (<Py_ssize_t>1) << n
    cdef Py_ssize_t c, v
    for c in range(1, first_leaf):
        Y[c] = 0
    for c in range(first_leaf, size):
        Y[c] = 1
    c = size - 1
    while c >= 2:
        if Y[c] and up[c]:
            Y[c >> 1] = 1
        c -= 1
    X[1] = Y[1]
    for v in range(2, size):
        X[v] = Y[v] | ((up[v] == 0) & X[v >> 1])


cdef enum:
    F_UP = 1
    F_Y = 2
    F_X = 4


cdef struct Work:
    uint8_t* st
    int64_t* ups
    int64_t* touched
    int64_t* ywet
    int64_t* stack
    Py_ssize_t n_ups
    Py_ssize_t n_touched
    Py_ssize_t n_ywet
    Py_ssize_t flooded


cdef void _wet_sparse(int n, Work* w) noexcept nogil:
    cdef Py_ssize_t first_leaf = (<Py_ssize_t>1) << n
    cdef Py_ssize_t i, c, par, top, node, ch
    cdef int t
    w.n_touched = 0
    w.n_ywet = 0
    w.flooded = 0
    for i in range(w.n_ups):
        c = w.ups[i]
        w.st[c] |= F_UP
        w.touched[w.n_touched] = c
        w.n_touched += 1
    i = w.n_ups - 1
    while i >= 0:
        c = w.ups[i]
        if c >= first_leaf or (w.st[c] & F_Y):
            par = c >> 1
            if not (w.st[par] & F_Y):
                w.st[par] |= F_Y
                w.touched[w.n_touched] = par
                w.n_touched += 1
                w.ywet[w.n_ywet] = par
                w.n_ywet += 1
        i -= 1
    top = 0
    for i in range(w.n_ywet):
        w.stack[top] = w.ywet[i]
        top += 1
    while top > 0:
        top -= 1
        node = w.stack[top]
        for t in range(2):
            ch = 2 * node + t
            if ch < first_leaf and not (w.st[ch] & (F_UP | F_Y | F_X)):
                w.st[ch] |= F_X
                w.touched[w.n_touched] = ch
                w.n_touched += 1
                w.flooded += 1
                w.stack[top] = ch
                top += 1


cdef int _alloc_work(int n, Work* w) noexcept nogil:
    cdef Py_ssize_t size = (<Py_ssize_t>1) << (n + 1)
    w.st = <uint8_t*>calloc(size, sizeof(uint8_t))
    w.ups = <int64_t*>malloc(size * sizeof(int64_t))
    w.touched = <int64_t*>malloc(2 * size * sizeof(int64_t))
    w.ywet = <int64_t*>malloc(size * sizeof(int64_t))
    w.stack = <int64_t*>malloc(size * sizeof(int64_t))
    return not (w.st and w.ups and w.touched and w.ywet and w.stack)


cdef void _free_work(Work* w) noexcept nogil:
    free(w.st)
    free(w.ups)
    free(w.touched)
    free(w.ywet)
    free(w.stack)


def tree_wet_sparse(int n, up_children):
    cdef Py_ssize_t size = (<Py_ssize_t>1) << (n + 1)
    cdef Py_ssize_t first_leaf = (<Py_ssize_t>1) << n
    cdef Work w
    cdef Py_ssize_t i
    ups = np.sort(np.asarray(list(up_children), dtype=np.int64))
    if _alloc_work(n, &w):
        _free_work(&w)
        raise MemoryError()
    try:
        w.n_ups = len(ups)
        for i in range(w.n_ups):
            w.ups[i] = ups[i]
        _wet_sparse(n, &w)
        X = np.zeros(size, dtype=np.uint8)
        Y = np.zeros(size, dtype=np.uint8)
        X[first_leaf:] = 1
        Y[first_leaf:] = 1
        for i in range(1, first_leaf):
            if w.st[i] & F_Y:
                X[i] = 1
                Y[i] = 1
            elif w.st[i] & F_X:
                X[i] = 1
        return X, Y
    finally:
        _free_work(&w)


cdef inline int _level(int n, Py_ssize_t i) noexcept nogil:
    cdef int b = 0
    while i > 1:
        i >>= 1
        b += 1
    return n - b


def tree_simulate(int n, double p, bint dense, keys, watch):
    cdef cnp.ndarray[uint64_t, ndim=1] a_keys = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef cnp.ndarray[int64_t, ndim=1] a_watch = np.ascontiguousarray(watch, dtype=np.int64)
    cdef Py_ssize_t samples = a_keys.shape[0], nw = a_watch.shape[0]
    cdef cnp.ndarray[int64_t, ndim=1] cluster = np.zeros(samples, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] down = np.zeros(samples, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] maxlvl = np.zeros(samples, dtype=np.int64)
    cdef cnp.ndarray[uint8_t, ndim=1] root = np.zeros(samples, dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=2] watched = np.zeros((samples, max(nw, 1)), dtype=np.uint8)
    cdef Py_ssize_t size = (<Py_ssize_t>1) << (n + 1)
    cdef Py_ssize_t first_leaf = (<Py_ssize_t>1) << n
    cdef Py_ssize_t n_edges = size - 2
    cdef uint64_t thr = <uint64_t>(p * 9007199254740992.0)
    cdef double lq = log1p(-p) if p < 1.0 else 0.0
    cdef Py_ssize_t s, j, i, pos, c, wv, best, cnt_x, cnt_y
    cdef uint64_t key, x, k
    cdef double u, skip
    cdef Work w
    cdef uint8_t* up = NULL
    cdef uint8_t* X = NULL
    cdef uint8_t* Y = NULL
    if _alloc_work(n, &w):
        _free_work(&w)
        raise MemoryError()
    if dense:
        up = <uint8_t*>calloc(size, 1)
        X = <uint8_t*>calloc(size, 1)
        Y = <uint8_t*>calloc(size, 1)
        if not (up and X and Y):
            free(up); free(X); free(Y); _free_work(&w)
            raise MemoryError()
    with nogil:
        for s in range(samples):
            key = a_keys[s]
            if dense:
                for c in range(2, size):
                    x = mix64(key + <uint64_t>(c - 1) * GAMMA)
                    up[c] = (x >> 11) < thr
                _two_pass(n, up, X, Y)
                cnt_x = 0
                cnt_y = 0
                best = 0
                for i in range(1, first_leaf):
                    cnt_x += X[i]
                    cnt_y += Y[i]
                    if Y[i] and best == 0:
                        best = i
                cluster[s] = cnt_x
                down[s] = cnt_y
                maxlvl[s] = _level(n, best) if best else 0
                root[s] = Y[1]
                for j in range(nw):
                    watched[s, j] = X[a_watch[j]]
                continue
            # sparse: geometric skipping over the edge sequence
            w.n_ups = 0
            if p >= 1.0:
                for c in range(2, size):
                    w.ups[w.n_ups] = c
                    w.n_ups += 1
            elif p > 0.0:
                pos = 0
                k = 0
                while True:
                    k += 1
                    x = mix64(key + k * GAMMA)
                    u = (<double>((x >> 11) + 1)) * INV53
                    skip = log(u) / lq
                    if skip >= <double>(n_edges - pos):
                        break
                    pos += <Py_ssize_t>skip
                    w.ups[w.n_ups] = pos + 2
                    w.n_ups += 1
                    pos += 1
            _wet_sparse(n, &w)
            down[s] = w.n_ywet
            cluster[s] = w.n_ywet + w.flooded
            best = 0
            for i in range(w.n_ywet):
                if best == 0 or w.ywet[i] < best:
                    best = w.ywet[i]
            maxlvl[s] = _level(n, best) if best else 0
            root[s] = 1 if (w.st[1] & F_Y) else 0
            for j in range(nw):
                wv = a_watch[j]
                watched[s, j] = 1 if (wv >= first_leaf or (w.st[wv] & (F_Y | F_X))) else 0
            for i in range(w.n_touched):
                w.st[w.touched[i]] = 0
    free(up); free(X); free(Y)
    _free_work(&w)
    return cluster, down, maxlvl, root, watched[:, :nw]
