# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: direct kernel mat-vec and the ordered interval search.

Must stay semantically identical to ``_purepy``.
"""
import numpy as np

from cython.parallel cimport prange
from libc.math cimport exp, fabs, pow, sqrt
from libc.stdlib cimport free, malloc

BACKEND = "cython"


cdef inline double profile(int family, double p0, double p1, double r) noexcept nogil:
    if family == 1:
        return exp(-r / p0)
    elif family == 2:
        return p1 * exp(-(r * r) / (4.0 * p0))
    elif family == 3:
        return pow(r, -p0)
    elif family == 4:
        return p0 - r if r < p0 else 0.0
    return 1.0


cdef double row_sum(const double[:, ::1] nodes, const double[::1] v, Py_ssize_t i,
                    int family, double p0, double p1, int manhattan,
                    int skip_diag) noexcept nogil:
    cdef Py_ssize_t j, k
    cdef Py_ssize_t n = nodes.shape[0]
    cdef Py_ssize_t p = nodes.shape[1]
    cdef double acc = 0.0
    cdef double dist, t
    for j in range(n):
        if skip_diag and j == i:
            continue
        dist = 0.0
        if manhattan:
            for k in range(p):
                dist = dist + fabs(nodes[i, k] - nodes[j, k])
        else:
            for k in range(p):
                t = nodes[i, k] - nodes[j, k]
                dist = dist + t * t
            dist = sqrt(dist)
        acc = acc + profile(family, p0, p1, dist) * v[j]
    return acc


def apply_direct(const double[:, ::1] nodes, const double[::1] v, int family,
                 double p0, double p1, bint manhattan, bint skip_diag,
                 int nthreads=1):
    """``out[i] = sum_j f(|x_i - x_j|) v[j]``; rows are independent, so the
    result does not depend on ``nthreads``."""
    cdef Py_ssize_t n = nodes.shape[0]
    cdef Py_ssize_t i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef int man = manhattan
    cdef int skip = skip_diag
    if nthreads < 1:
        nthreads = 1
    for i in prange(n, nogil=True, num_threads=nthreads, schedule="static"):
        o[i] = row_sum(nodes, v, i, family, p0, p1, man, skip)
    return out


cdef struct SearchState:
    int n
    int m
    double* cand
    int* counts
    double lo
    double hi
    double sep
    double cover
    double eps
    int family
    double p0
    double p1
    int mode
    double threshold
    double best
    int found
    int done
    long long n_admissible
    double* x
    int* idx
    int* best_idx


cdef double tuple_energy(SearchState* st) noexcept nogil:
    cdef int i, j
    cdef double e = 0.0
    for i in range(st.n):
        for j in range(i + 1, st.n):
            e = e + profile(st.family, st.p0, st.p1, st.x[j] - st.x[i])
    return e


cdef void dfs(SearchState* st, int level) noexcept nogil:
    cdef int k, t
    cdef int remaining = st.n - 1 - level
    cdef double v, e
    for k in range(st.counts[level]):
        if st.done:
            return
        v = st.cand[level * st.m + k]
        if v < st.lo - st.eps:
            continue
        if v > st.hi + st.eps:
            break
        if level == 0:
            if v - st.lo > st.cover + st.eps:
                break
        else:
            if v - st.x[level - 1] < st.sep - st.eps:
                continue
            if v - st.x[level - 1] > 2.0 * st.cover + st.eps:
                break
        if v + remaining * 2.0 * st.cover < st.hi - st.cover - st.eps:
            continue
        if v + remaining * st.sep > st.hi + st.eps:
            break
        st.x[level] = v
        st.idx[level] = k
        if remaining == 0:
            st.n_admissible += 1
            e = tuple_energy(st)
            if st.mode == 0:
                if not st.found or e > st.best:
                    st.best = e
                    st.found = 1
                    for t in range(st.n):
                        st.best_idx[t] = st.idx[t]
            elif e >= st.threshold:
                st.best = e
                st.found = 1
                st.done = 1
                for t in range(st.n):
                    st.best_idx[t] = st.idx[t]
        else:
            dfs(st, level + 1)


def interval_search(double[:, ::1] cand, int[::1] counts, double lo, double hi,
                    double sep, double cover, int family, double p0, double p1,
                    double eps, int mode, double threshold):
    """Enumerate increasing tuples ``x[0] < ... < x[n-1]`` with ``x[l]`` drawn
    from ``cand[l, :counts[l]]`` (ascending) that satisfy the separation and
    covering constraints on ``[lo, hi]``.

    ``mode == 0`` returns the first tuple attaining the maximal pair sum;
    ``mode == 1`` returns the first tuple whose pair sum is ``>= threshold``.
    Returns ``(found, pair_sum, indices, n_admissible)``; ``n_admissible`` is
    only a full count in mode 0.
    """
    cdef int n = cand.shape[0]
    cdef SearchState st
    best = np.full(n, -1, dtype=np.intc)
    cdef int[::1] best_view = best
    st.n = n
    st.m = cand.shape[1]
    st.cand = &cand[0, 0]
    st.counts = &counts[0]
    st.lo = lo
    st.hi = hi
    st.sep = sep
    st.cover = cover
    st.eps = eps
    st.family = family
    st.p0 = p0
    st.p1 = p1
    st.mode = mode
    st.threshold = threshold
    st.best = 0.0
    st.found = 0
    st.done = 0
    st.n_admissible = 0
    st.x = <double*> malloc(n * sizeof(double))
    st.idx = <int*> malloc(n * sizeof(int))
    st.best_idx = &best_view[0]
    try:
        with nogil:
            dfs(&st, 0)
    finally:
        free(st.x)
        free(st.idx)
    return bool(st.found), st.best, best, int(st.n_admissible)
