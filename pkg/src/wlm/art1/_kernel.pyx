# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled ART1 search and update loops.

Mirrors ``_pure`` exactly; scores are accumulated in input order so both
backends produce bit-identical floats.
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc

cnp.import_array()

BACKEND = "cython"


cdef (Py_ssize_t, double, bint, Py_ssize_t) _search(
    const unsigned char[::1] p,
    const unsigned char[:, ::1] proto,
    const double[:, ::1] w,
    Py_ssize_t n_committed,
    bint with_uncommitted,
    double init_weight,
    double rho,
    bint allow_forced,
    double* scores,
    unsigned char* active,
) noexcept nogil:
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t n_nodes = n_committed + (1 if with_uncommitted else 0)
    cdef Py_ssize_t i, k, best, n_active, iters = 0, norm = 0, overlap
    cdef double s, ratio

    for i in range(n):
        norm += p[i]
    for k in range(n_committed):
        s = 0.0
        for i in range(n):
            s += w[k, i] * p[i]
        scores[k] = s
        active[k] = 1
    if with_uncommitted:
        s = 0.0
        for i in range(n):
            s += init_weight * p[i]
        scores[n_committed] = s
        active[n_committed] = 1
    n_active = n_nodes

    while n_active > 0:
        best = -1
        for k in range(n_nodes):
            if active[k] and (best < 0 or scores[k] > scores[best]):
                best = k
        iters += 1
        if best == n_committed:
            ratio = 1.0
        else:
            overlap = 0
            for i in range(n):
                overlap += proto[best, i] & p[i]
            ratio = <double>overlap / <double>norm
        if ratio > rho:
            return best, ratio, False, iters
        if n_active == 1:
            if allow_forced:
                return best, ratio, True, iters
            return -1, ratio, False, iters
        active[best] = 0
        n_active -= 1
    return -1, 0.0, False, iters


def search(
    const unsigned char[::1] p,
    const unsigned char[:, ::1] proto,
    const double[:, ::1] w,
    Py_ssize_t n_committed,
    bint with_uncommitted,
    double init_weight,
    double rho,
    bint allow_forced,
):
    """Return (winner, ratio, forced, iterations); winner is -1 when nothing matches."""
    cdef Py_ssize_t n_nodes = n_committed + 1
    cdef double* scores = <double*> malloc(n_nodes * sizeof(double))
    cdef unsigned char* active = <unsigned char*> malloc(n_nodes * sizeof(unsigned char))
    if scores == NULL or active == NULL:
        free(scores)
        free(active)
        raise MemoryError()
    try:
        res = _search(p, proto, w, n_committed, with_uncommitted, init_weight, rho,
                      allow_forced, scores, active)
    finally:
        free(scores)
        free(active)
    return res


cdef inline void _update(
    const unsigned char[::1] p,
    unsigned char[:, ::1] proto,
    double[:, ::1] w,
    Py_ssize_t j,
    bint fresh,
) noexcept nogil:
    cdef Py_ssize_t i, n = p.shape[0], total = 0
    cdef double denom
    for i in range(n):
        if fresh:
            proto[j, i] = p[i]
        else:
            proto[j, i] = proto[j, i] & p[i]
        total += proto[j, i]
    denom = 0.5 + <double>total
    for i in range(n):
        w[j, i] = <double>proto[j, i] / denom


def run_epoch(
    const unsigned char[:, ::1] patterns,
    unsigned char[:, ::1] proto,
    double[:, ::1] w,
    Py_ssize_t n_committed,
    Py_ssize_t max_nodes,
    double init_weight,
    double rho,
    long long[::1] assign,
    double[::1] ratios,
    unsigned char[::1] forced,
    long long[::1] iterations,
    long long[::1] members,
):
    """Present every pattern once, in order, updating the model in place.

    ``proto``/``w`` need room for ``min(max_nodes, n_committed + len(patterns))``
    rows.  Returns the new committed-node count.
    """
    cdef Py_ssize_t n_patterns = patterns.shape[0]
    cdef Py_ssize_t capacity = proto.shape[0]
    cdef Py_ssize_t r, j, it
    cdef double ratio
    cdef bint was_forced
    cdef double* scores = <double*> malloc((capacity + 1) * sizeof(double))
    cdef unsigned char* active = <unsigned char*> malloc((capacity + 1) * sizeof(unsigned char))
    if scores == NULL or active == NULL:
        free(scores)
        free(active)
        raise MemoryError()
    try:
        with nogil:
            for r in range(n_patterns):
                j, ratio, was_forced, it = _search(
                    patterns[r], proto, w, n_committed, n_committed < max_nodes,
                    init_weight, rho, True, scores, active)
                _update(patterns[r], proto, w, j, j == n_committed)
                if j == n_committed:
                    n_committed += 1
                members[j] += 1
                assign[r] = j
                ratios[r] = ratio
                forced[r] = was_forced
                iterations[r] = it
    finally:
        free(scores)
        free(active)
    return n_committed
