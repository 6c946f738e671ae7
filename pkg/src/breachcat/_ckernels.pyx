# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.

Two kernels dominate runtime: the compound-loss inner loop (billions of
Pareto-tail draws per forecast) and the exact pinball-line enumeration
(O(n^3) per quantile fit, repeated across bootstrap replicates). Both are
pure C loops over preallocated buffers; the NumPy fallbacks in
``_pykernels`` implement the same arithmetic.
"""

from libc.math cimport INFINITY, exp, fabs, log1p, pow

import numpy as np


def compound_totals(counts, unif, double alpha, double u, double m):
    """Sum Pareto-tail severities segment-by-segment.

    counts[i] severities are drawn for inner simulation i by inverse-CDF
    transforming consecutive entries of ``unif``; ``m`` may be ``inf`` for
    the untruncated tail. Returns one total per segment.
    """
    cdef long long[::1] cv = np.ascontiguousarray(counts, dtype=np.int64)
    cdef double[::1] uv = np.ascontiguousarray(unif, dtype=np.float64)
    cdef Py_ssize_t n = cv.shape[0]
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double k, c, total
    cdef Py_ssize_t i, j, pos = 0

    if m == INFINITY:
        k = 1.0
    else:
        k = 1.0 - pow(u / m, alpha)
    c = -1.0 / alpha
    with nogil:
        for i in range(n):
            total = 0.0
            for j in range(cv[i]):
                total += u * exp(log1p(-k * uv[pos]) * c)
                pos += 1
            ov[i] = total
    return out


def pinball_best(t, z, double tau):
    """Exact 1-covariate quantile-regression line by candidate enumeration.

    Candidates are every line through a pair of points with distinct
    abscissae plus the horizontal line through each point. Ties in loss are
    broken by smaller |slope|, then smaller intercept. Returns
    (intercept, slope, loss).
    """
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0]
    cdef double best_loss = INFINITY, best_absb = INFINITY
    cdef double best_a = INFINITY, best_b = 0.0
    cdef double a, b, absb, loss, r, dt
    cdef Py_ssize_t i, j, p

    with nogil:
        for i in range(n):
            a = zv[i]
            loss = 0.0
            for p in range(n):
                r = zv[p] - a
                loss += tau * r if r >= 0.0 else (tau - 1.0) * r
            if loss < best_loss or (loss == best_loss and (0.0 < best_absb or
                    (0.0 == best_absb and a < best_a))):
                best_loss = loss
                best_absb = 0.0
                best_a = a
                best_b = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                dt = tv[i] - tv[j]
                if dt == 0.0:
                    continue
                b = (zv[i] - zv[j]) / dt
                a = zv[i] - b * tv[i]
                absb = fabs(b)
                loss = 0.0
                for p in range(n):
                    r = zv[p] - a - b * tv[p]
                    loss += tau * r if r >= 0.0 else (tau - 1.0) * r
                    if loss > best_loss:
                        break  # pinball terms are nonnegative
                if loss < best_loss or (loss == best_loss and (absb < best_absb or
                        (absb == best_absb and a < best_a))):
                    best_loss = loss
                    best_absb = absb
                    best_a = a
                    best_b = b
    return best_a, best_b, best_loss
