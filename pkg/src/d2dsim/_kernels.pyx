# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels; see ``_kernels_py`` for the reference versions."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, lgamma, fabs, sqrt, ceil

cnp.import_array()

cdef double EPS = 1e-15
cdef double TINY = 1e-300
cdef int MAX_ITER = 100000


cdef double _gamma_series(double a, double x) nogil:
    cdef double ap = a
    cdef double term = 1.0 / a
    cdef double total = term
    cdef int n
    for n in range(MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if fabs(term) < fabs(total) * EPS:
            break
    return total * exp(-x + a * log(x) - lgamma(a))


cdef double _gamma_contfrac(double a, double x) nogil:
    cdef double b = x + 1.0 - a
    cdef double c = 1.0 / TINY
    cdef double d = 1.0 / b
    cdef double h = d
    cdef double an, delta
    cdef int i
    for i in range(1, MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if fabs(d) < TINY:
            d = TINY
        c = b + an / c
        if fabs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < EPS:
            break
    return exp(-x + a * log(x) - lgamma(a)) * h


cpdef double gammainc_lower(double a, double x):
    cdef double p
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        p = _gamma_series(a, x)
    else:
        p = 1.0 - _gamma_contfrac(a, x)
    if p < 0.0:
        return 0.0
    if p > 1.0:
        return 1.0
    return p


def ibp_old_counts(new_counts, double[::1] uniforms):
    cdef cnp.int64_t[:, ::1] new = np.ascontiguousarray(new_counts, dtype=np.int64)
    cdef Py_ssize_t n_rep = new.shape[0]
    cdef Py_ssize_t n_users = new.shape[1]
    out = np.zeros((n_rep, n_users), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] old = out
    cdef Py_ssize_t r, i, c, alive, total, max_total = 0, pos = 0
    cdef Py_ssize_t n_uniform = uniforms.shape[0]
    cdef cnp.int64_t taken

    for r in range(n_rep):
        total = 0
        for i in range(n_users):
            total += new[r, i]
        if total > max_total:
            max_total = total
    buf = np.empty(max_total if max_total > 0 else 1, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = buf

    for r in range(n_rep):
        alive = 0
        for i in range(n_users):
            if pos + alive > n_uniform:
                raise ValueError("not enough uniforms for the requested replays")
            taken = 0
            for c in range(alive):
                if uniforms[pos] < counts[c] / (i + 1.0):
                    counts[c] += 1
                    taken += 1
                pos += 1
            old[r, i] = taken
            for c in range(alive, alive + new[r, i]):
                counts[c] = 1
            alive += new[r, i]
    return out


def skellam_pmf(double mu1, double mu2, ks):
    ks_arr = np.asarray(ks, dtype=np.int64)
    out = np.empty(ks_arr.shape, dtype=np.float64)
    cdef cnp.int64_t[::1] kv = ks_arr.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i_max = <Py_ssize_t>ceil(mu2 + 15.0 * sqrt(mu2 + 1.0) + 40.0)
    cdef double lm1 = log(mu1), lm2 = log(mu2)
    cdef Py_ssize_t p, i, lo
    cdef cnp.int64_t k
    cdef double s, j
    for p in range(kv.shape[0]):
        k = kv[p]
        lo = -k if k < 0 else 0
        s = 0.0
        for i in range(lo, i_max + 1):
            j = <double>(i + k)
            s += exp((j * lm1 - mu1 - lgamma(j + 1.0)) + (i * lm2 - mu2 - lgamma(i + 1.0)))
        ov[p] = s
    return out
