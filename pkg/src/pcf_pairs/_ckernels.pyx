# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, floor, INFINITY

cnp.import_array()


def nearest_pairs(const double[::1] t_signal, const double[::1] t_idler, double max_dt):
    cdef Py_ssize_t ns = t_signal.shape[0]
    cdef Py_ssize_t ni = t_idler.shape[0]
    cdef Py_ssize_t j, p = 0, q, r, best, n_out = 0
    cdef double t, d, best_d
    cdef cnp.uint8_t[::1] used = np.zeros(ni, dtype=np.uint8)
    cdef cnp.int64_t[::1] out_s = np.empty(ns, dtype=np.int64)
    cdef cnp.int64_t[::1] out_i = np.empty(ns, dtype=np.int64)
    for j in range(ns):
        t = t_signal[j]
        while p < ni and t_idler[p] < t:
            p += 1
        q = p - 1
        while q >= 0 and used[q] and t - t_idler[q] <= max_dt:
            q -= 1
        r = p
        while r < ni and used[r] and t_idler[r] - t <= max_dt:
            r += 1
        best = -1
        best_d = INFINITY
        if q >= 0 and not used[q]:
            d = t - t_idler[q]
            if d <= max_dt:
                best = q
                best_d = d
        if r < ni and not used[r]:
            d = t_idler[r] - t
            if d <= max_dt and d < best_d:
                best = r
        if best >= 0:
            used[best] = 1
            out_s[n_out] = j
            out_i[n_out] = best
            n_out += 1
    return np.asarray(out_s[:n_out]).copy(), np.asarray(out_i[:n_out]).copy()


def spectral_average(const double[::1] ks, const double[::1] w, double k_p, double delta_L,
                     double mu):
    cdef Py_ssize_t n = ks.shape[0], m
    cdef double a = 2.0 * k_p * delta_L
    cdef double cos_a = cos(a)
    cdef double acc = 0.0, k_s, k_i, cross
    for m in range(n):
        k_s = ks[m]
        k_i = 2.0 * k_p - k_s
        cross = 0.5 * (cos_a + 2.0 * cos(k_s * delta_L) + 2.0 * cos(k_i * delta_L)
                       + cos((k_s - k_i) * delta_L))
        acc += w[m] * (1.0 + mu * cross)
    return acc


def histogram_fixed(const double[::1] values, double lo, double hi, Py_ssize_t nbins):
    cdef cnp.int64_t[::1] counts = np.zeros(nbins, dtype=np.int64)
    cdef double width = (hi - lo) / nbins
    cdef Py_ssize_t m, k
    cdef double v
    for m in range(values.shape[0]):
        v = values[m]
        if lo <= v < hi:
            k = <Py_ssize_t>floor((v - lo) / width)
            if k >= nbins:
                k = nbins - 1
            # settle roundoff against the edges lo + k * width
            if k > 0 and v < lo + k * width:
                k -= 1
            elif k < nbins - 1 and v >= lo + (k + 1) * width:
                k += 1
            counts[k] += 1
    return np.asarray(counts)
