"""Reference implementations of the hot kernels (no compiled code).

The compiled module ``_ckernels`` mirrors these function by function and
must return identical results.
"""

import math

import numpy as np


def nearest_pairs(t_signal, t_idler, max_dt):
    """Greedy nearest-neighbour matching of two sorted timestamp arrays.

    Signal events are taken in time order; each claims the nearest idler event
    not yet used, provided it lies within ``max_dt``. Ties go to the earlier
    idler. Returns index arrays ``(signal_idx, idler_idx)``.
    """
    ts = [float(t) for t in t_signal]
    ti = [float(t) for t in t_idler]
    ns, ni = len(ts), len(ti)
    used = [False] * ni
    out_s, out_i = [], []
    p = 0
    for j in range(ns):
        t = ts[j]
        while p < ni and ti[p] < t:
            p += 1
        q = p - 1
        while q >= 0 and used[q] and t - ti[q] <= max_dt:
            q -= 1
        r = p
        while r < ni and used[r] and ti[r] - t <= max_dt:
            r += 1
        best = -1
        best_d = math.inf
        if q >= 0 and not used[q]:
            d = t - ti[q]
            if d <= max_dt:
                best, best_d = q, d
        if r < ni and not used[r]:
            d = ti[r] - t
            if d <= max_dt and d < best_d:
                best = r
        if best >= 0:
            used[best] = True
            out_s.append(j)
            out_i.append(best)
    return np.array(out_s, dtype=np.int64), np.array(out_i, dtype=np.int64)


def spectral_average(ks, w, k_p, delta_L, mu):
    """Weighted mean over signal wavenumbers of the four-path coincidence probability."""
    return float(np.dot(w, four_term_np(k_p, ks, delta_L, mu)))


def four_term_np(k_p, k_s, delta_L, mu):
    # |e^{ia} + e^{ib} + e^{ic} + 1|^2 / 4 with a = b + c, written as cosines
    k_i = 2.0 * k_p - k_s
    a = 2.0 * k_p * delta_L
    b = k_s * delta_L
    c = k_i * delta_L
    bc = (k_s - k_i) * delta_L
    cross = 0.5 * (np.cos(a) + 2.0 * np.cos(b) + 2.0 * np.cos(c) + np.cos(bc))
    return 1.0 + mu * cross


def histogram_fixed(values, lo, hi, nbins):
    """Counts of ``values`` in ``nbins`` equal bins on ``[lo, hi)``; out-of-range values dropped.

    Bin edges are ``lo + k * (hi - lo) / nbins``, as in ``np.linspace``.
    """
    counts = [0] * nbins
    width = (hi - lo) / nbins
    for v in values:
        if lo <= v < hi:
            k = int(math.floor((v - lo) / width))
            if k >= nbins:
                k = nbins - 1
            # settle roundoff against the edges lo + k * width
            if k > 0 and v < lo + k * width:
                k -= 1
            elif k < nbins - 1 and v >= lo + (k + 1) * width:
                k += 1
            counts[k] += 1
    return np.array(counts, dtype=np.int64)
