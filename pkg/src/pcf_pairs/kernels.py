"""Hot-loop kernels: compiled Cython extension when built, pure Python otherwise.

Set ``PCF_PAIRS_PURE_PYTHON=1`` to force the fallback. ``BACKEND`` names the
implementation in use.
"""

import os

import numpy as np

from . import _kernels_py

_compiled = None
if os.environ.get("PCF_PAIRS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"

four_term_np = _kernels_py.four_term_np


def nearest_pairs(t_signal, t_idler, max_dt, backend=None):
    impl = _pick(backend)
    return impl.nearest_pairs(np.ascontiguousarray(t_signal, dtype=np.float64),
                              np.ascontiguousarray(t_idler, dtype=np.float64), float(max_dt))


def spectral_average(ks, w, k_p, delta_L, mu, backend=None):
    impl = _pick(backend)
    return float(impl.spectral_average(np.ascontiguousarray(ks, dtype=np.float64),
                                       np.ascontiguousarray(w, dtype=np.float64),
                                       float(k_p), float(delta_L), float(mu)))


def histogram_fixed(values, lo, hi, nbins, backend=None):
    impl = _pick(backend)
    return impl.histogram_fixed(np.ascontiguousarray(values, dtype=np.float64),
                                float(lo), float(hi), int(nbins))


def _pick(backend):
    if backend is None:
        return _compiled if _compiled is not None else _kernels_py
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {backend!r}")
