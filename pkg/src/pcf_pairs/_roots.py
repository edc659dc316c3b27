"""Sign-change bracketing and bisection shared by the dispersion and phase-matching code."""

import numpy as np
from scipy import optimize

__all__ = ["bisect", "find_brackets", "scan_roots"]


def bisect(f, a, b, xtol=0.0, rtol=1e-12, maxiter=200):
    """Bisection on ``[a, b]`` where ``f(a)`` and ``f(b)`` differ in sign.

    Thin wrapper over :func:`scipy.optimize.bisect`; stops when the bracket is
    narrower than about ``xtol + rtol * |root|``.
    """
    fa = f(a)
    fb = f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise ValueError(f"no sign change on [{a}, {b}]")
    # scipy needs a positive xtol and rtol >= 4 eps
    return optimize.bisect(f, a, b, xtol=max(xtol, 1e-300), rtol=max(rtol, 4 * np.finfo(float).eps),
                           maxiter=maxiter)


def find_brackets(x, y):
    """Index pairs ``(i, i + 1)`` of a sampled curve where ``y`` changes sign.

    Exact zeros on a sample point produce a degenerate bracket ``(i, i)``.
    """
    y = np.asarray(y, dtype=float)
    s = np.sign(y)
    out = []
    for i in range(len(y) - 1):
        if s[i] == 0.0:
            out.append((i, i))
        elif s[i] * s[i + 1] < 0:
            out.append((i, i + 1))
    if len(y) and s[-1] == 0.0:
        out.append((len(y) - 1, len(y) - 1))
    return out


def scan_roots(f, lo, hi, n=2000, xtol=0.0, rtol=1e-12):
    """All roots of a scalar function on ``[lo, hi]`` found by a dense scan then bisection.

    ``f`` must accept numpy arrays for the scan.
    """
    x = np.linspace(lo, hi, n)
    y = np.asarray(f(x), dtype=float)
    roots = []
    for i, j in find_brackets(x, y):
        if i == j:
            roots.append(float(x[i]))
        else:
            roots.append(float(bisect(lambda t: float(f(np.array([t]))[0]), x[i], x[j],
                                      xtol=xtol, rtol=rtol)))
    return roots
