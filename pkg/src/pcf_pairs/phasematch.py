"""Four-wave-mixing phase matching: mismatch, pair density, trunk/branch roots, spectral maps.

Signal and idler sit at ``omega_p + dw`` and ``omega_p - dw``. The pair
count per unit bandwidth and time is ``(gamma P L)^2 |sin(kappa L)/(kappa L)|^2``
with ``kappa^2 = (dk/2)(dk/2 + 2 gamma P)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from ._roots import scan_roots
from .dispersion import (
    OutOfRangeError,
    omega_to_wavelength,
    wavelength_to_omega,
)

EXPERIMENT_GAMMA = 0.102  # 1/(W m), i.e. 102 /(W km)
EXPERIMENT_LENGTH = 1.93  # m
EXPERIMENT_PUMP_NM = 760.4
EXPERIMENT_LOSS_DB_KM = 50.0

# below this |kappa L|^2 the sinc/sinh factor uses its Taylor series
_SERIES_CUTOFF = 1e-8


@dataclass(frozen=True)
class FwmConfig:
    """Fiber and pump parameters. ``gamma`` in 1/(W m), ``P`` in W, ``L`` in m, ``lambda_p`` in nm."""

    gamma: float
    P: float
    L: float
    lambda_p: float
    loss_db_per_km: float = EXPERIMENT_LOSS_DB_KM

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.P >= 0:
            raise ValueError("pump power must be non-negative")
        if not self.L > 0:
            raise ValueError("fiber length must be positive")
        if not self.lambda_p > 0:
            raise ValueError("pump wavelength must be positive")

    @classmethod
    def experiment(cls, P=0.1, lambda_p=EXPERIMENT_PUMP_NM):
        return cls(EXPERIMENT_GAMMA, P, EXPERIMENT_LENGTH, lambda_p)

    @property
    def omega_p(self):
        return float(wavelength_to_omega(self.lambda_p))

    @property
    def gpl(self):
        """Dimensionless nonlinear phase gamma*P*L."""
        return self.gamma * self.P * self.L

    def with_(self, **kw):
        d = dict(gamma=self.gamma, P=self.P, L=self.L, lambda_p=self.lambda_p,
                 loss_db_per_km=self.loss_db_per_km)
        d.update(kw)
        return FwmConfig(**d)


@dataclass(frozen=True)
class PairPoint:
    lambda_s: float  # nm, blue photon
    lambda_i: float  # nm
    delta_omega: float  # rad/s
    N_density: float
    kind: str = ""


@dataclass(frozen=True)
class SpectralDensityMap:
    """``values[i, j]`` is the pair density for pump ``lambda_p_axis[i]`` at ``lambda_axis[j]``."""

    lambda_p_axis: np.ndarray
    lambda_axis: np.ndarray
    values: np.ndarray
    gpl: float = 0.0

    @property
    def cell_nm(self):
        return float(self.lambda_axis[1] - self.lambda_axis[0]) if len(self.lambda_axis) > 1 else 0.0


def conjugate_wavelength(lambda_p, lambda_s):
    """Partner wavelength from 2/lambda_p = 1/lambda_s + 1/lambda_i [nm]."""
    inv = 2.0 / np.asarray(lambda_p, dtype=float) - 1.0 / np.asarray(lambda_s, dtype=float)
    if np.any(inv <= 0):
        raise ValueError(f"lambda_s={lambda_s} nm too short for pump {lambda_p} nm: "
                         "partner frequency would be non-positive")
    out = 1.0 / inv
    return float(out) if np.ndim(out) == 0 else out


def delta_k(model, lambda_p, delta_omega):
    """Phase mismatch k(ws) + k(wi) - 2 k(wp) [rad/m] for ws, wi = wp +/- delta_omega.

    The affine gauge part of k cancels identically and is never evaluated.
    """
    wp = float(wavelength_to_omega(lambda_p))
    dw = np.asarray(delta_omega, dtype=float)
    k = model.curvature_part
    out = k(wp + dw) + k(wp - dw) - 2.0 * k(np.full_like(dw, wp))
    return float(out) if out.ndim == 0 else out


def _sinc2_signed(s):
    """(sin x / x)^2 as a function of s = x^2, continued to sinh for s < 0."""
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    small = np.abs(s) < _SERIES_CUTOFF
    g = 1.0 - s[small] / 6.0 + s[small] ** 2 / 120.0
    out[small] = g * g
    pos = (s > 0) & ~small
    x = np.sqrt(s[pos])
    out[pos] = (np.sin(x) / x) ** 2
    neg = (s < 0) & ~small
    y = np.sqrt(-s[neg])
    out[neg] = (np.sinh(y) / y) ** 2
    return out


def phase_match_factor(dk, config):
    """|sin(kappa L) / (kappa L)|^2, analytically continued where kappa^2 < 0."""
    dk = np.asarray(dk, dtype=float)
    kappa2 = 0.5 * dk * (0.5 * dk + 2.0 * config.gamma * config.P)
    out = _sinc2_signed(kappa2 * config.L**2)
    return float(out) if out.ndim == 0 else out


def pair_density(model, config, delta_omega):
    """Pairs per unit (dOmega * dt): (gamma P L)^2 times the phase-match factor."""
    return config.gpl**2 * phase_match_factor(delta_k(model, config.lambda_p, delta_omega), config)


def pair_rate(model, config, delta_omega, dOmega, dt):
    """Pair number N within bandwidth ``dOmega`` [rad/s, signal side] and time ``dt`` [s]."""
    if not dOmega > 0 or not dt > 0:
        raise ValueError("dOmega and dt must be positive")
    return pair_density(model, config, delta_omega) * dOmega * dt


def integrated_pair_rate(model, config, center_nm, fwhm_nm, n=4001):
    """Pairs per second through a rectangular signal filter, integrating the density over dw."""
    wp = config.omega_p
    lo, hi = center_nm - fwhm_nm / 2.0, center_nm + fwhm_nm / 2.0
    dw = np.linspace(float(wavelength_to_omega(hi)), float(wavelength_to_omega(lo)), n) - wp
    return float(trapezoid(pair_density(model, config, dw), dw))


def max_detuning(model, lambda_p):
    """Largest dw keeping both wp + dw and wp - dw inside the model range."""
    wp = float(wavelength_to_omega(lambda_p))
    lo, hi = model.valid_range
    if not lo <= wp <= hi:
        raise OutOfRangeError(f"pump {lambda_p} nm outside the dispersion model range")
    return min(wp - lo, hi - wp)


def trunk_width(model, config):
    """Closed-form trunk detuning sqrt(4 gamma P / |beta2(wp)|) [rad/s]."""
    b2 = abs(float(model.beta2(config.omega_p)))
    if b2 == 0.0:
        return math.inf
    return math.sqrt(4.0 * config.gamma * config.P / b2)


def branch_threshold(model, config):
    """Detuning separating trunk from branch solutions: four trunk widths, capped at the range."""
    return min(4.0 * trunk_width(model, config), max_detuning(model, config.lambda_p))


def _points(model, config, roots, kind):
    wp = config.omega_p
    out = []
    for dw in roots:
        out.append(PairPoint(
            lambda_s=float(omega_to_wavelength(wp + dw)),
            lambda_i=float(omega_to_wavelength(wp - dw)),
            delta_omega=float(dw),
            N_density=float(pair_density(model, config, dw)),
            kind=kind,
        ))
    return out


def branch_solutions(model, config, n_scan=2000, rtol=1e-9):
    """Nontrivial roots of Delta k = 0 beyond the trunk exclusion zone."""
    dw_max = max_detuning(model, config.lambda_p)
    dw_min = branch_threshold(model, config)
    if dw_min >= dw_max:
        return []
    lo = max(dw_min, dw_max / n_scan)
    roots = scan_roots(lambda x: delta_k(model, config.lambda_p, x), lo, dw_max, n_scan, rtol=rtol)
    return _points(model, config, [r for r in roots if r > 0], "branch")


def trunk_solutions(model, config, n_scan=2000, rtol=1e-9):
    """Roots of Delta k = -4 gamma P inside the trunk exclusion zone (near the pump)."""
    if not config.P > 0:
        raise ValueError("trunk solutions need a positive pump power")
    shift = 4.0 * config.gamma * config.P
    hi = branch_threshold(model, config)
    lo = hi / (n_scan * 50)
    roots = scan_roots(lambda x: delta_k(model, config.lambda_p, x) + shift, lo, hi, n_scan,
                       rtol=rtol)
    return _points(model, config, roots, "trunk")


def _map_row(model, config, lambda_p, lambda_axis, oversample=1):
    cfg = config.with_(lambda_p=float(lambda_p))
    if oversample == 1:
        return pair_density(model, cfg, wavelength_to_omega(lambda_axis) - cfg.omega_p)
    # peak-hold: each cell reports the largest density over evenly spread sub-samples
    step = lambda_axis[1] - lambda_axis[0]
    offs = (np.arange(oversample) + 0.5) / oversample - 0.5
    sub = lambda_axis[:, None] + step * offs[None, :]
    sub = np.clip(sub, lambda_axis[0], lambda_axis[-1])
    dens = pair_density(model, cfg, wavelength_to_omega(sub) - cfg.omega_p)
    return dens.max(axis=1)


def spectral_map(model, config, lambda_p_range, lambda_range, n_p=200, n_lambda=200,
                 workers=None, oversample=1):
    """Pair density over a (pump wavelength, photon wavelength) grid.

    The photon axis covers both signal and idler sides; each cell uses the
    detuning of that wavelength from the pump. ``workers`` > 1 spreads rows
    over threads; the result is identical to the serial evaluation.

    With ``oversample`` > 1 every cell holds the maximum over that many
    sub-samples across its width, so ridges narrower than a cell are not lost
    between grid points.
    """
    if int(oversample) != oversample or oversample < 1:
        raise ValueError("oversample must be a positive integer")
    if n_lambda < 2 and oversample > 1:
        raise ValueError("oversampling needs at least two photon wavelengths")
    oversample = int(oversample)
    lp_axis = np.linspace(*lambda_p_range, n_p)
    l_axis = np.linspace(*lambda_range, n_lambda)
    for lp in (lp_axis[0], lp_axis[-1]):
        for lam in (l_axis[0], l_axis[-1]):
            if not model.contains_wavelength(lp):
                raise OutOfRangeError(f"pump {lp} nm outside the dispersion model range")
            partner = conjugate_wavelength(lp, lam) if 1.0 / lam < 2.0 / lp else math.inf
            if not (model.contains_wavelength(lam) and model.contains_wavelength(partner)):
                raise OutOfRangeError(
                    f"photon {lam} nm (partner {partner:.2f} nm) at pump {lp} nm outside model range")
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda lp: _map_row(model, config, lp, l_axis, oversample), lp_axis))
    else:
        rows = [_map_row(model, config, lp, l_axis, oversample) for lp in lp_axis]
    return SpectralDensityMap(lp_axis, l_axis, np.vstack(rows), config.gpl)


def branch_ridge(smap, model, config, min_fraction=0.5, prominence=0.1):
    """Per pump wavelength, the signal-side grid wavelength of the branch ridge (NaN if none).

    A cell qualifies when it lies beyond the trunk exclusion zone, reaches
    ``min_fraction`` of the phase-matched density, and stands at least
    ``prominence`` (same units) above the lowest cell between it and the pump.
    The plateau around the pump only falls off outward, so it never qualifies.
    The ridge is the strongest qualifying cell. Use a peak-hold map
    (``oversample`` > 1) when the ridge is narrower than a cell.
    """
    out = np.full(len(smap.lambda_p_axis), np.nan)
    w_axis = wavelength_to_omega(smap.lambda_axis)
    peak = config.gpl**2
    for r, lp in enumerate(smap.lambda_p_axis):
        cfg = config.with_(lambda_p=float(lp))
        blue = np.flatnonzero(smap.lambda_axis < lp)[::-1]  # outward from the pump
        if len(blue) == 0:
            continue
        v = smap.values[r, blue]
        dip = np.minimum.accumulate(v)
        ok = ((w_axis[blue] - cfg.omega_p >= branch_threshold(model, cfg))
              & (v >= min_fraction * peak) & (v - dip >= prominence * peak))
        if np.any(ok):
            idx = np.flatnonzero(ok)
            out[r] = smap.lambda_axis[blue[idx[np.argmax(v[idx])]]]
    return out


def attenuation_efolding_length(loss_db_per_km):
    """Length [m] over which the power falls by 1/e for a loss in dB/km."""
    if not loss_db_per_km > 0:
        raise ValueError("loss must be positive")
    return 10.0 / math.log(10.0) / loss_db_per_km * 1e3
