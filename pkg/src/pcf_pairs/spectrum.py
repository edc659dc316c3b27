"""Separation of the pair spectrum (rate ~ P^2) from the linear background (rate ~ P).

Each wavelength bin is modeled as ``S(P) = a P + b P^2``. Two spectra at
different pump powers determine ``(a, b)`` exactly; more spectra are combined
by least squares. Bins inside a notch-filter stop band carry no data (NaN).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# relative size below which a solved component is numerical noise and snapped to zero
_ZERO_SNAP = 1e-12


class SpectrumError(ValueError):
    pass


@dataclass(frozen=True)
class MeasuredSpectrum:
    """Per-bin count rate [1/s] at a single pump power [W]."""

    lambda_axis: np.ndarray
    counts: np.ndarray
    pump_power: float
    stop_band: tuple | None = None

    def __post_init__(self):
        lam = np.array(self.lambda_axis, dtype=float)
        cts = np.array(self.counts, dtype=float)
        if lam.ndim != 1 or lam.shape != cts.shape:
            raise SpectrumError("axis and counts must be 1-D and of equal length")
        if len(lam) > 1 and np.any(np.diff(lam) <= 0):
            raise SpectrumError("wavelength axis must be strictly increasing")
        if not self.pump_power > 0:
            raise SpectrumError("pump power must be positive")
        if self.stop_band is not None:
            lo, hi = self.stop_band
            if not lo < hi:
                raise SpectrumError("stop band must be (low, high)")
            cts[(lam >= lo) & (lam <= hi)] = np.nan
        valid = ~np.isnan(cts)
        if np.any(cts[valid] < 0) or np.any(np.isinf(cts)):
            raise SpectrumError("counts must be finite and non-negative outside the stop band")
        object.__setattr__(self, "lambda_axis", lam)
        object.__setattr__(self, "counts", cts)

    @property
    def valid(self):
        return ~np.isnan(self.counts)

    @classmethod
    def from_csv(cls, path):
        """Read ``lambda_nm,counts_per_s`` with ``# pump_power_W=`` / ``# stop_band_nm=`` comments."""
        power = None
        stop = None
        lam, cts = [], []
        header = False
        with Path(path).open() as fh:
            for lineno, line in enumerate(fh, start=1):
                s = line.strip()
                if not s:
                    continue
                if s.startswith("#"):
                    key, _, val = s.lstrip("#").strip().partition("=")
                    key = key.strip()
                    try:
                        if key == "pump_power_W":
                            power = float(val)
                        elif key == "stop_band_nm":
                            lo, hi = (float(v) for v in val.split(","))
                            stop = (lo, hi)
                    except ValueError:
                        raise SpectrumError(f"line {lineno}: bad header value {s!r}") from None
                    continue
                if not header:
                    if [c.strip() for c in s.split(",")] != ["lambda_nm", "counts_per_s"]:
                        raise SpectrumError(f"line {lineno}: expected header 'lambda_nm,counts_per_s'")
                    header = True
                    continue
                parts = s.split(",")
                if len(parts) != 2:
                    raise SpectrumError(f"line {lineno}: expected 2 columns")
                try:
                    lam.append(float(parts[0]))
                    cts.append(float(parts[1]) if parts[1].strip().lower() not in ("", "nan") else math.nan)
                except ValueError:
                    raise SpectrumError(f"line {lineno}: non-numeric value in {s!r}") from None
        if power is None:
            raise SpectrumError(f"{path}: missing '# pump_power_W=' header")
        return cls(np.array(lam), np.array(cts), power, stop)

    def to_csv(self, path):
        with Path(path).open("w") as fh:
            fh.write(f"# pump_power_W={float(self.pump_power)!r}\n")
            if self.stop_band is not None:
                fh.write(f"# stop_band_nm={float(self.stop_band[0])!r},{float(self.stop_band[1])!r}\n")
            fh.write("lambda_nm,counts_per_s\n")
            for lam, c in zip(self.lambda_axis, self.counts):
                fh.write(f"{float(lam)!r},{_fmt(c)}\n")


@dataclass(frozen=True)
class DecomposedSpectrum:
    """Per-bin coefficients of ``a P + b P^2`` and the components at ``reference_power``."""

    lambda_axis: np.ndarray
    linear_coeff: np.ndarray  # 1/(s W)
    pair_coeff: np.ndarray  # 1/(s W^2)
    reference_power: float
    clamped: np.ndarray  # bool per bin
    stop_band: tuple | None = None

    @property
    def pair_component(self):
        return self.pair_coeff * self.reference_power**2

    @property
    def linear_component(self):
        return self.linear_coeff * self.reference_power

    def at_power(self, P):
        """(linear, pair) per-bin rates at pump power ``P``."""
        return self.linear_coeff * P, self.pair_coeff * P**2

    def to_csv(self, path):
        with Path(path).open("w") as fh:
            fh.write(f"# reference_power_W={float(self.reference_power)!r}\n")
            if self.stop_band is not None:
                fh.write(f"# stop_band_nm={float(self.stop_band[0])!r},{float(self.stop_band[1])!r}\n")
            fh.write("lambda_nm,counts_per_s,pair,linear,clamped\n")
            total = self.pair_component + self.linear_component
            for row in zip(self.lambda_axis, total, self.pair_component, self.linear_component,
                           self.clamped):
                lam, tot, pair, lin, cl = row
                fh.write(f"{float(lam)!r},{_fmt(tot)},{_fmt(pair)},{_fmt(lin)},{int(cl)}\n")


def _fmt(x):
    return "nan" if np.isnan(x) else repr(float(x))


def decompose(*spectra, min_power_ratio=1.2):
    """Split two or more spectra into linear-in-P and quadratic-in-P parts per bin.

    Negative solutions are clamped to zero and flagged in ``clamped``. Stop-band
    bins stay NaN. The result does not depend on the order of the inputs.
    """
    if len(spectra) < 2:
        raise SpectrumError("need at least two spectra at different pump powers")
    axis = spectra[0].lambda_axis
    for s in spectra[1:]:
        if s.lambda_axis.shape != axis.shape or not np.array_equal(s.lambda_axis, axis):
            raise SpectrumError("spectra have mismatched wavelength axes")
    order = sorted(range(len(spectra)), key=lambda i: spectra[i].pump_power)
    spectra = [spectra[i] for i in order]
    powers = np.array([s.pump_power for s in spectra])
    if powers[-1] / powers[0] < min_power_ratio:
        raise SpectrumError(
            f"pump powers {powers.tolist()} too close: ratio must be >= {min_power_ratio}")
    S = np.vstack([s.counts for s in spectra])  # (n_spec, n_bins)
    missing = np.any(np.isnan(S), axis=0)
    if len(spectra) == 2:
        p1, p2 = powers
        s1, s2 = S
        b = (s2 * p1 - s1 * p2) / (p1 * p2 * (p2 - p1))
        a = (s1 * p2**2 - s2 * p1**2) / (p1 * p2 * (p2 - p1))
    else:
        X = np.column_stack([powers, powers**2])
        coef, *_ = np.linalg.lstsq(X, np.where(missing, 0.0, S), rcond=None)
        a, b = coef
    scale = np.max(np.abs(np.where(np.isnan(S), 0.0, S)), axis=0)
    a = np.where(np.abs(a * powers[-1]) <= _ZERO_SNAP * scale, 0.0, a)
    b = np.where(np.abs(b * powers[-1] ** 2) <= _ZERO_SNAP * scale, 0.0, b)
    clamped = ((a < 0) | (b < 0)) & ~missing
    a = np.where(a < 0, 0.0, a)
    b = np.where(b < 0, 0.0, b)
    a = np.where(missing, np.nan, a)
    b = np.where(missing, np.nan, b)
    stop = next((s.stop_band for s in spectra if s.stop_band is not None), None)
    return DecomposedSpectrum(axis.copy(), a, b, float(powers[-1]), clamped, stop)


def background_model(decomposed, P):
    """Linear (Raman + residual pump) per-bin rate rescaled to pump power ``P``."""
    if not P > 0:
        raise SpectrumError("pump power must be positive")
    return decomposed.linear_coeff * P


def _bin_edges(axis):
    axis = np.asarray(axis, dtype=float)
    if len(axis) == 1:
        return np.array([axis[0] - 0.5, axis[0] + 0.5])
    mid = 0.5 * (axis[1:] + axis[:-1])
    return np.concatenate([[2 * axis[0] - mid[0]], mid, [2 * axis[-1] - mid[-1]]])


def band_integrate(spectrum, center, fwhm, shape="rect", stop_band=None):
    """Rate [1/s] passed by a band-pass filter of given center and FWHM [nm].

    ``spectrum`` is a :class:`MeasuredSpectrum`, or a pair ``(lambda_axis, per_bin_rates)``.
    The rectangular window weights each bin by its fractional overlap; the
    gaussian window weights bin centers.
    """
    if isinstance(spectrum, MeasuredSpectrum):
        axis, rates, stop_band = spectrum.lambda_axis, spectrum.counts, spectrum.stop_band
    else:
        axis, rates = (np.asarray(v, dtype=float) for v in spectrum)
    if not fwhm > 0:
        raise SpectrumError("fwhm must be positive")
    lo, hi = center - fwhm / 2.0, center + fwhm / 2.0
    edges = _bin_edges(axis)
    if shape == "rect":
        if lo < edges[0] or hi > edges[-1]:
            raise SpectrumError(f"band [{lo}, {hi}] nm outside the spectrum axis")
        if stop_band is not None and lo < stop_band[1] and hi > stop_band[0]:
            raise SpectrumError(
                f"band [{lo}, {hi}] nm overlaps stop band {stop_band}: "
                f"[{max(lo, stop_band[0])}, {min(hi, stop_band[1])}] nm")
        overlap = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
        weight = overlap / np.diff(edges)
    elif shape == "gaussian":
        reach = 3.0 * fwhm
        if center - reach < edges[0] or center + reach > edges[-1]:
            raise SpectrumError(f"gaussian band at {center} nm exceeds the spectrum axis")
        if stop_band is not None and center - reach < stop_band[1] and center + reach > stop_band[0]:
            raise SpectrumError(f"gaussian band at {center} nm overlaps stop band {stop_band}")
        weight = np.exp(-4.0 * math.log(2.0) * (axis - center) ** 2 / fwhm**2)
    else:
        raise SpectrumError(f"unknown filter shape {shape!r}")
    sel = weight > 0
    if np.any(np.isnan(rates[sel])):
        raise SpectrumError("band covers bins without data")
    return float(np.sum(weight[sel] * rates[sel]))


def synthetic_spectra(lambda_axis, powers, pair_centers=(660.0, 896.8), pair_width=12.0,
                      pair_peak=8e4, raman_peak=2e3, pump_nm=760.4, raman_width=120.0,
                      stop_band=(740.0, 790.0), reference_power=0.1):
    """Noise-free model spectra for testing the decomposition.

    Pairs are gaussian lines at the branch wavelengths scaling as P^2, and the
    Raman/pump background is a broad lorentzian around the pump scaling as P;
    both amplitudes are specified at ``reference_power``.
    """
    lam = np.asarray(lambda_axis, dtype=float)
    pair = sum(np.exp(-0.5 * ((lam - c) / pair_width) ** 2) for c in pair_centers) * pair_peak
    raman = raman_peak / (1.0 + ((lam - pump_nm) / raman_width) ** 2)
    out = []
    for P in powers:
        r = P / reference_power
        out.append(MeasuredSpectrum(lam, raman * r + pair * r**2, P, stop_band))
    return out
