"""Propagation constant k(omega) reconstructed from tabulated group-velocity dispersion.

The tabulated dispersion parameter D(lambda) [ps/(nm km)] is converted to
beta2(omega) = -D lambda^2 / (2 pi c), interpolated with a cubic spline in
angular frequency, and integrated twice analytically on each spline piece.
Both integration constants are zero at ``omega_ref``; they are a gauge that
cancels in the phase mismatch.
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline, PPoly

from ._roots import bisect, find_brackets

C_LIGHT = 299_792_458.0  # m/s

# 1 ps/(nm km) expressed in s/m^2
PS_NM_KM = 1e-12 / (1e-9 * 1e3)

#: Zero-dispersion wavelength of the default fiber model [nm].
DEFAULT_ZDW_NM = 760.0
#: Dispersion slope of the default model at the zero-dispersion wavelength [ps/(nm^2 km)].
#: Assumed value; Delta k = 0 roots depend only on the curvature/slope ratio, the slope
#: sets the trunk width.
DEFAULT_SLOPE = 0.5
#: Curvature of the default D(lambda) [ps/(nm^3 km)], calibrated with
#: :func:`calibrate_default_curvature` so that the Delta k = 0 branch for a
#: 760.4 nm pump passes through a 660 nm signal.
DEFAULT_CURVATURE = 1.9325328772294e-03
#: Wavelength span of the tabulated default model [nm].
DEFAULT_RANGE_NM = (450.0, 1600.0)
DEFAULT_STEP_NM = 1.0


class DispersionError(ValueError):
    """Invalid dispersion table or model construction."""


class GvdParseError(DispersionError):
    """Malformed GVD CSV input; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OutOfRangeError(ValueError):
    """Frequency outside the tabulated range of a dispersion model."""


class NoZeroDispersionError(ValueError):
    """beta2 has no sign change inside the valid range."""


class MultipleZeroDispersionError(ValueError):
    """beta2 has several sign changes; ``roots`` lists all of them [nm]."""

    def __init__(self, roots):
        self.roots = list(roots)
        super().__init__(f"multiple zero-dispersion wavelengths: {self.roots}")


def wavelength_to_omega(lambda_nm):
    return 2.0 * np.pi * C_LIGHT / (np.asarray(lambda_nm, dtype=float) * 1e-9)


def omega_to_wavelength(omega):
    return 2.0 * np.pi * C_LIGHT / np.asarray(omega, dtype=float) * 1e9


def d_to_beta2(lambda_nm, d_ps_nm_km):
    """Convert D [ps/(nm km)] to beta2 [s^2/m]."""
    lam = np.asarray(lambda_nm, dtype=float) * 1e-9
    return -np.asarray(d_ps_nm_km, dtype=float) * PS_NM_KM * lam**2 / (2.0 * np.pi * C_LIGHT)


def beta2_to_d(lambda_nm, beta2):
    """Convert beta2 [s^2/m] to D [ps/(nm km)]."""
    lam = np.asarray(lambda_nm, dtype=float) * 1e-9
    return -np.asarray(beta2, dtype=float) * 2.0 * np.pi * C_LIGHT / lam**2 / PS_NM_KM


@dataclass(frozen=True)
class GvdTable:
    """Tabulated dispersion parameter D(lambda)."""

    wavelength_nm: np.ndarray
    d_ps_nm_km: np.ndarray
    source_label: str = ""

    def __post_init__(self):
        wl = np.array(self.wavelength_nm, dtype=float)
        d = np.array(self.d_ps_nm_km, dtype=float)
        if wl.ndim != 1 or wl.shape != d.shape:
            raise DispersionError("wavelength and D columns must be 1-D and of equal length")
        if len(wl) < 4:
            raise DispersionError(f"need at least 4 rows for cubic interpolation, got {len(wl)}")
        if not np.all(np.isfinite(wl)) or not np.all(np.isfinite(d)):
            raise DispersionError("non-finite wavelength or D value")
        if np.any(wl <= 0):
            raise DispersionError("wavelengths must be positive")
        if np.any(np.diff(wl) <= 0):
            raise DispersionError("wavelengths must be strictly increasing")
        wl.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "wavelength_nm", wl)
        object.__setattr__(self, "d_ps_nm_km", d)

    @classmethod
    def from_function(cls, func, lo_nm, hi_nm, n, source_label=""):
        wl = np.linspace(lo_nm, hi_nm, n)
        return cls(wl, func(wl), source_label)

    @classmethod
    def from_csv(cls, path):
        """Parse ``wavelength_nm,D_ps_nm_km`` CSV; ``#`` lines are comments."""
        path = Path(path)
        rows = []
        header_seen = False
        with path.open(newline="") as fh:
            for lineno, line in enumerate(fh, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                if not header_seen:
                    cols = [c.strip() for c in stripped.split(",")]
                    if cols != ["wavelength_nm", "D_ps_nm_km"]:
                        raise GvdParseError(
                            f"expected header 'wavelength_nm,D_ps_nm_km', got {stripped!r}", lineno)
                    header_seen = True
                    continue
                parts = next(csv.reader([stripped]))
                if len(parts) != 2:
                    raise GvdParseError(f"expected 2 columns, got {len(parts)}", lineno)
                try:
                    wl, d = float(parts[0]), float(parts[1])
                except ValueError:
                    raise GvdParseError(f"non-numeric value in {stripped!r}", lineno) from None
                if not (math.isfinite(wl) and math.isfinite(d)):
                    raise GvdParseError(f"non-finite value in {stripped!r}", lineno)
                rows.append((wl, d, lineno))
        if not header_seen:
            raise GvdParseError("missing header line")
        for (w0, _, _), (w1, _, ln) in zip(rows, rows[1:]):
            if w1 <= w0:
                raise GvdParseError("wavelengths must be strictly increasing", ln)
        if len(rows) < 4:
            raise GvdParseError(f"need at least 4 data rows, got {len(rows)}")
        wl = [r[0] for r in rows]
        d = [r[1] for r in rows]
        return cls(np.array(wl), np.array(d), source_label=str(path))

    def to_csv(self, path):
        with Path(path).open("w", newline="") as fh:
            if self.source_label:
                fh.write(f"# source: {self.source_label}\n")
            fh.write("wavelength_nm,D_ps_nm_km\n")
            for wl, d in zip(self.wavelength_nm, self.d_ps_nm_km):
                fh.write(f"{float(wl)!r},{float(d)!r}\n")


@dataclass(frozen=True)
class DispersionModel:
    """Immutable k(omega) model. Evaluation outside ``valid_range`` raises."""

    omega_ref: float
    beta2_curve: CubicSpline
    k_curve: PPoly
    valid_range: tuple
    # gauge terms: k_at adds affine_c0 + affine_c1 * omega
    affine_c0: float = 0.0
    affine_c1: float = 0.0
    source_label: str = field(default="", compare=False)

    def _check(self, omega):
        omega = np.asarray(omega, dtype=float)
        lo, hi = self.valid_range
        if np.any(~np.isfinite(omega)) or np.any(omega < lo) or np.any(omega > hi):
            bad = omega[(omega < lo) | (omega > hi) | ~np.isfinite(omega)]
            raise OutOfRangeError(
                f"omega {bad.flat[0]:.6e} rad/s outside valid range [{lo:.6e}, {hi:.6e}] "
                f"({omega_to_wavelength(hi):.2f}-{omega_to_wavelength(lo):.2f} nm)")
        return omega

    def beta2(self, omega):
        """beta2(omega) [s^2/m]."""
        return self.beta2_curve(self._check(omega))

    def curvature_part(self, omega):
        """k(omega) with the affine gauge removed: zero value and slope at ``omega_ref``."""
        return self.k_curve(self._check(omega))

    def k_at(self, omega):
        omega = self._check(omega)
        return self.k_curve(omega) + self.affine_c0 + self.affine_c1 * omega

    def with_affine(self, c0, c1):
        """Same dispersion with ``c0 + c1 * omega`` added to k (a pure gauge change)."""
        return DispersionModel(self.omega_ref, self.beta2_curve, self.k_curve, self.valid_range,
                               self.affine_c0 + c0, self.affine_c1 + c1, self.source_label)

    def contains_wavelength(self, lambda_nm):
        omega = wavelength_to_omega(lambda_nm)
        lo, hi = self.valid_range
        return bool(np.all((omega >= lo) & (omega <= hi)))

    @property
    def wavelength_range_nm(self):
        lo, hi = self.valid_range
        return float(omega_to_wavelength(hi)), float(omega_to_wavelength(lo))


def from_beta2_samples(omega, beta2, omega_ref=None, source_label=""):
    """Build a model straight from beta2 samples on an angular-frequency grid."""
    omega = np.asarray(omega, dtype=float)
    beta2 = np.asarray(beta2, dtype=float)
    order = np.argsort(omega)
    omega, beta2 = omega[order], beta2[order]
    if len(omega) < 4:
        raise DispersionError("need at least 4 samples")
    if np.any(np.diff(omega) <= 0):
        raise DispersionError("duplicate frequencies")
    if not np.all(np.isfinite(beta2)):
        raise DispersionError("non-finite beta2 sample")
    spline = CubicSpline(omega, beta2)
    k = spline.antiderivative(2)
    lo, hi = float(omega[0]), float(omega[-1])
    if omega_ref is None:
        omega_ref = lo
    elif not lo <= omega_ref <= hi:
        raise DispersionError("omega_ref outside the tabulated range")
    if omega_ref != lo:
        # shift the zero-value/zero-slope point of the double integral to omega_ref
        k0 = float(k(omega_ref))
        k1 = float(k(omega_ref, 1))
        c = k.c.copy()
        x = k.x
        # adjust each piece's local polynomial: subtract k0 + k1 (w - ref), w = x_i + t
        c[-1] -= k0 + k1 * (x[:-1] - omega_ref)
        c[-2] -= k1
        k = PPoly(c, x)
    return DispersionModel(float(omega_ref), spline, k, (lo, hi), source_label=source_label)


def build_from_gvd(table, omega_ref=None):
    """Reconstruct k(omega) from a :class:`GvdTable`."""
    if not isinstance(table, GvdTable):
        table = GvdTable(*table)
    omega = wavelength_to_omega(table.wavelength_nm)
    beta2 = d_to_beta2(table.wavelength_nm, table.d_ps_nm_km)
    return from_beta2_samples(omega, beta2, omega_ref, table.source_label)


def k_at(model, omega):
    return model.k_at(omega)


def zero_dispersion_wavelengths(model, tol_nm=1e-4, oversample=8):
    """Every wavelength [nm] where beta2 changes sign, ascending."""
    knots = model.beta2_curve.x
    # oversample each spline piece so that multiple roots within a piece are not missed
    t = np.linspace(0.0, 1.0, oversample, endpoint=False)
    omega = np.concatenate([(knots[:-1, None] + np.diff(knots)[:, None] * t).ravel(), knots[-1:]])
    b2 = model.beta2_curve(omega)
    roots = []
    for i, j in find_brackets(omega, b2):
        if i == j:
            roots.append(float(omega_to_wavelength(omega[i])))
            continue
        lam_a = float(omega_to_wavelength(omega[j]))
        lam_b = float(omega_to_wavelength(omega[i]))
        f = lambda lam: float(model.beta2_curve(wavelength_to_omega(lam)))
        roots.append(float(bisect(f, lam_a, lam_b, xtol=tol_nm, rtol=0.0)))
    return sorted(set(roots))


def zero_dispersion_wavelength(model, tol_nm=1e-4):
    """The single zero-dispersion wavelength [nm].

    Raises :class:`NoZeroDispersionError` without a sign change and
    :class:`MultipleZeroDispersionError` (carrying all roots) when ambiguous.
    """
    roots = zero_dispersion_wavelengths(model, tol_nm)
    if not roots:
        raise NoZeroDispersionError("beta2 does not change sign in the valid range")
    if len(roots) > 1:
        raise MultipleZeroDispersionError(roots)
    return roots[0]


def default_dispersion(lambda_nm, slope=DEFAULT_SLOPE, curvature=DEFAULT_CURVATURE,
                       zdw=DEFAULT_ZDW_NM):
    """D(lambda) [ps/(nm km)] of the default fiber.

    ``slope*x - curvature*x**2`` with ``x = lambda - zdw``, held flat at its
    maximum beyond ``x = slope / (2 curvature)`` so that the curve has a single
    zero in the tabulated span.
    """
    x = np.asarray(lambda_nm, dtype=float) - zdw
    x = np.minimum(x, slope / (2.0 * curvature))
    return slope * x - curvature * x**2


def default_table(slope=DEFAULT_SLOPE, curvature=DEFAULT_CURVATURE):
    lo, hi = DEFAULT_RANGE_NM
    n = int(round((hi - lo) / DEFAULT_STEP_NM)) + 1
    return GvdTable.from_function(
        lambda wl: default_dispersion(wl, slope, curvature), lo, hi, n,
        source_label=f"default NL-PM-760 model (slope={slope}, curvature={curvature:.6e})")


@functools.lru_cache(maxsize=None)
def _cached_default(slope, curvature):
    return build_from_gvd(default_table(slope, curvature))


def default_model():
    """Calibrated default model of the 760 nm zero-dispersion fiber."""
    return _cached_default(DEFAULT_SLOPE, DEFAULT_CURVATURE)


def calibrate_default_curvature(pump_nm=760.4, signal_nm=660.0, slope=DEFAULT_SLOPE,
                                bracket=(1e-4, 1e-2)):
    """Solve for the D(lambda) curvature placing a Delta k = 0 root at (pump_nm, signal_nm)."""
    wp = float(wavelength_to_omega(pump_nm))
    dw = float(wavelength_to_omega(signal_nm)) - wp

    def mismatch(curv):
        m = build_from_gvd(default_table(slope, curv))
        k = m.curvature_part
        return float(k(wp + dw) + k(wp - dw) - 2.0 * k(wp))

    return bisect(mismatch, *bracket, rtol=1e-13)
