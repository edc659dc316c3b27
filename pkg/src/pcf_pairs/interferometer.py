"""Biphoton interference in an unbalanced Mach-Zehnder interferometer.

Both photons leave the same output port after taking the long (L) or short (S)
arm. Relative to the SS term the four path amplitudes carry phases
``2 kp dL`` (LL), ``ks dL`` (SL), ``ki dL`` (LS) and 0 (SS), each of modulus 1/2.
A scalar ``mu`` in [0, 1] scales every interference cross term and models the
reduced mode overlap seen in the experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from . import kernels
from .dispersion import C_LIGHT


class FitError(RuntimeError):
    pass


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class InterferometerGeometry:
    """Arm lengths [m] and the piezo scan offset ``delta_x`` [m] added to the path difference."""

    L_long: float
    L_short: float
    delta_x: float = 0.0

    def __post_init__(self):
        if self.L_long < self.L_short:
            raise ValueError("long arm must not be shorter than the short arm")

    @classmethod
    def from_delta_L(cls, delta_L, delta_x=0.0, L_short=0.0):
        return cls(L_short + delta_L, L_short, delta_x)

    @property
    def delta_L(self):
        return self.L_long - self.L_short

    @property
    def path_difference(self):
        """Effective path difference including the scan offset [m]."""
        return self.delta_L + self.delta_x

    @property
    def tau(self):
        """Arrival delay between the arms [s]."""
        return self.delta_L / C_LIGHT

    def shifted(self, delta_x):
        return InterferometerGeometry(self.L_long, self.L_short, delta_x)


EXPERIMENT_GEOMETRY = InterferometerGeometry.from_delta_L(0.6)


@dataclass(frozen=True)
class BiphotonPathState:
    k_p: float
    k_s: float
    k_i: float
    A_LL: complex
    A_SL: complex
    A_LS: complex
    A_SS: complex
    delta_L: float
    mu: float = 1.0

    @property
    def amplitudes(self):
        return np.array([self.A_LL, self.A_SL, self.A_LS, self.A_SS])

    def probability(self):
        """Coincidence probability with cross terms scaled by ``mu``."""
        a = self.amplitudes
        incoherent = float(np.sum(np.abs(a) ** 2))
        coherent = float(abs(np.sum(a)) ** 2)
        return incoherent + self.mu * (coherent - incoherent)


@dataclass(frozen=True)
class FilteredBiphotonSpectrum:
    """Band-pass filters on both photons. Centers obey energy conservation with ``pump_nm``."""

    center_s: float
    center_i: float
    fwhm_s: float
    fwhm_i: float
    shape: str = "rect"
    pump_nm: float | None = None

    def __post_init__(self):
        if self.fwhm_s < 0 or self.fwhm_i < 0:
            raise ValueError("filter widths must be non-negative")
        if self.shape not in ("rect", "gaussian"):
            raise ValueError(f"unknown filter shape {self.shape!r}")
        if self.pump_nm is None:
            object.__setattr__(self, "pump_nm", 2.0 / (1.0 / self.center_s + 1.0 / self.center_i))
        elif abs(2.0 / self.pump_nm - 1.0 / self.center_s - 1.0 / self.center_i) > 1e-9 / self.pump_nm:
            raise ValueError("filter centers violate energy conservation with the pump")

    @classmethod
    def for_pump(cls, pump_nm, center_s, fwhm=10.0, shape="rect"):
        center_i = 1.0 / (2.0 / pump_nm - 1.0 / center_s)
        return cls(center_s, center_i, fwhm, fwhm, shape, pump_nm)

    @property
    def k_p(self):
        return 2.0 * math.pi / (self.pump_nm * 1e-9)


def wavenumber(lambda_nm):
    """Vacuum wavenumber [rad/m] of a wavelength in nm."""
    return 2.0 * np.pi / (np.asarray(lambda_nm, dtype=float) * 1e-9)


def path_amplitudes(geometry, k_p, k_s, mu=1.0):
    """The four path amplitudes; the common phase exp(2i kp L_S) is dropped."""
    k_i = 2.0 * k_p - k_s
    if not k_i > 0:
        raise ValueError("idler wavenumber 2*k_p - k_s must be positive")
    dL = geometry.path_difference
    return BiphotonPathState(
        k_p=k_p, k_s=k_s, k_i=k_i,
        A_LL=0.5 * np.exp(2j * k_p * dL),
        A_SL=0.5 * np.exp(1j * k_s * dL),
        A_LS=0.5 * np.exp(1j * k_i * dL),
        A_SS=0.5 + 0j,
        delta_L=dL, mu=mu,
    )


def _check_mu(mu):
    if not 0.0 <= mu <= 1.0:
        raise ValueError("mu must lie in [0, 1]")


def _phase(k_p, delta_L):
    # reduce 2 kp dL modulo 2 pi before the cosine to keep precision for long arms
    return np.mod(2.0 * np.asarray(k_p, dtype=float) * np.asarray(delta_L, dtype=float), 2 * np.pi)


def coincidence_full(k_p, delta_L, mu=1.0):
    """All arrival-time classes counted: 1 + (mu/2) cos(2 kp dL)."""
    _check_mu(mu)
    return 1.0 + 0.5 * mu * np.cos(_phase(k_p, delta_L))


def coincidence_postselected(k_p, delta_L, mu=1.0):
    """Only same-arm (LL, SS) pairs counted: 1 + mu cos(2 kp dL)."""
    _check_mu(mu)
    return 1.0 + mu * np.cos(_phase(k_p, delta_L))


def four_term(k_p, k_s, delta_L, mu=1.0):
    """Unaveraged |A_LL + A_SL + A_LS + A_SS|^2 at a single (ks, ki) pair, cross terms scaled by mu."""
    return kernels.four_term_np(k_p, np.asarray(k_s, dtype=float), np.asarray(delta_L, dtype=float), mu)


def _filter_weight(lam, center, fwhm, shape):
    if fwhm == 0:
        return np.ones_like(lam)
    if shape == "rect":
        return (np.abs(lam - center) <= fwhm / 2.0).astype(float)
    return np.exp(-4.0 * math.log(2.0) * ((lam - center) / fwhm) ** 2)


def _ks_window(spectrum):
    """Signal wavenumber interval where the joint filter weight is non-negligible."""
    kp = spectrum.k_p
    reach = 0.5 if spectrum.shape == "rect" else 3.0
    s_lo = wavenumber(spectrum.center_s + reach * spectrum.fwhm_s)
    s_hi = wavenumber(spectrum.center_s - reach * spectrum.fwhm_s)
    # idler band mapped to signal wavenumber via ks = 2 kp - ki
    i_lo = 2 * kp - wavenumber(spectrum.center_i - reach * spectrum.fwhm_i)
    i_hi = 2 * kp - wavenumber(spectrum.center_i + reach * spectrum.fwhm_i)
    lo, hi = max(s_lo, i_lo), min(s_hi, i_hi)
    if not hi > lo:
        raise ValueError("signal and idler filters share no energy-conserving pairs")
    return float(lo), float(hi)


def _average(spectrum, k_p, delta_Ls, mu, n):
    lo, hi = _ks_window(spectrum)
    # midpoint rule on the signal wavenumber
    ks = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    ki = 2 * k_p - ks
    w = (_filter_weight(2 * np.pi / ks * 1e9, spectrum.center_s, spectrum.fwhm_s, spectrum.shape)
         * _filter_weight(2 * np.pi / ki * 1e9, spectrum.center_i, spectrum.fwhm_i, spectrum.shape))
    norm = w.sum()
    if norm == 0:
        raise QuadratureError("filter weight vanishes on the quadrature grid")
    w = w / norm
    return np.array([kernels.spectral_average(ks, w, k_p, float(dL), mu) for dL in delta_Ls])


def coincidence_oracle(geometry, spectrum, mu=1.0, delta_x=None, n_start=2**12, n_max=2**22,
                       tol=1e-4):
    """Spectrally averaged four-term coincidence probability along a scan of ``delta_x`` [m].

    The grid of signal wavenumbers is doubled until the result changes by at
    most ``tol``; :class:`QuadratureError` is raised when ``n_max`` is reached
    first. Zero filter widths give the single-frequency four-term fringe.
    """
    _check_mu(mu)
    dx = np.atleast_1d(np.asarray(geometry.delta_x if delta_x is None else delta_x, dtype=float))
    dLs = geometry.delta_L + dx
    k_p = spectrum.k_p
    if spectrum.fwhm_s == 0 or spectrum.fwhm_i == 0:
        k_s = float(wavenumber(spectrum.center_s))
        return four_term(k_p, k_s, dLs, mu)
    # resolve the fastest oscillation exp(i (ks - ki) dL) across the window
    lo, hi = _ks_window(spectrum)
    n_needed = int(4 * (hi - lo) * 2 * np.max(np.abs(dLs)) / (2 * np.pi)) + 1
    n = max(n_start, 1 << max(0, (n_needed - 1).bit_length()))
    prev = _average(spectrum, k_p, dLs, mu, n)
    while True:
        n *= 2
        if n > n_max:
            raise QuadratureError(f"no convergence to {tol} with {n // 2} nodes")
        cur = _average(spectrum, k_p, dLs, mu, n)
        if np.max(np.abs(cur - prev)) <= tol:
            return cur
        prev = cur


def single_photon_visibility(lambda_center, fwhm, delta_L, shape="rect"):
    """Fringe envelope of one filtered photon at path difference ``delta_L`` [m].

    The envelope is the normalized filter autocorrelation at the delay; the
    filter is taken as flat (or gaussian) in optical frequency.
    """
    if not fwhm > 0:
        if fwhm == 0:
            return 1.0
        raise ValueError("fwhm must be non-negative")
    lam = lambda_center * 1e-9
    # bandwidth in inverse metres times the path difference
    x = math.pi * (fwhm * 1e-9) / lam**2 * abs(delta_L)
    if shape == "rect":
        return 1.0 if x == 0 else abs(math.sin(x) / x)
    if shape == "gaussian":
        return math.exp(-x * x / (4.0 * math.log(2.0)))
    raise ValueError(f"unknown filter shape {shape!r}")


@dataclass
class FitResult:
    visibility: float
    phase: float
    offset: float
    amplitude: float
    period: float
    stderr: dict
    residual_chi2: float = 0.0

    def as_dict(self):
        return {
            "visibility": self.visibility,
            "visibility_stderr": self.stderr.get("visibility", float("nan")),
            "phase_rad": self.phase,
            "offset": self.offset,
            "period_nm": self.period,
            "amplitude": self.amplitude,
            "stderr": dict(self.stderr),
            "reduced_chi2": self.residual_chi2,
        }


def _fringe(x, A, B, phi, period):
    return A + B * np.cos(2 * np.pi * x / period + phi)


def fit_visibility(delta_x, counts, period, free_period=False, weights="poisson"):
    """Least-squares fit of ``A + B cos(2 pi x / period + phi)``; visibility is ``B / A``.

    ``period`` is in the units of ``delta_x`` (lambda_p/2 for coincidences,
    lambda_p for the pump fringe). With a fixed period the model is linear and
    solved exactly; with ``free_period`` the period is refined by nonlinear
    least squares starting from the fixed-period solution. Poisson weights are
    ``1/counts`` (empty points get unit variance).
    """
    x = np.asarray(delta_x, dtype=float)
    y = np.asarray(counts, dtype=float)
    n_par = 4 if free_period else 3
    if len(x) < n_par or len(x) != len(y):
        raise FitError(f"need at least {n_par} points, got {len(x)}")
    if not period > 0:
        raise FitError("period must be positive")
    if weights == "poisson":
        var = np.where(y > 0, y, 1.0)
    elif weights is None:
        var = np.ones_like(y)
    else:
        var = 1.0 / np.asarray(weights, dtype=float)
    sw = 1.0 / np.sqrt(var)

    # deterministic initial guess: mean, half range, DFT phase at the expected period
    arg = 2 * np.pi * x / period
    X = np.column_stack([np.ones_like(x), np.cos(arg), -np.sin(arg)])
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    A, C, S = coef
    B = math.hypot(C, S)
    phi = math.atan2(S, C)
    resid = (y - X @ coef) * sw
    dof = max(len(x) - n_par, 1)
    chi2 = float(resid @ resid) / dof
    if not free_period:
        cov_lin = np.linalg.inv((X * sw[:, None]).T @ (X * sw[:, None]))
        # propagate (A, C, S) -> (A, B, phi)
        if B > 0:
            J = np.array([[1, 0, 0], [0, C / B, S / B], [0, -S / B**2, C / B**2]])
        else:
            J = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 0]])
        cov = J @ cov_lin @ J.T
        if weights is None:
            cov = cov * chi2
        pcov = np.zeros((4, 4))
        pcov[:3, :3] = cov
        params = np.array([A, B, phi, period])
    else:
        p0 = [A, B if B > 0 else (y.max() - y.min()) / 2, phi, period]
        try:
            params, pcov = curve_fit(_fringe, x, y, p0=p0, sigma=np.sqrt(var),
                                     absolute_sigma=weights is not None, maxfev=20000,
                                     xtol=1e-14, ftol=1e-14, gtol=1e-14)
        except RuntimeError as exc:
            raise FitError(f"fringe fit did not converge: {exc}") from exc
        A, B, phi, period = params
        if B < 0:
            B, phi = -B, phi + math.pi
        resid = (y - _fringe(x, A, B, phi, period)) * sw
        chi2 = float(resid @ resid) / dof
    if not A > 0:
        raise FitError("fitted offset is not positive")
    var_A, var_B = pcov[0, 0], pcov[1, 1]
    cov_AB = pcov[0, 1]
    V = B / A
    var_V = V**2 * (var_B / B**2 + var_A / A**2 - 2 * cov_AB / (A * B)) if B > 0 else var_B / A**2
    stderr = {
        "offset": math.sqrt(max(var_A, 0.0)),
        "amplitude": math.sqrt(max(var_B, 0.0)),
        "phase": math.sqrt(max(pcov[2, 2], 0.0)),
        "period": math.sqrt(max(pcov[3, 3], 0.0)),
        "visibility": math.sqrt(max(var_V, 0.0)),
    }
    phi = (phi + math.pi) % (2 * math.pi) - math.pi
    return FitResult(float(V), float(phi), float(A), float(B), float(period), stderr, chi2)
