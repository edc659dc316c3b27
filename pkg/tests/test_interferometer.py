import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcf_pairs.interferometer import (
    EXPERIMENT_GEOMETRY,
    FilteredBiphotonSpectrum,
    FitError,
    InterferometerGeometry,
    QuadratureError,
    coincidence_full,
    coincidence_oracle,
    coincidence_postselected,
    fit_visibility,
    four_term,
    path_amplitudes,
    single_photon_visibility,
    wavenumber,
)

LP = 760.4
KP = 2 * math.pi / (LP * 1e-9)
KS = 2 * math.pi / (660e-9)


def fringe_visibility(y):
    return (np.max(y) - np.min(y)) / (np.max(y) + np.min(y))


# --- geometry ----------------------------------------------------------------


def test_experiment_geometry_delay():
    assert EXPERIMENT_GEOMETRY.delta_L == pytest.approx(0.6)
    assert EXPERIMENT_GEOMETRY.tau == pytest.approx(2.0e-9, rel=0.01)


def test_geometry_rejects_inverted_arms():
    with pytest.raises(ValueError):
        InterferometerGeometry(0.1, 0.2)


def test_shifted_geometry_adds_scan_offset():
    g = EXPERIMENT_GEOMETRY.shifted(1e-7)
    assert g.path_difference == pytest.approx(0.6 + 1e-7, rel=1e-15)
    assert g.delta_L == EXPERIMENT_GEOMETRY.delta_L


# --- amplitudes ----------------------------------------------------------------


def test_balanced_interferometer_amplitudes():
    st_ = path_amplitudes(InterferometerGeometry(0.3, 0.3), KP, KS)
    np.testing.assert_allclose(st_.amplitudes, 0.5, atol=1e-15)
    assert abs(np.sum(st_.amplitudes)) ** 2 == pytest.approx(4.0)


def test_half_wave_pump_phase_flips_ll():
    dL = math.pi / (2 * KP)
    st_ = path_amplitudes(InterferometerGeometry.from_delta_L(dL), KP, KS)
    assert st_.A_LL == pytest.approx(-st_.A_SS, abs=1e-14)


def test_experiment_geometry_same_arm_pair():
    st_ = path_amplitudes(EXPERIMENT_GEOMETRY, KP, KS)
    lhs = abs(st_.A_SS + st_.A_LL) ** 2
    phase = math.fmod(2 * KP * 0.6, 2 * math.pi)
    assert lhs == pytest.approx(0.5 * (1 + math.cos(phase)), abs=1e-9)


def test_energy_conservation_of_wavenumbers():
    st_ = path_amplitudes(EXPERIMENT_GEOMETRY, KP, KS)
    assert st_.k_s + st_.k_i == pytest.approx(2 * st_.k_p, rel=1e-12)


def test_nonpositive_idler_rejected():
    with pytest.raises(ValueError):
        path_amplitudes(EXPERIMENT_GEOMETRY, KP, 2 * KP)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1e-3))
def test_path_probabilities_normalized(mu, dL):
    st_ = path_amplitudes(InterferometerGeometry.from_delta_L(dL), KP, KS, mu)
    assert float(np.sum(np.abs(st_.amplitudes) ** 2)) == pytest.approx(1.0, rel=1e-14)


@given(ks=st.floats(0.5, 1.5), dL=st.floats(0.0, 1e-4), mu=st.floats(0.0, 1.0))
def test_four_term_equals_complex_sum(ks, dL, mu):
    k_s = ks * KP
    st_ = path_amplitudes(InterferometerGeometry.from_delta_L(dL), KP, k_s, mu)
    a = [0.5 * cmath.exp(2j * KP * dL), 0.5 * cmath.exp(1j * k_s * dL),
         0.5 * cmath.exp(1j * (2 * KP - k_s) * dL), 0.5]
    coherent = abs(sum(a)) ** 2
    expected = 1 + mu * (coherent - 1)
    assert float(four_term(KP, k_s, dL, mu)) == pytest.approx(expected, abs=1e-9)
    assert st_.probability() == pytest.approx(expected, abs=1e-9)


# --- closed forms ----------------------------------------------------------------


def test_full_extremes_and_visibility():
    assert coincidence_full(KP, 0.0) == pytest.approx(1.5)
    assert coincidence_full(KP, math.pi / (2 * KP)) == pytest.approx(0.5)
    dL = np.linspace(0, LP * 1e-9, 400, endpoint=False)
    assert fringe_visibility(coincidence_full(KP, dL)) == pytest.approx(0.5, abs=1e-4)


def test_full_without_interference_is_flat():
    dL = np.linspace(0, 1e-6, 50)
    np.testing.assert_array_equal(coincidence_full(KP, dL, 0.0), 1.0)


@pytest.mark.parametrize("mu, v_full, v_post", [(1.0, 0.5, 1.0), (0.83, 0.415, 0.83)])
def test_visibilities(mu, v_full, v_post):
    dL = np.linspace(0, LP * 1e-9, 400, endpoint=False)
    assert fringe_visibility(coincidence_full(KP, dL, mu)) == pytest.approx(v_full, abs=1e-4)
    assert fringe_visibility(coincidence_postselected(KP, dL, mu)) == pytest.approx(v_post, abs=1e-4)


@given(mu=st.floats(0.0, 1.0))
def test_postselection_doubles_visibility(mu):
    dL = np.linspace(0, LP * 1e-9 / 2, 64, endpoint=False)
    vf = fringe_visibility(coincidence_full(KP, dL, mu))
    vp = fringe_visibility(coincidence_postselected(KP, dL, mu))
    assert vp == pytest.approx(2 * vf, abs=1e-12)
    assert vf <= 0.5 + 1e-12


@given(mu=st.floats(0.0, 1.0), dL=st.floats(0.0, 2.0))
def test_fringes_nonnegative(mu, dL):
    assert coincidence_full(KP, dL, mu) >= 0
    assert coincidence_postselected(KP, dL, mu) >= 0
    assert float(four_term(KP, KS, dL, mu)) >= -1e-12


def test_mu_validation():
    with pytest.raises(ValueError):
        coincidence_full(KP, 0.1, 1.2)
    with pytest.raises(ValueError):
        coincidence_postselected(KP, 0.1, -0.1)


# --- spectral oracle ---------------------------------------------------------------


def test_oracle_matches_full_at_experiment_delay_over_one_fringe():
    sp = FilteredBiphotonSpectrum.for_pump(LP, 660.0, 10.0)
    dx = np.linspace(0.0, LP * 1e-9 / 2, 12, endpoint=False)
    got = coincidence_oracle(EXPERIMENT_GEOMETRY, sp, 1.0, dx)
    want = coincidence_full(KP, 0.6 + dx)
    np.testing.assert_allclose(got, want, atol=1e-3)


def test_oracle_balanced_is_maximal():
    sp = FilteredBiphotonSpectrum.for_pump(LP, 660.0, 10.0)
    got = coincidence_oracle(InterferometerGeometry(0.2, 0.2), sp, 1.0, np.zeros(1))
    assert got[0] == pytest.approx(4.0, abs=1e-9)


def test_oracle_monochromatic_limit_is_four_term():
    sp = FilteredBiphotonSpectrum.for_pump(LP, 660.0, 0.0)
    dx = np.linspace(0.0, 3e-6, 25)
    got = coincidence_oracle(InterferometerGeometry.from_delta_L(1e-5), sp, 1.0, dx)
    ks = wavenumber(660.0)
    np.testing.assert_allclose(got, four_term(KP, ks, 1e-5 + dx, 1.0), rtol=1e-13)
    assert np.ptp(got) > 2.0  # single-frequency cross terms survive


def effective_coherence_length(sp):
    # the joint window in k_s is limited by the narrower band in wavenumber
    return max((sp.center_s * 1e-9) ** 2 / (sp.fwhm_s * 1e-9), (sp.center_i * 1e-9) ** 2 / (sp.fwhm_i * 1e-9))


@settings(max_examples=8)
@given(factor=st.floats(100.0, 600.0), center=st.floats(620.0, 700.0), mu=st.floats(0.0, 1.0))
def test_oracle_converges_beyond_coherence_length_gaussian(factor, center, mu):
    sp = FilteredBiphotonSpectrum.for_pump(LP, center, 10.0, "gaussian")
    geo = InterferometerGeometry.from_delta_L(factor * effective_coherence_length(sp))
    dx = np.linspace(0.0, LP * 1e-9 / 2, 4, endpoint=False)
    got = coincidence_oracle(geo, sp, mu, dx)
    np.testing.assert_allclose(got, coincidence_full(KP, geo.delta_L + dx, mu), atol=1e-3)


@settings(max_examples=6)
@given(factor=st.floats(700.0, 1500.0), center=st.floats(620.0, 700.0), mu=st.floats(0.0, 1.0))
def test_oracle_converges_beyond_coherence_length_rect(factor, center, mu):
    # sinc tails fall off as 1/x: two cross terms of bound 1/(pi x) each stay below 1e-3 for x > 640
    sp = FilteredBiphotonSpectrum.for_pump(LP, center, 10.0, "rect")
    geo = InterferometerGeometry.from_delta_L(factor * effective_coherence_length(sp))
    dx = np.linspace(0.0, LP * 1e-9 / 2, 4, endpoint=False)
    got = coincidence_oracle(geo, sp, mu, dx)
    np.testing.assert_allclose(got, coincidence_full(KP, geo.delta_L + dx, mu), atol=1e-3)


def test_rect_residual_follows_sinc_tail():
    sp = FilteredBiphotonSpectrum.for_pump(LP, 660.0, 10.0, "rect")
    geo = InterferometerGeometry.from_delta_L(100.5 * effective_coherence_length(sp))
    dx = np.linspace(0.0, LP * 1e-9, 16, endpoint=False)
    dev = np.max(np.abs(coincidence_oracle(geo, sp, 1.0, dx) - coincidence_full(KP, geo.delta_L + dx)))
    bound = 2 / (math.pi * 100.5)
    assert 1e-3 < dev <= bound * 1.05


def test_oracle_reports_non_convergence():
    sp = FilteredBiphotonSpectrum.for_pump(LP, 660.0, 10.0)
    with pytest.raises(QuadratureError):
        coincidence_oracle(EXPERIMENT_GEOMETRY, sp, 1.0, np.zeros(1), n_start=64, n_max=128, tol=1e-12)


def test_filter_centers_must_conserve_energy():
    with pytest.raises(ValueError):
        FilteredBiphotonSpectrum(660.0, 900.0, 10.0, 10.0, pump_nm=LP)


# --- single-photon envelope -------------------------------------------------------


def test_single_photon_visibility_limits():
    assert single_photon_visibility(660.0, 10.0, 0.0) == 1.0
    assert single_photon_visibility(660.0, 0.0, 0.6) == 1.0
    assert single_photon_visibility(660.0, 10.0, 0.6) < 1e-3
    assert single_photon_visibility(660.0, 10.0, 0.6, shape="gaussian") < 1e-3


def test_single_photon_visibility_rect_is_sinc():
    # first zero of the rectangular-band envelope at dL = lambda^2 / dlambda
    coh = (660e-9) ** 2 / 10e-9
    assert single_photon_visibility(660.0, 10.0, coh) == pytest.approx(0.0, abs=1e-12)
    assert single_photon_visibility(660.0, 10.0, coh / 2) == pytest.approx(2 / math.pi, rel=1e-12)


def test_single_photon_visibility_gaussian_half_point():
    # envelope falls to 1/2 where pi dnu dL / c = 2 ln 2 for a gaussian of FWHM dnu
    coh = (660e-9) ** 2 / 10e-9
    dL = 2 * math.log(2) / math.pi * coh
    assert single_photon_visibility(660.0, 10.0, dL, "gaussian") == pytest.approx(0.5, rel=1e-12)


# --- visibility fit -------------------------------------------------------------


def samples(visibility, n=24, period=LP / 2, phase=0.3, offset=1.0):
    x = np.linspace(0.0, 2 * period, n, endpoint=False)
    return x, offset * (1 + visibility * np.cos(2 * np.pi * x / period + phase))


@pytest.mark.parametrize("v", [0.5, 1.0, 0.83, 0.0])
def test_noiseless_fit_is_exact(v):
    x, y = samples(v)
    r = fit_visibility(x, y, LP / 2, weights=None)
    assert r.visibility == pytest.approx(v, abs=1e-9)
    assert r.offset == pytest.approx(1.0, abs=1e-9)
    if v > 0:
        assert r.phase == pytest.approx(0.3, abs=1e-9)


def test_poisson_noise_fit():
    rng = np.random.default_rng(1234)
    x, y = samples(0.83, offset=200.0)
    counts = rng.poisson(y)
    r = fit_visibility(x, counts, LP / 2)
    assert r.visibility == pytest.approx(0.83, abs=0.05)
    assert 0 < r.stderr["visibility"] < 0.05


def test_poisson_fit_sampling_distribution():
    rng = np.random.default_rng(7)
    x, y = samples(0.83, offset=200.0)
    vs = np.array([fit_visibility(x, rng.poisson(y), LP / 2).visibility for _ in range(400)])
    assert abs(vs.mean() - 0.83) < 0.01
    se = fit_visibility(x, y, LP / 2).stderr["visibility"]
    assert vs.std() == pytest.approx(se, rel=0.15)


def test_period_halving():
    x = np.linspace(0.0, 2 * LP, 64, endpoint=False)
    pump = 1 + 0.9 * np.cos(2 * np.pi * x / LP + 0.2)
    coinc = coincidence_postselected(KP, 0.6 + x * 1e-9, 0.83)
    rp = fit_visibility(x, pump, LP * 1.02, free_period=True, weights=None)
    rc = fit_visibility(x, coinc, LP / 2 * 0.98, free_period=True, weights=None)
    assert rp.period == pytest.approx(LP, rel=1e-9)
    assert rc.period == pytest.approx(rp.period / 2, rel=1e-9)


def test_fit_result_export_fields():
    x, y = samples(0.5)
    d = fit_visibility(x, y, LP / 2, weights=None).as_dict()
    for key in ("visibility", "visibility_stderr", "phase_rad", "offset", "period_nm"):
        assert key in d


def test_fit_errors():
    with pytest.raises(FitError):
        fit_visibility([0.0, 1.0], [1.0, 2.0], LP / 2)
    x, y = samples(0.5)
    with pytest.raises(FitError):
        fit_visibility(x, -y, LP / 2, weights=None)
    with pytest.raises(FitError):
        fit_visibility(x, y, 0.0)
