import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import constant_beta2_model
from pcf_pairs import dispersion
from pcf_pairs.dispersion import (
    C_LIGHT,
    DispersionError,
    GvdParseError,
    GvdTable,
    MultipleZeroDispersionError,
    NoZeroDispersionError,
    OutOfRangeError,
    build_from_gvd,
    d_to_beta2,
    default_model,
    wavelength_to_omega,
    zero_dispersion_wavelength,
    zero_dispersion_wavelengths,
)
from pcf_pairs.phasematch import delta_k


def linear_table(s0, zdw, lo=600.0, hi=1000.0, n=401):
    return GvdTable.from_function(lambda wl: s0 * (wl - zdw), lo, hi, n)


# --- unit conversion -------------------------------------------------------


def test_beta2_conversion_by_hand_at_800nm():
    d0 = 40.0  # ps/(nm km)
    lam = 800e-9
    d_si = d0 * 1e-12 / (1e-9 * 1e3)  # s/m^2
    expected = -d_si * lam**2 / (2 * math.pi * C_LIGHT)
    assert d_to_beta2(800.0, d0) == pytest.approx(expected, rel=1e-14)


def test_beta2_d_round_trip():
    lam = np.linspace(500, 1500, 11)
    d = np.linspace(-80, 60, 11)
    back = dispersion.beta2_to_d(lam, d_to_beta2(lam, d))
    np.testing.assert_allclose(back, d, rtol=1e-13, atol=1e-12)


def test_omega_wavelength_inverse():
    lam = np.array([450.0, 760.4, 1600.0])
    np.testing.assert_allclose(dispersion.omega_to_wavelength(wavelength_to_omega(lam)), lam, rtol=1e-15)


# --- build_from_gvd --------------------------------------------------------


def test_constant_d_reproduces_pointwise_beta2():
    table = GvdTable.from_function(lambda wl: np.full_like(wl, 40.0), 700.0, 900.0, 201)
    m = build_from_gvd(table)
    w = wavelength_to_omega(800.0)
    expected = -40.0 * 1e-6 * (800e-9) ** 2 / (2 * math.pi * C_LIGHT)
    assert float(m.beta2(w)) == pytest.approx(expected, rel=1e-12)


def test_zero_d_is_pure_gauge():
    table = GvdTable.from_function(np.zeros_like, 600.0, 1000.0, 50)
    m = build_from_gvd(table)
    w = np.linspace(*m.valid_range, 37)
    assert np.all(m.k_at(w) == 0.0)
    assert delta_k(m, 800.0, 3e14) == 0.0


def test_linear_d_places_zdw_at_760():
    m = build_from_gvd(linear_table(0.3, 760.0))
    assert float(m.beta2(wavelength_to_omega(760.0))) == pytest.approx(0.0, abs=1e-33)
    assert zero_dispersion_wavelength(m) == pytest.approx(760.0, abs=1e-3)


def test_constant_beta2_double_integral():
    b2 = -2.5e-26
    m = constant_beta2_model(b2)
    delta = 1e13
    assert float(m.k_at(m.omega_ref + delta)) == pytest.approx(b2 * delta**2 / 2, rel=1e-9)
    assert float(m.k_at(m.omega_ref)) == 0.0


def test_round_trip_second_derivative_at_midpoints():
    table = dispersion.default_table()
    m = build_from_gvd(table)
    mids = 0.5 * (table.wavelength_nm[1:] + table.wavelength_nm[:-1])[50:-50:37]
    w = wavelength_to_omega(mids)
    h = 2e10
    k = m.curvature_part
    numeric = (k(w + h) - 2 * k(w) + k(w - h)) / h**2
    exact = d_to_beta2(mids, dispersion.default_dispersion(mids))
    scale = np.max(np.abs(exact))
    np.testing.assert_allclose(numeric, exact, rtol=1e-6, atol=1e-6 * scale)


def test_out_of_range_is_an_error():
    m = build_from_gvd(linear_table(0.3, 760.0))
    with pytest.raises(OutOfRangeError):
        m.k_at(wavelength_to_omega(1200.0))
    with pytest.raises(OutOfRangeError):
        m.beta2(wavelength_to_omega(550.0))
    with pytest.raises(OutOfRangeError):
        delta_k(m, 800.0, 1e15)


@pytest.mark.parametrize("wl, d, msg", [
    ([700, 800, 900], [1, 2, 3], "at least 4"),
    ([700, 800, 800, 900], [1, 2, 3, 4], "increasing"),
    ([700, 800, 900, 1000], [1, np.nan, 3, 4], "non-finite"),
    ([-1, 800, 900, 1000], [1, 2, 3, 4], "positive"),
])
def test_table_validation(wl, d, msg):
    with pytest.raises(DispersionError, match=msg):
        GvdTable(np.array(wl, float), np.array(d, float))


# --- CSV -------------------------------------------------------------------


def test_csv_round_trip(tmp_path):
    t = linear_table(0.25, 770.0, n=31)
    path = tmp_path / "gvd.csv"
    t.to_csv(path)
    back = GvdTable.from_csv(path)
    np.testing.assert_array_equal(back.wavelength_nm, t.wavelength_nm)
    np.testing.assert_array_equal(back.d_ps_nm_km, t.d_ps_nm_km)


@pytest.mark.parametrize("body, line", [
    ("wl,D\n700,1\n", 1),
    ("# comment\nwavelength_nm,D_ps_nm_km\n700,1\n750,abc\n", 4),
    ("wavelength_nm,D_ps_nm_km\n700,1\n750,2,3\n", 3),
    ("wavelength_nm,D_ps_nm_km\n700,1\n750,2\n740,3\n800,4\n", 4),
    ("wavelength_nm,D_ps_nm_km\n700,1\n750,inf\n", 3),
])
def test_csv_errors_carry_line_numbers(tmp_path, body, line):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(GvdParseError) as err:
        GvdTable.from_csv(path)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_csv_too_few_rows(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("wavelength_nm,D_ps_nm_km\n700,1\n750,2\n800,3\n")
    with pytest.raises(GvdParseError, match="at least 4"):
        GvdTable.from_csv(path)


# --- zero-dispersion wavelength --------------------------------------------


def test_default_model_zdw():
    assert zero_dispersion_wavelength(default_model()) == pytest.approx(760.0, abs=0.1)


def test_shifted_table_root():
    d = lambda wl: dispersion.default_dispersion(wl - 20.0)
    m = build_from_gvd(GvdTable.from_function(d, 500.0, 1500.0, 1001))
    assert zero_dispersion_wavelength(m) == pytest.approx(780.0, abs=1e-3)


def test_synthetic_linear_root():
    m = build_from_gvd(linear_table(0.4, 765.3))
    assert zero_dispersion_wavelength(m) == pytest.approx(765.3, abs=0.01)


def test_grid_refinement_invariance():
    f = lambda wl: dispersion.default_dispersion(wl)
    coarse = build_from_gvd(GvdTable.from_function(f, 600.0, 850.0, 50))
    fine = build_from_gvd(GvdTable.from_function(f, 600.0, 850.0, 500))
    assert zero_dispersion_wavelength(coarse) == pytest.approx(zero_dispersion_wavelength(fine), abs=1e-2)


def test_no_sign_change_is_reported():
    m = build_from_gvd(GvdTable.from_function(lambda wl: 5.0 + 0 * wl, 600.0, 900.0, 20))
    with pytest.raises(NoZeroDispersionError):
        zero_dispersion_wavelength(m)
    assert zero_dispersion_wavelengths(m) == []


def test_multiple_roots_are_all_returned():
    f = lambda wl: (wl - 700.0) * (wl - 850.0) * 1e-3
    m = build_from_gvd(GvdTable.from_function(f, 600.0, 1000.0, 401))
    roots = zero_dispersion_wavelengths(m)
    np.testing.assert_allclose(roots, [700.0, 850.0], atol=1e-3)
    with pytest.raises(MultipleZeroDispersionError) as err:
        zero_dispersion_wavelength(m)
    np.testing.assert_allclose(err.value.roots, roots)


def test_default_curvature_calibration_closes():
    c = dispersion.calibrate_default_curvature()
    assert c == pytest.approx(dispersion.DEFAULT_CURVATURE, rel=1e-9)


def test_default_d_has_single_zero_over_table():
    t = dispersion.default_table()
    d = t.d_ps_nm_km
    nz = d[d != 0]
    assert np.count_nonzero(np.diff(np.sign(nz)) != 0) == 1
    assert np.all(np.diff(d) >= -1e-12)  # non-decreasing: flat beyond the peak


# --- properties ------------------------------------------------------------


@given(
    c0=st.floats(-1e7, 1e7),
    c1=st.floats(-1e-7, 1e-7),
    lp=st.floats(700.0, 820.0),
    frac=st.floats(0.0, 1.0),
)
def test_gauge_invariance(model, c0, c1, lp, frac):
    shifted = model.with_affine(c0, c1)
    dw = frac * 3e14
    a = delta_k(model, lp, dw)
    b = delta_k(shifted, lp, dw)
    assert b == pytest.approx(a, rel=1e-12, abs=1e-300)


def test_affine_change_moves_k_but_not_delta_k(model):
    shifted = model.with_affine(3.0e6, 2.0e-8)
    w = wavelength_to_omega(760.4)
    assert float(shifted.k_at(w) - model.k_at(w)) == pytest.approx(3.0e6 + 2.0e-8 * w, rel=1e-12)
    assert delta_k(shifted, 760.4, 2e14) == delta_k(model, 760.4, 2e14)


@given(st.floats(-1e-25, 1e-25).filter(lambda b: abs(b) > 1e-30), st.floats(-2.9e14, 2.9e14))
def test_constant_beta2_closed_form_everywhere(b2, d):
    m = constant_beta2_model(b2)
    # polynomial evaluation at omega ~ 2e15 leaves roundoff tied to the curve's overall scale
    scale = abs(b2) * 3e14**2 / 2
    assert float(m.k_at(m.omega_ref + d)) == pytest.approx(b2 * d * d / 2, rel=1e-8, abs=1e-12 * scale)
