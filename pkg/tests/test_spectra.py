import io

import numpy as np
import pytest

import speclocus as sl
from speclocus import errors, spectra

# E(560 nm, 6500 K, I=1) evaluated independently at 40 decimal digits (mpmath).
E_560_6500 = 1.3046307102623052932e46


def test_wien_constants_verbatim():
    assert spectra.C1 == 3.74183e16
    assert spectra.C2 == 1.4388e-2


def test_planckian_intensity_linearity():
    a = sl.planckian_spd(5000.0, intensity=1.0)
    b = sl.planckian_spd(5000.0, intensity=2.0)
    assert np.array_equal(b.values, 2.0 * a.values)


def test_planckian_reference_point():
    val = sl.planckian_spd(6500.0).value_at(560.0)
    assert abs(val - E_560_6500) / E_560_6500 < 1e-12


def test_planckian_validation():
    with pytest.raises(errors.InvalidArgumentError):
        sl.planckian_spd(0.0)
    with pytest.raises(errors.InvalidArgumentError):
        sl.planckian_spd(-100.0)
    with pytest.raises(errors.InvalidArgumentError):
        sl.planckian_spd(5000.0, grid_nm=np.array([]))
    with pytest.raises(errors.InvalidArgumentError):
        sl.planckian_spd(5000.0, grid_nm=np.array([200.0, 400.0]))
    with pytest.raises(errors.InvalidArgumentError):
        sl.planckian_spd(5000.0, grid_nm=np.array([400.0, 900.0]))


def test_blue_red_ratio_increases_with_temperature():
    ratios = []
    for T in np.linspace(3000.0, 12000.0, 15):
        spd = sl.planckian_spd(T)
        ratios.append(spd.value_at(450.0) / spd.value_at(610.0))
    assert np.all(np.diff(ratios) > 0)


def test_band_constants_delta_analytic(delta_sensors):
    bc = sl.band_constants(delta_sensors)
    lam_m = np.array([610e-9, 540e-9, 450e-9])
    assert np.allclose(bc.e, -spectra.C2 / lam_m, rtol=0, atol=1e-9)
    # hand check for the red channel
    assert bc.e[0] == pytest.approx(-1.4388e-2 / 610e-9)
    assert np.all(np.diff(bc.e) < 0)  # e_k increasing in lambda_k, reverse order here
    assert abs(bc.w.sum()) < 1e-12
    assert abs((bc.e - bc.e_M).sum()) < 1e-9


def test_band_constants_identical_sensors():
    grid = np.arange(400.0, 701.0, 10.0)
    vals = np.exp(-0.5 * ((grid - 550.0) / 60.0) ** 2)
    curve = sl.SpectralCurve(grid, vals, kind="sensor")
    bc = sl.band_constants(sl.SensorSet.sampled([curve, curve, curve]))
    assert np.allclose(bc.w, 0.0, atol=1e-12)
    assert np.allclose(bc.e, bc.e_M, atol=1e-9)


def test_narrow_gaussian_converges_to_delta(delta_sensors):
    bc = sl.band_constants(delta_sensors)
    bn = sl.band_constants(sl.gaussian_sensors(sigma_nm=2.0))
    assert np.max(np.abs((bn.e - bc.e) / bc.e)) < 1e-3
    assert np.max(np.abs(bn.w - bc.w) / np.abs(bc.w)) < 1e-3


def test_zero_strength_sensor_rejected():
    grid = np.arange(400.0, 701.0, 10.0)
    dead = sl.SpectralCurve(grid, np.zeros_like(grid), kind="sensor")
    live = sl.SpectralCurve(grid, np.ones_like(grid), kind="sensor")
    with pytest.raises(errors.DegenerateSensorError):
        sl.band_constants(sl.SensorSet.sampled([live, live, dead]))


def test_sum_w_zero_for_every_sensor_set(delta_sensors, gauss_sensors):
    for sens in (delta_sensors, gauss_sensors,
                 sl.SensorSet.delta((640.0, 530.0, 470.0), gains=(2.0, 1.0, 0.5)),
                 sl.gaussian_sensors(sigma_nm=15.0, gains=(1.5, 1.0, 0.7))):
        assert abs(sl.band_constants(sens).w.sum()) < 1e-12


def test_effective_reflectance_perfect_and_grey(delta_sensors, gauss_sensors):
    grid = np.arange(380.0, 781.0, 5.0)
    ones = sl.SpectralCurve(grid, np.ones_like(grid), kind="reflectance")
    half = sl.SpectralCurve(grid, np.full_like(grid, 0.5), kind="reflectance")
    for sens in (delta_sensors, gauss_sensors):
        assert np.allclose(sl.effective_reflectance(ones, sens), 1.0, atol=1e-12)
        assert np.allclose(sl.effective_reflectance(half, sens), 0.5, atol=1e-12)


def test_effective_reflectance_matches_independent_quadrature(gauss_sensors):
    patch = sl.colorchecker_reflectance(1)
    got = sl.effective_reflectance(patch, gauss_sensors)
    for k, curve in enumerate(gauss_sensors.curves):
        # plain loop-based trapezoid, written separately from the library path
        wl = curve.wavelengths_nm * 1e-9
        q = curve.values
        s = np.interp(curve.wavelengths_nm, patch.wavelengths_nm, patch.values)
        num = den = 0.0
        for i in range(len(wl) - 1):
            h = wl[i + 1] - wl[i]
            num += 0.5 * h * (s[i] * q[i] + s[i + 1] * q[i + 1])
            den += 0.5 * h * (q[i] + q[i + 1])
        assert got[k] == pytest.approx(num / den, rel=1e-12)
    assert np.all((got >= 0) & (got <= 1))


def test_effective_reflectance_coverage_error(delta_sensors):
    grid = np.arange(500.0, 651.0, 10.0)  # misses 450 nm
    short = sl.SpectralCurve(grid, np.full_like(grid, 0.4), kind="reflectance")
    with pytest.raises(errors.CoverageError):
        sl.effective_reflectance(short, delta_sensors)


def test_spectral_curve_validation():
    with pytest.raises(errors.InvalidArgumentError):
        sl.SpectralCurve([500.0], [1.0], kind="sensor")
    with pytest.raises(errors.InvalidArgumentError):
        sl.SpectralCurve([500.0, 490.0], [1.0, 1.0], kind="sensor")
    with pytest.raises(errors.InvalidArgumentError):
        sl.SpectralCurve([500.0, 510.0], [1.0, 1.2], kind="reflectance")
    with pytest.raises(errors.InvalidArgumentError):
        sl.SpectralCurve([500.0, 510.0], [-0.1, 0.5], kind="illuminant")


def test_delta_sensor_ordering_enforced():
    with pytest.raises(errors.InvalidArgumentError):
        sl.SensorSet.delta((450.0, 540.0, 610.0))


def test_read_spectral_table_errors():
    bad_header = io.StringIO("nm a b\n400 1 2\n")
    with pytest.raises(errors.InvalidArgumentError, match=":1"):
        spectra.read_spectral_table(bad_header)
    bad_row = io.StringIO("wavelength_nm a\n400 1\n410 1 2\n")
    with pytest.raises(errors.InvalidArgumentError, match=":3"):
        spectra.read_spectral_table(bad_row)
    bad_value = io.StringIO("wavelength_nm a\n400 x\n")
    with pytest.raises(errors.InvalidArgumentError, match=":2"):
        spectra.read_spectral_table(bad_value)


def test_bundled_data_loads():
    for i in range(1, 25):
        curve = sl.colorchecker_reflectance(i)
        assert curve.kind == "reflectance"
        assert curve.wavelengths_nm[0] == 400.0 and curve.wavelengths_nm[-1] == 700.0
        assert np.all((curve.values >= 0) & (curve.values <= 1))
    d65 = sl.d65_spd()
    assert d65.value_at(560.0) == pytest.approx(100.0)
    # greys are flat, chart colours are not
    grey = sl.colorchecker_reflectance(22)
    assert np.ptp(grey.values) < 0.02
    red = sl.colorchecker_reflectance(15)
    assert np.ptp(red.values) > 0.3
