import numpy as np
import pytest

import speclocus as sl
from speclocus import errors, spectra
from conftest import OBLIQUE_LIGHT, three_sphere_image


def test_zero_phong_factor_means_pure_matte(delta_sensors):
    scene = sl.three_sphere_scene(T=6500.0, phong_factor=0.0, size=(120, 44),
                                  sphere_radius=18.0)
    img = sl.render(scene, delta_sensors)
    assert np.array_equal(img.rgb, img.matte_rgb)


def test_standard_scene_renders(delta_sensors):
    img = three_sphere_image(delta_sensors)
    assert img.rgb.shape == (88, 240, 3)
    assert set(np.unique(img.mask)) == {0, 1, 2, 3}
    assert np.all(img.rgb >= img.matte_rgb - 1e-300)
    assert np.all(img.rgb[img.mask == 0] == 0.0)
    assert img.rgb.max() > 0


def test_peak_pixel_closed_form(delta_sensors):
    # S == 1 everywhere, light along the view axis: at the sphere centre the
    # normal is parallel to both, so R_k = (1 + factor) * lambda^-5 e^(e_k/T) q_k
    grid = np.arange(400.0, 701.0, 10.0)
    white = sl.SpectralCurve(grid, np.ones_like(grid), kind="reflectance")
    scene = sl.SceneSpec(
        spheres=(sl.Sphere(center_px=(20.0, 20.0), radius_px=15.0, reflectance=white),),
        light=sl.LightSpec(T=7000.0, direction=(0.0, 0.0, 1.0)),
        phong=sl.PhongSpec(factor=0.8, power=20),
        size=(41, 41),
    )
    img = sl.render(scene, delta_sensors)
    lam_m = np.array([610e-9, 540e-9, 450e-9])
    expected = (1.0 + 0.8) * spectra.C1 * lam_m ** -5.0 * np.exp(-spectra.C2 / (lam_m * 7000.0))
    assert np.allclose(img.rgb[20, 20], expected, rtol=1e-12)


def test_specular_additivity(delta_sensors):
    base = sl.three_sphere_scene(T=6500.0, size=(120, 44), sphere_radius=18.0,
                                 light_direction=OBLIQUE_LIGHT)
    with_spec = sl.render(base, delta_sensors)
    matte_only = sl.render(
        sl.SceneSpec(spheres=base.spheres, light=base.light,
                     phong=sl.PhongSpec(factor=0.0, power=base.phong.power),
                     view_direction=base.view_direction, size=base.size),
        delta_sensors)
    diff = with_spec.rgb - matte_only.rgb
    changed = np.any(diff != 0, axis=-1)
    assert np.array_equal(with_spec.matte_rgb, matte_only.rgb)
    assert changed.any()
    # differences appear only inside objects, where the lobe is nonzero
    assert not changed[with_spec.mask == 0].any()


def test_intensity_scaling_exact(delta_sensors):
    s1 = sl.three_sphere_scene(T=6500.0, intensity=1.0, size=(120, 44), sphere_radius=18.0)
    s3 = sl.three_sphere_scene(T=6500.0, intensity=3.0, size=(120, 44), sphere_radius=18.0)
    a = sl.render(s1, delta_sensors)
    b = sl.render(s3, delta_sensors)
    assert np.allclose(b.rgb, 3.0 * a.rgb, rtol=1e-12)
    assert np.allclose(b.matte_rgb, 3.0 * a.matte_rgb, rtol=1e-12)


def test_specular_term_is_light_coloured(delta_sensors):
    # Eq.-7 structure: rgb - matte must be a non-negative multiple of the
    # light factor vector at every pixel, for delta sensors exactly.
    img = three_sphere_image(delta_sensors, T=8000.0, size=(120, 44), radius=18.0)
    f = sl.light_factors(delta_sensors, 8000.0)
    spec = img.specular_rgb.reshape(-1, 3)
    nz = spec.sum(axis=1) > 0
    beta = spec[nz] / f
    assert np.max(np.abs(beta - beta[:, :1])) / np.max(beta) < 1e-12


def test_direction_validation(delta_sensors):
    grid = np.arange(400.0, 701.0, 10.0)
    white = sl.SpectralCurve(grid, np.ones_like(grid), kind="reflectance")
    bad = sl.SceneSpec(
        spheres=(sl.Sphere((5.0, 5.0), 3.0, white),),
        light=sl.LightSpec(T=6500.0, direction=(0.0, 0.0, 2.0)),
        size=(10, 10),
    )
    with pytest.raises(errors.InvalidArgumentError):
        sl.render(bad, delta_sensors)
    with pytest.raises(errors.InvalidArgumentError):
        sl.PhongSpec(factor=-1.0)
    with pytest.raises(errors.InvalidArgumentError):
        sl.PhongSpec(power=0)


def test_psnr_identical_is_infinite():
    img = np.full((4, 5, 3), 120.0)
    assert sl.psnr(img, img) == float("inf")


def test_psnr_direct_evaluation():
    a = np.full((8, 8, 3), 40.0)
    b = np.full((8, 8, 3), 56.0)  # every channel differs by exactly 16
    expected = 10.0 * np.log10(255.0 ** 2 / 256.0)
    assert sl.psnr(a, b) == pytest.approx(expected, rel=1e-12)


def test_psnr_symmetry_and_shape_check():
    rng = np.random.default_rng(5)
    a = rng.uniform(0, 255, (6, 7, 3))
    b = rng.uniform(0, 255, (6, 7, 3))
    assert sl.psnr(a, b) == pytest.approx(sl.psnr(b, a), rel=0, abs=0)
    with pytest.raises(errors.InvalidArgumentError):
        sl.psnr(a, b[:5])
