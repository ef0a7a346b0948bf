import numpy as np
import pytest

import speclocus as sl

# Standard oblique light: 50 degrees off the view axis. This leaves a rim of
# purely specular pixels past the terminator, which the zeta estimators need.
OBLIQUE_LIGHT = None


def _oblique(psi_deg=50.0):
    psi = np.radians(psi_deg)
    d = np.array([np.sin(psi) * 0.9, np.sin(psi) * 0.45, np.cos(psi)])
    return tuple(d / np.linalg.norm(d))


OBLIQUE_LIGHT = _oblique()


@pytest.fixture(scope="session")
def delta_sensors():
    return sl.SensorSet.delta()


@pytest.fixture(scope="session")
def gauss_sensors():
    return sl.gaussian_sensors(sigma_nm=30.0)


@pytest.fixture(scope="session")
def locus_delta(delta_sensors):
    obs = sl.synthetic_observations(delta_sensors)
    return sl.calibrate(obs, sensors=delta_sensors)


@pytest.fixture(scope="session")
def locus_gauss(gauss_sensors):
    obs = sl.synthetic_observations(gauss_sensors)
    return sl.calibrate(obs, sensors=gauss_sensors)


def three_sphere_image(sensors, T=6500.0, size=(240, 88), radius=36.0):
    scene = sl.three_sphere_scene(T=T, size=size, sphere_radius=radius,
                                  light_direction=OBLIQUE_LIGHT)
    return sl.render(scene, sensors)


def many_sphere_scene(T, patches=range(1, 19), radius=9.0, cols=6,
                      phong_factor=1.0, phong_power=20):
    """A chart-like grid of small spheres; no body colour exceeds ~6% of pixels."""
    patches = list(patches)
    rows = int(np.ceil(len(patches) / cols))
    W, H = cols * 2 * int(radius + 2), rows * 2 * int(radius + 2)
    spheres = []
    for i, p in enumerate(patches):
        r, c = divmod(i, cols)
        spheres.append(sl.Sphere(center_px=((c + 0.5) * W / cols, (r + 0.5) * H / rows),
                                 radius_px=radius,
                                 reflectance=sl.colorchecker_reflectance(p)))
    return sl.SceneSpec(spheres=tuple(spheres),
                        light=sl.LightSpec(T=T, direction=OBLIQUE_LIGHT),
                        phong=sl.PhongSpec(factor=phong_factor, power=phong_power),
                        size=(W, H))


def true_illuminant_rho(sensors, T):
    f = sl.light_factors(sensors, T)
    return f / f.sum()


@pytest.fixture(scope="session")
def scene_6500(delta_sensors):
    return three_sphere_image(delta_sensors, T=6500.0)
