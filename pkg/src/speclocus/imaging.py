"""Synthetic dichromatic scene renderer: shaded spheres under a distant Planckian light.

Each pixel is matte (Lambertian) plus a Phong specular lobe whose colour equals
the light colour (neutral interface). The matte and specular layers are kept
separate so downstream algorithms can be scored against exact ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import spectra
from .errors import InvalidArgumentError
from .spectra import SensorSet, SpectralCurve


def _unit(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise InvalidArgumentError(f"{name} must be a 3-vector")
    n = np.linalg.norm(v)
    if abs(n - 1.0) > 1e-9:
        raise InvalidArgumentError(f"{name} must be unit length (|v| = {n})")
    return v


@dataclass(frozen=True)
class Sphere:
    center_px: tuple[float, float]
    radius_px: float
    reflectance: SpectralCurve


@dataclass(frozen=True)
class LightSpec:
    T: float
    intensity: float = 1.0
    direction: tuple[float, float, float] = (0.0, 0.0, 1.0)


@dataclass(frozen=True)
class PhongSpec:
    factor: float = 1.0
    power: int = 20

    def __post_init__(self):
        if self.factor < 0:
            raise InvalidArgumentError("phong factor must be >= 0")
        if int(self.power) < 1:
            raise InvalidArgumentError("phong power must be >= 1")


@dataclass(frozen=True)
class SceneSpec:
    spheres: tuple[Sphere, ...]
    light: LightSpec
    phong: PhongSpec = field(default_factory=PhongSpec)
    view_direction: tuple[float, float, float] = (0.0, 0.0, 1.0)
    size: tuple[int, int] = (192, 128)  # (width, height)


@dataclass(frozen=True)
class RenderedImage:
    """Linear HxWx3 output plus the specular-free matte layer and an object-id mask."""

    rgb: np.ndarray
    matte_rgb: np.ndarray
    mask: np.ndarray  # HxW int, 0 = background, i+1 = sphere i

    @property
    def specular_rgb(self) -> np.ndarray:
        return self.rgb - self.matte_rgb


def render(scene: SceneSpec, sensors: SensorSet) -> RenderedImage:
    """Render once with the matte and specular terms tracked separately.

    Per pixel on sphere j: rgb_k = (kappa * s_k + factor * Phi) * f_k where
    kappa = max(light . normal, 0), Phi = max(halfway . normal, 0)^power,
    s_k the sphere's band-effective reflectance and f_k the camera response
    to the pure light. Orthographic projection, single distant light,
    background pixels zero.
    """
    W, H = scene.size
    if W < 1 or H < 1:
        raise InvalidArgumentError("image size must be positive")
    light_dir = _unit(scene.light.direction, "light direction")
    view_dir = _unit(scene.view_direction, "view direction")
    if scene.light.T <= 0:
        raise InvalidArgumentError("light temperature must be positive")

    halfway = light_dir + view_dir
    hn = np.linalg.norm(halfway)
    if hn == 0:
        raise InvalidArgumentError("light and view directions are opposed")
    halfway = halfway / hn

    f = spectra.light_factors(sensors, scene.light.T, scene.light.intensity)

    rgb = np.zeros((H, W, 3))
    matte = np.zeros((H, W, 3))
    mask = np.zeros((H, W), dtype=int)
    depth = np.full((H, W), -np.inf)

    cols, rows = np.meshgrid(np.arange(W, dtype=float), np.arange(H, dtype=float))
    for idx, sph in enumerate(scene.spheres):
        cx, cy = sph.center_px
        a = float(sph.radius_px)
        if a <= 0:
            raise InvalidArgumentError("sphere radius must be positive")
        dx = (cols - cx) / a
        dy = (cy - rows) / a  # image rows grow downward, world Y grows upward
        rr = dx * dx + dy * dy
        hit = rr <= 1.0
        if not hit.any():
            continue
        nz = np.sqrt(np.maximum(1.0 - rr[hit], 0.0))
        n = np.stack([dx[hit], dy[hit], nz], axis=-1)
        z = nz * a
        closer = z > depth[hit]

        kappa = np.maximum(n @ light_dir, 0.0)
        phi = np.maximum(n @ halfway, 0.0) ** int(scene.phong.power)
        s = spectra.effective_reflectance(sph.reflectance, sensors)
        m = kappa[:, None] * s[None, :] * f[None, :]
        spec = scene.phong.factor * phi[:, None] * f[None, :]

        hy, hx = np.nonzero(hit)
        hy, hx = hy[closer], hx[closer]
        rgb[hy, hx] = (m + spec)[closer]
        matte[hy, hx] = m[closer]
        mask[hy, hx] = idx + 1
        depth[hy, hx] = z[closer]

    return RenderedImage(rgb=rgb, matte_rgb=matte, mask=mask)


def three_sphere_scene(patches=(1, 4, 9), T: float = 6500.0, intensity: float = 1.0,
                       sphere_radius: float = 36.0, size: tuple[int, int] = (240, 88),
                       phong_factor: float = 1.0, phong_power: int = 20,
                       light_direction=(0.25, 0.25, 1.0)) -> SceneSpec:
    """The stock test scene: three shaded spheres with chart-patch reflectances.

    Defaults give patches 1, 4 and 9 (dark skin, foliage, moderate red) under a
    Planckian light, Phong factor 1, power 20.
    """
    W, H = size
    n = len(patches)
    centers = [((i + 0.5) * W / n, H / 2.0) for i in range(n)]
    spheres = tuple(
        Sphere(center_px=c, radius_px=sphere_radius,
               reflectance=spectra.colorchecker_reflectance(p))
        for c, p in zip(centers, patches)
    )
    d = np.asarray(light_direction, dtype=float)
    d = d / np.linalg.norm(d)
    return SceneSpec(
        spheres=spheres,
        light=LightSpec(T=T, intensity=intensity, direction=tuple(d)),
        phong=PhongSpec(factor=phong_factor, power=phong_power),
        size=size,
    )


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB, values interpreted on a 0..255 scale after clipping.

    Identical images give positive infinity.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"shape mismatch: {a.shape} vs {b.shape}")
    a = np.clip(a, 0.0, 255.0)
    b = np.clip(b, 0.0, 255.0)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(255.0 ** 2 / mse)
