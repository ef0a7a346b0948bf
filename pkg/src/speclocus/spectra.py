"""Spectral data types, the Wien/Planckian illuminant model and per-camera band constants.

Everything here is pure and immutable: curves are sampled functions of wavelength
(stored in nm, converted to metres only inside the Planckian evaluation), and a
camera is reduced to a handful of per-channel scalars that the rest of the
pipeline consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import CoverageError, DegenerateSensorError, InvalidArgumentError

# Wien approximation constants, SI units (wavelength in metres inside the formula).
C1 = 3.74183e16
C2 = 1.4388e-2

NM_TO_M = 1e-9

# Default sampling grid for bundled reflectance data and synthetic sensors.
DEFAULT_GRID_NM = np.arange(400.0, 701.0, 10.0)
DEFAULT_GRID_NM.flags.writeable = False

# Default spike-sensor centre wavelengths (R, G, B) with unit gains.
DEFAULT_DELTA_NM = (610.0, 540.0, 450.0)

COLORCHECKER_NAMES = (
    "dark_skin", "light_skin", "blue_sky", "foliage", "blue_flower",
    "bluish_green", "orange", "purplish_blue", "moderate_red", "purple",
    "yellow_green", "orange_yellow", "blue", "green", "red", "yellow",
    "magenta", "cyan", "white", "neutral_8", "neutral_65", "neutral_5",
    "neutral_35", "black",
)


def _readonly(a) -> np.ndarray:
    out = np.asarray(a, dtype=float).copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SpectralCurve:
    """A sampled function of wavelength: an SPD, a reflectance or a sensor sensitivity."""

    wavelengths_nm: np.ndarray
    values: np.ndarray
    kind: str  # "illuminant" | "reflectance" | "sensor"

    def __post_init__(self):
        wl = _readonly(self.wavelengths_nm)
        vals = _readonly(self.values)
        object.__setattr__(self, "wavelengths_nm", wl)
        object.__setattr__(self, "values", vals)
        if self.kind not in ("illuminant", "reflectance", "sensor"):
            raise InvalidArgumentError(f"unknown curve kind {self.kind!r}")
        if wl.ndim != 1 or wl.shape != vals.shape or wl.size < 2:
            raise InvalidArgumentError("wavelengths and values must be equal-length 1-D arrays of length >= 2")
        if not np.all(np.diff(wl) > 0):
            raise InvalidArgumentError("wavelengths must be strictly increasing")
        if np.any(vals < 0):
            raise InvalidArgumentError(f"{self.kind} values must be non-negative")
        if self.kind == "reflectance" and np.any(vals > 1.0):
            raise InvalidArgumentError("reflectance values must lie in [0, 1]")

    def value_at(self, wavelength_nm) -> np.ndarray:
        """Linear interpolation; raises CoverageError outside the sampled range."""
        q = np.asarray(wavelength_nm, dtype=float)
        lo, hi = self.wavelengths_nm[0], self.wavelengths_nm[-1]
        if np.any(q < lo) or np.any(q > hi):
            raise CoverageError(
                f"wavelength query outside curve domain [{lo}, {hi}] nm"
            )
        return np.interp(q, self.wavelengths_nm, self.values)


@dataclass(frozen=True)
class SensorSet:
    """A 3-channel camera in R, G, B order.

    Either an idealized spike ("delta") camera storing one centre wavelength and
    gain per channel, or a "sampled" camera storing three sensitivity curves.
    """

    model: str  # "delta" | "sampled"
    lambdas_nm: np.ndarray | None = None
    gains: np.ndarray | None = None
    curves: tuple[SpectralCurve, ...] | None = None

    def __post_init__(self):
        if self.model == "delta":
            lam = _readonly(self.lambdas_nm)
            q = _readonly(self.gains if self.gains is not None else np.ones(3))
            object.__setattr__(self, "lambdas_nm", lam)
            object.__setattr__(self, "gains", q)
            if lam.shape != (3,) or q.shape != (3,):
                raise InvalidArgumentError("delta sensors need 3 centre wavelengths and 3 gains")
            if not (lam[0] > lam[1] > lam[2]):
                raise InvalidArgumentError("delta centres must satisfy lambda_R > lambda_G > lambda_B")
            if np.any(q <= 0):
                raise InvalidArgumentError("delta gains must be positive")
        elif self.model == "sampled":
            if self.curves is None or len(self.curves) != 3:
                raise InvalidArgumentError("sampled sensors need exactly 3 curves (R, G, B)")
            for c in self.curves:
                if c.kind != "sensor":
                    raise InvalidArgumentError("sensor set curves must have kind='sensor'")
            object.__setattr__(self, "curves", tuple(self.curves))
        else:
            raise InvalidArgumentError(f"unknown sensor model {self.model!r}")

    @staticmethod
    def delta(lambdas_nm=DEFAULT_DELTA_NM, gains=(1.0, 1.0, 1.0)) -> "SensorSet":
        return SensorSet(model="delta", lambdas_nm=np.asarray(lambdas_nm, float),
                         gains=np.asarray(gains, float))

    @staticmethod
    def sampled(curves) -> "SensorSet":
        return SensorSet(model="sampled", curves=tuple(curves))


def gaussian_sensors(centers_nm=DEFAULT_DELTA_NM, sigma_nm=30.0, gains=(1.0, 1.0, 1.0),
                     step_nm=None, support=(400.0, 700.0)) -> SensorSet:
    """Gaussian-sensitivity camera; a stand-in for real broadband sensor curves.

    Each channel is sampled on its own grid spanning centre +- 5 sigma, clipped
    to the support interval (default 400-700 nm so the lobes stay inside the
    bundled reflectance data). The step defaults to sigma/8 so the quadratures
    downstream resolve the lobe even for narrow widths.
    """
    if sigma_nm <= 0:
        raise InvalidArgumentError("sigma_nm must be positive")
    step = step_nm if step_nm is not None else max(sigma_nm / 8.0, 0.05)
    curves = []
    for c, g in zip(centers_nm, gains):
        lo = max(support[0], c - 5.0 * sigma_nm)
        hi = min(support[1], c + 5.0 * sigma_nm)
        grid = np.arange(lo, hi + 0.5 * step, step)
        vals = g * np.exp(-0.5 * ((grid - c) / sigma_nm) ** 2)
        curves.append(SpectralCurve(grid, vals, kind="sensor"))
    return SensorSet.sampled(curves)


@dataclass(frozen=True)
class BandConstants:
    """Per-camera scalars: e_k (Kelvin), their mean e_M, log offsets w_k, raw v_k and strengths sigma_k.

    By construction sum_k (e_k - e_M) = 0 and sum_k w_k = 0.
    """

    e: np.ndarray
    e_M: float
    w: np.ndarray
    v: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        for name in ("e", "w", "v", "sigma"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))

    @property
    def light_change(self) -> np.ndarray:
        """The 3-vector (e_k - e_M): the direction log-chromaticities move as 1/T changes."""
        return self.e - self.e_M


def planckian_spd(T: float, intensity: float = 1.0, grid_nm=DEFAULT_GRID_NM) -> SpectralCurve:
    """Wien approximation of a Planckian radiator sampled on the given grid.

    values = intensity * C1 * lambda^-5 * exp(-C2 / (lambda * T)), lambda in metres.
    """
    if not T > 0:
        raise InvalidArgumentError("temperature must be positive")
    grid = np.asarray(grid_nm, dtype=float)
    if grid.size == 0:
        raise InvalidArgumentError("wavelength grid is empty")
    if grid.min() < 300.0 or grid.max() > 830.0:
        raise InvalidArgumentError("wavelength grid must lie within [300, 830] nm")
    lam = grid * NM_TO_M
    vals = intensity * C1 * lam ** -5.0 * np.exp(-C2 / (lam * T))
    return SpectralCurve(grid, vals, kind="illuminant")


def wien_radiance(wavelength_nm, T: float, intensity: float = 1.0) -> np.ndarray:
    """Pointwise Wien evaluation (same formula as planckian_spd, no grid checks)."""
    lam = np.asarray(wavelength_nm, dtype=float) * NM_TO_M
    return intensity * C1 * lam ** -5.0 * np.exp(-C2 / (lam * T))


def band_constants(sensors: SensorSet) -> BandConstants:
    """Reduce a camera to the scalars driving the log-chromaticity model.

    Delta model: e_k = -C2/lambda_k, v_k = lambda_k^-5 q_k, sigma_k = q_k.
    Sampled model: sigma_k = int q_k, e_k = (1/sigma_k) int -(C2/lambda) q_k,
    v_k = int lambda^-5 q_k, all by trapezoidal quadrature.
    In both: e_M = mean(e), w_k = log(v_k / geomean(v)).
    """
    if sensors.model == "delta":
        lam_m = sensors.lambdas_nm * NM_TO_M
        e = -C2 / lam_m
        v = lam_m ** -5.0 * sensors.gains
        sigma = sensors.gains.copy()
    else:
        e = np.empty(3)
        v = np.empty(3)
        sigma = np.empty(3)
        for k, c in enumerate(sensors.curves):
            lam_m = c.wavelengths_nm * NM_TO_M
            sigma[k] = np.trapezoid(c.values, lam_m)
            if sigma[k] <= 0:
                raise DegenerateSensorError(f"channel {k} has zero integrated strength")
            e[k] = np.trapezoid(-(C2 / lam_m) * c.values, lam_m) / sigma[k]
            v[k] = np.trapezoid(lam_m ** -5.0 * c.values, lam_m)
    e_M = float(np.mean(e))
    w = np.log(v) - np.mean(np.log(v))
    return BandConstants(e=e, e_M=e_M, w=w, v=v, sigma=sigma)


def effective_reflectance(s: SpectralCurve, sensors: SensorSet) -> np.ndarray:
    """Per-channel band-effective reflectance s_k = (1/sigma_k) int S(lambda) q_k(lambda) dlambda.

    For delta sensors this reduces to sampling S at the centre wavelengths.
    The reflectance must cover the sensor support; otherwise a CoverageError is raised.
    """
    if s.kind != "reflectance":
        raise InvalidArgumentError("effective_reflectance expects a reflectance curve")
    if sensors.model == "delta":
        return np.asarray(s.value_at(sensors.lambdas_nm), dtype=float)
    out = np.empty(3)
    for k, c in enumerate(sensors.curves):
        support = c.wavelengths_nm[c.values > 0]
        if support.size and (support[0] < s.wavelengths_nm[0] or support[-1] > s.wavelengths_nm[-1]):
            raise CoverageError(
                f"reflectance covers [{s.wavelengths_nm[0]}, {s.wavelengths_nm[-1]}] nm "
                f"but channel {k} has support out to [{support[0]}, {support[-1]}] nm"
            )
        lam_m = c.wavelengths_nm * NM_TO_M
        sig = np.trapezoid(c.values, lam_m)
        if sig <= 0:
            raise DegenerateSensorError(f"channel {k} has zero integrated strength")
        s_on_grid = np.interp(c.wavelengths_nm, s.wavelengths_nm, s.values)
        out[k] = np.trapezoid(s_on_grid * c.values, lam_m) / sig
    return out


def light_factors(sensors: SensorSet, T: float, intensity: float = 1.0) -> np.ndarray:
    """Camera response to a pure Planckian light: f_k = int E(lambda; T) q_k(lambda) dlambda.

    This is the "light spectral factor" that multiplies both the matte and the
    specular term of a dichromatic pixel.
    """
    if not T > 0:
        raise InvalidArgumentError("temperature must be positive")
    if sensors.model == "delta":
        return wien_radiance(sensors.lambdas_nm, T, intensity) * sensors.gains
    out = np.empty(3)
    for k, c in enumerate(sensors.curves):
        lam_m = c.wavelengths_nm * NM_TO_M
        E = wien_radiance(c.wavelengths_nm, T, intensity)
        out[k] = np.trapezoid(E * c.values, lam_m)
    return out


# ---------------------------------------------------------------------------
# Bundled spectral data (plain-text tables, one header line then columns)
# ---------------------------------------------------------------------------

def read_spectral_table(source) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Parse a whitespace-separated spectral table.

    First line: ``wavelength_nm name1 name2 ...``. Every following non-empty,
    non-comment line holds one wavelength and one value per named column.
    Parse failures report 1-based line numbers.
    """
    if hasattr(source, "read"):
        lines = source.read().splitlines()
        where = getattr(source, "name", "<stream>")
    else:
        with open(source, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
        where = str(source)

    header = None
    wavelengths: list[float] = []
    columns: list[list[float]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if header is None:
            if parts[0] != "wavelength_nm":
                raise InvalidArgumentError(
                    f"{where}:{lineno}: header must start with 'wavelength_nm', got {parts[0]!r}"
                )
            header = parts[1:]
            if not header:
                raise InvalidArgumentError(f"{where}:{lineno}: header names no value columns")
            columns = [[] for _ in header]
            continue
        if len(parts) != len(header) + 1:
            raise InvalidArgumentError(
                f"{where}:{lineno}: expected {len(header) + 1} columns, got {len(parts)}"
            )
        try:
            row = [float(p) for p in parts]
        except ValueError as exc:
            raise InvalidArgumentError(f"{where}:{lineno}: {exc}") from None
        wavelengths.append(row[0])
        for col, val in zip(columns, row[1:]):
            col.append(val)
    if header is None:
        raise InvalidArgumentError(f"{where}: no header line found")
    wl = np.asarray(wavelengths)
    return wl, {name: np.asarray(col) for name, col in zip(header, columns)}


def _bundled(name: str):
    return resources.files("speclocus.data").joinpath(name)


_colorchecker_cache: dict[int, SpectralCurve] = {}
_d65_cache: list[SpectralCurve] = []


def colorchecker_reflectance(patch: int) -> SpectralCurve:
    """Reflectance of 24-patch chart patch number 1..24 (1 = dark skin)."""
    if not 1 <= patch <= 24:
        raise InvalidArgumentError("patch number must be in 1..24")
    if patch not in _colorchecker_cache:
        with _bundled("colorchecker_reflectance.txt").open("r") as fh:
            wl, cols = read_spectral_table(fh)
        for i, name in enumerate(COLORCHECKER_NAMES, start=1):
            key = f"p{i:02d}_{name}"
            _colorchecker_cache[i] = SpectralCurve(wl, cols[key], kind="reflectance")
    return _colorchecker_cache[patch]


def d65_spd() -> SpectralCurve:
    """CIE D65 daylight SPD on the bundled grid (relative power, 100 at 560 nm)."""
    if not _d65_cache:
        with _bundled("cie_d65.txt").open("r") as fh:
            wl, cols = read_spectral_table(fh)
        _d65_cache.append(SpectralCurve(wl, cols["d65"], kind="illuminant"))
    return _d65_cache[0]
