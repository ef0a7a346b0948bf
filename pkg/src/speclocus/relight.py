"""Relighting by the von Kries diagonal transform between illuminant chromaticities.

Moving a pixel from illuminant rho_e to rho_e' multiplies each channel by
rho_e'_k / rho_e_k. Temperatures are resolved to chromaticities through a
calibrated locus, so a scene can be swept along the Planckian path. The whole
pipeline stays in linear floats; any clipping happens only at export.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calib import LocusParams
from .chroma import locus_to_l1
from .errors import InvalidArgumentError
from .illum import estimate_zeta_locus


@dataclass(frozen=True)
class RelightSpec:
    """Source and target illuminants, each an explicit chromaticity or a locus temperature."""

    source_rho: np.ndarray | None = None
    target_rho: np.ndarray | None = None
    source_T: float | None = None
    target_T: float | None = None
    clip_policy: str = "clip_255"  # applied at export only: "clip_255" | "rescale"

    def __post_init__(self):
        if self.clip_policy not in ("clip_255", "rescale"):
            raise InvalidArgumentError(f"unknown clip policy {self.clip_policy!r}")
        if (self.source_rho is None) == (self.source_T is None):
            raise InvalidArgumentError("give exactly one of source_rho / source_T")
        if (self.target_rho is None) == (self.target_T is None):
            raise InvalidArgumentError("give exactly one of target_rho / target_T")


def _resolve(rho, T, locus: LocusParams | None, side: str) -> np.ndarray:
    if rho is not None:
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (3,):
            raise InvalidArgumentError(f"{side} chromaticity must be a 3-vector")
    else:
        if locus is None:
            raise InvalidArgumentError(f"{side} given as a temperature but no locus provided")
        if T <= 0:
            raise InvalidArgumentError("temperatures must be positive")
        rho = locus_to_l1(locus.point_at(float(T)))
    if np.any(rho == 0):
        raise InvalidArgumentError(f"{side} chromaticity has a zero channel; transform singular")
    if np.any(rho < 0):
        raise InvalidArgumentError(f"{side} chromaticity must be positive")
    return rho


def diagonal_gain(spec: RelightSpec, locus: LocusParams | None = None) -> np.ndarray:
    """The per-channel gains M_kk = rho_target_k / rho_source_k."""
    src = _resolve(spec.source_rho, spec.source_T, locus, "source")
    tgt = _resolve(spec.target_rho, spec.target_T, locus, "target")
    return tgt / src


def relight(image, spec: RelightSpec, locus: LocusParams | None = None) -> np.ndarray:
    """Apply the diagonal transform to an (H, W, 3) linear image."""
    img = np.asarray(image, dtype=float)
    if img.shape[-1] != 3:
        raise InvalidArgumentError("image must have 3 channels on the last axis")
    return img * diagonal_gain(spec, locus)


def temperature_sweep(image, locus: LocusParams, temps, source_T: float | None = None,
                      source_rho=None) -> list[np.ndarray]:
    """Relight an image to each temperature along the locus.

    The source illuminant defaults to the image's own zeta-locus estimate.
    """
    temps = list(temps)
    if not temps:
        return []
    if source_rho is None and source_T is None:
        source_rho = estimate_zeta_locus(image, locus).rho_e
    out = []
    for T in temps:
        spec = RelightSpec(source_rho=source_rho, source_T=source_T,
                           target_T=float(T))
        out.append(relight(image, spec, locus))
    return out


def apply_clip_policy(image, policy: str, scale: float = 255.0) -> np.ndarray:
    """Export-time mapping of a linear image onto the 0..scale display range."""
    img = np.asarray(image, dtype=float)
    if policy == "clip_255":
        return np.clip(img, 0.0, scale)
    if policy == "rescale":
        peak = img.max()
        return img * (scale / peak) if peak > 0 else img
    raise InvalidArgumentError(f"unknown clip policy {policy!r}")
