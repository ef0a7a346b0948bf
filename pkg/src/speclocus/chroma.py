"""Geometric-mean chromaticity, its log, the fixed 2-D projection chi, and L1 chromaticity.

Dividing RGB by its geometric mean kills intensity and shading; the log of the
result lies on the plane orthogonal to (1,1,1), which a fixed 2x3 basis U maps
to 2-vectors chi. All operations are pure and vectorized over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

# Canonical projection basis: rows orthonormal, both orthogonal to (1,1,1).
# Fixed once so calibration profiles stay portable between runs.
U_BASIS = np.array([
    [1.0 / np.sqrt(2.0), -1.0 / np.sqrt(2.0), 0.0],
    [1.0 / np.sqrt(6.0), 1.0 / np.sqrt(6.0), -2.0 / np.sqrt(6.0)],
])
U_BASIS.flags.writeable = False

U_BASIS_ID = "u-canonical-1"

# Channels below CLAMP_REL * max(image) are clamped before logs and the pixel flagged.
CLAMP_REL = 1e-6


@dataclass(frozen=True)
class ProjectionBasis:
    """A 2x3 matrix with orthonormal rows orthogonal to (1,1,1)."""

    U: np.ndarray
    basis_id: str = U_BASIS_ID

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float).copy()
        U.flags.writeable = False
        object.__setattr__(self, "U", U)
        if U.shape != (2, 3):
            raise InvalidArgumentError("projection basis must be 2x3")
        if not np.allclose(U @ U.T, np.eye(2), atol=1e-12):
            raise InvalidArgumentError("projection basis rows must be orthonormal")
        if not np.allclose(U @ np.ones(3), 0.0, atol=1e-12):
            raise InvalidArgumentError("projection basis rows must be orthogonal to (1,1,1)")


CANONICAL_BASIS = ProjectionBasis(U_BASIS)


@dataclass(frozen=True)
class ChromaVec:
    """Chromaticity of a single pixel: r (product 1), log r (sum 0) and chi = U log r."""

    r: np.ndarray
    logr: np.ndarray
    chi: np.ndarray
    valid: bool = True


@dataclass(frozen=True)
class ChromaImage:
    """Vectorized chromaticity of an image: arrays share the input's leading shape."""

    r: np.ndarray       # (..., 3)
    logr: np.ndarray    # (..., 3)
    chi: np.ndarray     # (..., 2)
    valid: np.ndarray   # (...,) bool; False where a channel needed clamping


def _clamp_and_flag(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    peak = float(rgb.max()) if rgb.size else 0.0
    if peak <= 0.0:
        return np.full_like(rgb, 1.0), np.zeros(rgb.shape[:-1], dtype=bool)
    eps = CLAMP_REL * peak
    flagged = np.any(rgb < eps, axis=-1)
    clamped = np.maximum(rgb, eps)
    return clamped, ~flagged


def chroma_image(rgb, sharpening: np.ndarray | None = None) -> ChromaImage:
    """Geometric-mean chromaticity of an (..., 3) array of linear RGB values.

    Channels below 1e-6 of the image maximum are clamped before the logs and
    the pixel is flagged invalid (never silently zeroed). An optional 3x3
    sharpening matrix is applied to RGB first; the default is identity.
    """
    rgb = np.asarray(rgb, dtype=float)
    if rgb.shape[-1] != 3:
        raise InvalidArgumentError("last axis must have length 3")
    if sharpening is not None:
        M = np.asarray(sharpening, dtype=float)
        if M.shape != (3, 3):
            raise InvalidArgumentError("sharpening matrix must be 3x3")
        rgb = rgb @ M.T
    clamped, valid = _clamp_and_flag(rgb)
    logv = np.log(clamped)
    logr = logv - logv.mean(axis=-1, keepdims=True)
    r = np.exp(logr)
    chi = logr @ U_BASIS.T
    return ChromaImage(r=r, logr=logr, chi=chi, valid=valid)


def geomean_chroma(rgb) -> ChromaVec:
    """Chromaticity of one RGB triple; flagged invalid if any channel had to be clamped."""
    rgb = np.asarray(rgb, dtype=float)
    if rgb.shape != (3,):
        raise InvalidArgumentError("geomean_chroma expects a 3-vector")
    img = chroma_image(rgb[None, :])
    return ChromaVec(r=img.r[0], logr=img.logr[0], chi=img.chi[0], valid=bool(img.valid[0]))


def l1_chroma(rgb) -> np.ndarray:
    """L1 chromaticity rho = RGB / (R+G+B) for (..., 3) input.

    Pixels whose channel sum is not positive come back as NaN (flagged invalid).
    """
    rgb = np.asarray(rgb, dtype=float)
    if rgb.shape[-1] != 3:
        raise InvalidArgumentError("last axis must have length 3")
    s = rgb.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(s > 0, rgb / np.where(s > 0, s, 1.0), np.nan)
    return rho


def locus_to_l1(chi) -> np.ndarray:
    """Invert the projection: lift chi to zero-sum log r, exponentiate, renormalize to L1.

    Maps a straight line in chi space to the curved locus in rho space.
    """
    chi = np.asarray(chi, dtype=float)
    if chi.shape[-1] != 2:
        raise InvalidArgumentError("last axis must have length 2")
    logr = chi @ U_BASIS
    r = np.exp(logr)
    return r / r.sum(axis=-1, keepdims=True)


def rho_to_chi(rho) -> np.ndarray:
    """chi coordinates of an L1 chromaticity (scale invariant, so rho works like RGB)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise InvalidArgumentError("rho must be strictly positive to take logs")
    logv = np.log(rho)
    logr = logv - logv.mean(axis=-1, keepdims=True)
    return logr @ U_BASIS.T


def write_chi_csv(path, chroma: ChromaImage) -> None:
    """Emit per-pixel chi as CSV with columns x,y,flag (flag 1 = valid)."""
    chi = chroma.chi.reshape(-1, 2)
    valid = chroma.valid.reshape(-1)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("x,y,flag\n")
        for (x, y), ok in zip(chi, valid):
            fh.write(f"{float(x)!r},{float(y)!r},{1 if ok else 0}\n")
