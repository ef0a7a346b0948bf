"""Specular-free matte images by angular projection around the specular point.

In the chi plane every pixel of one body colour lies along (nearly) the same
ray from the specular point, with specular content pulling it inward. Snapping
each pixel to the farthest reliable point of its 1-degree angular bin removes
highlights; the pixels closest to the specular point, where angles are noisy,
are then re-resolved by majority voting over their spatial neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .calib import LocusParams
from .chroma import chroma_image, locus_to_l1, rho_to_chi
from .errors import DegenerateDataError, InvalidArgumentError
from .illum import IlluminantEstimate, estimate_zeta_locus

N_BINS = 360

# Radius quantile used as the per-bin representative ("farthest after outliers").
BIN_RADIUS_PERCENTILE = 98.0

VOTE_MAX_ITERATIONS = 50


@dataclass(frozen=True)
class PolarChroma:
    """Polar coordinates of one chroma point around the specular point."""

    r: float
    theta: float  # degrees in [0, 360)
    bin: int

    @staticmethod
    def of(chi, specular_point) -> "PolarChroma":
        v = np.asarray(chi, dtype=float) - np.asarray(specular_point, dtype=float)
        r = float(np.hypot(v[0], v[1]))
        theta = float(np.degrees(np.arctan2(v[1], v[0])) % 360.0)
        return PolarChroma(r=r, theta=theta, bin=int(np.floor(theta)) % N_BINS)


@dataclass(frozen=True)
class MatteResult:
    """Per-pixel matte chroma plus the per-bin projection targets and voting masks."""

    matte_chi: np.ndarray        # (H, W, 2)
    assigned_bin: np.ndarray     # (H, W) int, -1 where invalid
    bin_representative: np.ndarray  # (360, 2), NaN where the bin is empty
    valid: np.ndarray            # (H, W) bool
    radius: np.ndarray           # (H, W) distance from the specular point
    specular_point: np.ndarray   # (2,)
    inpainted: np.ndarray = field(default=None)   # resolved by voting
    unresolved: np.ndarray = field(default=None)  # flagged: no majority found


def _polar(chi_field: np.ndarray, S: np.ndarray):
    d = chi_field - S
    r = np.hypot(d[..., 0], d[..., 1])
    theta = np.degrees(np.arctan2(d[..., 1], d[..., 0])) % 360.0
    bins = np.floor(theta).astype(int) % N_BINS
    return r, theta, bins


def angular_project(chi_field, valid, specular_point) -> MatteResult:
    """Snap every valid pixel's chroma to its angular bin's representative.

    The representative of a bin is the member pixel at the 98th-percentile
    radius (ties broken by lowest pixel index), a robust stand-in for the
    farthest-from-specular point. Output is bit-deterministic.
    """
    chi_field = np.asarray(chi_field, dtype=float)
    valid = np.asarray(valid, dtype=bool)
    S = np.asarray(specular_point, dtype=float)
    if chi_field.ndim != 3 or chi_field.shape[-1] != 2:
        raise InvalidArgumentError("chi_field must be (H, W, 2)")
    if not np.all(np.isfinite(S)) or S.shape != (2,):
        raise InvalidArgumentError("specular point must be a finite 2-vector")
    if not valid.any():
        raise InvalidArgumentError("no valid pixels")

    H, W, _ = chi_field.shape
    r, _theta, bins = _polar(chi_field, S)
    flat_r = r.reshape(-1)
    flat_bins = bins.reshape(-1)
    flat_valid = valid.reshape(-1)
    vidx = np.nonzero(flat_valid)[0]
    if float(flat_r[vidx].max()) == 0.0:
        raise DegenerateDataError("all pixels coincide with the specular point")

    reps = np.full((N_BINS, 2), np.nan)
    rep_index = np.full(N_BINS, -1, dtype=int)
    chi_flat = chi_field.reshape(-1, 2)
    for b in np.unique(flat_bins[vidx]):
        members = vidx[flat_bins[vidx] == b]
        order = members[np.lexsort((members, flat_r[members]))]
        pick = order[int(np.floor(BIN_RADIUS_PERCENTILE / 100.0 * (order.size - 1)))]
        rep_index[b] = pick
        reps[b] = chi_flat[pick]

    matte = np.zeros_like(chi_field)
    assigned = np.full((H, W), -1, dtype=int)
    fy, fx = np.divmod(vidx, W)
    assigned[fy, fx] = flat_bins[vidx]
    matte[fy, fx] = reps[flat_bins[vidx]]

    return MatteResult(matte_chi=matte, assigned_bin=assigned, bin_representative=reps,
                       valid=valid.copy(), radius=r, specular_point=S.copy(),
                       inpainted=np.zeros((H, W), dtype=bool),
                       unresolved=np.zeros((H, W), dtype=bool))


def _near_specular_mask(result: MatteResult, radius_percentile: float) -> np.ndarray:
    """The given percent of valid pixels nearest the specular point, ties included.

    The percentile is taken per connected component of valid pixels: one
    object's radius range must not starve another object's band (objects sit
    at very different distances from the specular point).
    """
    near = np.zeros_like(result.valid)
    if radius_percentile <= 0:
        return near
    labels, n_comp = ndimage.label(result.valid)
    for lab in range(1, n_comp + 1):
        m = labels == lab
        radii = result.radius[m]
        k = int(np.ceil(radius_percentile / 100.0 * radii.size))
        if k <= 0:
            continue
        cutoff = np.sort(radii)[min(k - 1, radii.size - 1)]
        near[m & (result.radius <= cutoff)] = True
    return near


def inpaint_near_specular(result: MatteResult, radius_percentile: float = 10.0) -> MatteResult:
    """Re-resolve the pixels closest to the specular point by neighbour voting.

    The ceil(10%) nearest valid pixels (ties at the cutoff radius included)
    are treated as unknown. Each synchronous pass, an unknown pixel adopts the
    majority matte colour of the already-resolved pixels in its 3x3
    neighbourhood whenever that majority holds at least half of them, and
    becomes resolved itself; unknowns do not vote. Passes iterate to a
    fixpoint or 50 rounds; pixels never reached keep their angular-projection
    value and are flagged unresolved.
    """
    near = _near_specular_mask(result, radius_percentile)
    H, W = near.shape
    tokens = result.assigned_bin.copy()
    ny, nx = np.nonzero(near)
    if ny.size == 0:
        return MatteResult(matte_chi=result.matte_chi.copy(), assigned_bin=tokens,
                           bin_representative=result.bin_representative,
                           valid=result.valid, radius=result.radius,
                           specular_point=result.specular_point,
                           inpainted=np.zeros((H, W), dtype=bool),
                           unresolved=np.zeros((H, W), dtype=bool))

    known = result.valid & ~near
    resolved = np.zeros((H, W), dtype=bool)
    offsets = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    for _ in range(VOTE_MAX_ITERATIONS):
        voter = known | resolved
        votes = np.full((ny.size, len(offsets)), -1, dtype=int)
        for c, (dy, dx) in enumerate(offsets):
            yy, xx = ny + dy, nx + dx
            ok = (yy >= 0) & (yy < H) & (xx >= 0) & (xx < W)
            ok[ok] = voter[yy[ok], xx[ok]]
            vals = np.full(ny.size, -1, dtype=int)
            vals[ok] = tokens[yy[ok], xx[ok]]
            votes[:, c] = vals
        # mode per row: sort ascending (-1 first), count equal entries pairwise;
        # argmax returns the first maximum, i.e. the smallest winning bin id
        srt = np.sort(votes, axis=1)
        counts = (srt[:, :, None] == srt[:, None, :]).sum(axis=2)
        counts[srt < 0] = -1
        n_voters = (srt >= 0).sum(axis=1)
        best_pos = np.argmax(counts, axis=1)
        rows = np.arange(ny.size)
        top = counts[rows, best_pos]
        pending = ~resolved[ny, nx]
        got_majority = pending & (n_voters > 0) & (2 * top >= n_voters)
        if not got_majority.any():
            break
        new_tokens = tokens[ny, nx].copy()
        new_tokens[got_majority] = srt[rows, best_pos][got_majority]
        tokens[ny, nx] = new_tokens
        resolved[ny[got_majority], nx[got_majority]] = True
    had_majority = resolved

    matte = result.matte_chi.copy()
    sel = tokens[ny, nx] >= 0
    matte[ny[sel], nx[sel]] = result.bin_representative[tokens[ny[sel], nx[sel]]]
    inpainted = np.zeros((H, W), dtype=bool)
    inpainted[ny, nx] = had_majority[ny, nx]
    unresolved = np.zeros((H, W), dtype=bool)
    unresolved[ny, nx] = ~had_majority[ny, nx]
    return MatteResult(matte_chi=matte, assigned_bin=tokens,
                       bin_representative=result.bin_representative,
                       valid=result.valid, radius=result.radius,
                       specular_point=result.specular_point,
                       inpainted=inpainted, unresolved=unresolved)


def matte_image(image, locus: LocusParams, estimate: IlluminantEstimate | None = None,
                radius_percentile: float = 50.0):
    """Full specular-removal pipeline: estimate illuminant, project, inpaint, render.

    Returns (rgb, result) where rgb renders each pixel's matte chromaticity at
    uniform intensity (channels sum to 1; invalid pixels are zero).

    The voting band defaults to the near half of each object rather than the
    bare 10% used by the standalone inpainting pass: a unit-factor Phong lobe
    leaves visible specular mixing over almost half a sphere, and band pixels
    that are already matte simply vote their own colour back, so a generous
    band is safe while a narrow one strands mixed pixels on unreliable bins.
    """
    img = np.asarray(image, dtype=float)
    if estimate is None:
        estimate = estimate_zeta_locus(img, locus)
    S = rho_to_chi(estimate.rho_e)

    ch = chroma_image(img)
    positive = np.all(img > 0, axis=-1)
    valid = ch.valid & positive
    result = angular_project(ch.chi, valid, S)
    result = inpaint_near_specular(result, radius_percentile=radius_percentile)

    rho = locus_to_l1(result.matte_chi.reshape(-1, 2)).reshape(img.shape[:2] + (3,))
    out = np.where(result.valid[..., None], rho, 0.0)
    return out, result
