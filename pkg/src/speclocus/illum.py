"""Illuminant estimation.

The planar-constraint objective: for near-specular pixels the log-relative
chromaticity psi = log(rho / rho_e) is orthogonal to the true illuminant
chromaticity, so zeta = -psi . rho_e vanishes there. Estimators minimize the
summed |zeta| over the most-specular pixel subset, either over the whole
chromaticity simplex or constrained to a calibrated Planckian locus. Classic
White-Patch / Grey-World / Grey-Edge baselines are included for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .calib import LocusParams
from .chroma import locus_to_l1
from .errors import InsufficientDataError, InvalidArgumentError

# Fraction of valid pixels kept as the near-specular subset.
SELECT_FRACTION = 0.10

# Default simplex search window for the unconstrained zeta estimator.
FREE_GRID_LO = 0.15
FREE_GRID_HI = 0.60
FREE_GRID_STEP = 0.005

# Grey-Edge presets quoted in the literature for the two standard datasets.
GREY_EDGE_PRESETS = {
    "sfu-lab-text": (7, 4.0),
    "sfu-lab-table": (1, 6.0),
    "greyball": (1, 1.0),
}


@dataclass(frozen=True)
class IlluminantEstimate:
    """An estimated illuminant chromaticity, optionally with its locus temperature."""

    rho_e: np.ndarray
    method: str
    T: float | None = None
    objective: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        rho = np.asarray(self.rho_e, dtype=float).copy()
        rho.flags.writeable = False
        object.__setattr__(self, "rho_e", rho)
        if rho.shape != (3,):
            raise InvalidArgumentError("rho_e must be a 3-vector")
        if not np.all((rho > 0) & (rho < 1)) or abs(rho.sum() - 1.0) > 1e-12:
            raise InvalidArgumentError("rho_e must be interior to the simplex and sum to 1")


@dataclass(frozen=True)
class LrcField:
    """Per-pixel log-relative chromaticity and its zeta values for one candidate."""

    psi: np.ndarray        # (n, 3)
    zeta: np.ndarray       # (n,)
    selection: np.ndarray  # indices of the near-specular subset


def valid_rho(image, mask=None):
    """L1 chromaticities of the strictly positive pixels of an (H, W, 3) image.

    Returns (rho, index) where index maps rows of rho back to flat pixel ids.
    An optional boolean mask (True = use) excludes pixels up front.
    """
    img = np.asarray(image, dtype=float).reshape(-1, 3)
    ok = np.all(img > 0, axis=1)
    if mask is not None:
        ok &= np.asarray(mask, dtype=bool).reshape(-1)
    idx = np.nonzero(ok)[0]
    pix = img[idx]
    rho = pix / pix.sum(axis=1, keepdims=True)
    return rho, idx


def _check_candidate(rho_e) -> np.ndarray:
    rho_e = np.asarray(rho_e, dtype=float)
    if rho_e.shape != (3,):
        raise InvalidArgumentError("candidate must be a 3-vector")
    if np.any(rho_e <= 0) or np.any(rho_e >= 1):
        raise InvalidArgumentError("candidate must be strictly interior to the simplex")
    return rho_e


def _select_lowest(absz: np.ndarray, n_sel: int) -> np.ndarray:
    # stable ordering: |zeta| then pixel index, so ties never reshuffle
    order = np.lexsort((np.arange(absz.size), absz))
    return order[:n_sel]


def zeta_field(rho: np.ndarray, rho_e) -> LrcField:
    """psi, zeta and the near-specular selection for one candidate illuminant.

    rho is an (n, 3) array of valid L1 chromaticities. The selection keeps the
    ceil(10%) pixels of smallest |zeta| under this candidate.
    """
    rho_e = _check_candidate(rho_e)
    rho = np.asarray(rho, dtype=float).reshape(-1, 3)
    psi = np.log(rho / rho_e)
    zeta = -(psi @ rho_e)
    n_sel = max(1, int(np.ceil(SELECT_FRACTION * rho.shape[0])))
    selection = _select_lowest(np.abs(zeta), n_sel)
    return LrcField(psi=psi, zeta=zeta, selection=selection)


def _objective_batch(log_rho: np.ndarray, candidates: np.ndarray, n_sel: int,
                     chunk: int = 256) -> np.ndarray:
    """Sum of the n_sel smallest |zeta| per candidate, vectorized over candidates.

    Candidates are processed in chunks to bound the (n_pixels x n_candidates)
    working set.
    """
    out = np.empty(candidates.shape[0])
    for i in range(0, candidates.shape[0], chunk):
        c = candidates[i:i + chunk]
        # zeta_jk = -(log_rho_j - log c_k) . c_k
        z = -(log_rho @ c.T) + np.einsum("ik,ik->i", c, np.log(c))[None, :]
        az = np.abs(z)
        if n_sel >= az.shape[0]:
            out[i:i + chunk] = az.sum(axis=0)
        else:
            out[i:i + chunk] = np.partition(az, n_sel - 1, axis=0)[:n_sel].sum(axis=0)
    return out


def _free_candidates(lo: float, hi: float, step: float) -> np.ndarray:
    vals = np.arange(lo, hi + 0.5 * step, step)
    rr, gg = np.meshgrid(vals, vals, indexing="ij")
    rr = rr.ravel()
    gg = gg.ravel()
    bb = 1.0 - rr - gg
    ok = (bb > 0.0) & (bb < 1.0)
    return np.stack([rr[ok], gg[ok], bb[ok]], axis=1)


def estimate_zeta_free(image, mask=None, grid=(FREE_GRID_LO, FREE_GRID_HI, FREE_GRID_STEP)) -> IlluminantEstimate:
    """Minimize the zeta objective over a simplex grid, then refine 10x finer locally.

    The near-specular subset is recomputed for every candidate. Needs at least
    100 valid pixels. A flat objective landscape (best and 10th-best within 5%)
    is flagged low-confidence in the diagnostics.
    """
    rho, _ = valid_rho(image, mask)
    if rho.shape[0] < 100:
        raise InsufficientDataError(f"only {rho.shape[0]} valid pixels, need 100")
    log_rho = np.log(rho)
    n_sel = max(1, int(np.ceil(SELECT_FRACTION * rho.shape[0])))

    lo, hi, step = grid
    cands = _free_candidates(lo, hi, step)
    objs = _objective_batch(log_rho, cands, n_sel)
    best = int(np.argmin(objs))

    srt = np.sort(objs)
    tenth = srt[min(9, srt.size - 1)]
    low_confidence = bool(tenth <= 0 or (tenth - srt[0]) / tenth < 0.05)

    # local pass at a tenth of the step around the best cell
    fine = step / 10.0
    r0, g0 = cands[best, 0], cands[best, 1]
    fr = np.arange(max(r0 - step, 1e-6), min(r0 + step, 1 - 1e-6) + 0.5 * fine, fine)
    fg = np.arange(max(g0 - step, 1e-6), min(g0 + step, 1 - 1e-6) + 0.5 * fine, fine)
    rr, gg = np.meshgrid(fr, fg, indexing="ij")
    bb = 1.0 - rr.ravel() - gg.ravel()
    ok = (bb > 0.0) & (bb < 1.0)
    fine_c = np.stack([rr.ravel()[ok], gg.ravel()[ok], bb[ok]], axis=1)
    fine_o = _objective_batch(log_rho, fine_c, n_sel)
    fbest = int(np.argmin(fine_o))

    rho_e = fine_c[fbest] / fine_c[fbest].sum()
    return IlluminantEstimate(
        rho_e=rho_e, method="zeta_free", objective=float(fine_o[fbest]),
        diagnostics={"low_confidence": low_confidence, "coarse_objective": float(objs[best]),
                     "n_valid": int(rho.shape[0])},
    )


def _locus_objective(log_rho, locus: LocusParams, T: float, n_sel: int) -> float:
    rho_e = locus_to_l1(locus.point_at(float(T)))
    return float(_objective_batch(log_rho, rho_e[None, :], n_sel)[0])


def estimate_zeta_locus(image, locus: LocusParams, t_grid=None, mask=None,
                        refine: bool = True) -> IlluminantEstimate:
    """Minimize the zeta objective along the calibrated locus.

    Sweeps T over [max(2000, T_min - 2000), T_max + 2000] in 100 K steps by
    default, then golden-section refines the best bracket down to 10 K.
    """
    if locus.t_range is None:
        raise InvalidArgumentError("locus has no temperature range; calibrate with known lights")
    rho, _ = valid_rho(image, mask)
    if rho.shape[0] < 100:
        raise InsufficientDataError(f"only {rho.shape[0]} valid pixels, need 100")
    log_rho = np.log(rho)
    n_sel = max(1, int(np.ceil(SELECT_FRACTION * rho.shape[0])))

    if t_grid is None:
        t_lo = max(2000.0, locus.t_range[0] - 2000.0)
        t_hi = locus.t_range[1] + 2000.0
        t_grid = np.arange(t_lo, t_hi + 1.0, 100.0)
    else:
        t_grid = np.asarray(t_grid, dtype=float).reshape(-1)
        if t_grid.size == 0:
            raise InvalidArgumentError("empty temperature grid")

    objs = np.array([_locus_objective(log_rho, locus, T, n_sel) for T in t_grid])
    i = int(np.argmin(objs))
    T_best, o_best = float(t_grid[i]), float(objs[i])

    if refine and t_grid.size > 1:
        a = float(t_grid[max(i - 1, 0)])
        b = float(t_grid[min(i + 1, t_grid.size - 1)])
        invphi = (np.sqrt(5.0) - 1.0) / 2.0
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc = _locus_objective(log_rho, locus, c, n_sel)
        fd = _locus_objective(log_rho, locus, d, n_sel)
        while b - a > 10.0:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = _locus_objective(log_rho, locus, c, n_sel)
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = _locus_objective(log_rho, locus, d, n_sel)
        for T, o in ((c, fc), (d, fd)):
            if o < o_best:
                T_best, o_best = float(T), float(o)

    rho_e = locus_to_l1(locus.point_at(T_best))
    return IlluminantEstimate(rho_e=rho_e, method="zeta_locus", T=T_best, objective=o_best,
                              diagnostics={"n_valid": int(rho.shape[0])})


# ---------------------------------------------------------------------------
# Baseline estimators
# ---------------------------------------------------------------------------

def _normalized(v, method: str) -> IlluminantEstimate:
    v = np.asarray(v, dtype=float)
    s = v.sum()
    if not np.all(v > 0) or s <= 0:
        raise InsufficientDataError(f"{method}: image carries no usable colour signal")
    return IlluminantEstimate(rho_e=v / s, method=method)


def white_patch(image, mask=None) -> IlluminantEstimate:
    """Max-RGB: the illuminant is the per-channel maximum response."""
    img = np.asarray(image, dtype=float).reshape(-1, 3)
    if mask is not None:
        img = img[np.asarray(mask, dtype=bool).reshape(-1)]
    if img.size == 0 or np.all(img <= 0):
        raise InsufficientDataError("white_patch: all-black image")
    return _normalized(img.max(axis=0), "white_patch")


def grey_world(image, mask=None) -> IlluminantEstimate:
    """Grey-World: the average reflectance is assumed achromatic."""
    img = np.asarray(image, dtype=float).reshape(-1, 3)
    if mask is not None:
        img = img[np.asarray(mask, dtype=bool).reshape(-1)]
    if img.size == 0 or np.all(img <= 0):
        raise InsufficientDataError("grey_world: all-black image")
    return _normalized(img.mean(axis=0), "grey_world")


def grey_edge(image, p: int = 1, sigma: float = 1.0, mask=None) -> IlluminantEstimate:
    """Grey-Edge: Minkowski p-norm of Gaussian-derivative magnitudes per channel.

    The derivative is the first-order Gaussian derivative at scale sigma with
    reflect padding; the gradient magnitude is sqrt(dx^2 + dy^2) per channel.
    """
    img = np.asarray(image, dtype=float)
    if img.ndim != 3 or img.shape[2] != 3:
        raise InvalidArgumentError("grey_edge expects an (H, W, 3) image")
    if np.all(img <= 0):
        raise InsufficientDataError("grey_edge: all-black image")
    if p < 1:
        raise InvalidArgumentError("Minkowski order must be >= 1")
    est = np.empty(3)
    for k in range(3):
        ch = img[:, :, k]
        dy = gaussian_filter1d(gaussian_filter1d(ch, sigma, axis=0, order=1, mode="reflect"),
                               sigma, axis=1, order=0, mode="reflect")
        dx = gaussian_filter1d(gaussian_filter1d(ch, sigma, axis=1, order=1, mode="reflect"),
                               sigma, axis=0, order=0, mode="reflect")
        mag = np.sqrt(dx * dx + dy * dy)
        if mask is not None:
            mag = mag[np.asarray(mask, dtype=bool)]
        est[k] = np.sum(mag ** p) ** (1.0 / p)
    if np.all(est == 0.0):
        # edgeless image: the channels are indistinguishable, answer is grey
        return IlluminantEstimate(rho_e=np.full(3, 1.0 / 3.0), method="grey_edge")
    return _normalized(est, "grey_edge")


def angular_error(est, truth) -> float:
    """Angle in degrees between estimated and true illuminant vectors."""
    a = np.asarray(est, dtype=float)
    b = np.asarray(truth, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise InvalidArgumentError("angular_error needs non-zero vectors")
    c = np.clip(a @ b / (na * nb), -1.0, 1.0)
    return float(np.degrees(np.arccos(c)))
