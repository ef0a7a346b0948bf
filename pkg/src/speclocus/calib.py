"""Recovery of the specular-point locus chi = eta + xi / T for one camera.

Colour patches imaged under several temperatures give the light-change
direction (first eigenvector of pooled per-patch mean-subtracted log r
covariance). Imaged lights of known temperature then pin the scale and offset,
either from exactly two lights or by robust LMS regression over many.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import spectra
from .chroma import U_BASIS, U_BASIS_ID, geomean_chroma
from .errors import (
    DegenerateDataError,
    IllConditionedWarning,
    InconsistentDataWarning,
    InvalidArgumentError,
    SingularSystemError,
)
from .spectra import SensorSet

# Eigenvalue ratio below this means the patch cloud barely prefers a direction.
EIG_RATIO_WARN = 10.0

# Perpendicular-residual multiple of the robust sigma that marks an outlier.
LMS_OUTLIER_SIGMA = 2.5

LMS_EXHAUSTIVE_LIMIT = 200
LMS_SAMPLED_PAIRS = 1000


@dataclass(frozen=True)
class LocusParams:
    """Calibrated line in chi space: points at temperature T sit at eta + xi / T."""

    eta: np.ndarray
    xi: np.ndarray
    t_range: tuple[float, float] | None = None
    diagnostics: dict = field(default_factory=dict)
    basis_id: str = U_BASIS_ID

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float).copy()
        xi = np.asarray(self.xi, dtype=float).copy()
        eta.flags.writeable = False
        xi.flags.writeable = False
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "xi", xi)
        if eta.shape != (2,) or xi.shape != (2,):
            raise InvalidArgumentError("eta and xi must be 2-vectors")
        if not np.linalg.norm(xi) > 0:
            raise InvalidArgumentError("xi must be non-zero")
        if self.t_range is not None:
            lo, hi = self.t_range
            if not (0 < lo <= hi):
                raise InvalidArgumentError("t_range must be ordered positive temperatures")
            object.__setattr__(self, "t_range", (float(lo), float(hi)))

    def point_at(self, T) -> np.ndarray:
        """Locus point(s) for temperature(s) T."""
        T = np.asarray(T, dtype=float)
        return self.eta + self.xi / T[..., None] if T.ndim else self.eta + self.xi / float(T)


@dataclass(frozen=True)
class CalibObservation:
    """One recorded camera response: a colour patch under a known light, or a light itself."""

    kind: str  # "patch" | "light"
    rgb: np.ndarray
    patch_id: int | str | None = None
    T: float | None = None  # Kelvin; None = unknown (lights only)
    camera_id: str | None = None

    def __post_init__(self):
        rgb = np.asarray(self.rgb, dtype=float)
        object.__setattr__(self, "rgb", rgb)
        if self.kind not in ("patch", "light"):
            raise InvalidArgumentError(f"unknown observation kind {self.kind!r}")
        if rgb.shape != (3,):
            raise InvalidArgumentError("observation rgb must be a 3-vector")
        if self.kind == "patch" and self.patch_id is None:
            raise InvalidArgumentError("patch observations need a patch_id")
        if self.kind == "patch" and self.T is None:
            raise InvalidArgumentError("patch observations need a known temperature")


def light_change_direction(patch_logrs, temps=None):
    """Unit 2-vector xi_hat along which chi moves as 1/T changes, plus eigen diagnostics.

    patch_logrs: one list of log-r 3-vectors per patch (the patch imaged under
    several temperatures). temps, when given, mirrors that structure and fixes
    the sign so that chi(hottest) - chi(coolest) has positive dot with xi_hat;
    without temps the largest-magnitude component of the 3-D direction is made
    positive.

    Returns (xi_hat, diagnostics) where diagnostics carries the pooled
    eigenvalues, their ratio and the 3-D direction.
    """
    groups = [np.asarray(g, dtype=float).reshape(-1, 3) for g in patch_logrs]
    if len(groups) < 2:
        raise InvalidArgumentError("need at least two patches")
    if any(g.shape[0] < 2 for g in groups):
        raise DegenerateDataError("every patch needs observations under at least two temperatures")
    if temps is not None:
        tgroups = [np.asarray(t, dtype=float).reshape(-1) for t in temps]
        if len(tgroups) != len(groups) or any(t.size != g.shape[0] for t, g in zip(tgroups, groups)):
            raise InvalidArgumentError("temps must mirror the patch_logrs structure")
        if len(np.unique(np.concatenate(tgroups))) < 2:
            raise DegenerateDataError("observations span a single temperature")

    cov = np.zeros((3, 3))
    for g in groups:
        centered = g - g.mean(axis=0)
        cov += centered.T @ centered
    evals, evecs = np.linalg.eigh(cov)  # ascending
    lam = evals[::-1]
    direction3 = evecs[:, -1].copy()

    if lam[0] <= 0 or lam[0] < 1e-18:
        raise DegenerateDataError("patch observations carry no colour-temperature signal")
    ratio = float(lam[0] / lam[1]) if lam[1] > 0 else float("inf")
    if ratio < EIG_RATIO_WARN:
        warnings.warn(
            f"eigenvalue ratio {ratio:.2f} < {EIG_RATIO_WARN}: light-change direction unreliable",
            IllConditionedWarning,
        )

    if temps is not None:
        drift = np.zeros(3)
        for g, t in zip(groups, tgroups):
            drift += g[np.argmax(t)] - g[np.argmin(t)]
        if direction3 @ drift < 0:
            direction3 = -direction3
    elif direction3[np.argmax(np.abs(direction3))] < 0:
        direction3 = -direction3

    xi_hat = U_BASIS @ direction3
    xi_hat = xi_hat / np.linalg.norm(xi_hat)
    diagnostics = {
        "eigenvalues": lam.tolist(),
        "eigenvalue_ratio": ratio,
        "direction3": direction3.tolist(),
    }
    return xi_hat, diagnostics


def two_light_solve(chi1, T1: float, chi2, T2: float, xi_hat) -> LocusParams:
    """Solve for (eta, xi) from two imaged lights of known temperature.

    The signed scale nu = (chi1 - chi2) . xi_hat / (1/T1 - 1/T2) falls out of
    the difference vector; eta is the mean of chi_i - nu xi_hat / T_i.
    """
    chi1 = np.asarray(chi1, dtype=float)
    chi2 = np.asarray(chi2, dtype=float)
    xi_hat = np.asarray(xi_hat, dtype=float)
    if T1 <= 0 or T2 <= 0:
        raise InvalidArgumentError("temperatures must be positive")
    if T1 == T2:
        raise SingularSystemError("two calibration lights share one temperature")

    d = chi1 - chi2
    proj = float(d @ xi_hat)
    if proj == 0.0:
        raise DegenerateDataError("calibration lights coincide along xi_hat; locus scale unrecoverable")
    dn = np.linalg.norm(d)
    angle = float(np.degrees(np.arccos(np.clip(abs(proj) / dn, -1.0, 1.0))))
    if angle > 20.0:
        warnings.warn(
            f"light difference is {angle:.1f} deg off the light-change direction",
            InconsistentDataWarning,
        )

    nu = proj / (1.0 / T1 - 1.0 / T2)
    xi = nu * xi_hat
    eta = 0.5 * ((chi1 - xi / T1) + (chi2 - xi / T2))
    t_lo, t_hi = sorted((float(T1), float(T2)))
    return LocusParams(eta=eta, xi=xi, t_range=(t_lo, t_hi),
                       diagnostics={"method": "two-light", "nu": float(nu),
                                    "offline_angle_deg": angle})


def _pair_candidates(n: int, seed: int):
    if n <= LMS_EXHAUSTIVE_LIMIT:
        for i in range(n - 1):
            for j in range(i + 1, n):
                yield i, j
    else:
        rng = np.random.default_rng(seed)
        for _ in range(LMS_SAMPLED_PAIRS):
            i, j = rng.choice(n, size=2, replace=False)
            yield int(i), int(j)


def lms_line_fit(points, inverse_temps=None, seed: int = 0):
    """Least-median-of-squares line through 2-D points, with outlier flagging.

    Candidate lines run through point pairs (exhaustive up to 200 points,
    1000 random pairs above); the winner minimizes the median of squared
    perpendicular residuals. Outliers sit more than 2.5 robust sigmas off the
    line, with the finite-sample correction 1.4826 (1 + 5/(n-2)) sqrt(median).

    When inverse_temps is given (NaN = unknown), (eta, xi) are resolved by
    least squares along the fitted line over the inliers with known 1/T;
    otherwise the returned xi is the unit line direction and t_range is unset.

    Returns (LocusParams, outlier_indices).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = pts.shape[0]
    if n < 2:
        raise InvalidArgumentError("need at least two points")
    if np.all(np.ptp(pts, axis=0) == 0.0):
        raise DegenerateDataError("all points coincident")

    best = None  # (median, p0, d)
    for i, j in _pair_candidates(n, seed):
        delta = pts[j] - pts[i]
        nrm = np.linalg.norm(delta)
        if nrm == 0.0:
            continue
        d = delta / nrm
        res = (pts[:, 1] - pts[i, 1]) * d[0] - (pts[:, 0] - pts[i, 0]) * d[1]
        med = float(np.median(res * res))
        if best is None or med < best[0]:
            best = (med, pts[i].copy(), d)
    if best is None:
        raise DegenerateDataError("no non-degenerate point pair found")

    med, p0, d = best
    if n == 2:
        s_hat = 0.0
    else:
        s_hat = 1.4826 * (1.0 + 5.0 / (n - 2)) * np.sqrt(med)
    res = (pts[:, 1] - p0[1]) * d[0] - (pts[:, 0] - p0[0]) * d[1]
    outliers = np.nonzero(np.abs(res) > LMS_OUTLIER_SIGMA * s_hat)[0]
    inliers = np.setdiff1d(np.arange(n), outliers)

    diagnostics = {
        "method": "lms",
        "median_residual": float(np.sqrt(med)),
        "s_hat": float(s_hat),
        "outliers": outliers.tolist(),
        "n_points": n,
    }

    if inverse_temps is not None:
        invT = np.asarray(inverse_temps, dtype=float).reshape(-1)
        if invT.size != n:
            raise InvalidArgumentError("inverse_temps must match the number of points")
        known = inliers[np.isfinite(invT[inliers])]
        if known.size < 2:
            raise InvalidArgumentError("need at least two inlier points with known temperature")
        x = invT[known]
        y = (pts[known] - p0) @ d
        if np.ptp(x) == 0.0:
            raise SingularSystemError("known temperatures are all equal")
        c1, c0 = np.polyfit(x, y, 1)
        eta = p0 + c0 * d
        xi = c1 * d
        temps = 1.0 / x
        return (
            LocusParams(eta=eta, xi=xi, t_range=(float(temps.min()), float(temps.max())),
                        diagnostics=diagnostics),
            outliers,
        )
    t_along = (pts[inliers] - p0) @ d
    eta = p0 + float(np.mean(t_along)) * d
    return LocusParams(eta=eta, xi=d, t_range=None, diagnostics=diagnostics), outliers


def calibrate(observations, sensors: SensorSet | None = None) -> LocusParams:
    """Run the full calibration pipeline over recorded observations.

    Patch observations (>= 2 patches spanning >= 2 temperatures) give the
    light-change direction; imaged lights of known temperature pin the line.
    With exactly two known lights the closed-form two-light solve is used,
    with three or more the LMS regression takes over (then patches are only
    needed for diagnostics).
    """
    observations = list(observations)
    if not observations:
        raise InvalidArgumentError("no observations")
    cameras = {o.camera_id for o in observations if o.camera_id is not None}
    if len(cameras) > 1:
        raise InvalidArgumentError(f"observations mix cameras: {sorted(cameras)}")

    patches: dict = {}
    patch_temps: dict = {}
    lights = [o for o in observations if o.kind == "light"]
    for o in observations:
        if o.kind == "patch":
            patches.setdefault(o.patch_id, []).append(geomean_chroma(o.rgb).logr)
            patch_temps.setdefault(o.patch_id, []).append(o.T)

    known = [o for o in lights if o.T is not None]
    if len(known) < 2:
        raise InvalidArgumentError(
            "locus scale unrecoverable: need at least two light observations with known temperature"
        )

    diagnostics: dict = {"n_patch_obs": sum(len(v) for v in patches.values()),
                         "n_lights": len(lights)}
    eig_diag = None
    if len(patches) >= 2 and all(len(v) >= 2 for v in patches.values()):
        xi_hat, eig_diag = light_change_direction(
            list(patches.values()), temps=list(patch_temps.values())
        )
        diagnostics.update(eig_diag)
    else:
        xi_hat = None

    if len(known) >= 3:
        chis = np.array([geomean_chroma(o.rgb).chi for o in lights])
        invT = np.array([1.0 / o.T if o.T is not None else np.nan for o in lights])
        locus, _ = lms_line_fit(chis, inverse_temps=invT)
        diagnostics.update(locus.diagnostics)
    else:
        if xi_hat is None:
            raise InvalidArgumentError(
                "two-light calibration needs >= 2 patches imaged under >= 2 temperatures"
            )
        (l1, l2) = known[:2]
        locus = two_light_solve(geomean_chroma(l1.rgb).chi, l1.T,
                                geomean_chroma(l2.rgb).chi, l2.T, xi_hat)
        diagnostics.update(locus.diagnostics)

    t_known = [o.T for o in known]
    return LocusParams(eta=locus.eta, xi=locus.xi,
                       t_range=(float(min(t_known)), float(max(t_known))),
                       diagnostics=diagnostics)


def synthetic_observations(sensors: SensorSet, patch_ids=range(1, 19),
                           patch_temps=None, light_temps=(5500.0, 10500.0),
                           grey_patch: int | None = None,
                           camera_id: str = "synthetic") -> list[CalibObservation]:
    """Forward-model calibration observations for a known camera.

    Patch responses are s_k * f_k(T); light responses are f_k(T), optionally
    seen through a flat grey patch (its band-effective reflectance multiplies
    the response, perturbing nothing if it is exactly flat).
    """
    if patch_temps is None:
        patch_temps = np.arange(5500.0, 10501.0, 500.0)
    obs = []
    for pid in patch_ids:
        s = spectra.effective_reflectance(spectra.colorchecker_reflectance(pid), sensors)
        for T in patch_temps:
            f = spectra.light_factors(sensors, float(T))
            obs.append(CalibObservation(kind="patch", rgb=s * f, patch_id=int(pid),
                                        T=float(T), camera_id=camera_id))
    grey = None
    if grey_patch is not None:
        grey = spectra.effective_reflectance(spectra.colorchecker_reflectance(grey_patch), sensors)
    for T in light_temps:
        f = spectra.light_factors(sensors, float(T))
        if grey is not None:
            f = f * grey
        obs.append(CalibObservation(kind="light", rgb=f, T=float(T), camera_id=camera_id))
    return obs


# ---------------------------------------------------------------------------
# Profile persistence: key-value text, bit-exact round trip via float repr
# ---------------------------------------------------------------------------

PROFILE_FORMAT = "speclocus-profile-1"


def save_profile(path, locus: LocusParams) -> None:
    lines = [
        f"format: {PROFILE_FORMAT}",
        f"basis: {locus.basis_id}",
        f"eta: {float(locus.eta[0])!r} {float(locus.eta[1])!r}",
        f"xi: {float(locus.xi[0])!r} {float(locus.xi[1])!r}",
    ]
    if locus.t_range is not None:
        lines.append(f"t_min: {float(locus.t_range[0])!r}")
        lines.append(f"t_max: {float(locus.t_range[1])!r}")
    for key in sorted(locus.diagnostics):
        val = locus.diagnostics[key]
        if isinstance(val, (int, float)):
            lines.append(f"diag.{key}: {float(val)!r}")
        elif isinstance(val, (list, tuple)) and all(isinstance(x, (int, float)) for x in val):
            lines.append(f"diag.{key}: " + " ".join(repr(float(x)) for x in val))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_profile(path) -> LocusParams:
    fields: dict[str, str] = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise InvalidArgumentError(f"{path}:{lineno}: expected 'key: value'")
            key, _, val = line.partition(":")
            fields[key.strip()] = val.strip()
    if fields.get("format") != PROFILE_FORMAT:
        raise InvalidArgumentError(f"{path}: not a {PROFILE_FORMAT} file")
    if fields.get("basis") != U_BASIS_ID:
        raise InvalidArgumentError(f"{path}: profile uses basis {fields.get('basis')!r}, "
                                   f"this build uses {U_BASIS_ID!r}")
    eta = np.array([float(x) for x in fields["eta"].split()])
    xi = np.array([float(x) for x in fields["xi"].split()])
    t_range = None
    if "t_min" in fields and "t_max" in fields:
        t_range = (float(fields["t_min"]), float(fields["t_max"]))
    diagnostics = {}
    for key, val in fields.items():
        if key.startswith("diag."):
            parts = val.split()
            parsed = [float(p) for p in parts]
            diagnostics[key[5:]] = parsed[0] if len(parsed) == 1 else parsed
    return LocusParams(eta=eta, xi=xi, t_range=t_range, diagnostics=diagnostics)
