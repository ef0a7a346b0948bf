"""Command-line front end and dataset plumbing.

Subcommands: render-synth, calibrate, estimate, relight, matte, eval,
plot-locus. Results go to files or stdout, diagnostics to stderr; exit code 0
on success, 2 on usage errors, 1 on processing errors. Every output file gets
a sidecar .meta.json recording the resolved configuration and input hashes, so
identical argv + inputs + seed reproduce outputs byte for byte.

Environment overrides (flags still win): SPECLOCUS_SEED, SPECLOCUS_WORKERS,
SPECLOCUS_SRGB_DECODE.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import calib, illum, imageio, imaging, matte, relight, spectra
from .chroma import chroma_image, write_chi_csv
from .errors import InvalidArgumentError, SpecLocusError

TOOL_ID = "speclocus 0.1.0"


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------

def _env_default(name: str, fallback, cast):
    raw = os.environ.get(f"SPECLOCUS_{name}")
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except ValueError:
        raise InvalidArgumentError(f"bad SPECLOCUS_{name}={raw!r}") from None


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved invocation: command name plus every effective flag value."""

    command: str
    options: dict

    def hash(self) -> str:
        blob = json.dumps({"command": self.command, "options": self.options},
                          sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()


def _config_from(ns: argparse.Namespace) -> RunConfig:
    opts = {k: v for k, v in vars(ns).items() if k != "command"}
    return RunConfig(command=ns.command, options=opts)


def _hash_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def write_sidecar(out_path, config: RunConfig, inputs=(), profile_path=None) -> None:
    meta = {
        "tool": TOOL_ID,
        "command": config.command,
        "options": config.options,
        "config_hash": config.hash(),
        "input_hashes": {str(p): _hash_file(p) for p in inputs},
    }
    if profile_path is not None:
        meta["profile_hash"] = _hash_file(profile_path)
    with open(str(out_path) + ".meta.json", "w", encoding="ascii") as fh:
        json.dump(meta, fh, sort_keys=True, indent=1, default=str)
        fh.write("\n")


def _parse_sensors(spec: str) -> spectra.SensorSet:
    parts = spec.split(":")
    kind = parts[0]
    lams = spectra.DEFAULT_DELTA_NM
    if kind == "delta":
        if len(parts) > 1:
            lams = tuple(float(x) for x in parts[1].split(","))
        return spectra.SensorSet.delta(lams)
    if kind == "gauss":
        if len(parts) < 2:
            raise InvalidArgumentError("gauss sensors need a width, e.g. gauss:30")
        sigma = float(parts[1])
        if len(parts) > 2:
            lams = tuple(float(x) for x in parts[2].split(","))
        return spectra.gaussian_sensors(centers_nm=lams, sigma_nm=sigma)
    raise InvalidArgumentError(f"unknown sensor spec {spec!r} (use delta[:R,G,B] or gauss:SIGMA[:R,G,B])")


# ---------------------------------------------------------------------------
# Observation and dataset files
# ---------------------------------------------------------------------------

def read_observations_csv(path) -> list[calib.CalibObservation]:
    """Rows: kind,id,temp,R,G,B with kind in {patch, light}; empty temp = unknown."""
    obs = []
    with open(path, "r", encoding="ascii", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or row[0].strip().startswith("#") or row[0].strip() == "kind":
                continue
            if len(row) != 6:
                raise InvalidArgumentError(f"{path}:{lineno}: expected 6 columns, got {len(row)}")
            kind, ident, temp = row[0].strip(), row[1].strip(), row[2].strip()
            rgb = np.array([float(x) for x in row[3:6]])
            T = float(temp) if temp else None
            pid = ident if ident else None
            obs.append(calib.CalibObservation(kind=kind, rgb=rgb, patch_id=pid, T=T))
    return obs


def write_observations_csv(path, observations) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "id", "temp", "R", "G", "B"])
        for o in observations:
            w.writerow([o.kind, o.patch_id if o.patch_id is not None else "",
                        o.T if o.T is not None else "",
                        repr(float(o.rgb[0])), repr(float(o.rgb[1])), repr(float(o.rgb[2]))])


@dataclass(frozen=True)
class ManifestEntry:
    image_path: str
    truth: np.ndarray | None  # ground-truth illuminant 3-vector
    camera_id: str | None
    mask_polygon: np.ndarray | None  # (n, 2) pixel coordinates to exclude


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]


def _parse_polygon(text: str) -> np.ndarray:
    pts = []
    for pair in text.split(";"):
        x, _, y = pair.partition(":")
        pts.append((float(x), float(y)))
    if len(pts) < 3:
        raise InvalidArgumentError(f"mask polygon needs >= 3 vertices, got {len(pts)}")
    return np.asarray(pts, dtype=float)


def read_manifest(path) -> DatasetManifest:
    """Truth CSV: image,illum_r,illum_g,illum_b[,camera][,mask].

    Image paths resolve relative to the CSV's directory; missing files fail at load.
    The mask column holds an exclusion polygon as x:y pairs joined by ';'.
    """
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    with open(path, "r", encoding="ascii", newline="") as fh:
        reader = csv.reader(fh)
        header = None
        for lineno, row in enumerate(reader, start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in row]
                if header[0] != "image":
                    raise InvalidArgumentError(f"{path}:{lineno}: first column must be 'image'")
                continue
            rec = dict(zip(header, row))
            img_path = os.path.join(base, rec["image"])
            if not os.path.exists(img_path):
                raise InvalidArgumentError(f"{path}:{lineno}: image not found: {img_path}")
            truth = None
            if rec.get("illum_r", "").strip():
                truth = np.array([float(rec["illum_r"]), float(rec["illum_g"]),
                                  float(rec["illum_b"])])
            poly = _parse_polygon(rec["mask"]) if rec.get("mask", "").strip() else None
            entries.append(ManifestEntry(image_path=img_path, truth=truth,
                                         camera_id=rec.get("camera") or None,
                                         mask_polygon=poly))
    return DatasetManifest(entries=tuple(entries))


def polygon_mask(shape: tuple[int, int], polygon: np.ndarray) -> np.ndarray:
    """Boolean (H, W) array, True inside the polygon (even-odd rule, pixel centres)."""
    H, W = shape
    ys, xs = np.mgrid[0:H, 0:W]
    px = xs + 0.0
    py = ys + 0.0
    inside = np.zeros((H, W), dtype=bool)
    n = polygon.shape[0]
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        crosses = ((y1 > py) != (y2 > py))
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = (x2 - x1) * (py - y1) / (y2 - y1) + x1
        inside ^= crosses & (px < xcross)
    return inside


# ---------------------------------------------------------------------------
# SVG scatter (self-contained, deterministic output)
# ---------------------------------------------------------------------------

def write_locus_svg(path, points, inlier, line_eta, line_dir, labels=None,
                    size=(640, 480)) -> None:
    pts = np.asarray(points, dtype=float)
    W, H = size
    margin = 48.0
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    lo = lo - 0.08 * span
    hi = hi + 0.08 * span
    span = hi - lo

    def sx(x):
        return margin + (x - lo[0]) / span[0] * (W - 2 * margin)

    def sy(y):
        return H - margin - (y - lo[1]) / span[1] * (H - 2 * margin)

    d = np.asarray(line_dir, dtype=float)
    d = d / np.linalg.norm(d)
    e = np.asarray(line_eta, dtype=float)
    ts = []
    for dim in (0, 1):
        if abs(d[dim]) > 1e-12:
            ts.append((lo[dim] - e[dim]) / d[dim])
            ts.append((hi[dim] - e[dim]) / d[dim])
    t0, t1 = min(ts), max(ts)
    a = e + t0 * d
    b = e + t1 * d

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{sx(a[0]):.2f}" y1="{sy(a[1]):.2f}" x2="{sx(b[0]):.2f}" '
        f'y2="{sy(b[1]):.2f}" stroke="black" stroke-dasharray="6 4" stroke-width="1.2"/>',
    ]
    for i, p in enumerate(pts):
        ok = bool(inlier[i])
        color = "#1f6fd0" if ok else "#d03030"
        out.append(f'<circle cx="{sx(p[0]):.2f}" cy="{sy(p[1]):.2f}" r="3.5" '
                   f'fill="{color if ok else "none"}" stroke="{color}" stroke-width="1.5"/>')
        if labels is not None and labels[i]:
            out.append(f'<text x="{sx(p[0]) + 5:.2f}" y="{sy(p[1]) - 5:.2f}" '
                       f'font-size="9" font-family="sans-serif">{labels[i]}</text>')
    out.append(f'<text x="{margin:.0f}" y="{H - 12}" font-size="11" '
               'font-family="sans-serif">chi_1</text>')
    out.append(f'<text x="12" y="{margin:.0f}" font-size="11" '
               'font-family="sans-serif">chi_2</text>')
    out.append("</svg>")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

def _load_linear(ns) -> tuple[np.ndarray, np.ndarray]:
    img, saturated = imageio.load_image(ns.image, srgb=ns.srgb_decode)
    return img, saturated


def _cmd_render_synth(ns, config: RunConfig) -> int:
    sensors = _parse_sensors(ns.sensors)
    patches = tuple(int(p) for p in ns.patches.split(","))
    W, H = (int(x) for x in ns.size.split("x"))
    light_dir = tuple(float(x) for x in ns.light_dir.split(","))
    scene = imaging.three_sphere_scene(patches=patches, T=ns.temp, size=(W, H),
                                       sphere_radius=ns.radius,
                                       phong_factor=ns.phong_factor,
                                       phong_power=ns.phong_power,
                                       light_direction=light_dir)
    rendered = imaging.render(scene, sensors)
    peak = rendered.rgb.max()
    scale = (ns.peak / peak) if peak > 0 else 1.0
    imageio.save_image(ns.out, rendered.rgb * scale, bit_depth=ns.bit_depth)
    root, ext = os.path.splitext(ns.out)
    matte_path = root + ".matte" + ext
    imageio.save_image(matte_path, rendered.matte_rgb * scale, bit_depth=ns.bit_depth)
    write_sidecar(ns.out, config)
    write_sidecar(matte_path, config)
    if ns.truth_csv:
        f = spectra.light_factors(sensors, ns.temp)
        rho = f / f.sum()
        new = not os.path.exists(ns.truth_csv)
        with open(ns.truth_csv, "a", encoding="ascii", newline="") as fh:
            w = csv.writer(fh)
            if new:
                w.writerow(["image", "illum_r", "illum_g", "illum_b"])
            rel = os.path.relpath(ns.out, os.path.dirname(os.path.abspath(ns.truth_csv)))
            w.writerow([rel, repr(float(rho[0])), repr(float(rho[1])), repr(float(rho[2]))])
    print(f"wrote {ns.out} and {matte_path}", file=sys.stderr)
    return 0


def _collect_observations(spec: str, sensors, what: str) -> list[calib.CalibObservation]:
    if spec == "synthetic":
        if what == "patches":
            return [o for o in calib.synthetic_observations(sensors) if o.kind == "patch"]
        return [o for o in calib.synthetic_observations(sensors) if o.kind == "light"]
    if os.path.isdir(spec):
        obs = []
        for name in sorted(os.listdir(spec)):
            if name.endswith(".csv"):
                obs.extend(read_observations_csv(os.path.join(spec, name)))
        if not obs:
            raise InvalidArgumentError(f"no .csv observation files in {spec}")
        return obs
    return read_observations_csv(spec)


def _cmd_calibrate(ns, config: RunConfig) -> int:
    sensors = _parse_sensors(ns.sensors)
    obs = _collect_observations(ns.patches, sensors, "patches")
    obs += _collect_observations(ns.lights, sensors, "lights")
    locus = calib.calibrate(obs, sensors=sensors)
    calib.save_profile(ns.out, locus)
    write_sidecar(ns.out, config)
    print(f"eta = {locus.eta.tolist()}  xi = {locus.xi.tolist()}  "
          f"t_range = {locus.t_range}", file=sys.stderr)
    return 0


def _estimate_one(img, mask, method: str, ns, locus) -> illum.IlluminantEstimate:
    if method == "zeta-locus":
        if locus is None:
            raise InvalidArgumentError("zeta-locus needs --profile")
        return illum.estimate_zeta_locus(img, locus, mask=mask)
    if method == "zeta-free":
        return illum.estimate_zeta_free(img, mask=mask)
    if method == "white-patch":
        return illum.white_patch(img, mask=mask)
    if method == "grey-world":
        return illum.grey_world(img, mask=mask)
    if method == "grey-edge":
        p, sigma = ns.grey_edge_p, ns.grey_edge_sigma
        if ns.grey_edge_preset:
            p, sigma = illum.GREY_EDGE_PRESETS[ns.grey_edge_preset]
        mask2d = mask if mask is None else np.asarray(mask, dtype=bool)
        return illum.grey_edge(img, p=p, sigma=sigma, mask=mask2d)
    raise InvalidArgumentError(f"unknown method {method!r}")


def _cmd_estimate(ns, config: RunConfig) -> int:
    img, _sat = _load_linear(ns)
    locus = calib.load_profile(ns.profile) if ns.profile else None
    est = _estimate_one(img, None, ns.method, ns, locus)
    print(f"method: {est.method}")
    print(f"rho_e: {est.rho_e[0]!r} {est.rho_e[1]!r} {est.rho_e[2]!r}")
    print(f"T: {est.T if est.T is not None else 'n/a'}")
    print(f"objective: {est.objective if est.objective is not None else 'n/a'}")
    return 0


def _cmd_relight(ns, config: RunConfig) -> int:
    if (ns.target_temp is None) == (ns.sweep is None):
        raise InvalidArgumentError("give exactly one of --target-temp / --sweep")
    img, _sat = _load_linear(ns)
    locus = calib.load_profile(ns.profile)
    source = {"source_T": ns.source_temp} if ns.source_temp is not None \
        else {"source_rho": illum.estimate_zeta_locus(img, locus).rho_e}
    if ns.sweep:
        temps = [float(t) for t in ns.sweep.split(",")]
        images = relight.temperature_sweep(img, locus, temps, **source)
        root, ext = os.path.splitext(ns.out)
        for i, (T, out_img) in enumerate(zip(temps, images)):
            path = f"{root}_{i:02d}_{int(T)}K{ext}"
            export = relight.apply_clip_policy(out_img, ns.clip_policy, scale=1.0)
            imageio.save_image(path, export, bit_depth=ns.bit_depth)
            write_sidecar(path, config, inputs=[ns.image], profile_path=ns.profile)
        print(f"wrote {len(images)} sweep images", file=sys.stderr)
        return 0
    spec = relight.RelightSpec(target_T=ns.target_temp, clip_policy=ns.clip_policy, **source)
    out_img = relight.relight(img, spec, locus)
    export = relight.apply_clip_policy(out_img, ns.clip_policy, scale=1.0)
    imageio.save_image(ns.out, export, bit_depth=ns.bit_depth)
    write_sidecar(ns.out, config, inputs=[ns.image], profile_path=ns.profile)
    print(f"wrote {ns.out}", file=sys.stderr)
    return 0


def _cmd_matte(ns, config: RunConfig) -> int:
    img, _sat = _load_linear(ns)
    locus = calib.load_profile(ns.profile)
    rgb, result = matte.matte_image(img, locus)
    imageio.save_image(ns.out, rgb, bit_depth=ns.bit_depth)
    write_sidecar(ns.out, config, inputs=[ns.image], profile_path=ns.profile)
    if ns.emit_chroma_csv:
        ch = chroma_image(img)
        write_chi_csv(ns.emit_chroma_csv, ch)
    print(f"wrote {ns.out}", file=sys.stderr)
    return 0


def _cmd_eval(ns, config: RunConfig) -> int:
    manifest = read_manifest(ns.truth)
    locus = calib.load_profile(ns.profile) if ns.profile else None

    def one(entry: ManifestEntry):
        img, _sat = imageio.load_image(entry.image_path, srgb=ns.srgb_decode)
        mask = None
        if entry.mask_polygon is not None:
            mask = ~polygon_mask(img.shape[:2], entry.mask_polygon)
        est = _estimate_one(img, mask, ns.method, ns, locus)
        err = None
        if entry.truth is not None:
            err = illum.angular_error(est.rho_e, entry.truth)
        return entry.image_path, est, err

    with ThreadPoolExecutor(max_workers=ns.workers) as pool:
        results = list(pool.map(one, manifest.entries))

    errors = [r[2] for r in results if r[2] is not None]
    with open(ns.out, "w", encoding="ascii", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["image", "method", "angular_error_deg"])
        for path, est, err in results:
            w.writerow([os.path.basename(path), est.method,
                        "" if err is None else f"{err:.6f}"])
        if errors:
            w.writerow(["median", ns.method, f"{float(np.median(errors)):.6f}"])
            w.writerow(["mean", ns.method, f"{float(np.mean(errors)):.6f}"])
    write_sidecar(ns.out, config, inputs=[ns.truth])
    if errors:
        print(f"median {np.median(errors):.3f} deg, mean {np.mean(errors):.3f} deg "
              f"over {len(errors)} images", file=sys.stderr)
    return 0


def _cmd_plot_locus(ns, config: RunConfig) -> int:
    sensors = _parse_sensors(ns.sensors)
    if ns.lights == "synthetic":
        temps = np.arange(4000.0, 10001.0, 500.0)
        obs = [calib.CalibObservation(kind="light",
                                      rgb=spectra.light_factors(sensors, float(T)), T=float(T))
               for T in temps]
    else:
        obs = [o for o in read_observations_csv(ns.lights) if o.kind == "light"]
    if len(obs) < 2:
        raise InvalidArgumentError("plot-locus needs at least two light observations")
    from .chroma import geomean_chroma
    chis = np.array([geomean_chroma(o.rgb).chi for o in obs])
    invT = np.array([1.0 / o.T if o.T is not None else np.nan for o in obs])
    if np.isfinite(invT).sum() >= 2:
        locus, outliers = calib.lms_line_fit(chis, inverse_temps=invT, seed=ns.seed)
    else:
        locus, outliers = calib.lms_line_fit(chis, seed=ns.seed)
    inlier = np.ones(len(obs), dtype=bool)
    inlier[outliers] = False
    labels = [f"{int(o.T)}K" if o.T is not None else "?" for o in obs]
    with open(ns.out_csv, "w", encoding="ascii", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "label", "inlier"])
        for (x, y), lab, ok in zip(chis, labels, inlier):
            w.writerow([repr(float(x)), repr(float(y)), lab, int(ok)])
    write_locus_svg(ns.out_svg, chis, inlier, locus.eta, locus.xi, labels=labels)
    write_sidecar(ns.out_csv, config)
    write_sidecar(ns.out_svg, config)
    print(f"wrote {ns.out_csv} and {ns.out_svg} ({len(obs)} lights, "
          f"{len(outliers)} outliers)", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speclocus",
        description="Daylight specular-point locus calibration, illuminant estimation, "
                    "relighting and specular removal.",
        epilog="Environment overrides: SPECLOCUS_SEED, SPECLOCUS_WORKERS, "
               "SPECLOCUS_SRGB_DECODE (flags take precedence).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, image=False):
        p.add_argument("--seed", type=int, default=_env_default("SEED", 0, int))
        if image:
            p.add_argument("--image", required=True)
            p.add_argument("--srgb-decode", action="store_true",
                           default=bool(_env_default("SRGB_DECODE", 0, int)))

    p = sub.add_parser("render-synth", help="render the synthetic sphere scene")
    common(p)
    p.add_argument("--out", required=True, help="output image (.ppm or .png)")
    p.add_argument("--temp", type=float, default=6500.0)
    p.add_argument("--patches", default="1,4,9")
    p.add_argument("--size", default="240x88")
    p.add_argument("--radius", type=float, default=36.0)
    p.add_argument("--phong-factor", type=float, default=1.0)
    p.add_argument("--phong-power", type=int, default=20)
    p.add_argument("--light-dir", default="0.25,0.25,1.0")
    p.add_argument("--sensors", default="delta")
    p.add_argument("--bit-depth", type=int, default=16, choices=(8, 16))
    p.add_argument("--peak", type=float, default=0.95, help="exposure: image maximum after scaling")
    p.add_argument("--truth-csv", default=None, help="append ground-truth illuminant row here")

    p = sub.add_parser("calibrate", help="recover the specular-point locus")
    common(p)
    p.add_argument("--patches", required=True, help="observation csv file/dir, or 'synthetic'")
    p.add_argument("--lights", required=True, help="observation csv file/dir, or 'synthetic'")
    p.add_argument("--sensors", default="delta")
    p.add_argument("--out", required=True, help="calibration profile path")

    p = sub.add_parser("estimate", help="estimate the scene illuminant")
    common(p, image=True)
    p.add_argument("--profile", default=None)
    p.add_argument("--method", default="zeta-locus",
                   choices=("zeta-locus", "zeta-free", "white-patch", "grey-world", "grey-edge"))
    p.add_argument("--grey-edge-p", type=int, default=1)
    p.add_argument("--grey-edge-sigma", type=float, default=1.0)
    p.add_argument("--grey-edge-preset", default=None, choices=sorted(illum.GREY_EDGE_PRESETS))

    p = sub.add_parser("relight", help="move an image to a new colour temperature")
    common(p, image=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--target-temp", type=float, default=None)
    p.add_argument("--source-temp", type=float, default=None)
    p.add_argument("--sweep", default=None, help="comma-separated temperatures; writes numbered files")
    p.add_argument("--clip-policy", default="clip_255", choices=("clip_255", "rescale"))
    p.add_argument("--bit-depth", type=int, default=16, choices=(8, 16))
    p.add_argument("--out", required=True)

    p = sub.add_parser("matte", help="produce a specular-free chromaticity image")
    common(p, image=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bit-depth", type=int, default=16, choices=(8, 16))
    p.add_argument("--emit-chroma-csv", default=None)

    p = sub.add_parser("eval", help="angular errors over a dataset manifest")
    common(p)
    p.add_argument("--truth", required=True, help="manifest csv (image,illum_r,illum_g,illum_b[,camera][,mask])")
    p.add_argument("--profile", default=None)
    p.add_argument("--method", default="zeta-locus",
                   choices=("zeta-locus", "zeta-free", "white-patch", "grey-world", "grey-edge"))
    p.add_argument("--grey-edge-p", type=int, default=1)
    p.add_argument("--grey-edge-sigma", type=float, default=1.0)
    p.add_argument("--grey-edge-preset", default=None, choices=sorted(illum.GREY_EDGE_PRESETS))
    p.add_argument("--srgb-decode", action="store_true",
                   default=bool(_env_default("SRGB_DECODE", 0, int)))
    p.add_argument("--workers", type=int, default=_env_default("WORKERS", 4, int))
    p.add_argument("--out", required=True, help="per-image angular error csv")

    p = sub.add_parser("plot-locus", help="emit chi-space scatter as CSV and SVG")
    common(p)
    p.add_argument("--lights", required=True, help="observation csv, or 'synthetic'")
    p.add_argument("--sensors", default="delta")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-svg", required=True)

    return parser


_COMMANDS = {
    "render-synth": _cmd_render_synth,
    "calibrate": _cmd_calibrate,
    "estimate": _cmd_estimate,
    "relight": _cmd_relight,
    "matte": _cmd_matte,
    "eval": _cmd_eval,
    "plot-locus": _cmd_plot_locus,
}


def run(argv) -> int:
    """Dispatch one invocation; returns the process exit code instead of raising."""
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    config = _config_from(ns)
    try:
        return _COMMANDS[ns.command](ns, config)
    except (SpecLocusError, OSError) as exc:
        print(f"speclocus: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
