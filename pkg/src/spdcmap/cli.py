"""Command-line front end.

    spdcmap simulate --config run.json --out DIR [--seed N]
    spdcmap fit MAP.csv [--out DIR]
    spdcmap maps --config run.json --out DIR [--seed N]
    spdcmap vfilter --config run.json --out DIR [--seed N]

Exit codes: 0 success, 1 runtime error, 2 validation error.
"""

import argparse
from dataclasses import dataclass, field
import json
import math
import os
from pathlib import Path
import shutil
import sys
import tempfile

import numpy as np

from . import io as sio
from .analysis import entropy_map, fit_gaussian2d, fit_sinusoid, visibility_gamma_maps
from .exceptions import SpdcMapError, ValidationError
from .polarization import AnalyzerSetting
from .simulate import SourceConfig, expected_cube, rate_map, sample_counts, sample_cube
from .spectral_model import GaussianJointModel, WavelengthGrid
from .vfilter import FilterProfile, filtered_scan, optimize_filter, tradeoff_curve

EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION = 0, 1, 2

# RNG stream ids; distinct ranges keep every sampled map independent
_STREAM_SIMULATE = 0
_STREAM_ENTROPY = 10_000


@dataclass
class RunConfig:
    source: SourceConfig
    grid: WavelengthGrid
    seed: int
    settings: list = field(default_factory=list)
    integration_s: float = 22.5
    maps: dict = field(default_factory=dict)
    vfilter: dict = field(default_factory=dict)


def _section(doc, key):
    value = doc.get(key, {})
    if not isinstance(value, dict):
        raise ValidationError(f"config section {key!r} must be an object")
    return value


def _angles(values, name):
    try:
        out = [float(v) for v in values]
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a list of angles in degrees") from None
    return out


def load_config(path, seed=None):
    """Parse and fully validate a run configuration before any computation."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config file {path} does not exist")
    doc = sio.read_json(path)
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")

    src = _section(doc, "source")
    if "model_file" in src:
        model_path = (path.parent / src["model_file"]).resolve()
        if not model_path.is_file():
            raise ValidationError(f"model file {model_path} does not exist")
        model = sio.read_model(model_path)
    elif "model" in src:
        model = GaussianJointModel.from_dict(src["model"])
    else:
        raise ValidationError("source needs 'model' or 'model_file'")
    problems = model.problems()
    if problems:
        raise ValidationError(problems)
    if seed is None:
        seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ValidationError(f"seed must be a non-negative integer, got {seed!r}")
    source = SourceConfig(
        model,
        delta=float(src.get("delta_rad", math.pi)),
        background_fraction=float(src.get("background_fraction", 0.0)),
        rng_seed=seed,
    )
    if "grid" not in doc:
        raise ValidationError("config needs a 'grid' section")
    grid = WavelengthGrid.from_dict(doc["grid"])

    sim = _section(doc, "simulate")
    settings = [tuple(_angles(s, "settings_deg entry")) for s in sim.get("settings_deg", [[0, 0], [90, 90]])]
    if any(len(s) != 2 for s in settings):
        raise ValidationError("each analyzer setting needs two angles")
    integration = float(sim.get("integration_s", 22.5))
    if not integration > 0:
        raise ValidationError("integration_s must be positive")

    maps = dict(_section(doc, "maps"))
    vfil = dict(_section(doc, "vfilter"))
    for name, sec in (("maps", maps), ("vfilter", vfil)):
        if "alpha2_deg" in sec:
            sec["alpha2_deg"] = _angles(sec["alpha2_deg"], f"{name}.alpha2_deg")
            if np.unique(np.mod(sec["alpha2_deg"], 180.0)).size < 3:
                raise ValidationError(f"{name}.alpha2_deg needs 3 distinct angles modulo 180")
        for key in ("integration_s", "entropy_integration_s"):
            if key in sec and not float(sec[key]) > 0:
                raise ValidationError(f"{name}.{key} must be positive")
    if "fwhm_nm" in vfil:
        fw = np.asarray(vfil["fwhm_nm"], dtype=float)
        if fw.size == 0 or np.any(fw <= 0) or np.any(np.diff(fw) <= 0):
            raise ValidationError("vfilter.fwhm_nm must be positive and strictly increasing")
    if vfil.get("v_min") is not None and vfil.get("exponent") is not None:
        raise ValidationError("vfilter: give only one of v_min or exponent")
    filters = vfil.get("filters")
    if filters is not None:
        if not isinstance(filters, dict) or set(filters) != {"arm1", "arm2"}:
            raise ValidationError("vfilter.filters needs exactly 'arm1' and 'arm2'")
        vfil["filters"] = {arm: _load_filter(spec, path.parent) for arm, spec in filters.items()}
    return RunConfig(source, grid, seed, settings, integration, maps, vfil)


def _load_filter(spec, base):
    if isinstance(spec, dict):
        return FilterProfile.from_dict(spec)
    fpath = (base / str(spec)).resolve()
    if not fpath.is_file():
        raise ValidationError(f"filter file {fpath} does not exist")
    return sio.read_filter(fpath)


def _angle_tag(a1, a2):
    return f"{a1:g}_{a2:g}"


def _stage(out_dir, files):
    """Write ``{name: text}`` into ``out_dir`` via a staging directory.

    Nothing lands in ``out_dir`` unless every file was rendered; each file is
    moved in with an atomic rename.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(dir=out_dir, prefix=".staging-"))
    try:
        for name, text in files.items():
            with open(staging / name, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        for name in files:
            os.replace(staging / name, out_dir / name)
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return [out_dir / name for name in files]


def _map_files(stem, smap):
    return {f"{stem}.csv": sio.map_to_csv(smap), f"{stem}.json": sio.dumps_json(smap.sidecar())}


def cmd_simulate(cfg, out_dir):
    files = {}
    for k, (a1, a2) in enumerate(cfg.settings):
        rates = rate_map(cfg.source, AnalyzerSetting(a1, a2), cfg.grid)
        counts = sample_counts(
            rates, cfg.integration_s, cfg.source.background_fraction, cfg.seed, stream=_STREAM_SIMULATE + k
        )
        tag = _angle_tag(a1, a2)
        files.update(_map_files(f"rate_{tag}", rates))
        files.update(_map_files(f"counts_{tag}", counts))
    return _stage(out_dir, files)


def cmd_fit(map_path, out_dir=None):
    smap = sio.read_map(map_path)
    report = fit_gaussian2d(smap).to_dict()
    report["source_map"] = str(Path(map_path).name)
    text = sio.dumps_json(report)
    if out_dir is None:
        sys.stdout.write(text)
        return []
    return _stage(out_dir, {"fit_report.json": text})


def cmd_maps(cfg, out_dir):
    m = cfg.maps
    alpha2 = m.get("alpha2_deg", list(np.arange(-90.0, 90.0, 10.0)))
    V, gamma = visibility_gamma_maps(
        cfg.source,
        cfg.grid,
        alpha2,
        float(m.get("integration_s", 60.0)),
        seed=cfg.seed,
        max_visibility_error=float(m.get("max_visibility_error", 0.11)),
    )
    t_ent = float(m.get("entropy_integration_s", cfg.integration_s))
    hv = sample_counts(
        rate_map(cfg.source, AnalyzerSetting(0, 0), cfg.grid), t_ent,
        cfg.source.background_fraction, cfg.seed, stream=_STREAM_ENTROPY,
    )
    vh = sample_counts(
        rate_map(cfg.source, AnalyzerSetting(90, 90), cfg.grid), t_ent,
        cfg.source.background_fraction, cfg.seed, stream=_STREAM_ENTROPY + 1,
    )
    S = entropy_map(hv, vh, float(m.get("entropy_min_counts", 20.0)))
    files = {}
    files.update(_map_files("visibility", V))
    files.update(_map_files("gamma", gamma))
    files.update(_map_files("entropy", S))
    return _stage(out_dir, files)


def cmd_vfilter(cfg, out_dir):
    v = cfg.vfilter
    alpha2 = v.get("alpha2_deg", list(np.arange(-90.0, 90.0, 10.0)))
    if v.get("cube", "expected") == "sampled":
        cube = sample_cube(cfg.source, cfg.grid, alpha2, float(v.get("integration_s", 60.0)), seed=cfg.seed)
    else:
        cube = expected_cube(cfg.source, cfg.grid, alpha2)
    fwhm = v.get("fwhm_nm", [0.5, 1, 2, 3, 4, 5, 6, 8, 10, 12, 15])
    center = float(v.get("center_nm", 780.0))
    curve = tradeoff_curve(cube, center, fwhm)
    if v.get("v_min") is not None:
        criterion = {"kind": "min_visibility", "v_min": float(v["v_min"])}
        best = optimize_filter(curve, v_min=criterion["v_min"])
    else:
        criterion = {"kind": "rate_visibility_power", "exponent": float(v.get("exponent", 4.0))}
        best = optimize_filter(curve, exponent=criterion["exponent"])
    k = int(np.flatnonzero(curve.fwhm == best)[0])
    optimum = {
        "center_nm": center,
        "criterion": criterion,
        "fwhm_nm": best,
        "visibility": float(curve.visibility[k]),
        "normalized_rate": float(curve.normalized_rate[k]),
    }
    files = {"tradeoff.csv": sio.curve_to_csv(curve), "optimum.json": sio.dumps_json(optimum)}
    if "filters" in v:
        f1, f2 = v["filters"]["arm1"], v["filters"]["arm2"]
        fit = fit_sinusoid(filtered_scan(cube, f1, f2))
        report = {"arm1": f1.to_dict(), "arm2": f2.to_dict(), "fit": fit.to_dict()}
        files["filtered_fit.json"] = sio.dumps_json(report)
    return _stage(out_dir, files)


def build_parser():
    parser = argparse.ArgumentParser(prog="spdcmap", description="SPDC joint-spectrum polarization toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "rate and count maps for analyzer settings"),
        ("maps", "visibility, gamma and entropy maps"),
        ("vfilter", "virtual-filter tradeoff curve and optimum"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="run configuration (JSON)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p = sub.add_parser("fit", help="fit the 2D Gaussian model to a map CSV")
    p.add_argument("map", help="map CSV (sidecar JSON next to it is used if present)")
    p.add_argument("--out", default=None, help="output directory; report goes to stdout if omitted")
    p.add_argument("--config", default=None, help=argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=None, help=argparse.SUPPRESS)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fit":
            if not Path(args.map).is_file():
                raise ValidationError(f"map file {args.map} does not exist")
            cmd_fit(args.map, args.out)
            return EXIT_OK
        cfg = load_config(args.config, args.seed)
        command = {"simulate": cmd_simulate, "maps": cmd_maps, "vfilter": cmd_vfilter}[args.command]
        for path in command(cfg, args.out):
            print(path)
    except ValidationError as exc:
        print(f"spdcmap {args.command}: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SpdcMapError as exc:
        report = {"command": args.command, "error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(report), file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
