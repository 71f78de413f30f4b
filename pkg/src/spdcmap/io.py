"""File formats: model JSON, SpectralMap CSV + JSON sidecar, tradeoff CSV,
filter profiles. All text is written atomically (temp file + rename)."""

import csv
import io
import json
import math
import os
from pathlib import Path
import tempfile

import numpy as np

from .exceptions import ValidationError
from .spectral_model import GaussianJointModel, SpectralMap, WavelengthGrid
from .vfilter import FilterProfile, TradeoffCurve

MAP_HEADER = ("lambda1_nm", "lambda2_nm", "value")
CURVE_HEADER = ("fwhm_nm", "visibility", "normalized_rate")


def fmt(x):
    """Fixed 9-significant-digit, locale-independent number format."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return "%.9g" % x


def atomic_write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    atomic_write_text(path, dumps_json(obj))


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def write_model(path, model):
    write_json(path, model.to_dict())


def read_model(path):
    return GaussianJointModel.from_dict(read_json(path))


def sidecar_path(csv_path):
    return Path(csv_path).with_suffix(".json")


def map_to_csv(smap):
    buf = io.StringIO()
    buf.write(",".join(MAP_HEADER) + "\n")
    L1, L2 = smap.grid.mesh()
    for l1, l2, v in zip(L1.ravel(), L2.ravel(), smap.values.ravel()):
        buf.write(f"{fmt(l1)},{fmt(l2)},{fmt(v)}\n")
    return buf.getvalue()


def write_map(path, smap):
    """Write ``path`` (CSV) and its ``.json`` sidecar."""
    atomic_write_text(path, map_to_csv(smap))
    write_json(sidecar_path(path), smap.sidecar())


def _grid_from_coordinates(l1, l2):
    ax1, ax2 = np.unique(l1), np.unique(l2)
    if ax1.size * ax2.size != l1.size:
        raise ValidationError("map CSV is not a complete rectangular grid")
    step1 = float(np.diff(ax1).mean()) if ax1.size > 1 else 1.0
    step2 = float(np.diff(ax2).mean()) if ax2.size > 1 else 1.0
    return WavelengthGrid(float(ax1[0]), float(ax2[0]), step1, step2, ax1.size, ax2.size)


def read_map(path, kind=None):
    """Read a map CSV; grid and metadata come from the sidecar when present."""
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(h.strip() for h in rows[0]) != MAP_HEADER:
        raise ValidationError(f"{path}: header must be {','.join(MAP_HEADER)}")
    data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    if data.ndim != 2 or data.shape[1] != 3:
        raise ValidationError(f"{path}: expected three numeric columns")
    meta = read_json(sidecar_path(path)) if sidecar_path(path).exists() else {}
    grid = WavelengthGrid.from_dict(meta["grid"]) if "grid" in meta else _grid_from_coordinates(data[:, 0], data[:, 1])
    L1, L2 = grid.mesh()
    # place values by coordinate so row order in the file does not matter
    i = np.rint((data[:, 0] - grid.start1) / grid.step1).astype(int)
    j = np.rint((data[:, 1] - grid.start2) / grid.step2).astype(int)
    if data.shape[0] != L1.size or i.min() < 0 or j.min() < 0 or i.max() >= grid.count1 or j.max() >= grid.count2:
        raise ValidationError(f"{path}: coordinates do not match the declared grid")
    values = np.full(grid.shape, np.nan)
    values[i, j] = data[:, 2]
    kind = kind or meta.get("kind", "counts")
    metadata = {k: v for k, v in meta.items() if k not in ("kind", "grid")}
    return SpectralMap(grid, values, kind, metadata)


def curve_to_csv(curve):
    lines = [",".join(CURVE_HEADER)]
    lines += [f"{fmt(f)},{fmt(v)},{fmt(r)}" for f, v, r in curve.rows()]
    return "\n".join(lines) + "\n"


def write_curve(path, curve):
    atomic_write_text(path, curve_to_csv(curve))


def read_curve(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != CURVE_HEADER:
        raise ValidationError(f"{path}: header must be {','.join(CURVE_HEADER)}")
    data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    return TradeoffCurve(data[:, 0], data[:, 1], data[:, 2], data[:, 2])


def read_filter(path):
    """Filter profile from JSON or from a two-column (wavelength, transmission) CSV."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return FilterProfile.from_dict(read_json(path))
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    try:
        float(rows[0][0])
    except (IndexError, ValueError):
        rows = rows[1:]  # header line
    try:
        data = np.array([[float(x) for x in r] for r in rows], dtype=float)
    except ValueError:
        raise ValidationError(f"{path}: non-numeric filter table") from None
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValidationError(f"{path}: tabulated filter needs two columns")
    return FilterProfile.tabulated(data[:, 0], data[:, 1])
