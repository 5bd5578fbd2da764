"""Boundary CSV files (``R1,R2``) with a ``.meta.json`` sidecar."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .sets import CurveSet
from .verify import forward_curve


class BoundaryFormatError(ValueError):
    """A boundary CSV is empty, malformed or not monotone."""


def sidecar_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".meta.json") if p.suffix == ".csv" else p.with_name(p.name + ".meta.json")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def boundary_points(S: CurveSet, ratios=None) -> np.ndarray:
    """Boundary points ordered by increasing ``R1``.

    Sets that carry points (traced or delta-hedge curves) return them.
    Otherwise the points are the forward-solver argmins over ``ratios``
    (relative prices ``c1/c2``), deduplicated.
    """
    if S.points is not None:
        return np.asarray(S.points, dtype=float)
    if ratios is None:
        ratios = np.geomspace(1e-4, 1e4, 512)
    p = np.asarray(ratios, dtype=float)
    p = p[(p >= S.valid_prices[0]) & (p <= S.valid_prices[1])]
    _, R, _, _ = forward_curve(S, np.column_stack([p, np.ones_like(p)]))
    R = R[np.argsort(R[:, 0], kind="stable")]
    keep = np.ones(len(R), dtype=bool)
    keep[1:] = np.any(np.abs(np.diff(R, axis=0)) > 1e-13 * (1 + np.abs(R[1:])), axis=1)
    return R[keep]


def boundary_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["R1", "R2"])
    for r1, r2 in np.asarray(points, dtype=float):
        w.writerow([f"{r1:.12g}", f"{r2:.12g}"])
    return buf.getvalue()


def write_boundary(path, points, meta: dict) -> Path:
    """Write ``R1,R2`` rows and the metadata sidecar; returns the sidecar path."""
    path = Path(path)
    path.write_text(boundary_csv(points))
    side = sidecar_path(path)
    side.write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")
    return side


def parse_boundary(text: str) -> np.ndarray:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise BoundaryFormatError("empty boundary file")
    if [c.strip() for c in rows[0]] != ["R1", "R2"]:
        raise BoundaryFormatError("boundary header must be R1,R2")
    if len(rows) < 2:
        raise BoundaryFormatError("boundary file has no rows")
    try:
        pts = np.array([[float(a), float(b)] for a, b in rows[1:]])
    except ValueError as exc:
        raise BoundaryFormatError(f"malformed boundary row: {exc}") from exc
    if not np.all(np.isfinite(pts)) or np.any(pts < 0):
        raise BoundaryFormatError("boundary reserves must be finite and nonnegative")
    if np.any(np.diff(pts[:, 0]) <= 0) or np.any(np.diff(pts[:, 1]) > 0):
        raise BoundaryFormatError("boundary rows must have increasing R1 and nonincreasing R2")
    return pts


def read_boundary(path) -> CurveSet:
    """Load a boundary CSV as a curve set, interpolated with a monotone PCHIP."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise BoundaryFormatError(str(exc)) from exc
    pts = parse_boundary(text)
    side = sidecar_path(path)
    meta = json.loads(side.read_text()) if side.exists() else {}
    meta = {**meta, "source_file": str(path)}
    if len(pts) == 1:
        a1, a2 = pts[0]
        return CurveSet(phi=lambda r: np.full(np.shape(r), a2), r1_min=a1, r1_max=a1,
                        slope=lambda r: np.zeros(np.shape(r)), points=pts, meta=meta)
    f = PchipInterpolator(pts[:, 0], pts[:, 1], extrapolate=False)
    df = f.derivative()
    return CurveSet(phi=lambda r: f(np.asarray(r, dtype=float)),
                    slope=lambda r: df(np.asarray(r, dtype=float)),
                    r1_min=float(pts[0, 0]), r1_max=float(pts[-1, 0]), points=pts, meta=meta)
