"""File formats: field CSV, boundary GeoJSON, velocity sequences and masks.

Field CSV layout::

    nx,ny,x_min,x_max,y_min,y_max      <- values of the grid, one line
    v(0,0),v(1,0),...,v(nx-1,0)        <- one grid row per line, y_min first
    ...

Floats are written with ``repr`` so files round-trip exactly.
"""

from __future__ import annotations

import json
import os
from itertools import groupby
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
import shapely.geometry
import shapely.validation

from .grid import Boundary, GridSpec, Polygon, ScalarField
from .levelset import ConstraintMask, VelocitySequence

PathLike = Union[str, os.PathLike]
CSV_HEADER_NAMES = ["nx", "ny", "x_min", "x_max", "y_min", "y_max"]


def _num(v: float) -> str:
    v = float(v)
    return repr(0.0 if v == 0 else v)


def format_field_csv(f: ScalarField) -> str:
    g = f.grid
    lines = [",".join([str(g.nx), str(g.ny)] + [_num(v) for v in (g.x_min, g.x_max, g.y_min, g.y_max)])]
    for row in f.as_array():
        lines.append(",".join(_num(v) for v in row))
    return "\n".join(lines) + "\n"


def write_field_csv(f: ScalarField, path: PathLike) -> None:
    Path(path).write_text(format_field_csv(f))


def read_field_csv(path: PathLike) -> ScalarField:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty field file")
    if lines[0].replace(" ", "").lower() == ",".join(CSV_HEADER_NAMES):
        lines = lines[1:]
    head = lines[0].split(",")
    if len(head) != 6:
        raise ValueError(f"{path}: header must hold {','.join(CSV_HEADER_NAMES)}")
    grid = GridSpec(int(head[0]), int(head[1]), *(float(v) for v in head[2:]))
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    if len(rows) != grid.ny or any(len(r) != grid.nx for r in rows):
        raise ValueError(f"{path}: expected {grid.ny} rows of {grid.nx} values")
    return ScalarField(grid, np.array(rows))


def write_mask_csv(mask: ConstraintMask, path: PathLike) -> None:
    write_field_csv(ScalarField(mask.grid, mask.blocked.astype(float)), path)


def read_mask_csv(path: PathLike) -> ConstraintMask:
    f = read_field_csv(path)
    if not np.all(np.isin(f.values, (0.0, 1.0))):
        raise ValueError(f"{path}: mask values must be 0 or 1")
    return ConstraintMask(f.grid, f.values == 1.0)


def write_velocity_sequence(vels: VelocitySequence, directory: PathLike) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for k, v in enumerate(vels.steps, start=1):
        write_field_csv(v, d / f"vel_{k:04d}.csv")
    (d / "manifest.json").write_text(json.dumps({"dt": vels.dt, "count": len(vels)}, indent=2) + "\n")


def read_velocity_sequence(directory: PathLike) -> VelocitySequence:
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    steps = [read_field_csv(d / f"vel_{k:04d}.csv") for k in range(1, int(manifest["count"]) + 1)]
    return VelocitySequence(tuple(steps), float(manifest["dt"]))


# --- GeoJSON ---------------------------------------------------------------

def _ring_coords(ring: np.ndarray) -> list:
    closed = np.vstack([ring, ring[:1]])
    return [[float(x), float(y)] for x, y in closed]


def boundary_to_feature(b: Boundary) -> dict:
    polys = [[_ring_coords(r) for r in p.rings()] for p in b.polygons]
    if len(polys) == 1:
        geometry = {"type": "Polygon", "coordinates": polys[0]}
    else:
        geometry = {"type": "MultiPolygon", "coordinates": polys}
    props = {"t": b.t}
    if b.timestamp is not None:
        props["timestamp"] = b.timestamp
    return {"type": "Feature", "properties": props, "geometry": geometry}


def format_boundaries_geojson(boundaries: Iterable[Boundary]) -> str:
    fc = {"type": "FeatureCollection", "features": [boundary_to_feature(b) for b in boundaries]}
    return json.dumps(fc, indent=1) + "\n"


def write_boundaries(boundaries: Iterable[Boundary], path: PathLike) -> None:
    Path(path).write_text(format_boundaries_geojson(boundaries))


def _parse_ring(coords, where: str) -> np.ndarray:
    ring = np.asarray(coords, dtype=float)
    if ring.ndim != 2 or ring.shape[1] < 2:
        raise ValueError(f"{where}: malformed ring coordinates")
    ring = ring[:, :2]
    if len(ring) < 4 or not np.array_equal(ring[0], ring[-1]):
        raise ValueError(f"{where}: ring is not closed")
    return ring[:-1]


def _parse_feature(idx: int, feat: dict):
    where = f"feature {idx}"
    props = feat.get("properties") or {}
    t = props.get("t")
    if isinstance(t, bool) or not isinstance(t, (int, float)):
        raise ValueError(f"{where}: missing numeric property 't'")
    geom = feat.get("geometry") or {}
    gtype = geom.get("type")
    if gtype == "Polygon":
        polys = [geom["coordinates"]]
    elif gtype == "MultiPolygon":
        polys = geom["coordinates"]
    else:
        raise ValueError(f"{where}: unsupported geometry type {gtype!r}")
    out = []
    for p in polys:
        rings = [_parse_ring(r, where) for r in p]
        if not rings:
            continue
        shp = shapely.geometry.Polygon(rings[0], rings[1:])
        if not shp.is_valid:
            raise ValueError(f"{where}: invalid polygon ({shapely.validation.explain_validity(shp)})")
        out.append(Polygon(rings[0], tuple(rings[1:])))
    return float(t), props.get("timestamp"), out


def load_boundaries(path: PathLike) -> list[Boundary]:
    """Read a FeatureCollection; features sharing ``t`` merge into one boundary, sorted by ``t``."""
    data = json.loads(Path(path).read_text())
    if data.get("type") != "FeatureCollection":
        raise ValueError(f"{path}: expected a GeoJSON FeatureCollection")
    parsed = [_parse_feature(i, f) for i, f in enumerate(data.get("features", []))]
    parsed.sort(key=lambda item: item[0])
    out = []
    for t, group in groupby(parsed, key=lambda item: item[0]):
        group = list(group)
        stamps = [g[1] for g in group if g[1] is not None]
        polys = tuple(p for g in group for p in g[2])
        out.append(Boundary(polys, t, stamps[0] if stamps else None))
    return out


def write_fields(fields: Sequence[ScalarField], directory: PathLike, prefix: str = "phi",
                 start: int = 1) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, f in enumerate(fields, start=start):
        p = d / f"{prefix}_{k:04d}.csv"
        write_field_csv(f, p)
        paths.append(p)
    return paths


def read_fields(directory: PathLike, prefix: str = "phi") -> list[ScalarField]:
    paths = sorted(Path(directory).glob(f"{prefix}_[0-9][0-9][0-9][0-9].csv"))
    if not paths:
        raise FileNotFoundError(f"no {prefix}_NNNN.csv files in {directory}")
    return [read_field_csv(p) for p in paths]


def write_json(obj, path: PathLike) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
