"""Grid definition, signed distance fields and zero-contour extraction.

Values live on cell centres of a rectangular lattice, stored row-major with
y varying slowest, so ``values[j * nx + i]`` sits at ``(x_i, y_j)``.
Distances are planar Euclidean in whatever units the coordinates use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("nx and ny must be integers")
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"grid needs at least 2x2 cells, got {self.nx}x{self.ny}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("grid extent must satisfy x_min < x_max and y_min < y_max")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        for name in ("x_min", "x_max", "y_min", "y_max"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape ``(ny, nx)`` of a reshaped field."""
        return (self.ny, self.nx)

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    def coords(self) -> np.ndarray:
        """Cell centres as an ``(N, 2)`` array in storage order."""
        xx, yy = np.meshgrid(self.xs, self.ys)
        return np.column_stack([xx.ravel(), yy.ravel()])

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "x_min": self.x_min,
                "x_max": self.x_max, "y_min": self.y_min, "y_max": self.y_max}


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A real value per grid cell (signed distance, normal speed, wind...)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size != self.grid.size:
            raise ValueError(
                f"field has {values.size} values, grid {self.grid.nx}x{self.grid.ny} needs {self.grid.size}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.size, float(value)))

    @classmethod
    def from_function(cls, grid: GridSpec, func) -> "ScalarField":
        """Evaluate ``func(x, y)`` (vectorised) on the cell centres."""
        pts = grid.coords()
        return cls(grid, func(pts[:, 0], pts[:, 1]))


def require_same_grid(*fields: ScalarField) -> GridSpec:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ValueError(f"grid mismatch: {f.grid} vs {grid}")
    return grid


def _as_ring(vertices) -> np.ndarray:
    ring = np.asarray(vertices, dtype=float).reshape(-1, 2)
    if len(ring) > 1 and np.array_equal(ring[0], ring[-1]):
        ring = ring[:-1]
    if len(ring) < 3:
        raise ValueError(f"ring needs at least 3 distinct vertices, got {len(ring)}")
    if not np.all(np.isfinite(ring)):
        raise ValueError("ring has non-finite coordinates")
    return ring


@dataclass(frozen=True, eq=False)
class Polygon:
    """Exterior ring plus optional holes; rings are stored open (no repeated closing vertex)."""

    exterior: np.ndarray
    holes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "exterior", _as_ring(self.exterior))
        object.__setattr__(self, "holes", tuple(_as_ring(h) for h in self.holes))

    def rings(self) -> Iterator[np.ndarray]:
        yield self.exterior
        yield from self.holes


@dataclass(frozen=True, eq=False)
class Boundary:
    """Observed front at one time index: a (possibly empty) set of polygons."""

    polygons: tuple = ()
    t: float = 0.0
    timestamp: Optional[str] = None

    def __post_init__(self):
        polys = tuple(p if isinstance(p, Polygon) else Polygon(p) for p in self.polygons)
        object.__setattr__(self, "polygons", polys)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def from_rings(cls, rings: Sequence, t: float = 0.0, timestamp: Optional[str] = None) -> "Boundary":
        return cls(tuple(Polygon(r) for r in rings), t, timestamp)

    def rings(self) -> list[np.ndarray]:
        return [r for p in self.polygons for r in p.rings()]

    def is_empty(self) -> bool:
        return not self.polygons

    def segments(self) -> np.ndarray:
        """All boundary edges as an ``(M, 2, 2)`` array of (start, end) points."""
        rings = self.rings()
        if not rings:
            return np.empty((0, 2, 2))
        return np.concatenate([np.stack([r, np.roll(r, -1, axis=0)], axis=1) for r in rings])


def _closest_on_segments(points: np.ndarray, segs: np.ndarray, chunk: int = 512):
    """Nearest distance, nearest point and nearest segment index for each point."""
    a = segs[:, 0]
    ab = segs[:, 1] - a
    ab2 = np.einsum("ij,ij->i", ab, ab)
    ab2_safe = np.where(ab2 > 0, ab2, 1.0)
    n = len(points)
    dist = np.empty(n)
    nearest = np.empty((n, 2))
    index = np.empty(n, dtype=int)
    for lo in range(0, n, chunk):
        p = points[lo:lo + chunk, None, :]
        ap = p - a[None]
        s = np.clip(np.einsum("pmk,mk->pm", ap, ab) / ab2_safe, 0.0, 1.0)
        s = np.where(ab2 > 0, s, 0.0)
        foot = a[None] + s[..., None] * ab[None]
        d2 = np.sum((p - foot) ** 2, axis=-1)
        k = np.argmin(d2, axis=1)
        rows = np.arange(len(k))
        dist[lo:lo + chunk] = np.sqrt(d2[rows, k])
        nearest[lo:lo + chunk] = foot[rows, k]
        index[lo:lo + chunk] = k
    return dist, nearest, index


def _segment_distance(points: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """Pairwise distances, shape ``(len(points), len(segs))``."""
    a = segs[:, 0]
    ab = segs[:, 1] - a
    ab2 = np.einsum("ij,ij->i", ab, ab)
    ap = points[:, None, :] - a[None]
    s = np.clip(np.einsum("pmk,mk->pm", ap, ab) / np.where(ab2 > 0, ab2, 1.0), 0.0, 1.0)
    foot = a[None] + s[..., None] * ab[None]
    return np.sqrt(np.sum((points[:, None, :] - foot) ** 2, axis=-1))


def _boundary_segments(b: Boundary) -> np.ndarray:
    segs = b.segments()
    if len(segs) == 0:
        raise ValueError("no boundary geometry")
    return segs


def distance_to_boundary(p, b: Boundary) -> float:
    """Exact Euclidean distance from point ``p`` to the nearest boundary edge."""
    segs = _boundary_segments(b)
    d, _, _ = _closest_on_segments(np.asarray(p, dtype=float).reshape(1, 2), segs)
    return float(d[0])


def distances_to_boundary(points: np.ndarray, b: Boundary) -> np.ndarray:
    segs = _boundary_segments(b)
    d, _, _ = _closest_on_segments(np.asarray(points, dtype=float).reshape(-1, 2), segs)
    return d


def inside_even_odd(points: np.ndarray, rings: Sequence[np.ndarray]) -> np.ndarray:
    """Even-odd ray cast (ray towards +x) over every ring.

    Edges are treated half-open in y, which is the same as nudging the ray by
    an infinitesimal amount whenever it passes exactly through a vertex.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    px = points[:, 0:1]
    py = points[:, 1:2]
    inside = np.zeros(len(points), dtype=bool)
    for ring in rings:
        a = ring
        b = np.roll(ring, -1, axis=0)
        ax, ay, bx, by = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
        straddle = (ay > py) != (by > py)
        dy = np.where(by != ay, by - ay, 1.0)
        x_cross = ax + (py - ay) * (bx - ax) / dy
        crossings = np.count_nonzero(straddle & (px < x_cross), axis=1)
        inside ^= (crossings % 2).astype(bool)
    return inside


def build_sdf(b: Boundary, g: GridSpec) -> ScalarField:
    """Signed distance to ``b`` at each cell centre: negative inside, positive outside."""
    segs = _boundary_segments(b)
    pts = g.coords()
    d, _, _ = _closest_on_segments(pts, segs)
    inside = inside_even_odd(pts, b.rings())
    values = np.where(inside, -d, d)
    values[d == 0.0] = 0.0
    return ScalarField(g, values)


def skeleton_adjacent_mask(b: Boundary, g: GridSpec, max_turn: float = 0.5,
                           samples: int = 8) -> np.ndarray:
    """Cells whose central-difference stencil crosses the medial axis of ``b``.

    The path from each cell to each 4-neighbour is sampled ``samples`` times.
    Wherever the nearest boundary edge changes between two samples, the point
    where both edges are equally far is found by bisection. If the directions
    to the two feet there differ by more than ``max_turn`` radians the distance
    field has a kink on the path and both cells are flagged. Edges meeting at
    a shared vertex hand over smoothly and are not flagged.
    """
    segs = _boundary_segments(b)
    pts = g.coords()
    idx = np.arange(g.size).reshape(g.shape)
    s = np.linspace(0.0, 1.0, samples + 1)
    cos_max = np.cos(max_turn)
    flagged = np.zeros(g.size, dtype=bool)
    for dj, di in ((0, 1), (1, 0)):
        a = idx[: g.ny - dj, : g.nx - di].ravel()
        c = idx[dj:, di:].ravel()
        path = pts[a][:, None, :] + s[None, :, None] * (pts[c] - pts[a])[:, None, :]
        _, _, k = _closest_on_segments(path.reshape(-1, 2), segs)
        k = k.reshape(len(a), samples + 1)
        pair, step = np.nonzero(k[:, 1:] != k[:, :-1])
        if pair.size == 0:
            continue
        p0, p1 = path[pair, step], path[pair, step + 1]
        sa, sb = segs[k[pair, step]], segs[k[pair, step + 1]]
        lo, hi = np.zeros(len(pair)), np.ones(len(pair))
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            q = p0 + mid[:, None] * (p1 - p0)
            a_closer = _foot_distance(q, sa)[0] <= _foot_distance(q, sb)[0]
            lo = np.where(a_closer, mid, lo)
            hi = np.where(a_closer, hi, mid)
        q = p0 + (0.5 * (lo + hi))[:, None] * (p1 - p0)
        da, fa = _foot_distance(q, sa)
        db, fb = _foot_distance(q, sb)
        with np.errstate(invalid="ignore", divide="ignore"):
            cos_turn = np.einsum("ij,ij->i", q - fa, q - fb) / (da * db)
        # a switch on the boundary itself (a path through a vertex) has no direction
        on_boundary = np.minimum(da, db) <= 1e-6 * min(g.hx, g.hy)
        bad = np.unique(pair[(cos_turn < cos_max) & ~on_boundary])
        flagged[a[bad]] = True
        flagged[c[bad]] = True
    return flagged


def _foot_distance(points: np.ndarray, segs: np.ndarray):
    """Row-wise distance from ``points[i]`` to segment ``segs[i]`` and the foot point."""
    a = segs[:, 0]
    ab = segs[:, 1] - a
    ab2 = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(np.einsum("ij,ij->i", points - a, ab) / np.where(ab2 > 0, ab2, 1.0), 0.0, 1.0)
    foot = a + t[:, None] * ab
    return np.hypot(*(points - foot).T), foot


def gradient_norm_field(f: ScalarField) -> ScalarField:
    """``|grad f|`` with central differences inside and one-sided at the edges."""
    g = f.grid
    if g.nx < 3 or g.ny < 3:
        raise ValueError("gradient needs at least 3x3 cells")
    dfdy, dfdx = np.gradient(f.as_array(), g.hy, g.hx)
    return ScalarField(g, np.hypot(dfdx, dfdy))


# Marching squares. Corners of a cell are numbered counter-clockwise from the
# lower-left node; edge k joins corner k to corner k+1.
_CORNER_OFFSETS = ((0, 0), (1, 0), (1, 1), (0, 1))  # (di, dj)


def _edge_key(i: int, j: int, k: int) -> tuple:
    # Global id of edge k of the cell whose lower-left node is (i, j).
    if k == 0:
        return ("h", i, j)
    if k == 1:
        return ("v", i + 1, j)
    if k == 2:
        return ("h", i, j + 1)
    return ("v", i, j)


def _ring_area(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def extract_zero_contour(f: ScalarField, t: Optional[float] = None) -> Boundary:
    """Zero level set of ``f`` as closed rings.

    Values ``<= 0`` count as inside. The field is padded with an outside
    border so regions touching the grid edge are closed along it. Rings are
    oriented with the inside on the left: exteriors counter-clockwise and
    holes clockwise. Returns an empty boundary when ``f`` never changes sign.
    """
    g = f.grid
    nx, ny = g.nx, g.ny
    pad = np.full((ny + 2, nx + 2), np.inf)
    pad[1:-1, 1:-1] = f.as_array()
    xs = np.concatenate([[g.x_min - g.hx], g.xs, [g.x_max + g.hx]])
    ys = np.concatenate([[g.y_min - g.hy], g.ys, [g.y_max + g.hy]])
    neg = pad <= 0.0

    def node(i, j):
        return np.array([xs[i], ys[j]])

    def crossing(i, j, k):
        ci, cj = _CORNER_OFFSETS[k]
        ni, nj = _CORNER_OFFSETS[(k + 1) % 4]
        a, b = (i + ci, j + cj), (i + ni, j + nj)
        if not neg[a[1], a[0]]:
            a, b = b, a
        fa, fb = pad[a[1], a[0]], pad[b[1], b[0]]
        # a is inside (finite, <= 0); fb may be +inf at the padding
        frac = 0.0 if np.isinf(fb) else -fa / (fb - fa)
        pa, pb = node(*a), node(*b)
        return pa + frac * (pb - pa)

    segments = {}
    points = {}
    nz = np.argwhere(
        neg[:-1, :-1] | neg[:-1, 1:] | neg[1:, :-1] | neg[1:, 1:])
    for j, i in nz:
        corners = [neg[j + dj, i + di] for di, dj in _CORNER_OFFSETS]
        if all(corners):
            continue
        exits, entries = [], []
        for k in range(4):
            a, b = corners[k], corners[(k + 1) % 4]
            if a and not b:
                exits.append(k)
            elif b and not a:
                entries.append(k)
        pairs = []
        if len(exits) == 1:
            pairs.append((exits[0], entries[0]))
        else:
            vals = [pad[j + dj, i + di] for di, dj in _CORNER_OFFSETS]
            centre_inside = np.mean(vals) <= 0.0 if np.all(np.isfinite(vals)) else False
            for e in exits:
                partner = (e + 1) % 4 if centre_inside else (e - 1) % 4
                pairs.append((e, partner))
        for e, n in pairs:
            ka, kb = _edge_key(i, j, e), _edge_key(i, j, n)
            if ka not in points:
                points[ka] = crossing(i, j, e)
            if kb not in points:
                points[kb] = crossing(i, j, n)
            segments[ka] = kb

    rings = []
    while segments:
        start, nxt = segments.popitem()
        chain = [points[start]]
        key = nxt
        while key != start:
            chain.append(points[key])
            key = segments.pop(key)
        ring = np.array(chain)
        keep = np.ones(len(ring), dtype=bool)
        keep[1:] = np.any(ring[1:] != ring[:-1], axis=1)
        ring = ring[keep]
        if len(ring) > 1 and np.array_equal(ring[0], ring[-1]):
            ring = ring[:-1]
        if len(ring) >= 3 and _ring_area(ring) != 0.0:
            rings.append(ring)

    polygons = _assemble_polygons(rings)
    return Boundary(tuple(polygons), 0.0 if t is None else t)


def _assemble_polygons(rings: list) -> list:
    """Attach each clockwise ring (hole) to the smallest exterior containing it."""
    rings = sorted(rings, key=lambda r: (-abs(_ring_area(r)), tuple(r[0])))
    exteriors = [r for r in rings if _ring_area(r) > 0]
    holes = [r for r in rings if _ring_area(r) < 0]
    owned = {i: [] for i in range(len(exteriors))}
    orphans = []
    for h in holes:
        probe = h[:1]
        owner = None
        for i in sorted(range(len(exteriors)), key=lambda i: abs(_ring_area(exteriors[i]))):
            if inside_even_odd(probe, [exteriors[i]])[0]:
                owner = i
                break
        if owner is None:
            orphans.append(h)
        else:
            owned[owner].append(h)
    polys = [Polygon(ext, tuple(owned[i])) for i, ext in enumerate(exteriors)]
    polys.extend(Polygon(h) for h in orphans)
    return polys
