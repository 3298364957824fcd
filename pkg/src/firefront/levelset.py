"""Level-set evolution under a normal-speed field, plus the synthetic data generator.

Stepping is forward Euler, ``phi(t + dt) = phi(t) - v_n(t) * dt``, applied
cellwise. The signed distance property is not restored between steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .grid import Boundary, GridSpec, Polygon, ScalarField, build_sdf, require_same_grid

# Domain and grid of the synthetic experiments ([90, 150] x [5, 40], 31 x 31).
SYNTHETIC_GRID = GridSpec(31, 31, 90.0, 150.0, 5.0, 40.0)


@dataclass(frozen=True, eq=False)
class ConstraintMask:
    """Cells where the front may not spread (rivers, lakes...)."""

    grid: GridSpec
    blocked: np.ndarray

    def __post_init__(self):
        blocked = np.asarray(self.blocked, dtype=bool).reshape(-1)
        if blocked.size != self.grid.size:
            raise ValueError("mask size does not match grid")
        blocked.setflags(write=False)
        object.__setattr__(self, "blocked", blocked)

    def default_eps(self) -> float:
        return 0.1 * min(self.grid.hx, self.grid.hy)


@dataclass(frozen=True, eq=False)
class VelocitySequence:
    steps: tuple
    dt: float

    def __post_init__(self):
        steps = tuple(self.steps)
        if not steps:
            raise ValueError("velocity sequence is empty")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        require_same_grid(*steps)
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "dt", float(self.dt))

    def __len__(self):
        return len(self.steps)

    @property
    def grid(self) -> GridSpec:
        return self.steps[0].grid


def euler_step(phi: ScalarField, v_n: ScalarField, dt: float) -> ScalarField:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    grid = require_same_grid(phi, v_n)
    return ScalarField(grid, phi.values - v_n.values * dt)


def apply_constraints(phi: ScalarField, mask: ConstraintMask, eps: Optional[float] = None) -> ScalarField:
    """Clamp blocked cells to at least ``eps`` so they stay unburned."""
    if phi.grid != mask.grid:
        raise ValueError(f"grid mismatch: {phi.grid} vs {mask.grid}")
    if eps is None:
        eps = mask.default_eps()
    if not eps > 0:
        raise ValueError("eps must be positive")
    values = np.where(mask.blocked, np.maximum(phi.values, eps), phi.values)
    return ScalarField(phi.grid, values)


def simulate_sequence(phi0: ScalarField, vels: VelocitySequence,
                      mask: Optional[ConstraintMask] = None,
                      eps: Optional[float] = None) -> list[ScalarField]:
    """Evolve ``phi0`` through every velocity step; returns ``len(vels) + 1`` fields."""
    require_same_grid(phi0, *vels.steps)
    out = [phi0]
    phi = phi0
    for v in vels.steps:
        phi = euler_step(phi, v, vels.dt)
        if mask is not None:
            phi = apply_constraints(phi, mask, eps)
        out.append(phi)
    return out


def block_velocities(vels: VelocitySequence, mask: ConstraintMask) -> VelocitySequence:
    """Zero the speed on blocked cells (no fuel on water)."""
    if vels.grid != mask.grid:
        raise ValueError("grid mismatch between velocities and mask")
    steps = tuple(ScalarField(v.grid, np.where(mask.blocked, 0.0, v.values)) for v in vels.steps)
    return VelocitySequence(steps, vels.dt)


def synth_velocity_from_wind(wind: Sequence[ScalarField], scale: float, floor: float = 0.0,
                             dt: float = 0.1) -> VelocitySequence:
    """Affine wind-speed to normal-speed map, clamped below at zero."""
    if scale < 0:
        raise ValueError(f"scale must be nonnegative, got {scale}")
    if floor < 0:
        raise ValueError(f"floor must be nonnegative, got {floor}")
    grid = require_same_grid(*wind)
    steps = [ScalarField(grid, np.maximum(floor + scale * w.values, 0.0)) for w in wind]
    return VelocitySequence(tuple(steps), dt)


def synthetic_wind(grid: GridSpec, n_steps: int, seed: int, mean_speed: float = 6.0,
                   n_modes: int = 3) -> list[ScalarField]:
    """Smooth random wind-speed fields.

    A north-east ramp plus ``n_modes`` low-frequency sinusoids. Each mode gets a
    random wave vector and phase once; phases then drift slowly from step to
    step, so consecutive fields are strongly correlated. Speeds are >= 0.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,)))
    pts = grid.coords()
    u = (pts[:, 0] - grid.x_min) / (grid.x_max - grid.x_min)
    w = (pts[:, 1] - grid.y_min) / (grid.y_max - grid.y_min)
    kx = rng.uniform(0.5, 1.5, n_modes) * 2 * np.pi
    ky = rng.uniform(0.5, 1.5, n_modes) * 2 * np.pi
    amp = rng.uniform(0.5, 1.5, n_modes)
    phase = rng.uniform(0, 2 * np.pi, n_modes)
    drift = rng.uniform(-0.15, 0.15, n_modes)
    ramp = 0.6 + 0.8 * (u + w) / 2.0
    fields = []
    for step in range(n_steps):
        ph = phase + drift * step
        modes = sum(amp[m] * np.sin(kx[m] * u + ky[m] * w + ph[m]) for m in range(n_modes))
        speed = mean_speed * ramp * (1.0 + 0.15 * modes)
        fields.append(ScalarField(grid, np.maximum(speed, 0.0)))
    return fields


def random_star_polygon(center, mean_radius: float, n_vertices: int, seed: int,
                        roughness: float = 0.25, n_harmonics: int = 3) -> np.ndarray:
    """Smooth random star-shaped ring: radius is a low-order Fourier series in angle."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(3,)))
    theta = np.linspace(0, 2 * np.pi, n_vertices, endpoint=False)
    r = np.ones_like(theta)
    for k in range(1, n_harmonics + 1):
        r += roughness / k * rng.uniform(-1, 1) * np.cos(k * theta + rng.uniform(0, 2 * np.pi))
    r = mean_radius * np.clip(r, 0.3, None)
    return np.column_stack([center[0] + r * np.cos(theta), center[1] + r * np.sin(theta)])


def wall_mask(grid: GridSpec, start, end, half_width: Optional[float] = None) -> ConstraintMask:
    """Block every cell centre within ``half_width`` of the segment ``start``-``end``."""
    if half_width is None:
        half_width = 0.5 * max(grid.hx, grid.hy)
    a = np.asarray(start, float)
    ab = np.asarray(end, float) - a
    pts = grid.coords()
    s = np.clip((pts - a) @ ab / (ab @ ab), 0.0, 1.0)
    d = np.hypot(*(pts - (a + s[:, None] * ab)).T)
    return ConstraintMask(grid, d <= half_width)


@dataclass(frozen=True)
class SyntheticSpec:
    """Knobs of the synthetic experiment; defaults give the canonical dataset."""

    seed: int = 42
    steps: int = 20
    dt: float = 0.1
    wind_scale: float = 1.0
    wind_floor: float = 0.0
    mean_wind: float = 6.0
    ignition_radius: float = 7.0
    constrained: bool = False
    # wall to the north-east of the ignition, in domain coordinates
    wall_start: tuple = (124.0, 31.0)
    wall_end: tuple = (138.0, 17.0)
    # band wide enough that the cellwise update cannot jump it within 20 steps
    wall_half_width: float = 3.5


@dataclass(eq=False)
class SyntheticDataset:
    phis: list
    boundary0: Boundary
    velocities: VelocitySequence
    wind: list
    mask: Optional[ConstraintMask]


def synthetic_dataset(spec: SyntheticSpec = SyntheticSpec(), grid: GridSpec = SYNTHETIC_GRID,
                      mask: Optional[ConstraintMask] = None) -> SyntheticDataset:
    """Random star-shaped ignition evolved by seeded synthetic wind.

    The constrained and unconstrained variants share seed, ignition and wind.
    With the barrier, blocked cells get zero speed and are also clamped
    positive; every other cell evolves exactly as in the unconstrained run.
    An explicit ``mask`` replaces the built-in wall.
    """
    cx = grid.x_min + 0.4 * (grid.x_max - grid.x_min)
    cy = grid.y_min + 0.4 * (grid.y_max - grid.y_min)
    ring = random_star_polygon((cx, cy), spec.ignition_radius, 48, spec.seed)
    b0 = Boundary((Polygon(ring),), t=1)
    phi0 = build_sdf(b0, grid)
    wind = synthetic_wind(grid, spec.steps, spec.seed, mean_speed=spec.mean_wind)
    vels = synth_velocity_from_wind(wind, spec.wind_scale, spec.wind_floor, spec.dt)
    if mask is None and spec.constrained:
        mask = wall_mask(grid, spec.wall_start, spec.wall_end, spec.wall_half_width)
    if mask is not None:
        phi0 = apply_constraints(phi0, mask)
        vels = block_velocities(vels, mask)
    phis = simulate_sequence(phi0, vels, mask)
    return SyntheticDataset(phis, b0, vels, wind, mask)
