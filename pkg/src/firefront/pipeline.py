"""Run configuration and the simulate / forecast / score / sdf / contour commands."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional


from . import io
from .ensemble import HyperPriors, run_ensemble
from .esn import n_training_pairs
from .grid import GridSpec, ScalarField, build_sdf, extract_zero_contour, require_same_grid
from .levelset import SYNTHETIC_GRID, SyntheticSpec, synthetic_dataset
from .scoring import ScoreReport, score_forecast

log = logging.getLogger(__name__)

MANIFEST_KIND = "run_manifest"


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec = SYNTHETIC_GRID
    priors: HyperPriors = HyperPriors()
    alpha_sig: float = 0.05
    master_seed: int = 42
    dt: float = 0.1
    holdout_index: Optional[int] = None  # 1-based observation to forecast; None = last
    steps: int = 20
    constrained: bool = False
    wind_scale: float = 1.0
    wind_floor: float = 0.0
    input: Optional[str] = None  # boundary GeoJSON or directory of phi_NNNN.csv
    truth: Optional[str] = None  # field CSV, boundary GeoJSON or phi directory
    forecast_dir: Optional[str] = None
    mask: Optional[str] = None
    out_dir: str = "out"
    workers: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.alpha_sig < 1:
            raise ValueError("alpha_sig must lie in (0, 1)")
        if self.priors.dt != self.dt:
            object.__setattr__(self, "priors", replace(self.priors, dt=self.dt))

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["grid"] = self.grid.to_dict()
        d["priors"] = self.priors.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "grid" in d:
            d["grid"] = GridSpec(**d["grid"])
        if "priors" in d:
            d["priors"] = HyperPriors.from_dict(d["priors"])
        return cls(**d)


def recorded_config(cfg: RunConfig) -> dict:
    """Config as written to manifests; the output location is not part of the run."""
    d = cfg.to_dict()
    del d["out_dir"]
    return d


def load_config(path) -> RunConfig:
    """Read a config JSON, or the ``config`` block of a previous run manifest."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict) and data.get("kind") == MANIFEST_KIND:
        data = data["config"]
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return RunConfig.from_dict(data)


# --- simulate ----------------------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> Path:
    spec = SyntheticSpec(seed=cfg.master_seed, steps=cfg.steps, dt=cfg.dt, wind_scale=cfg.wind_scale,
                         wind_floor=cfg.wind_floor, constrained=cfg.constrained)
    mask = io.read_mask_csv(cfg.mask) if cfg.mask else None
    if mask is not None and mask.grid != cfg.grid:
        raise ValueError(f"mask grid {mask.grid} does not match run grid {cfg.grid}")
    ds = synthetic_dataset(spec, cfg.grid, mask)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_fields(ds.phis, out, "phi")
    contours = [extract_zero_contour(p, t=k) for k, p in enumerate(ds.phis, start=1)]
    io.write_boundaries(contours, out / "boundaries.geojson")
    io.write_velocity_sequence(ds.velocities, out / "velocity")
    if ds.mask is not None:
        io.write_mask_csv(ds.mask, out / "mask.csv")
    io.write_json({"kind": "simulate_manifest", "config": recorded_config(cfg),
                   "n_fields": len(ds.phis)}, out / "simulate_manifest.json")
    log.info("simulate: wrote %d fields to %s", len(ds.phis), out)
    return out


# --- forecast ----------------------------------------------------------------

def load_observations(path, grid: GridSpec) -> list[ScalarField]:
    """Signed distance fields from a phi directory, a single CSV, or boundary GeoJSON."""
    p = Path(path)
    if p.is_dir():
        phis = io.read_fields(p, "phi")
    elif p.suffix.lower() in (".geojson", ".json"):
        phis = [build_sdf(b, grid) for b in io.load_boundaries(p)]
    else:
        phis = [io.read_field_csv(p)]
    require_same_grid(*phis)
    return phis


def _holdout(cfg: RunConfig, n_obs: int) -> int:
    h = n_obs if cfg.holdout_index is None else int(cfg.holdout_index)
    if not 1 <= h <= n_obs + 1:
        raise ValueError(f"holdout_index {h} outside 1..{n_obs + 1}")
    if h - 1 < 3:
        raise ValueError(f"forecasting observation {h} leaves {h - 1} training observations, need at least 3")
    return h


def cmd_forecast(cfg: RunConfig) -> Path:
    if cfg.input is None:
        raise ValueError("forecast needs an input (boundary GeoJSON or phi directory)")
    phis = load_observations(cfg.input, cfg.grid)
    h = _holdout(cfg, len(phis))
    train = phis[: h - 1]
    log.info("forecast: %d members on %d observations, forecasting index %d",
             cfg.priors.n_ensemble, len(train), h)
    ens = run_ensemble(train, cfg.priors, cfg.alpha_sig, cfg.master_seed, workers=cfg.workers)

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("median", "lower", "upper"):
        field_ = getattr(ens, name)
        io.write_field_csv(field_, out / f"{name}.csv")
        io.write_boundaries([extract_zero_contour(field_, t=h)], out / f"{name}.geojson")
    manifest = {
        "kind": MANIFEST_KIND,
        "config": recorded_config(cfg),
        "holdout_index": h,
        "n_observations": len(phis),
        "n_train": len(train),
        "n_training_pairs": n_training_pairs(len(train)),
        "n_ensemble": cfg.priors.n_ensemble,
        "alpha_sig": cfg.alpha_sig,
        "master_seed": cfg.master_seed,
        "members": [dict(k=k, seed=s, **hp.to_dict())
                    for k, (s, hp) in enumerate(zip(ens.seeds, ens.hyperparams))],
    }
    io.write_json(manifest, out / "run_manifest.json")
    return out


# --- score -------------------------------------------------------------------

def _truth_field(cfg: RunConfig, grid: GridSpec, h: Optional[int]) -> ScalarField:
    src = cfg.truth or cfg.input
    if src is None:
        raise ValueError("score needs a truth field (truth or input)")
    p = Path(src)
    if p.suffix.lower() == ".csv" and p.is_file():
        return io.read_field_csv(p)
    obs = load_observations(p, grid)
    if h is None:
        h = len(obs)
    if not 1 <= h <= len(obs):
        raise ValueError(f"truth source has {len(obs)} observations, cannot pick index {h}")
    return obs[h - 1]


def cmd_score(cfg: RunConfig) -> ScoreReport:
    fdir = Path(cfg.forecast_dir or cfg.out_dir)
    median = io.read_field_csv(fdir / "median.csv")
    lower = io.read_field_csv(fdir / "lower.csv")
    upper = io.read_field_csv(fdir / "upper.csv")
    h = cfg.holdout_index
    alpha = cfg.alpha_sig
    manifest_path = fdir / "run_manifest.json"
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
        h = manifest.get("holdout_index", h)
        alpha = manifest.get("alpha_sig", alpha)
    truth = _truth_field(cfg, median.grid, h)
    require_same_grid(median, lower, upper, truth)
    report = score_forecast(median, lower, upper, truth, alpha)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_json(report.to_dict(), out / "score.json")
    return report


# --- utilities ---------------------------------------------------------------

def cmd_sdf(cfg: RunConfig) -> Path:
    """Boundary GeoJSON to one signed distance CSV per observation."""
    if cfg.input is None:
        raise ValueError("sdf needs an input boundary GeoJSON")
    boundaries = io.load_boundaries(cfg.input)
    io.write_fields([build_sdf(b, cfg.grid) for b in boundaries], cfg.out_dir, "phi")
    return Path(cfg.out_dir)


def cmd_contour(cfg: RunConfig) -> Path:
    """Signed distance CSV(s) to zero-contour GeoJSON."""
    if cfg.input is None:
        raise ValueError("contour needs an input CSV or phi directory")
    p = Path(cfg.input)
    fields_ = io.read_fields(p, "phi") if p.is_dir() else [io.read_field_csv(p)]
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_boundaries([extract_zero_contour(f, t=k) for k, f in enumerate(fields_, start=1)],
                        out / "contours.geojson")
    return out
