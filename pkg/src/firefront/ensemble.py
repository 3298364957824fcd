"""Random-search ensemble of ESN members, median forecast and shortest intervals."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .esn import HyperParams, member_forecast, sample_reservoir
from .grid import ScalarField, require_same_grid

log = logging.getLogger(__name__)


def _linspace(lo: float, hi: float, n: int) -> tuple:
    return tuple(float(v) for v in np.linspace(lo, hi, n))


@dataclass(frozen=True)
class HyperPriors:
    """Discrete uniform priors of the random search.

    Defaults: a in {0.1, 0.5, 1}, 20 leak rates from 0.01 to 1, nu in
    {0.1, ..., 0.9}, 10 ridge penalties from 0.001 to 10, J in {50, ..., 100},
    fixed densities pi_w = 0.3 and pi_u = 0.5.
    """

    a_set: tuple = (0.1, 0.5, 1.0)
    alpha_set: tuple = _linspace(0.01, 1.0, 20)
    nu_set: tuple = tuple(round(0.1 * k, 1) for k in range(1, 10))
    tau_set: tuple = _linspace(0.001, 10.0, 10)
    J_set: tuple = tuple(range(50, 101))
    pi_w: float = 0.3
    pi_u: float = 0.5
    n_ensemble: int = 3000
    dt: float = 0.1

    def __post_init__(self):
        for name in ("a_set", "alpha_set", "nu_set", "tau_set", "J_set"):
            values = tuple(getattr(self, name))
            if not values:
                raise ValueError(f"prior set {name} is empty")
            object.__setattr__(self, name, values)
        if self.n_ensemble < 1:
            raise ValueError("n_ensemble must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "HyperPriors":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown prior keys: {sorted(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


def member_seed(master_seed: int, k: int) -> int:
    """64-bit seed of member ``k``, mixed from ``(master_seed, k)`` by numpy's SeedSequence hash."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(k),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sample_hyperparams(priors: HyperPriors, seed: int) -> HyperParams:
    """Independent uniform draws from each prior set."""
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(0,)))

    def pick(values):
        return values[int(rng.integers(len(values)))]

    return HyperParams(
        a_w=float(pick(priors.a_set)),
        a_u=float(pick(priors.a_set)),
        pi_w=priors.pi_w,
        pi_u=priors.pi_u,
        J=int(pick(priors.J_set)),
        nu=float(pick(priors.nu_set)),
        alpha_leak=float(pick(priors.alpha_set)),
        tau_ridge=float(pick(priors.tau_set)),
        dt=priors.dt,
    )


def window_size(n: int, alpha_sig: float) -> int:
    """Smallest member count covering at least ``1 - alpha`` of ``n``."""
    # the tolerance absorbs representation error in (1 - alpha) * n
    return max(1, min(n, math.ceil((1.0 - alpha_sig) * n - 1e-9)))


def hdi_interval(samples, alpha_sig: float) -> tuple[float, float]:
    """Shortest interval holding ``ceil((1 - alpha) n)`` samples; ties go to the smallest lower bound."""
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    if x.size == 0:
        raise ValueError("hdi_interval needs at least one sample")
    if not 0 < alpha_sig < 1:
        raise ValueError("alpha_sig must lie in (0, 1)")
    m = window_size(x.size, alpha_sig)
    widths = x[m - 1:] - x[: x.size - m + 1]
    i = int(np.argmin(widths))
    return float(x[i]), float(x[i + m - 1])


def hdi_bounds(members: np.ndarray, alpha_sig: float) -> tuple[np.ndarray, np.ndarray]:
    """Column-wise :func:`hdi_interval` for an ``(n_members, N)`` array."""
    if not 0 < alpha_sig < 1:
        raise ValueError("alpha_sig must lie in (0, 1)")
    x = np.sort(members, axis=0)
    n = x.shape[0]
    m = window_size(n, alpha_sig)
    widths = x[m - 1:] - x[: n - m + 1]
    i = np.argmin(widths, axis=0)
    cols = np.arange(x.shape[1])
    return x[i, cols], x[i + m - 1, cols]


@dataclass(eq=False)
class EnsembleForecast:
    members: np.ndarray  # n_ensemble x N
    median: ScalarField
    lower: ScalarField
    upper: ScalarField
    alpha_sig: float
    hyperparams: list = field(default_factory=list)
    seeds: list = field(default_factory=list)


def summarize(members: np.ndarray, grid, alpha_sig: float, **extra) -> EnsembleForecast:
    members = np.asarray(members, dtype=float)
    median = np.median(members, axis=0)
    lo, hi = hdi_bounds(members, alpha_sig)
    return EnsembleForecast(members, ScalarField(grid, median), ScalarField(grid, lo),
                            ScalarField(grid, hi), alpha_sig, **extra)


class MemberError(RuntimeError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"ensemble member {index} failed: {cause}")
        self.index = index


def _run_member(args):
    k, seed, priors, phis = args
    try:
        hp = sample_hyperparams(priors, seed)
        res = sample_reservoir(hp, 2 * phis[0].grid.size, seed)
        return hp, member_forecast(res, phis).values
    except Exception as exc:  # re-raised with the member index
        raise MemberError(k, exc) from exc


def run_ensemble(phis: Sequence[ScalarField], priors: HyperPriors, alpha_sig: float,
                 master_seed: int, workers: Optional[int] = None) -> EnsembleForecast:
    """Fit ``priors.n_ensemble`` members on ``phis`` and summarise their one-step forecasts.

    Member ``k`` depends only on ``(master_seed, k)``, so the result does not
    depend on ``workers``. A failing member aborts the whole run.
    """
    if len(phis) < 3:
        raise ValueError(f"need at least 3 observations, got {len(phis)}")
    if not 0 < alpha_sig < 1:
        raise ValueError("alpha_sig must lie in (0, 1)")
    grid = require_same_grid(*phis)
    phis = list(phis)
    n = priors.n_ensemble
    seeds = [member_seed(master_seed, k) for k in range(n)]
    jobs = [(k, seeds[k], priors, phis) for k in range(n)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_member, jobs, chunksize=max(1, n // (4 * workers))))
    else:
        results = []
        for job in jobs:
            results.append(_run_member(job))
            if len(results) % 500 == 0:
                log.info("ensemble: %d/%d members", len(results), n)
    members = np.vstack([r[1] for r in results])
    return summarize(members, grid, alpha_sig, hyperparams=[r[0] for r in results], seeds=seeds)
