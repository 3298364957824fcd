"""Threat score of a point forecast and interval score of forecast bands.

A cell counts as burned when its signed distance is ``<= 0``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .grid import ScalarField, require_same_grid


@dataclass
class ScoreReport:
    ts: float
    is_mean: Optional[float]
    a11: int
    a10: int
    a01: int
    n_eval: int = 0
    alpha: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def threat_score(forecast: ScalarField, truth: ScalarField) -> ScoreReport:
    require_same_grid(forecast, truth)
    f = forecast.values <= 0.0
    t = truth.values <= 0.0
    a11 = int(np.count_nonzero(f & t))
    a10 = int(np.count_nonzero(f & ~t))
    a01 = int(np.count_nonzero(~f & t))
    denom = a11 + a10 + a01
    if denom == 0:
        raise ValueError("no events to score")
    return ScoreReport(ts=a11 / denom, is_mean=None, a11=a11, a10=a10, a01=a01)


def interval_score_point(lower: float, upper: float, truth: float, alpha_sig: float) -> float:
    if lower > upper:
        raise ValueError(f"lower bound {lower} exceeds upper bound {upper}")
    if not 0 < alpha_sig < 1:
        raise ValueError("alpha_sig must lie in (0, 1)")
    score = upper - lower
    if truth < lower:
        score += 2.0 / alpha_sig * (lower - truth)
    elif truth > upper:
        score += 2.0 / alpha_sig * (truth - upper)
    return score


def interval_scores(lower: np.ndarray, upper: np.ndarray, truth: np.ndarray, alpha_sig: float) -> np.ndarray:
    """Vectorised :func:`interval_score_point`."""
    if np.any(lower > upper):
        raise ValueError("lower bound exceeds upper bound")
    if not 0 < alpha_sig < 1:
        raise ValueError("alpha_sig must lie in (0, 1)")
    k = 2.0 / alpha_sig
    return ((upper - lower)
            + k * np.where(truth < lower, lower - truth, 0.0)
            + k * np.where(truth > upper, truth - upper, 0.0))


def interval_score_region(lower: ScalarField, upper: ScalarField, truth: ScalarField,
                          alpha_sig: float) -> float:
    """Mean interval score over the cells burned in ``truth``."""
    require_same_grid(lower, upper, truth)
    burned = truth.values <= 0.0
    if not np.any(burned):
        raise ValueError("truth has no burned cell to evaluate the interval score on")
    s = interval_scores(lower.values[burned], upper.values[burned], truth.values[burned], alpha_sig)
    return float(np.mean(s))


def score_forecast(median: ScalarField, lower: ScalarField, upper: ScalarField,
                   truth: ScalarField, alpha_sig: float) -> ScoreReport:
    report = threat_score(median, truth)
    report.is_mean = interval_score_region(lower, upper, truth, alpha_sig)
    report.n_eval = int(np.count_nonzero(truth.values <= 0.0))
    report.alpha = alpha_sig
    return report
