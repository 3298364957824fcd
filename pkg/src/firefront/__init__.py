"""Level-set wildfire front forecasting with an ensemble of echo state networks."""

from .grid import (Boundary, GridSpec, Polygon, ScalarField, build_sdf, distance_to_boundary,
                   extract_zero_contour, gradient_norm_field)
from .levelset import (ConstraintMask, VelocitySequence, apply_constraints, euler_step,
                       simulate_sequence, synth_velocity_from_wind)
from .esn import HyperParams, Reservoir, ReadOut, fit_readout, member_forecast, sample_reservoir
from .ensemble import EnsembleForecast, HyperPriors, hdi_interval, run_ensemble, sample_hyperparams
from .scoring import ScoreReport, interval_score_point, interval_score_region, threat_score

__version__ = "0.1.0"

__all__ = [
    "Boundary", "GridSpec", "Polygon", "ScalarField", "build_sdf", "distance_to_boundary",
    "extract_zero_contour", "gradient_norm_field",
    "ConstraintMask", "VelocitySequence", "apply_constraints", "euler_step", "simulate_sequence",
    "synth_velocity_from_wind",
    "HyperParams", "Reservoir", "ReadOut", "fit_readout", "member_forecast", "sample_reservoir",
    "EnsembleForecast", "HyperPriors", "hdi_interval", "run_ensemble", "sample_hyperparams",
    "ScoreReport", "interval_score_point", "interval_score_region", "threat_score",
]
