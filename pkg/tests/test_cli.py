import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from firefront import io
from firefront.cli import main
from firefront.grid import build_sdf
from firefront.levelset import SYNTHETIC_GRID, ConstraintMask

SCORE_SCHEMA = {
    "type": "object",
    "required": ["ts", "is_mean", "a11", "a10", "a01", "n_eval", "alpha"],
    "additionalProperties": False,
    "properties": {
        "ts": {"type": "number", "minimum": 0, "maximum": 1},
        "is_mean": {"type": "number", "minimum": 0},
        "a11": {"type": "integer", "minimum": 0},
        "a10": {"type": "integer", "minimum": 0},
        "a01": {"type": "integer", "minimum": 0},
        "n_eval": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    },
}


def run(*args):
    return main([str(a) for a in args])


def tree_bytes(d: Path) -> dict:
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def sim(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert run("simulate", "--out", out, "--seed", 42) == 0
    return out


@pytest.fixture(scope="module")
def forecast(sim, tmp_path_factory):
    out = tmp_path_factory.mktemp("fc")
    assert run("forecast", "--input", sim, "--out", out, "--ensembles", 20, "--holdout", 20) == 0
    return out


class TestSimulate:
    def test_outputs(self, sim):
        assert len(list(sim.glob("phi_*.csv"))) == 21
        assert len(io.load_boundaries(sim / "boundaries.geojson")) == 21
        assert len(list((sim / "velocity").glob("vel_*.csv"))) == 20
        assert not (sim / "mask.csv").exists()

    def test_byte_identical(self, sim, tmp_path):
        assert run("simulate", "--out", tmp_path, "--seed", 42) == 0
        assert tree_bytes(tmp_path) == tree_bytes(sim)

    def test_wall_holds(self, tmp_path):
        assert run("simulate", "--out", tmp_path, "--constrained") == 0
        mask = io.read_mask_csv(tmp_path / "mask.csv")
        assert mask.blocked.any()
        for phi in io.read_fields(tmp_path):
            assert np.all(phi.values[mask.blocked] > 0)
        # no contour vertex ever reaches the far side of the wall's centre line
        a, b = np.array([124.0, 31.0]), np.array([138.0, 17.0])
        ab = b - a
        for boundary in io.load_boundaries(tmp_path / "boundaries.geojson"):
            for ring in boundary.rings():
                rel = ring - a
                side = ab[0] * rel[:, 1] - ab[1] * rel[:, 0]
                s = rel @ ab / (ab @ ab)
                assert not np.any((side > 0) & (s >= 0) & (s <= 1))


class TestForecast:
    def test_contract(self, forecast):
        for name in ("median", "lower", "upper"):
            assert (forecast / f"{name}.csv").is_file()
            assert (forecast / f"{name}.geojson").is_file()
        m = json.loads((forecast / "run_manifest.json").read_text())
        assert m["holdout_index"] == 20 and m["n_train"] == 19 and m["n_training_pairs"] == 17
        assert m["n_ensemble"] == 20 and len(m["members"]) == 20
        assert set(m["members"][0]) >= {"k", "seed", "J", "nu", "alpha_leak", "tau_ridge", "a_w", "a_u"}

    def test_manifest_replay(self, sim, forecast, tmp_path):
        assert run("forecast", "--config", forecast / "run_manifest.json", "--out", tmp_path) == 0
        for name in ("median.csv", "lower.csv", "upper.csv", "median.geojson", "lower.geojson",
                     "upper.geojson"):
            assert (tmp_path / name).read_bytes() == (forecast / name).read_bytes()

    def test_geojson_input(self, sim, tmp_path):
        # boundaries are turned into signed distance fields on the configured grid
        assert run("forecast", "--input", sim / "boundaries.geojson", "--out", tmp_path, "--ensembles", 3) == 0
        m = json.loads((tmp_path / "run_manifest.json").read_text())
        assert m["n_observations"] == 21 and m["n_train"] == 20

    def test_too_few_observations(self, sim, tmp_path, capsys):
        assert run("forecast", "--input", sim, "--out", tmp_path, "--holdout", 3, "--ensembles", 2) == 1
        assert "training observations" in capsys.readouterr().err


class TestScore:
    def test_report(self, sim, forecast, tmp_path):
        assert run("score", "--forecast", forecast, "--input", sim, "--out", tmp_path) == 0
        report = json.loads((tmp_path / "score.json").read_text())
        jsonschema.validate(report, SCORE_SCHEMA)
        assert report["alpha"] == 0.05
        assert report["ts"] >= 0.9

    def test_truth_equal_median(self, forecast, tmp_path):
        assert run("score", "--forecast", forecast, "--truth", forecast / "median.csv", "--out", tmp_path) == 0
        assert json.loads((tmp_path / "score.json").read_text())["ts"] == 1.0


class TestUtilities:
    def test_sdf_and_contour(self, sim, tmp_path):
        assert run("sdf", "--input", sim / "boundaries.geojson", "--out", tmp_path / "sdf") == 0
        assert len(list((tmp_path / "sdf").glob("phi_*.csv"))) == 21
        assert run("contour", "--input", tmp_path / "sdf", "--out", tmp_path / "c") == 0
        assert len(io.load_boundaries(tmp_path / "c" / "contours.geojson")) == 21

    def test_sdf_matches_library(self, sim, tmp_path):
        assert run("sdf", "--input", sim / "boundaries.geojson", "--out", tmp_path) == 0
        b = io.load_boundaries(sim / "boundaries.geojson")[4]
        phi = io.read_field_csv(tmp_path / "phi_0005.csv")
        assert np.array_equal(phi.values, build_sdf(b, phi.grid).values)


class TestExitCodes:
    def test_missing_input_is_io_error(self, tmp_path, capsys):
        assert run("forecast", "--input", tmp_path / "nope", "--out", tmp_path) == 2
        assert "firefront" in capsys.readouterr().err

    def test_bad_alpha_is_validation_error(self, sim, tmp_path):
        assert run("forecast", "--input", sim, "--out", tmp_path, "--alpha", 1.5) == 1

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"master_seed": 1, "colour": "red"}))
        assert run("simulate", "--config", cfg, "--out", tmp_path) == 1

    def test_missing_config_file(self, tmp_path):
        assert run("simulate", "--config", tmp_path / "none.json", "--out", tmp_path) == 2

    def test_forecast_needs_input(self, tmp_path):
        assert run("forecast", "--out", tmp_path) == 1


def test_simulate_with_mask_file(tmp_path):
    x, y = SYNTHETIC_GRID.coords().T
    io.write_mask_csv(ConstraintMask(SYNTHETIC_GRID, x >= 130), tmp_path / "m.csv")
    assert run("simulate", "--out", tmp_path / "s", "--mask", tmp_path / "m.csv") == 0
    blocked = x >= 130
    for phi in io.read_fields(tmp_path / "s"):
        assert np.all(phi.values[blocked] > 0)
