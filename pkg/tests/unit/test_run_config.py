"""Unit tests for run configuration parsing and the configuration manager."""
import json

import pytest

from src.models.run_config import ConfigError, RunConfig
from src.utils.config_manager import ConfigManager

EXPLICIT = {
    "mode": "real-grid",
    "problem": {"t0": 0.0, "y0": [1.0], "a": 0.5, "b": 1.0, "rhs": ["y1"], "L": 1.0, "M": 2.0,
                "name": "linear"},
    "solver": {"n_max": 5, "N": 256},
    "output": {"csv": "out.csv"}
}


def _with_problem(**changes):
    data = json.loads(json.dumps(EXPLICIT))
    data["problem"].update(changes)
    return data


def test_explicit_problem_round_trip():
    config = RunConfig.from_dict(EXPLICIT)

    assert config.mode == "real-grid"
    assert config.problem.dimension == 1
    assert config.solver.n_max == 5
    assert config.solver.K_max == 64
    assert RunConfig.from_dict(config.to_dict()).to_dict() == config.to_dict()


def test_registry_problem():
    config = RunConfig.from_dict({"problem": {"registry": "exp"}})
    assert config.problem.is_registry
    assert config.mode == "real-exact"
    assert config.to_dict()["problem"] == {"registry": "exp"}


@pytest.mark.parametrize("data, field_name", [
    (_with_problem(b=0.0), "problem.b"),
    (_with_problem(b=-1.0), "problem.b"),
    (_with_problem(a="wide"), "problem.a"),
    (_with_problem(c=1.0), "problem.c"),
    (_with_problem(rhs=["y1", "y2"]), "problem.rhs"),
    (_with_problem(y0=[]), "problem.y0"),
    ({"problem": {"registry": "exp", "a": 1.0}}, "problem.a"),
    ({"problem": {"y0": [1.0], "a": 1.0, "rhs": ["y1"]}}, "problem.b"),
    ({"problem": {"registry": "exp"}, "mode": "fast"}, "mode"),
    ({"problem": {"registry": "exp"}, "solver": {"n_max": -1}}, "solver.n_max"),
    ({"problem": {"registry": "exp"}, "solver": {"compare_rates": "yes"}}, "solver.compare_rates"),
    ({"problem": {"registry": "exp"}, "extra": 1}, "config.extra"),
    ({"mode": "complex", "problem": {"y0": [[1.0, 0.0]], "a": 1.0, "b": 1.0, "rhs": ["y1"]}}, "problem.L"),
    ({"problem": {"y0": [[1.0, 0.0]], "a": 1.0, "b": 1.0, "rhs": ["y1"]}}, "problem.y0"),
])
def test_invalid_fields_are_named(data, field_name):
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.from_dict(data)
    assert excinfo.value.field == field_name
    assert str(excinfo.value).startswith(field_name)


def test_load_from_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.load_from_file(tmp_path / "missing.json")

    broken = tmp_path / "broken.json"
    broken.write_text("{ not json", encoding="utf-8")
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.load_from_file(broken)
    assert excinfo.value.field == "config"


def test_manager_overrides(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(EXPLICIT), encoding="utf-8")
    manager = ConfigManager(tmp_path / "state")
    manager.load_run_config(path)

    manager.update_run_config(mode="real-exact", n_max=3, csv=None, json="report.json")
    config = manager.get_run_config()
    assert config.mode == "real-exact"
    assert config.solver.n_max == 3
    assert config.output.csv == "out.csv"
    assert config.output.json == "report.json"

    with pytest.raises(ConfigError):
        manager.update_run_config(mode="fast")


def test_manager_requires_a_loaded_config(tmp_path):
    with pytest.raises(ConfigError):
        ConfigManager(tmp_path).update_run_config(n_max=2)


def test_last_run_persistence(tmp_path):
    manager = ConfigManager(tmp_path)
    assert manager.load_last_run() is None

    config = RunConfig.from_dict(EXPLICIT)
    manager.save_last_run(config)
    restored = ConfigManager(tmp_path).load_last_run()
    assert restored.to_dict() == config.to_dict()

    manager.last_run_path.write_text("[]", encoding="utf-8")
    assert manager.load_last_run() is None
