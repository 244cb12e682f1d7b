import os
import shutil
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from config import (ExperimentConfig, apply_overrides, expand_user_config, experiment_from_dict, load_experiment,
                    read_config)
from gridlearn import experiment
from gridlearn.errors import ConfigError

ROOT = Path(__file__).resolve().parents[1]


def shipped_config(tmp_path):
    raw = read_config(ROOT / "config.yaml")
    raw["output_dir"] = str(tmp_path / "out")
    raw.pop("logs_dir")
    return experiment_from_dict(raw, base=ROOT)


def test_shipped_defaults(tmp_path):
    cfg = shipped_config(tmp_path)
    assert cfg.network == str(ROOT / "networks" / "ring20.yaml")
    assert cfg.t_span == (0.0, 3.0)
    assert cfg.dt == 1e-3
    assert cfg.tol == 1.5e-4
    assert cfg.mu == 1e-3
    assert cfg.r is None
    assert cfg.derivative_mode == "forward-difference"
    assert cfg.initial_condition.kind == "random" and cfg.initial_condition.magnitude == 0.1
    assert (tmp_path / "out").is_dir()


def test_generator_network(small_config):
    cfg = experiment_from_dict(small_config)
    assert cfg.network == {"generator": "ring", "n": 4, "seed": 1}
    assert cfg.t_span == (0.0, 1.0)


def test_relative_paths_resolve_against_base(tmp_path):
    cfg = experiment_from_dict({"network": {"generator": "complete", "n": 3}, "output_dir": "out"}, base=tmp_path)
    assert cfg.output_dir == str(tmp_path / "out")


@pytest.mark.parametrize("field, value", [
    ("t_span", [1.0, 0.5]),
    ("t_span", [0.0]),
    ("dt", 0.0),
    ("dt", 5.0),
    ("tol", 1.0),
    ("tol", "small"),
    ("r", 0),
    ("mu", -1e-3),
    ("mu_sweep", [0.0, -1.0]),
    ("derivative_mode", "backward"),
    ("initial_condition", {"kind": "sideways"}),
    ("initial_condition", {"kind": "explicit"}),
    ("input", {"kind": "step"}),
    ("network", {"generator": "star", "n": 4}),
    ("network", "does/not/exist.yaml"),
])
def test_invalid_values(small_config, field, value):
    small_config[field] = value
    with pytest.raises(ConfigError):
        experiment_from_dict(small_config)


def test_unknown_field(small_config):
    small_config["learning_rate"] = 0.1
    with pytest.raises(ConfigError, match="learning_rate"):
        experiment_from_dict(small_config)


def test_overrides(small_config, tmp_path):
    cfg = experiment_from_dict(small_config)
    out = apply_overrides(cfg, {"dt": 5e-4, "mu": 0.0, "r": 4, "t_end": 2.0, "ic_magnitude": 0.2,
                                "derivative_mode": "central-difference", "output_dir": str(tmp_path / "o2"),
                                "tol": None})
    assert out.dt == 5e-4 and out.mu == 0.0 and out.r == 4
    assert out.t_span == (0.0, 2.0)
    assert out.initial_condition.magnitude == 0.2
    assert out.derivative_mode == "central-difference"
    assert out.tol == cfg.tol
    assert apply_overrides(cfg, None) is cfg


def test_override_is_validated(small_config):
    cfg = experiment_from_dict(small_config)
    with pytest.raises(ConfigError):
        apply_overrides(cfg, {"t_start": 5.0})


def test_load_experiment_from_file(tmp_path, small_config):
    path = tmp_path / "exp.yaml"
    small_config["output_dir"] = "results"
    path.write_text(yaml.safe_dump(small_config))
    cfg = load_experiment(path, {"seed": 3})
    assert cfg.output_dir == str(tmp_path / "results")
    assert cfg.seed == 3


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_experiment(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("t_span: [0, 1\n")
    with pytest.raises(ConfigError):
        read_config(bad)
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        read_config(listing)


def test_expand_user_config(monkeypatch, tmp_path):
    monkeypatch.setenv("HOME", str(tmp_path))
    path = expand_user_config({"results_dir": "~/runs", "experiments": ["~/a.yaml"], "n": 3})
    data = yaml.safe_load(Path(path).read_text())
    assert data == {"results_dir": str(tmp_path / "runs"), "experiments": [str(tmp_path / "a.yaml")], "n": 3}
    Path(path).unlink()


def test_to_dict_is_yaml_friendly(small_config):
    cfg = experiment_from_dict(small_config)
    text = yaml.safe_dump(cfg.to_dict())
    assert yaml.safe_load(text)["t_span"] == [0.0, 1.0]
    assert set(cfg.to_dict()) == set(ExperimentConfig().to_dict())


def test_config_types_live_in_the_package():
    assert ExperimentConfig is experiment.ExperimentConfig


def test_library_imports_without_the_config_script(tmp_path):
    shutil.copytree(ROOT / "gridlearn", tmp_path / "gridlearn", ignore=shutil.ignore_patterns("__pycache__"))
    proc = subprocess.run([sys.executable, "-c", "import gridlearn.pipeline, gridlearn.oracles"],
                          cwd=tmp_path, capture_output=True, text=True,
                          env={**os.environ, "PYTHONPATH": str(tmp_path)})
    assert proc.returncode == 0, proc.stderr
