from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from config import InitialCondition, experiment_from_dict
from gridlearn import pipeline, storage
from gridlearn.errors import EXIT_CONFIG, StageError

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def cfg(small_config):
    return experiment_from_dict(small_config)


def test_learn_writes_artifacts(cfg):
    res = pipeline.run_pipeline(cfg)
    out = Path(cfg.output_dir)
    for name in ("config.resolved.yaml", "spectrum.csv", "basis.h5", "snapshots.h5", "model.yaml",
                 "rom_trajectory.csv", "rom_reconstruction.csv", "error_report.csv", "summary.json", "timing.json"):
        assert (out / name).is_file(), name

    summary = storage.load_summary(out / "summary.json")
    assert summary["num_samples"] == 1001
    assert summary["n"] == 4 and summary["lifted_dim"] == 16
    assert summary["r"] == res.model.r == res.basis.r
    assert 1 <= summary["rank"] <= summary["num_unknowns"]
    assert summary["num_unknowns"] == res.model.r + res.model.r * (res.model.r + 1) // 2 + 1
    assert np.isfinite(summary["max_rel_error"])
    assert summary["horizon"] == [0.0, 1.0]
    assert summary["basis_id"] == res.basis.identifier
    assert "wall_time_s" in storage.load_summary(out / "timing.json")

    report = pd.read_csv(out / "error_report.csv")
    assert len(report) == 1001
    assert report["e"].max() == pytest.approx(res.report.max_rel_error)
    assert storage.load_model(out / "model.yaml").basis_id == res.basis.identifier


def test_runs_are_byte_identical(small_config, tmp_path):
    outputs = []
    for k in range(2):
        small_config["output_dir"] = str(tmp_path / f"run{k}")
        pipeline.run_pipeline(experiment_from_dict(small_config))
        outputs.append(Path(small_config["output_dir"]))
    for name in ("summary.json", "model.yaml", "error_report.csv", "spectrum.csv"):
        assert (outputs[0] / name).read_bytes() == (outputs[1] / name).read_bytes(), name


def test_write_false_leaves_no_artifacts(cfg):
    pipeline.run_pipeline(cfg, write=False)
    assert not any(Path(cfg.output_dir).iterdir())


def test_bad_initial_condition_names_the_stage(small_config):
    small_config["initial_condition"] = {"kind": "explicit", "angles": [0.1, 0.2]}
    with pytest.raises(StageError) as exc:
        pipeline.run_pipeline(experiment_from_dict(small_config))
    assert exc.value.stage == "simulate"
    assert exc.value.exit_code == EXIT_CONFIG


@pytest.mark.parametrize("mode", ["central-difference", "exact-rhs"])
def test_derivative_modes(small_config, mode):
    small_config["derivative_mode"] = mode
    res = pipeline.run_pipeline(experiment_from_dict(small_config), write=False)
    assert res.summary["derivative_mode"] == mode
    assert np.isfinite(res.report.max_rel_error)


def test_exact_rhs_derivatives_are_lifted_chain_rule(small_config):
    small_config["derivative_mode"] = "exact-rhs"
    data = pipeline.prepare_training_data(experiment_from_dict(small_config))
    fd = np.diff(data.lifted.states, axis=1) / data.snapshots.dt
    mid = 0.5 * (data.lifted.derivatives[:, 1:] + data.lifted.derivatives[:, :-1])
    assert np.max(np.abs(fd - mid)) < 1e-4


def test_fixed_reduced_dimension(small_config):
    small_config["r"] = 3
    res = pipeline.run_pipeline(experiment_from_dict(small_config), write=False)
    assert res.model.r == 3
    assert res.summary["num_unknowns"] == 3 + 6 + 1


def test_heldout_evaluation(small_config):
    small_config["eval_initial_condition"] = {"kind": "random", "magnitude": 0.05}
    res = pipeline.run_pipeline(experiment_from_dict(small_config))
    assert res.heldout is not None
    assert res.summary["heldout_max_rel_error"] == res.heldout.max_rel_error
    assert (Path(small_config["output_dir"]) / "heldout_error_report.csv").is_file()


def test_initial_states():
    ic = InitialCondition(kind="random", magnitude=0.2)
    a = pipeline.initial_state(ic, 5, seed=0)
    assert np.all(np.abs(a.angles) <= 0.2) and np.all(a.velocities == 0)
    assert np.array_equal(a.angles, pipeline.initial_state(ic, 5, seed=0).angles)
    assert not np.array_equal(a.angles, pipeline.initial_state(ic, 5, seed=1).angles)
    assert np.all(pipeline.initial_state(InitialCondition(kind="zero"), 3, 0).stacked() == 0)
    explicit = pipeline.initial_state(InitialCondition(kind="explicit", angles=(0.1, 0.2), velocities=(0.0, 1.0)), 2, 0)
    assert explicit.velocities.tolist() == [0.0, 1.0]


def test_intrusive_reduction(cfg):
    res = pipeline.run_intrusive(cfg)
    out = Path(cfg.output_dir)
    assert res.model.source == "intrusive"
    for name in ("lifted/H_triplets.csv", "model_intrusive.yaml", "error_report_intrusive.csv",
                 "summary_intrusive.json", "timing_intrusive.json"):
        assert (out / name).is_file(), name
    assert np.isfinite(res.report.max_rel_error)


def test_simulation_only(cfg):
    snap = pipeline.run_simulation(cfg)
    out = Path(cfg.output_dir)
    assert snap.num_samples == 1001 and snap.dim == 8
    back = storage.load_snapshots_csv(out / "snapshots.csv")
    assert np.array_equal(back.states, snap.states)
    assert (out / "lifted" / "A.csv").is_file()


def test_evaluate_saved_model(cfg):
    res = pipeline.run_pipeline(cfg)
    out = Path(cfg.output_dir)
    same = pipeline.evaluate_saved_model(cfg, out / "model.yaml", out / "basis.h5")
    assert same.max_rel_error == pytest.approx(res.report.max_rel_error, rel=1e-12)
    assert storage.load_summary(out / "evaluation.json")["r"] == res.model.r

    other = pipeline.evaluate_saved_model(cfg, out / "model.yaml", out / "basis.h5",
                                          ic=InitialCondition(kind="random", magnitude=0.05), write=False)
    assert np.isfinite(other.max_rel_error)


def test_evaluate_missing_model(cfg):
    with pytest.raises(StageError) as exc:
        pipeline.evaluate_saved_model(cfg, Path(cfg.output_dir) / "nope.yaml", Path(cfg.output_dir) / "nope.h5")
    assert exc.value.stage == "load"


def test_mu_sweep(cfg):
    frame = pipeline.sweep_mu(cfg, [0.0, 1e-3, 1.0])
    assert frame["mu"].tolist() == [0.0, 1e-3, 1.0]
    assert {"rank", "num_unknowns", "solution_norm", "max_rel_error", "diverged_at"} <= set(frame.columns)
    norms = frame["solution_norm"].to_numpy()
    assert np.all(np.diff(norms) <= 1e-10 * norms[0])
    assert (Path(cfg.output_dir) / "mu_sweep.csv").is_file()


@pytest.mark.slow
def test_shipped_network_default_run(tmp_path):
    raw = {"network": str(ROOT / "networks" / "ring20.yaml"), "output_dir": str(tmp_path / "ring20")}
    res = pipeline.run_pipeline(experiment_from_dict(raw))
    assert res.summary["num_samples"] == 3001
    assert res.summary["lifted_dim"] == 80
    assert res.report.max_rel_error < 0.01
    assert res.summary["rank"] <= res.summary["num_unknowns"]
