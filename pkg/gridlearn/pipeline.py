"""
Experiment driver: simulate -> lift -> POD -> project -> infer -> simulate ROM -> evaluate.

Every stage runs inside `_stage`, so any failure surfaces as a StageError naming
the stage and keeping the exit code of the underlying error.
"""
from __future__ import annotations

import contextlib
import logging
import time
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence

import numpy as np
import pandas as pd
import yaml
from tqdm import tqdm

from gridlearn.experiment import ExperimentConfig, InitialCondition, InputConfig
from gridlearn import storage
from gridlearn.errors import (ConfigError, IntegrationDivergedError, RankDeficiencyWarning,
                              StageError)
from gridlearn.intrusive import galerkin_reduce
from gridlearn.lifting import LiftedOperators, assemble_lifted_operators, chain_rule_columns, lift_state, unlift
from gridlearn.network_file import load_network
from gridlearn.opinf import ReducedQuadraticModel, infer
from gridlearn.pod import PodBasis, compute_pod, project, reconstruct
from gridlearn.rom import ErrorReport, evaluate, simulate_rom
from gridlearn.simulate import (InputSignal, SnapshotSet, collect_swing_snapshots, constant_input,
                                derivative_snapshots, lift_snapshots, sinusoid_input)
from gridlearn.swing_model import SwingNetwork, SwingState
from gridlearn.synthetic import synthetic_network

logger = logging.getLogger(__name__)

SCHEMES = {"forward-difference": "forward", "central-difference": "central"}


@contextlib.contextmanager
def _stage(name: str) -> Iterator[None]:
    logger.info("stage %s", name)
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        logger.error("stage %s failed: %s", name, e)
        raise StageError(name, e) from e


# -- config -> objects --------------------------------------------------------

def build_network(cfg: ExperimentConfig) -> SwingNetwork:
    if isinstance(cfg.network, dict):
        spec = cfg.network
        return synthetic_network(spec["n"], topology=spec.get("generator", "ring"), seed=spec.get("seed", 0))
    return load_network(cfg.network)


def initial_state(ic: InitialCondition, n: int, seed: int) -> SwingState:
    if ic.kind == "zero":
        return SwingState(np.zeros(n), np.zeros(n))
    if ic.kind == "random":
        rng = np.random.default_rng(seed)
        return SwingState(ic.magnitude * rng.uniform(-1.0, 1.0, n), np.zeros(n))
    angles = np.asarray(ic.angles, dtype=float)
    velocities = np.zeros(n) if ic.velocities is None else np.asarray(ic.velocities, dtype=float)
    if angles.shape != (n,) or velocities.shape != (n,):
        raise ConfigError(f"initial_condition: explicit vectors must have length n={n}")
    return SwingState(angles, velocities)


def input_signal(inp: InputConfig) -> InputSignal:
    if inp.kind == "sinusoid":
        return sinusoid_input(inp.value, inp.amplitude, inp.frequency)
    return constant_input(inp.value)


def reduced_initial_state(basis: PodBasis, x0: SwingState) -> np.ndarray:
    """Phi_r^T lift(delta_0, ddelta_0)."""
    return project(basis, lift_state(x0.angles, x0.velocities).values)


# -- shared training data -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrainingData:
    net: SwingNetwork
    ops: LiftedOperators
    x0: SwingState
    signal: InputSignal
    snapshots: SnapshotSet
    lifted: SnapshotSet
    basis: PodBasis
    x_r: np.ndarray
    xdot_r: np.ndarray

    @property
    def c_r(self) -> np.ndarray:
        return self.ops.c @ self.basis.basis


def prepare_training_data(cfg: ExperimentConfig, progress: bool = False) -> TrainingData:
    with _stage("simulate"):
        net = build_network(cfg)
        x0 = initial_state(cfg.initial_condition, net.n, cfg.seed)
        signal = input_signal(cfg.input)
        snap = collect_swing_snapshots(net, x0, cfg.t_span, cfg.dt, input=signal, progress=progress)
        logger.info("full model: n=%d, S=%d samples on [%g, %g]", net.n, snap.num_samples, *snap.t_span)

    with _stage("lift"):
        ops = assemble_lifted_operators(net)
        if cfg.derivative_mode == "exact-rhs":
            lifted = replace(lift_snapshots(snap), derivatives=chain_rule_columns(net, snap.states, snap.inputs))
        else:
            lifted = derivative_snapshots(lift_snapshots(snap), SCHEMES[cfg.derivative_mode])

    with _stage("pod"):
        basis = compute_pod(lifted.states, cfg.tol, cfg.r)
        if basis.r < basis.singular_values.shape[0]:
            logger.info("retained r=%d of %d modes (sigma_r+1/sigma_1=%.3e)", basis.r,
                        basis.singular_values.shape[0], basis.singular_values[basis.r] / basis.singular_values[0])

    with _stage("project"):
        x_r = project(basis, lifted.states)
        xdot_r = project(basis, lifted.derivatives)

    return TrainingData(net, ops, x0, signal, snap, lifted, basis, x_r, xdot_r)


def _evaluate_outputs(y: np.ndarray, y_r: np.ndarray, times: np.ndarray) -> List[ErrorReport]:
    return [evaluate(y[k], y_r[k], times) for k in range(y.shape[0])]


# -- results ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PipelineResult:
    model: ReducedQuadraticModel
    basis: PodBasis
    report: ErrorReport
    summary: Dict[str, Any]
    output_dir: Path
    wall_time: float
    heldout: Optional[ErrorReport] = None


def _write_common(cfg: ExperimentConfig, data: TrainingData, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with (out / "config.resolved.yaml").open("w", encoding="utf-8") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, default_flow_style=False, sort_keys=False)
    storage.save_spectrum(data.basis, out / "spectrum.csv")
    storage.save_basis(data.basis, out / "basis.h5")
    storage.save_snapshots_h5(data.snapshots, out / "snapshots.h5")


def _write_reports(reports: List[ErrorReport], out: Path, stem: str) -> None:
    for k, rep in enumerate(reports):
        suffix = "" if len(reports) == 1 else f"_y{k}"
        storage.save_error_report(rep, out / f"{stem}{suffix}.csv")


def _heldout(cfg: ExperimentConfig, data: TrainingData, model: ReducedQuadraticModel) -> List[ErrorReport]:
    x0 = initial_state(cfg.eval_initial_condition, data.net.n, cfg.seed + 1)
    full = collect_swing_snapshots(data.net, x0, cfg.t_span, cfg.dt, input=data.signal)
    rom = simulate_rom(model, reduced_initial_state(data.basis, x0), cfg.t_span, cfg.dt, input=data.signal)
    return _evaluate_outputs(full.outputs, rom.outputs, full.times)


def _reconstruction(basis: PodBasis, rom: SnapshotSet) -> SnapshotSet:
    """Angles and velocities recovered from Phi_r x_r(t)."""
    delta, ddelta = unlift(reconstruct(basis, rom.states), from_trig=True)
    return SnapshotSet(times=rom.times, states=np.vstack([delta, ddelta]), inputs=rom.inputs, outputs=rom.outputs)


def _worst(reports: Sequence[ErrorReport]) -> ErrorReport:
    return max(reports, key=lambda rep: rep.max_rel_error)


def run_pipeline(cfg: ExperimentConfig, progress: bool = False, write: bool = True) -> PipelineResult:
    """Learn a reduced quadratic model from simulation data and evaluate it on the training horizon."""
    started = time.perf_counter()
    data = prepare_training_data(cfg, progress=progress)

    with _stage("infer"):
        model = infer(data.x_r, data.xdot_r, data.snapshots.inputs, mu=cfg.mu,
                      c_r=data.c_r, basis_id=data.basis.identifier)

    with _stage("rom"):
        rom = simulate_rom(model, reduced_initial_state(data.basis, data.x0), cfg.t_span, cfg.dt,
                           input=data.signal, progress=progress)

    with _stage("evaluate"):
        reports = _evaluate_outputs(data.snapshots.outputs, rom.outputs, data.snapshots.times)
        heldout = _heldout(cfg, data, model) if cfg.eval_initial_condition is not None else None

    report = _worst(reports)
    summary: Dict[str, Any] = {
        "n": data.net.n,
        "num_samples": data.snapshots.num_samples,
        "lifted_dim": data.ops.dim,
        "r": model.r,
        "q": model.q,
        "p": model.p,
        "tol": cfg.tol,
        "mu": cfg.mu,
        "derivative_mode": cfg.derivative_mode,
        "seed": cfg.seed,
        "basis_id": data.basis.identifier,
        "horizon": list(report.horizon),
        "max_rel_error": report.max_rel_error,
        "max_rel_error_per_output": [rep.max_rel_error for rep in reports],
        "linf_ref": report.linf_ref,
        **model.diagnostics,
    }
    if heldout is not None:
        summary["heldout_max_rel_error"] = _worst(heldout).max_rel_error

    if model.diagnostics.get("rank", 0) < model.diagnostics.get("num_unknowns", 0):
        logger.warning("rank(data matrix) = %d < %d unknowns", model.diagnostics["rank"],
                       model.diagnostics["num_unknowns"])

    wall = time.perf_counter() - started
    out = Path(cfg.output_dir)
    if write:
        with _stage("write"):
            _write_common(cfg, data, out)
            storage.save_model(model, out / "model.yaml")
            storage.save_snapshots_csv(rom, out / "rom_trajectory.csv")
            storage.save_snapshots_csv(_reconstruction(data.basis, rom), out / "rom_reconstruction.csv")
            _write_reports(reports, out, "error_report")
            if heldout is not None:
                _write_reports(heldout, out, "heldout_error_report")
            storage.save_summary(summary, out / "summary.json")
            storage.save_summary({"wall_time_s": wall}, out / "timing.json")

    logger.info("r=%d, rank=%s, max relative error %.3e, %.2f s", model.r,
                model.diagnostics.get("rank"), report.max_rel_error, wall)
    return PipelineResult(model, data.basis, report, summary, out, wall, None if heldout is None else _worst(heldout))


def run_intrusive(cfg: ExperimentConfig, progress: bool = False, write: bool = True) -> PipelineResult:
    """Galerkin-reduce the exact lifted model on the same POD basis and evaluate it."""
    started = time.perf_counter()
    data = prepare_training_data(cfg, progress=progress)

    with _stage("reduce"):
        model = galerkin_reduce(data.ops, data.basis)

    with _stage("rom"):
        rom = simulate_rom(model, reduced_initial_state(data.basis, data.x0), cfg.t_span, cfg.dt,
                           input=data.signal, progress=progress)

    with _stage("evaluate"):
        reports = _evaluate_outputs(data.snapshots.outputs, rom.outputs, data.snapshots.times)

    report = _worst(reports)
    summary = {
        "n": data.net.n,
        "num_samples": data.snapshots.num_samples,
        "lifted_dim": data.ops.dim,
        "r": model.r,
        "tol": cfg.tol,
        "seed": cfg.seed,
        "source": model.source,
        "basis_id": data.basis.identifier,
        "horizon": list(report.horizon),
        "max_rel_error": report.max_rel_error,
        "linf_ref": report.linf_ref,
    }
    wall = time.perf_counter() - started
    out = Path(cfg.output_dir)
    if write:
        with _stage("write"):
            _write_common(cfg, data, out)
            storage.export_lifted_operators(data.ops, out / "lifted")
            storage.save_model(model, out / "model_intrusive.yaml")
            storage.save_snapshots_csv(rom, out / "rom_intrusive_trajectory.csv")
            _write_reports(reports, out, "error_report_intrusive")
            storage.save_summary(summary, out / "summary_intrusive.json")
            storage.save_summary({"wall_time_s": wall}, out / "timing_intrusive.json")

    logger.info("intrusive r=%d, max relative error %.3e", model.r, report.max_rel_error)
    return PipelineResult(model, data.basis, report, summary, out, wall)


def run_simulation(cfg: ExperimentConfig, progress: bool = False, write: bool = True) -> SnapshotSet:
    """Simulate the nonlinear network only; writes snapshots and the lifted operators."""
    with _stage("simulate"):
        net = build_network(cfg)
        x0 = initial_state(cfg.initial_condition, net.n, cfg.seed)
        snap = collect_swing_snapshots(net, x0, cfg.t_span, cfg.dt, input=input_signal(cfg.input),
                                       progress=progress)
    if write:
        with _stage("write"):
            out = Path(cfg.output_dir)
            storage.save_snapshots_csv(snap, out / "snapshots.csv")
            storage.save_snapshots_h5(snap, out / "snapshots.h5")
            storage.export_lifted_operators(assemble_lifted_operators(net), out / "lifted")
    return snap


def evaluate_saved_model(cfg: ExperimentConfig, model_path, basis_path,
                         ic: Optional[InitialCondition] = None, write: bool = True) -> ErrorReport:
    """Score a stored model against a fresh full simulation, by default from `eval_initial_condition`."""
    with _stage("load"):
        model = storage.load_model(model_path)
        basis = storage.load_basis(basis_path)
        if model.basis_id and model.basis_id != basis.identifier:
            logger.warning("model was learned on basis %s, evaluating with %s", model.basis_id, basis.identifier)

    ic = ic or cfg.eval_initial_condition or cfg.initial_condition
    seed = cfg.seed + 1 if ic is cfg.eval_initial_condition else cfg.seed
    with _stage("simulate"):
        net = build_network(cfg)
        x0 = initial_state(ic, net.n, seed)
        signal = input_signal(cfg.input)
        full = collect_swing_snapshots(net, x0, cfg.t_span, cfg.dt, input=signal)

    with _stage("rom"):
        rom = simulate_rom(model, reduced_initial_state(basis, x0), cfg.t_span, cfg.dt, input=signal)

    with _stage("evaluate"):
        reports = _evaluate_outputs(full.outputs, rom.outputs, full.times)

    if write:
        with _stage("write"):
            out = Path(cfg.output_dir)
            _write_reports(reports, out, "evaluation_report")
            storage.save_summary({"max_rel_error": _worst(reports).max_rel_error,
                                  "model": str(model_path), "r": model.r}, out / "evaluation.json")
    return _worst(reports)


def sweep_mu(cfg: ExperimentConfig, mus: Optional[Sequence[float]] = None, progress: bool = False,
             write: bool = True, data: Optional[TrainingData] = None) -> pd.DataFrame:
    """Learn one model per mu on shared data; one row per mu with norm, rank and output error."""
    mus = list(cfg.mu_sweep if mus is None else mus)
    data = data or prepare_training_data(cfg, progress=progress)
    x_r0 = reduced_initial_state(data.basis, data.x0)

    rows = []
    for mu in tqdm(mus, desc="mu sweep", disable=not progress):
        with _stage(f"infer mu={mu:g}"):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RankDeficiencyWarning)
                model = infer(data.x_r, data.xdot_r, data.snapshots.inputs, mu=mu,
                              c_r=data.c_r, basis_id=data.basis.identifier)
        row = {"mu": mu, **model.diagnostics, "max_rel_error": np.nan, "diverged_at": np.nan}
        try:
            rom = simulate_rom(model, x_r0, cfg.t_span, cfg.dt, input=data.signal)
            reports = _evaluate_outputs(data.snapshots.outputs, rom.outputs, data.snapshots.times)
            row["max_rel_error"] = _worst(reports).max_rel_error
        except IntegrationDivergedError as e:
            row["max_rel_error"] = np.inf
            row["diverged_at"] = e.time
        rows.append(row)

    frame = pd.DataFrame(rows)
    if write:
        with _stage("write"):
            out = Path(cfg.output_dir)
            out.mkdir(parents=True, exist_ok=True)
            frame.to_csv(out / "mu_sweep.csv", index=False, float_format=storage.FLOAT_FORMAT)
    return frame
