"""
Self-checks against exact references.

  lifting-exactness        lifted RHS vs. chain-rule derivative of the nonlinear model
  kronecker-consistency    expand_h(H~) (x kron x) vs. H~ (x compact-kron x)
  intrusive-vs-learned     model learned from exact Galerkin-ROM data vs. the Galerkin ROM
  regularization-path      ||O(mu)||_F non-increasing in mu
  corrupted-h-sensitivity  a perturbed lifted H must fail the lifting check
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from gridlearn.experiment import ExperimentConfig
from gridlearn import storage
from gridlearn.errors import OracleFailure, RankDeficiencyWarning
from gridlearn.intrusive import galerkin_reduce
from gridlearn.lifting import LiftedOperators, assemble_lifted_operators, chain_rule_derivative, lift_state, lifted_rhs
from gridlearn.opinf import assemble_problem, compact_kron, compact_size, expand_h, infer, solve
from gridlearn.pipeline import build_network, prepare_training_data
from gridlearn.pod import compute_pod, project
from gridlearn.rom import rom_rhs, simulate_rom
from gridlearn.simulate import collect_swing_snapshots, concatenate, exact_derivatives, lift_snapshots, sinusoid_input
from gridlearn.swing_model import SwingNetwork, SwingState

logger = logging.getLogger(__name__)

LIFTING_TOL = 1e-11
KRON_TOL = 1e-12
AGREEMENT_TOL = 1e-6
PATH_TOL = 1e-10


@dataclass(frozen=True)
class OracleResult:
    name: str
    passed: bool
    deviation: float
    tolerance: float
    detail: str = ""


@dataclass
class OracleSummary:
    results: List[OracleResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[OracleResult]:
        return [r for r in self.results if not r.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {"passed": self.passed, "results": [asdict(r) for r in self.results]}

    def raise_for_failures(self) -> None:
        if self.failures:
            raise OracleFailure(self.failures)


def _rel(diff: np.ndarray, ref: np.ndarray) -> float:
    scale = float(np.max(np.abs(ref)))
    return float(np.max(np.abs(diff))) / (scale if scale > 0 else 1.0)


def lifting_deviation(net: SwingNetwork, ops: Optional[LiftedOperators] = None,
                      num_states: int = 100, seed: int = 0) -> float:
    """Worst relative mismatch between the lifted RHS and the chain-rule derivative."""
    ops = ops or assemble_lifted_operators(net)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(num_states):
        delta = rng.uniform(-np.pi, np.pi, net.n)
        ddelta = rng.normal(0.0, 1.0, net.n)
        u = rng.normal()
        ref = chain_rule_derivative(net, delta, ddelta, u)
        got = lifted_rhs(ops, lift_state(delta, ddelta), u)
        worst = max(worst, _rel(got - ref, ref))
    return worst


def check_lifting_exactness(net: SwingNetwork, ops: Optional[LiftedOperators] = None,
                            num_states: int = 100, seed: int = 0, tol: float = LIFTING_TOL) -> OracleResult:
    dev = lifting_deviation(net, ops, num_states, seed)
    return OracleResult("lifting-exactness", dev < tol, dev, tol, f"{num_states} random states, n={net.n}")


def check_kronecker_consistency(num_draws: int = 1500, r_values: Sequence[int] = range(2, 9),
                                seed: int = 0, tol: float = KRON_TOL) -> OracleResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for r in r_values:
        for _ in range(num_draws):
            h_tilde = rng.normal(size=(r, compact_size(r)))
            x = rng.normal(size=r)
            compact = h_tilde @ compact_kron(x)
            full = expand_h(h_tilde) @ np.kron(x, x)
            worst = max(worst, _rel(full - compact, compact))
    return OracleResult("kronecker-consistency", worst < tol, worst, tol,
                        f"{num_draws} draws per r in {list(r_values)}")


def check_intrusive_vs_learned(net: SwingNetwork, t_span=(0.0, 3.0), dt: float = 1e-3, r: int = 6,
                               num_trajectories: int = 4, seed: int = 0,
                               tol: float = AGREEMENT_TOL) -> OracleResult:
    """Learn from exact Galerkin-ROM trajectories with mu = 0 and compare outputs with the Galerkin ROM.

    The basis comes from nonlinear snapshots under a sinusoidal input; a constant
    input together with sin^2 + cos^2 = 1 would leave the data matrix rank-deficient.
    """
    rng = np.random.default_rng(seed)
    ops = assemble_lifted_operators(net)
    signal = sinusoid_input(1.0, 0.5, 1.0)
    x0 = SwingState(0.2 * rng.uniform(-1.0, 1.0, net.n), np.zeros(net.n))
    lifted = lift_snapshots(collect_swing_snapshots(net, x0, t_span, dt, input=signal))
    basis = compute_pod(lifted.states, r_override=min(r, ops.dim))
    galerkin = galerkin_reduce(ops, basis)

    x_r0 = project(basis, lift_state(x0.angles, x0.velocities).values)
    scale = float(np.linalg.norm(x_r0))
    starts = [x_r0] + [x_r0 + 0.05 * scale * rng.normal(size=basis.r) for _ in range(num_trajectories - 1)]
    runs = [exact_derivatives(simulate_rom(galerkin, s, t_span, dt, input=signal),
                              lambda x, u: rom_rhs(galerkin, x, u))
            for s in starts]
    X_r, Xdot_r, U = concatenate(runs)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficiencyWarning)
        learned = infer(X_r, Xdot_r, U, mu=0.0, c_r=galerkin.c_r, basis_id=basis.identifier)
    full_rank = learned.diagnostics["rank"] == learned.diagnostics["num_unknowns"]

    dev = 0.0
    for s, run in zip(starts, runs):
        ours = simulate_rom(learned, s, t_span, dt, input=signal)
        dev = max(dev, float(np.max(np.abs(ours.outputs - run.outputs))))
    detail = f"r={basis.r}, rank {learned.diagnostics['rank']}/{learned.diagnostics['num_unknowns']}"
    return OracleResult("intrusive-vs-learned", bool(full_rank and dev < tol), dev, tol, detail)


def regularization_path(X_r: np.ndarray, Xdot_r: np.ndarray, U: np.ndarray,
                        mus: Sequence[float] = (0.0, 1e-6, 1e-3, 1.0, 1e3)) -> List[float]:
    """Frobenius norm of the stacked solution for each mu, in the given order."""
    norms = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficiencyWarning)
        for mu in mus:
            norms.append(solve(assemble_problem(X_r, Xdot_r, U, mu)).norm)
    return norms


def check_regularization_path(X_r: np.ndarray, Xdot_r: np.ndarray, U: np.ndarray,
                              mus: Sequence[float] = (0.0, 1e-6, 1e-3, 1.0, 1e3),
                              tol: float = PATH_TOL) -> OracleResult:
    mus = sorted(mus)
    norms = regularization_path(X_r, Xdot_r, U, mus)
    growth = max((b - a for a, b in zip(norms, norms[1:])), default=0.0)
    dev = max(growth, 0.0) / (norms[0] if norms[0] > 0 else 1.0)
    detail = ", ".join(f"mu={m:g}: {v:.4e}" for m, v in zip(mus, norms))
    return OracleResult("regularization-path", dev <= tol, dev, tol, detail)


def check_corrupted_h(net: SwingNetwork, perturbation: float = 1e-3, seed: int = 0,
                      tol: float = LIFTING_TOL) -> OracleResult:
    """Passes when perturbing the largest H entry makes the lifting check fail."""
    ops = assemble_lifted_operators(net)
    vals = ops.h_vals.copy()
    vals[int(np.argmax(np.abs(vals)))] += perturbation
    dev = lifting_deviation(net, ops.with_h_values(vals), seed=seed)
    return OracleResult("corrupted-h-sensitivity", dev >= tol, dev, tol,
                        f"perturbed one entry by {perturbation:g}")


def run_oracle_suite(cfg: ExperimentConfig, raise_on_failure: bool = False,
                     write: bool = True, intrusive_r: int = 6) -> OracleSummary:
    """All oracles on the configured network; writes oracles.json to the output directory."""
    net = build_network(cfg)
    summary = OracleSummary()
    summary.results.append(check_lifting_exactness(net, seed=cfg.seed))
    summary.results.append(check_kronecker_consistency(seed=cfg.seed))
    summary.results.append(check_intrusive_vs_learned(net, cfg.t_span, cfg.dt, r=intrusive_r, seed=cfg.seed))
    data = prepare_training_data(cfg)
    summary.results.append(check_regularization_path(data.x_r, data.xdot_r, data.snapshots.inputs,
                                                     mus=sorted(set(cfg.mu_sweep) | {1e3})))
    summary.results.append(check_corrupted_h(net, seed=cfg.seed))

    for res in summary.results:
        log = logger.info if res.passed else logger.warning
        log("oracle %-24s %s deviation=%.3e (tol %.1e) %s", res.name,
            "PASS" if res.passed else "FAIL", res.deviation, res.tolerance, res.detail)
    if write:
        storage.save_summary(summary.to_dict(), Path(cfg.output_dir) / "oracles.json")
    if raise_on_failure:
        summary.raise_for_failures()
    return summary
