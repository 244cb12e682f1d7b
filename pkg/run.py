#!/usr/bin/env python3
# -*- coding: utf-8 -*-
import argparse
import os
import subprocess
import sys
from pathlib import Path

from config import DERIVATIVE_MODES, expand_user_config, load_experiment, read_config
from gridlearn import oracles, pipeline
from gridlearn.errors import EXIT_OK, GridlearnError
from gridlearn.log import setup_logging

HERE = Path(__file__).resolve().parent


def run(cmd, cwd=None):
    print("\nRUN:", " ".join(map(str, cmd)), "\n", flush=True)
    proc = subprocess.run(cmd, cwd=cwd)
    if proc.returncode != 0:
        sys.exit(proc.returncode)


def _add_experiment_flags(ap):
    ap.add_argument("--config", default=str(HERE / "config.yaml"), help="Path to the experiment YAML")
    ap.add_argument("--network", help="Network parameter file (YAML)")
    ap.add_argument("--dt", type=float, help="Time step [s]")
    ap.add_argument("--t-start", type=float, help="Start of the time horizon [s]")
    ap.add_argument("--t-end", type=float, help="End of the time horizon [s]")
    ap.add_argument("--tol", type=float, help="POD truncation tolerance on sigma_{r+1}/sigma_1")
    ap.add_argument("--r", type=int, help="Fixed reduced dimension (overrides --tol)")
    ap.add_argument("--mu", type=float, help="Tikhonov regularization parameter (>= 0)")
    ap.add_argument("--derivative-mode", choices=DERIVATIVE_MODES, help="How time derivatives are formed")
    ap.add_argument("--ic-magnitude", type=float, help="Magnitude of random initial angles [rad]")
    ap.add_argument("--seed", type=int, help="Seed of the random initial condition")
    ap.add_argument("--output-dir", help="Directory for all artifacts")
    ap.add_argument("--progress", action="store_true", help="Show progress bars")
    ap.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")


def _overrides(args) -> dict:
    return {
        "network": args.network,
        "dt": args.dt,
        "t_start": args.t_start,
        "t_end": args.t_end,
        "tol": args.tol,
        "r": args.r,
        "mu": args.mu,
        "derivative_mode": args.derivative_mode,
        "ic_magnitude": args.ic_magnitude,
        "seed": args.seed,
        "output_dir": args.output_dir,
    }


def build_parser():
    ap = argparse.ArgumentParser(description="Learn reduced quadratic models of power-network swing dynamics")
    sub = ap.add_subparsers(dest="verb", required=True)

    for verb, help_text in (
            ("simulate", "Simulate the nonlinear network and write snapshots"),
            ("learn", "Simulate, lift, POD, infer and evaluate a reduced model"),
            ("reduce-intrusive", "Galerkin-reduce the exact lifted model on the POD basis"),
            ("oracle", "Run the exactness and consistency checks")):
        _add_experiment_flags(sub.add_parser(verb, help=help_text))

    ev = sub.add_parser("evaluate", help="Evaluate a saved model against a fresh full simulation")
    _add_experiment_flags(ev)
    ev.add_argument("--model", required=True, help="Model YAML written by `learn`")
    ev.add_argument("--basis", required=True, help="Basis HDF5 written by `learn`")

    sw = sub.add_parser("sweep-mu", help="Learn one model per regularization value")
    _add_experiment_flags(sw)
    sw.add_argument("--mu-values", type=float, nargs="+", help="Regularization values (default: mu_sweep from config)")

    batch = sub.add_parser("batch", help="Run many configs / mu values through Snakemake")
    batch.add_argument("--config", default=str(HERE / "configs" / "batch.yaml"), help="Batch YAML (see snakemake/Snakefile)")
    batch.add_argument("--snakefile", default=str(HERE / "snakemake" / "Snakefile"), help="Path to Snakefile")
    batch.add_argument("--cores", "-j", type=int, default=4, help="Max parallel jobs for Snakemake")
    batch.add_argument("--unlock", action="store_true", help="Pass --unlock to Snakemake and exit")
    return ap


def _batch(args):
    if args.unlock:
        run(["snakemake", "-s", args.snakefile, "--configfile", args.config, "--unlock"])
        return
    # Snakemake gets a config with all tildes expanded
    expanded_cfg = expand_user_config(read_config(args.config))
    run([
        "snakemake",
        "-s", os.path.expanduser(args.snakefile),
        "--configfile", expanded_cfg,
        "-j", str(args.cores),
        "--rerun-incomplete",
        "--printshellcmds",
    ])


def dispatch(args) -> int:
    if args.verb == "batch":
        _batch(args)
        return EXIT_OK

    cfg = load_experiment(args.config, _overrides(args))
    setup_logging(cfg.logs_dir, verbose=args.verbose)

    if args.verb == "simulate":
        snap = pipeline.run_simulation(cfg, progress=args.progress)
        print(f"S={snap.num_samples} samples, n={snap.dim // 2}, written to {cfg.output_dir}")
    elif args.verb == "learn":
        res = pipeline.run_pipeline(cfg, progress=args.progress)
        print(f"r={res.model.r}  rank={res.summary.get('rank')}/{res.summary.get('num_unknowns')}  "
              f"max_rel_error={res.report.max_rel_error:.4e}  wall_time={res.wall_time:.2f}s")
    elif args.verb == "reduce-intrusive":
        res = pipeline.run_intrusive(cfg, progress=args.progress)
        print(f"r={res.model.r}  max_rel_error={res.report.max_rel_error:.4e}  wall_time={res.wall_time:.2f}s")
    elif args.verb == "evaluate":
        rep = pipeline.evaluate_saved_model(cfg, args.model, args.basis)
        print(f"max_rel_error={rep.max_rel_error:.4e}")
    elif args.verb == "sweep-mu":
        frame = pipeline.sweep_mu(cfg, args.mu_values, progress=args.progress)
        print(frame[["mu", "rank", "solution_norm", "max_rel_error"]].to_string(index=False))
    elif args.verb == "oracle":
        summary = oracles.run_oracle_suite(cfg)
        for res in summary.results:
            print(f"{'PASS' if res.passed else 'FAIL'}  {res.name:<24} deviation={res.deviation:.3e}  {res.detail}")
        summary.raise_for_failures()
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return dispatch(args)
    except GridlearnError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
