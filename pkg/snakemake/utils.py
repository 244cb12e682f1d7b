import json
from pathlib import Path

import pandas as pd
from snakemake.exceptions import WorkflowError


def get_experiments(batch_cfg, default_base="."):
    """Experiment name (config file stem) -> absolute config path; relative entries resolve against base_dir."""
    entries = batch_cfg.get("experiments") or []
    if not entries:
        raise WorkflowError("batch config lists no experiments (key `experiments`).")
    base = Path(batch_cfg.get("base_dir", default_base)).expanduser()
    out = {}
    for entry in entries:
        path = Path(entry).expanduser()
        if not path.is_absolute():
            path = base / path
        if not path.exists():
            raise WorkflowError(f"experiment config {path} not found.")
        if path.stem in out:
            raise WorkflowError(f"two experiment configs share the name '{path.stem}'.")
        out[path.stem] = str(path.resolve())
    return out


def mu_label(mu):
    """Directory label of a regularization weight: 0.001 -> "0.001", 1e-06 -> "1e-06"."""
    return f"{float(mu):.12g}"


def get_mu_values(batch_cfg):
    try:
        values = [float(m) for m in batch_cfg.get("mu_values") or [1e-3]]
    except (TypeError, ValueError):
        raise WorkflowError(f"mu_values must be numbers, got {batch_cfg.get('mu_values')!r}.")
    if any(m < 0 for m in values):
        raise WorkflowError("mu_values must be non-negative.")
    labels = {}
    for m in values:
        label = mu_label(m)
        if label in labels:
            raise WorkflowError(f"mu value {m} listed twice (label '{label}').")
        labels[label] = m
    return labels


def collect_summaries(paths, out_csv):
    rows = []
    for p in paths:
        p = Path(p)
        with p.open() as fh:
            summary = json.load(fh)
        # <results_dir>/<experiment>/mu_<label>/summary.json
        summary["experiment"] = p.parent.parent.name
        rows.append(summary)
    frame = pd.DataFrame(rows)
    lead = [c for c in ("experiment", "mu", "r", "rank", "num_unknowns", "max_rel_error") if c in frame.columns]
    frame = frame[lead + [c for c in frame.columns if c not in lead]]
    frame.sort_values(["experiment", "mu"]).to_csv(out_csv, index=False, float_format="%.17g")
