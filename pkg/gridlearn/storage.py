"""
On-disk formats.

  snapshots   CSV: one column per sample, header row of times, labelled rows
              x<k> (states), dx<k> (derivatives), u<k> (inputs), y<k> (outputs);
              HDF5: datasets times / states / inputs / derivatives / outputs
  basis       HDF5 (basis, singular_values, attrs r, tolerance, identifier);
              spectrum CSV (index, sigma, sigma_rel, retained)
  model       YAML with r, q, p, mu, basis_id, source, diagnostics and dense
              a_r, h_tilde_r, b_r, c_r
  lifted      A.csv, B.csv, C.csv (dense, no header) and H_triplets.csv (row, i, j, value)
  report      error CSV (t, y, y_r, e) and summary JSON

CSV floats are written with 17 significant digits so that reading back is lossless.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import h5py
import numpy as np
import pandas as pd
import yaml

from gridlearn.errors import ConfigError
from gridlearn.lifting import LiftedOperators
from gridlearn.opinf import ReducedQuadraticModel
from gridlearn.pod import PodBasis, spectrum_frame
from gridlearn.rom import ErrorReport
from gridlearn.simulate import SnapshotSet

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
FLOAT_FORMAT = "%.17g"

_ROW_BLOCKS = (("states", "x"), ("derivatives", "dx"), ("inputs", "u"), ("outputs", "y"))


def _ensure_parent(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# -- snapshots ----------------------------------------------------------------

def save_snapshots_csv(snap: SnapshotSet, path: PathLike) -> Path:
    path = _ensure_parent(path)
    blocks, labels = [], []
    for attr, prefix in _ROW_BLOCKS:
        data = getattr(snap, attr)
        if data is None:
            continue
        blocks.append(data)
        labels += [f"{prefix}{k}" for k in range(data.shape[0])]
    frame = pd.DataFrame(np.vstack(blocks), index=labels, columns=[repr(float(t)) for t in snap.times])
    frame.to_csv(path, float_format=FLOAT_FORMAT, index_label="row")
    logger.debug("wrote %d x %d snapshot table to %s", frame.shape[0], frame.shape[1], path)
    return path


def load_snapshots_csv(path: PathLike) -> SnapshotSet:
    frame = pd.read_csv(path, index_col=0, float_precision="round_trip")
    times = np.array([float(c) for c in frame.columns])
    parts: Dict[str, Optional[np.ndarray]] = {}
    for attr, prefix in _ROW_BLOCKS:
        mask = frame.index.str.fullmatch(rf"{prefix}\d+")
        parts[attr] = frame.to_numpy()[mask] if mask.any() else None
    if parts["states"] is None or parts["inputs"] is None:
        raise ConfigError(f"{path}: snapshot table needs x<k> and u<k> rows")
    return SnapshotSet(times=times, **parts)


def save_snapshots_h5(snap: SnapshotSet, path: PathLike) -> Path:
    path = _ensure_parent(path)
    with h5py.File(path, "w") as f:
        for attr, _ in _ROW_BLOCKS + (("times", ""),):
            data = getattr(snap, attr)
            if data is not None:
                f.create_dataset(attr, data=data)
    return path


def load_snapshots_h5(path: PathLike) -> SnapshotSet:
    with h5py.File(path, "r") as f:
        parts = {name: f[name][...] for name in f.keys()}
    if not {"times", "states", "inputs"} <= parts.keys():
        raise ConfigError(f"{path}: snapshot file needs times, states and inputs datasets")
    return SnapshotSet(**parts)


# -- basis --------------------------------------------------------------------

def save_basis(basis: PodBasis, path: PathLike) -> Path:
    path = _ensure_parent(path)
    with h5py.File(path, "w") as f:
        f.create_dataset("basis", data=basis.basis)
        f.create_dataset("singular_values", data=basis.singular_values)
        f.attrs["r"] = basis.r
        f.attrs["tolerance"] = np.nan if basis.tolerance is None else basis.tolerance
        f.attrs["identifier"] = basis.identifier
    return path


def load_basis(path: PathLike) -> PodBasis:
    with h5py.File(path, "r") as f:
        tol = float(f.attrs["tolerance"])
        return PodBasis(
            basis=f["basis"][...],
            singular_values=f["singular_values"][...],
            r=int(f.attrs["r"]),
            tolerance=None if np.isnan(tol) else tol,
        )


def save_spectrum(basis: PodBasis, path: PathLike) -> Path:
    path = _ensure_parent(path)
    spectrum_frame(basis).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


# -- models -------------------------------------------------------------------

def model_to_dict(model: ReducedQuadraticModel) -> Dict[str, Any]:
    return {
        "r": model.r,
        "q": model.q,
        "p": model.p,
        "mu": model.mu,
        "basis_id": model.basis_id,
        "source": model.source,
        "diagnostics": dict(model.diagnostics),
        "a_r": model.a_r.tolist(),
        "h_tilde_r": model.h_tilde_r.tolist(),
        "b_r": model.b_r.tolist(),
        "c_r": model.c_r.tolist(),
    }


def save_model(model: ReducedQuadraticModel, path: PathLike) -> Path:
    path = _ensure_parent(path)
    with path.open("w", encoding="utf-8") as fh:
        yaml.safe_dump(model_to_dict(model), fh, default_flow_style=None, sort_keys=False)
    logger.info("saved %s model (r=%d) to %s", model.source, model.r, path)
    return path


def load_model(path: PathLike) -> ReducedQuadraticModel:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"model file {path} not found")
    with path.open(encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: model file must be a mapping")
    missing = [k for k in ("r", "a_r", "h_tilde_r", "b_r", "c_r") if k not in doc]
    if missing:
        raise ConfigError(f"{path}: missing model fields {missing}")

    r = int(doc["r"])
    c_r = np.asarray(doc["c_r"], dtype=float).reshape(-1, r)
    model = ReducedQuadraticModel(
        a_r=np.asarray(doc["a_r"], dtype=float),
        h_tilde_r=np.asarray(doc["h_tilde_r"], dtype=float),
        b_r=np.asarray(doc["b_r"], dtype=float),
        c_r=c_r,
        basis_id=doc.get("basis_id") or "",
        source=doc.get("source") or "inferred",
        mu=doc.get("mu"),
        diagnostics=doc.get("diagnostics") or {},
    )
    if model.r != r:
        raise ConfigError(f"{path}: header says r={r}, operators have r={model.r}")
    return model


# -- lifted operators ---------------------------------------------------------

def export_lifted_operators(ops: LiftedOperators, out_dir: PathLike) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(ops.a).to_csv(out / "A.csv", header=False, index=False, float_format=FLOAT_FORMAT)
    pd.DataFrame(ops.b.reshape(-1, 1)).to_csv(out / "B.csv", header=False, index=False, float_format=FLOAT_FORMAT)
    pd.DataFrame(ops.c).to_csv(out / "C.csv", header=False, index=False, float_format=FLOAT_FORMAT)
    pd.DataFrame({
        "row": ops.h_rows,
        "i": ops.h_i,
        "j": ops.h_j,
        "value": ops.h_vals,
    }).to_csv(out / "H_triplets.csv", index=False, float_format=FLOAT_FORMAT)
    logger.info("exported lifted operators (d=%d, %d quadratic entries) to %s", ops.dim, ops.nnz, out)
    return out


def load_lifted_operators(in_dir: PathLike) -> LiftedOperators:
    src = Path(in_dir)
    read = lambda name: pd.read_csv(src / name, header=None, float_precision="round_trip").to_numpy()
    h = pd.read_csv(src / "H_triplets.csv", float_precision="round_trip")
    return LiftedOperators(
        a=read("A.csv"),
        h_rows=h["row"].to_numpy(np.int64),
        h_i=h["i"].to_numpy(np.int64),
        h_j=h["j"].to_numpy(np.int64),
        h_vals=h["value"].to_numpy(float),
        b=read("B.csv").reshape(-1),
        c=read("C.csv"),
    )


# -- reports ------------------------------------------------------------------

def save_error_report(report: ErrorReport, path: PathLike) -> Path:
    path = _ensure_parent(path)
    report.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    return obj


def save_summary(summary: Dict[str, Any], path: PathLike) -> Path:
    path = _ensure_parent(path)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(_plain(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_summary(path: PathLike) -> Dict[str, Any]:
    with Path(path).open(encoding="utf-8") as fh:
        return json.load(fh)
