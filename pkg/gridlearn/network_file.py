"""
Network parameter files.

A network file is YAML with the keys

    n, omega_r, inertia, damping, power          scalars / length-n lists
    coupling, phase_shift                        dense n x n list of rows, or
                                                 {format: triplets, symmetric: bool, entries: [[i, j, v], ...]}
                                                 (zero-based indices; symmetric mirrors (i, j) to (j, i);
                                                 phase_shift mirrors with the same value)
    output_weights                               "mean", or a p x n list of rows

Errors carry the offending field and its line in the file.
"""
from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import yaml

from gridlearn.errors import NetworkFileError
from gridlearn.swing_model import SwingNetwork, mean_output_weights

REQUIRED = ("n", "omega_r", "inertia", "damping", "power", "coupling", "phase_shift")


def _field_lines(text: str) -> Dict[str, int]:
    """Map each top-level key to its (1-based) line, using the YAML node marks."""
    node = yaml.compose(text)
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value}


def _vector(doc, key, n, lines) -> np.ndarray:
    try:
        arr = np.asarray(doc[key], dtype=float)
    except (TypeError, ValueError) as e:
        raise NetworkFileError(f"not a numeric list: {e}", key, lines.get(key))
    if arr.shape != (n,):
        raise NetworkFileError(f"expected {n} entries, got shape {arr.shape}", key, lines.get(key))
    return arr


def _matrix(doc, key, n, lines) -> np.ndarray:
    spec = doc[key]
    line = lines.get(key)
    if isinstance(spec, dict):
        fmt = spec.get("format", "dense")
        if fmt == "triplets":
            out = np.zeros((n, n))
            symmetric = bool(spec.get("symmetric", False))
            for k, entry in enumerate(spec.get("entries") or []):
                try:
                    i, j, v = int(entry[0]), int(entry[1]), float(entry[2])
                except (TypeError, ValueError, IndexError):
                    raise NetworkFileError(f"entry {k} is not an [i, j, value] triplet", key, line)
                if not (0 <= i < n and 0 <= j < n):
                    raise NetworkFileError(f"entry {k} index ({i}, {j}) out of range for n={n}", key, line)
                out[i, j] = v
                if symmetric:
                    out[j, i] = v
            return out
        if fmt == "dense":
            spec = spec.get("values")
        else:
            raise NetworkFileError(f"unknown matrix format '{fmt}' (dense | triplets)", key, line)
    try:
        arr = np.asarray(spec, dtype=float)
    except (TypeError, ValueError) as e:
        raise NetworkFileError(f"not a numeric matrix: {e}", key, line)
    if arr.shape != (n, n):
        raise NetworkFileError(f"expected {n}x{n} matrix, got shape {arr.shape}", key, line)
    return arr


def parse_network(text: str, source: str = "<string>") -> SwingNetwork:
    try:
        doc = yaml.safe_load(text)
        lines = _field_lines(text)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark is not None else None
        raise NetworkFileError(f"{source}: YAML syntax error: {e.problem}", line=line)
    if not isinstance(doc, dict):
        raise NetworkFileError(f"{source}: top level must be a mapping")

    for key in REQUIRED:
        if key not in doc:
            raise NetworkFileError(f"{source}: missing required field", key)

    raw_n = doc["n"]
    if isinstance(raw_n, bool) or not isinstance(raw_n, (int, float)) or not float(raw_n).is_integer():
        raise NetworkFileError(f"n must be a whole number, got {raw_n!r}", "n", lines.get("n"))
    n = int(raw_n)
    if n < 1:
        raise NetworkFileError("n must be positive", "n", lines.get("n"))

    try:
        omega_r = float(doc["omega_r"])
    except (TypeError, ValueError):
        raise NetworkFileError("omega_r must be a number", "omega_r", lines.get("omega_r"))

    weights = doc.get("output_weights", "mean")
    if weights is None or weights == "mean":
        c_s = mean_output_weights(n)
    else:
        try:
            c_s = np.atleast_2d(np.asarray(weights, dtype=float))
        except (TypeError, ValueError) as e:
            raise NetworkFileError(f"not a numeric matrix: {e}", "output_weights", lines.get("output_weights"))
        if c_s.ndim != 2 or c_s.shape[1] != n:
            raise NetworkFileError(f"expected p x {n} rows, got shape {c_s.shape}",
                                   "output_weights", lines.get("output_weights"))

    kwargs: Dict[str, Any] = dict(
        n=n,
        omega_r=omega_r,
        inertia=_vector(doc, "inertia", n, lines),
        damping=_vector(doc, "damping", n, lines),
        power=_vector(doc, "power", n, lines),
        coupling=_matrix(doc, "coupling", n, lines),
        phase_shift=_matrix(doc, "phase_shift", n, lines),
        output_weights=c_s,
    )
    try:
        return SwingNetwork(**kwargs)
    except ValueError as e:
        field = next((k for k in ("omega_r", "inertia", "damping", "coupling", "phase_shift")
                      if k in str(e)), None)
        raise NetworkFileError(f"{source}: {e}", field, lines.get(field) if field else None)


def load_network(path) -> SwingNetwork:
    p = Path(os.path.expanduser(str(path)))
    if not p.exists():
        raise NetworkFileError(f"network file not found: {p}")
    return parse_network(p.read_text(encoding="utf-8"), source=str(p))


def network_to_dict(net: SwingNetwork, sparse: Optional[bool] = None) -> Dict[str, Any]:
    """Serializable form; couplings written as triplets when most entries are zero.

    In triplet form phase shifts are kept only where the coupling is nonzero.
    """
    if sparse is None:
        sparse = np.count_nonzero(net.coupling) < 0.5 * net.n * net.n

    def mat(m):
        if not sparse:
            return m.tolist()
        ii, jj = np.nonzero(net.coupling)
        return {"format": "triplets", "symmetric": False,
                "entries": [[int(i), int(j), float(m[i, j])] for i, j in zip(ii, jj)]}

    return {
        "n": net.n,
        "omega_r": net.omega_r,
        "inertia": net.inertia.tolist(),
        "damping": net.damping.tolist(),
        "power": net.power.tolist(),
        "coupling": mat(net.coupling),
        "phase_shift": mat(net.phase_shift),
        "output_weights": net.output_weights.tolist(),
    }


def save_network(net: SwingNetwork, path, sparse: Optional[bool] = None) -> Path:
    p = Path(os.path.expanduser(str(path)))
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8") as fh:
        yaml.safe_dump(network_to_dict(net, sparse), fh, default_flow_style=None, sort_keys=False)
    return p
