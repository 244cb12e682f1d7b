"""Simulation and accuracy evaluation of reduced quadratic models."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from gridlearn.errors import UndefinedRelativeErrorError, check_dim
from gridlearn.opinf import ReducedQuadraticModel, compact_kron
from gridlearn.simulate import InputSignal, SnapshotSet, integrate

logger = logging.getLogger(__name__)

DIVERGENCE_NORM = 1e12


def rom_rhs(model: ReducedQuadraticModel, x_r: np.ndarray, u, compact: bool = True) -> np.ndarray:
    """A_r x_r + H_r (x_r kron x_r) + B_r u.

    compact=False evaluates the redundant r x r^2 operator instead; both agree up to round-off.
    """
    x_r = np.asarray(x_r, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    check_dim(x_r.shape == (model.r,), f"reduced state must have length {model.r}, got {x_r.shape}")
    check_dim(u.shape == (model.q,), f"input must have length {model.q}, got {u.shape}")
    if compact:
        quad = model.h_tilde_r @ compact_kron(x_r)
    else:
        quad = model.h_r @ np.kron(x_r, x_r)
    return model.a_r @ x_r + quad + model.b_r @ u


def simulate_rom(model: ReducedQuadraticModel, x_r0: np.ndarray, t_span: Sequence[float], dt: float,
                 input: Optional[InputSignal] = None, progress: bool = False) -> SnapshotSet:
    """RK4 trajectory of the reduced model with outputs C_r x_r attached.

    Raises IntegrationDivergedError once the state norm passes 1e12.
    """
    x_r0 = np.asarray(x_r0, dtype=float).reshape(-1)
    check_dim(x_r0.shape == (model.r,), f"initial reduced state must have length {model.r}, got {x_r0.shape}")
    logger.debug("simulating %s ROM r=%d on [%g, %g]", model.source, model.r, t_span[0], t_span[1])
    snap = integrate(lambda x, u: rom_rhs(model, x, u), x_r0, t_span, dt,
                     input=input, max_norm=DIVERGENCE_NORM, progress=progress)
    outputs = model.c_r @ snap.states if model.p else None
    return replace(snap, outputs=outputs)


@dataclass(frozen=True, eq=False)
class ErrorReport:
    """Relative output error e(t) = |y(t) - y_r(t)| / max_t |y(t)|."""

    linf_ref: float
    rel_error_series: np.ndarray
    max_rel_error: float
    horizon: Tuple[float, float]
    times: np.ndarray
    y: np.ndarray
    y_r: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.times,
            "y": self.y,
            "y_r": self.y_r,
            "e": self.rel_error_series,
        })


def _as_series(y, name: str) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim == 2:
        check_dim(y.shape[0] == 1, f"{name} must be a single output row, got shape {y.shape}")
        y = y[0]
    check_dim(y.ndim == 1, f"{name} must be one-dimensional, got shape {y.shape}")
    return y


def evaluate(y_full, y_rom, times) -> ErrorReport:
    y = _as_series(y_full, "y_full")
    y_r = _as_series(y_rom, "y_rom")
    t = np.asarray(times, dtype=float).reshape(-1)
    check_dim(y.shape == y_r.shape == t.shape,
              f"reference {y.shape}, reduced {y_r.shape} and times {t.shape} must have equal length")

    linf_ref = float(np.max(np.abs(y))) if y.size else 0.0
    if not linf_ref > 0.0:
        raise UndefinedRelativeErrorError("reference output is identically zero; relative error is undefined")
    e = np.abs(y - y_r) / linf_ref
    max_e = float(np.max(e))
    logger.info("max relative output error %.3e over [%g, %g]", max_e, t[0], t[-1])
    return ErrorReport(
        linf_ref=linf_ref,
        rel_error_series=e,
        max_rel_error=max_e,
        horizon=(float(t[0]), float(t[-1])),
        times=t,
        y=y,
        y_r=y_r,
    )
