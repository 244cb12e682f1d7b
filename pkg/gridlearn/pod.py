"""
Proper orthogonal decomposition of lifted snapshot data.

Truncation rule: r is the smallest k with sigma_{k+1} / sigma_1 < tol (all
modes when no such k exists). Each basis column is sign-normalized so that its
largest-magnitude entry is positive.
"""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy import linalg as la

from gridlearn.errors import DegenerateDataError, DimensionError, check_dim

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PodBasis:
    basis: np.ndarray
    singular_values: np.ndarray
    r: int
    tolerance: Optional[float]

    def __post_init__(self):
        for name in ("basis", "singular_values"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        check_dim(self.basis.ndim == 2 and self.basis.shape[1] == self.r,
                  f"basis must have r={self.r} columns, got {self.basis.shape}")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def identifier(self) -> str:
        digest = hashlib.sha1(np.ascontiguousarray(self.basis).tobytes()).hexdigest()[:12]
        return f"pod-d{self.dim}-r{self.r}-{digest}"

    def truncate(self, r: int) -> "PodBasis":
        if not 1 <= r <= self.r:
            raise ValueError(f"r must lie in [1, {self.r}], got {r}")
        return PodBasis(self.basis[:, :r], self.singular_values, r, self.tolerance)

    def flip(self, k: int) -> "PodBasis":
        """Same basis with column k negated."""
        phi = self.basis.copy()
        phi[:, k] *= -1.0
        return PodBasis(phi, self.singular_values, self.r, self.tolerance)


def truncation_index(singular_values: np.ndarray, tol: float) -> int:
    sigma = np.asarray(singular_values, dtype=float)
    rel = sigma / sigma[0]
    below = np.flatnonzero(rel < tol)
    return int(below[0]) if below.size else sigma.shape[0]


def _normalize_signs(phi: np.ndarray) -> np.ndarray:
    pivots = np.argmax(np.abs(phi), axis=0)
    signs = np.sign(phi[pivots, np.arange(phi.shape[1])])
    signs[signs == 0] = 1.0
    return phi * signs


def compute_pod(X: np.ndarray, tol: float = 1.5e-4, r_override: Optional[int] = None) -> PodBasis:
    X = np.asarray(X, dtype=float)
    check_dim(X.ndim == 2, f"snapshot matrix must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DegenerateDataError("snapshot matrix contains non-finite entries")
    if r_override is None and not 0 < tol < 1:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")

    phi, sigma, _ = la.svd(X, full_matrices=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        raise DegenerateDataError("snapshot matrix is identically zero")

    if r_override is not None:
        r = int(r_override)
        if not 1 <= r <= sigma.shape[0]:
            raise ValueError(f"r_override must lie in [1, {sigma.shape[0]}], got {r}")
        logger.info("POD: r=%d (override), sigma_r+1/sigma_1=%.3e", r,
                    sigma[r] / sigma[0] if r < sigma.shape[0] else 0.0)
    else:
        r = truncation_index(sigma, tol)
        logger.info("POD: r=%d from tol=%.2e over %d singular values", r, tol, sigma.shape[0])

    return PodBasis(_normalize_signs(phi[:, :r]), sigma, r, tol)


def project(basis: PodBasis, M: np.ndarray) -> np.ndarray:
    """Phi_r^T M."""
    M = np.asarray(M, dtype=float)
    if M.shape[0] != basis.dim:
        raise DimensionError(f"data has {M.shape[0]} rows, basis has {basis.dim}")
    return basis.basis.T @ M


def reconstruct(basis: PodBasis, M_r: np.ndarray) -> np.ndarray:
    """Phi_r M_r."""
    M_r = np.asarray(M_r, dtype=float)
    if M_r.shape[0] != basis.r:
        raise DimensionError(f"reduced data has {M_r.shape[0]} rows, basis has r={basis.r}")
    return basis.basis @ M_r


def projection_error(basis: PodBasis, X: np.ndarray) -> float:
    """Squared Frobenius norm of X - Phi_r Phi_r^T X."""
    residual = X - reconstruct(basis, project(basis, X))
    return float(np.sum(residual ** 2))


def spectrum_frame(basis: PodBasis) -> pd.DataFrame:
    """Raw and normalized singular values, one row per index (1-based)."""
    sigma = basis.singular_values
    return pd.DataFrame({
        "index": np.arange(1, sigma.shape[0] + 1),
        "sigma": sigma,
        "sigma_rel": sigma / sigma[0],
        "retained": np.arange(sigma.shape[0]) < basis.r,
    })
