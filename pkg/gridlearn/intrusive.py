"""
Intrusive Galerkin reduction of the exact lifted operators:

    A_r = Phi^T A Phi,   H_r = Phi^T H (Phi kron Phi),   B_r = Phi^T B,   C_r = C Phi.

H_r is contracted entry by entry from the sparse triplets, so neither H nor
Phi kron Phi is ever formed densely.
"""
from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from gridlearn.errors import check_dim
from gridlearn.lifting import LiftedOperators
from gridlearn.opinf import ReducedQuadraticModel, compress_h
from gridlearn.pod import PodBasis

logger = logging.getLogger(__name__)

_CHUNK = 4096


def project_quadratic(ops: LiftedOperators, phi: np.ndarray) -> np.ndarray:
    """Phi^T H (Phi kron Phi) as a redundant r x r^2 matrix."""
    r = phi.shape[1]
    h_r = np.zeros((r, r * r))
    for start in range(0, ops.nnz, _CHUNK):
        sl = slice(start, start + _CHUNK)
        left = phi[ops.h_rows[sl]].T * ops.h_vals[sl]                    # r x k
        pairs = phi[ops.h_i[sl]][:, :, None] * phi[ops.h_j[sl]][:, None, :]
        h_r += left @ pairs.reshape(-1, r * r)
    return h_r


def galerkin_reduce(ops: LiftedOperators, basis: PodBasis,
                    test_basis: Optional[PodBasis] = None) -> ReducedQuadraticModel:
    """Project the lifted model onto span(Phi_r) with W_r = V_r = Phi_r."""
    if test_basis is not None and test_basis is not basis:
        raise NotImplementedError("oblique (Petrov-Galerkin) projection is not supported")
    check_dim(basis.dim == ops.dim, f"basis has {basis.dim} rows, lifted model has dimension {ops.dim}")
    phi = basis.basis

    a_r = phi.T @ ops.a @ phi
    b_r = (phi.T @ ops.b).reshape(-1, 1)
    c_r = ops.c @ phi
    h_tilde_r = compress_h(project_quadratic(ops, phi))
    logger.info("Galerkin reduction: d=%d -> r=%d (%d quadratic entries)", ops.dim, basis.r, ops.nnz)

    return ReducedQuadraticModel(
        a_r=a_r,
        h_tilde_r=h_tilde_r,
        b_r=b_r,
        c_r=c_r,
        basis_id=basis.identifier,
        source="intrusive",
    )
