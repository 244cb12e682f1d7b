"""
Operator inference for reduced quadratic models

    dx_r/dt = A_r x_r + H_r (x_r kron x_r) + B_r u,    y_r = C_r x_r.

The data matrix is  D = [X_r^T  (X_r compact-kron X_r)^T  U^T]  (S x (r + r(r+1)/2 + q))
and every column i of the stacked unknowns O = [A_r^T; H~_r^T; B_r^T] solves

    min ||D O(:, i) - Xdot_r(i, :)^T||^2 + mu ||O(:, i)||^2,

computed as the minimum-norm least-squares solution of [D; sqrt(mu) I] O = [Xdot_r^T; 0].
The 1/S weighting some formulations put on the misfit does not move the
minimizer and is left out.

Compact Kronecker ordering: entries x_i x_j for i <= j, i-major (numpy triu order).
Only the symmetric part of H_r is identifiable from x kron x data, so the
compact H~_r is the stored operator and H_r is derived from it.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import linalg as la

from gridlearn.errors import DimensionError, RankDeficiencyWarning, check_dim

logger = logging.getLogger(__name__)

DEFAULT_MU = 1e-3


def compact_size(r: int) -> int:
    return r * (r + 1) // 2


@lru_cache(maxsize=64)
def _pairs(r: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(r)


def compact_kron(x: np.ndarray) -> np.ndarray:
    """x compact-kron x; applied column-wise when x is an r x S matrix."""
    x = np.asarray(x, dtype=float)
    check_dim(x.ndim in (1, 2) and x.shape[0] >= 1, f"expected a vector or r x S matrix, got {x.shape}")
    ii, jj = _pairs(x.shape[0])
    return x[ii] * x[jj]


def expand_h(h_tilde: np.ndarray) -> np.ndarray:
    """Compact r x r(r+1)/2 operator to the redundant r x r^2 form, cross terms split in half."""
    h_tilde = np.atleast_2d(np.asarray(h_tilde, dtype=float))
    r = h_tilde.shape[0]
    check_dim(h_tilde.shape[1] == compact_size(r),
              f"compact operator for r={r} needs {compact_size(r)} columns, got {h_tilde.shape[1]}")
    ii, jj = _pairs(r)
    h = np.zeros((r, r * r))
    diag = ii == jj
    h[:, ii[diag] * r + jj[diag]] = h_tilde[:, diag]
    half = 0.5 * h_tilde[:, ~diag]
    h[:, ii[~diag] * r + jj[~diag]] = half
    h[:, jj[~diag] * r + ii[~diag]] = half
    return h


def compress_h(h: np.ndarray) -> np.ndarray:
    """Redundant r x r^2 operator to the compact form (columns (i, j) and (j, i) summed)."""
    h = np.atleast_2d(np.asarray(h, dtype=float))
    r = h.shape[0]
    check_dim(h.shape[1] == r * r, f"quadratic operator for r={r} needs {r * r} columns, got {h.shape[1]}")
    ii, jj = _pairs(r)
    out = h[:, ii * r + jj].copy()
    off = ii != jj
    out[:, off] += h[:, jj[off] * r + ii[off]]
    return out


def symmetrize_h(h: np.ndarray) -> np.ndarray:
    """Symmetric representative of a redundant quadratic operator."""
    return expand_h(compress_h(h))


@dataclass(frozen=True, eq=False)
class ReducedQuadraticModel:
    a_r: np.ndarray
    h_tilde_r: np.ndarray
    b_r: np.ndarray
    c_r: np.ndarray
    basis_id: str = ""
    source: str = "inferred"
    mu: Optional[float] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        a = np.atleast_2d(np.array(self.a_r, dtype=float))
        r = a.shape[0]
        h = np.array(self.h_tilde_r, dtype=float).reshape(r, -1)
        b = np.array(self.b_r, dtype=float).reshape(r, -1)
        c = np.array(self.c_r, dtype=float).reshape(-1, r)
        check_dim(a.shape == (r, r), f"A_r must be square, got {a.shape}")
        check_dim(h.shape == (r, compact_size(r)), f"H~_r must be {r} x {compact_size(r)}, got {h.shape}")
        for name, arr in (("a_r", a), ("h_tilde_r", h), ("b_r", b), ("c_r", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def r(self) -> int:
        return self.a_r.shape[0]

    @property
    def q(self) -> int:
        return self.b_r.shape[1]

    @property
    def p(self) -> int:
        return self.c_r.shape[0]

    @cached_property
    def h_r(self) -> np.ndarray:
        return expand_h(self.h_tilde_r)


@dataclass(frozen=True, eq=False)
class LeastSquaresProblem:
    coeff: np.ndarray
    rhs: np.ndarray
    mu: float
    r: int
    q: int

    def __post_init__(self):
        expected = self.r + compact_size(self.r) + self.q
        check_dim(self.coeff.shape[1] == expected,
                  f"data matrix needs {expected} columns for r={self.r}, q={self.q}, got {self.coeff.shape[1]}")
        check_dim(self.rhs.shape == (self.coeff.shape[0], self.r),
                  f"right-hand side must be {self.coeff.shape[0]} x {self.r}, got {self.rhs.shape}")
        if self.mu < 0:
            raise ValueError(f"mu must be non-negative, got {self.mu}")

    @property
    def num_unknowns(self) -> int:
        return self.coeff.shape[1]


@dataclass(frozen=True, eq=False)
class LeastSquaresSolution:
    stacked: np.ndarray
    a_r: np.ndarray
    h_tilde_r: np.ndarray
    b_r: np.ndarray
    rank: int
    num_unknowns: int
    cond: float
    reg_cond: float
    misfit: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.stacked))

    @property
    def rank_deficient(self) -> bool:
        return self.rank < self.num_unknowns

    def diagnostics(self) -> Dict[str, Any]:
        return {
            "rank": int(self.rank),
            "num_unknowns": int(self.num_unknowns),
            "cond": float(self.cond),
            "reg_cond": float(self.reg_cond),
            "misfit": float(self.misfit),
            "solution_norm": self.norm,
        }


def _as_inputs(U: np.ndarray) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    return U.reshape(1, -1) if U.ndim == 1 else U


def assemble_problem(X_r: np.ndarray, Xdot_r: np.ndarray, U: np.ndarray, mu: float = DEFAULT_MU) -> LeastSquaresProblem:
    X_r = np.atleast_2d(np.asarray(X_r, dtype=float))
    Xdot_r = np.atleast_2d(np.asarray(Xdot_r, dtype=float))
    U = _as_inputs(U)
    S = X_r.shape[1]
    check_dim(Xdot_r.shape == X_r.shape, f"derivative data {Xdot_r.shape} does not match state data {X_r.shape}")
    check_dim(U.shape[1] == S, f"input data has {U.shape[1]} samples, state data has {S}")
    coeff = np.hstack([X_r.T, compact_kron(X_r).T, U.T])
    return LeastSquaresProblem(coeff=coeff, rhs=Xdot_r.T.copy(), mu=float(mu), r=X_r.shape[0], q=U.shape[0])


def solve(problem: LeastSquaresProblem, columnwise: bool = False) -> LeastSquaresSolution:
    """Tikhonov-regularized least squares for all r right-hand sides.

    columnwise=True solves the r problems one at a time; the result is identical.
    """
    D, R, mu = problem.coeff, problem.rhs, problem.mu
    d = problem.num_unknowns
    sval_d = la.svdvals(D)
    # same threshold as numpy.linalg.matrix_rank
    rank = int(np.sum(sval_d > sval_d[0] * max(D.shape) * np.finfo(float).eps)) if sval_d.size else 0

    if mu > 0:
        lhs = np.vstack([D, np.sqrt(mu) * np.eye(d)])
        rhs = np.vstack([R, np.zeros((d, R.shape[1]))])
    else:
        lhs, rhs = D, R
        if rank < d:
            msg = f"data matrix is rank-deficient (rank {rank} < {d}); returning the minimum-norm solution"
            logger.warning(msg)
            warnings.warn(msg, RankDeficiencyWarning, stacklevel=2)

    if columnwise:
        cols = []
        for i in range(R.shape[1]):
            sol, _, _, sval = la.lstsq(lhs, rhs[:, i], lapack_driver="gelsd")
            cols.append(sol)
        stacked = np.column_stack(cols)
    else:
        stacked, _, _, sval = la.lstsq(lhs, rhs, lapack_driver="gelsd")

    if mu > 0 and rank < d:
        logger.info("data matrix rank %d < %d unknowns; regularized with mu=%.1e", rank, d, mu)

    cond = float(sval_d[0] / sval_d[-1]) if sval_d[-1] > 0 else np.inf
    reg_cond = float(sval[0] / sval[-1]) if sval[-1] > 0 else np.inf
    misfit = float(np.sum((D @ stacked - R) ** 2))

    r, s = problem.r, compact_size(problem.r)
    return LeastSquaresSolution(
        stacked=stacked,
        a_r=stacked[:r].T,
        h_tilde_r=stacked[r:r + s].T,
        b_r=stacked[r + s:].T,
        rank=rank,
        num_unknowns=d,
        cond=cond,
        reg_cond=reg_cond,
        misfit=misfit,
    )


def infer(X_r: np.ndarray, Xdot_r: np.ndarray, U: np.ndarray, mu: float = DEFAULT_MU,
          c_r: Optional[np.ndarray] = None, basis_id: str = "") -> ReducedQuadraticModel:
    """Learn (A_r, H_r, B_r) from reduced data; C_r is supplied, not learned."""
    problem = assemble_problem(X_r, Xdot_r, U, mu)
    logger.info("operator inference: r=%d, q=%d, S=%d, %d unknowns per row, mu=%.1e",
                problem.r, problem.q, problem.coeff.shape[0], problem.num_unknowns, mu)
    sol = solve(problem)
    logger.info("rank(data matrix)=%d of %d, cond=%.3e, misfit=%.3e", sol.rank, sol.num_unknowns, sol.cond, sol.misfit)
    if c_r is None:
        c_r = np.zeros((0, problem.r))
    c_r = np.atleast_2d(np.asarray(c_r, dtype=float))
    if c_r.size and c_r.shape[1] != problem.r:
        raise DimensionError(f"C_r must have r={problem.r} columns, got {c_r.shape}")
    return ReducedQuadraticModel(
        a_r=sol.a_r,
        h_tilde_r=sol.h_tilde_r,
        b_r=sol.b_r,
        c_r=c_r.reshape(-1, problem.r),
        basis_id=basis_id,
        source="inferred",
        mu=float(mu),
        diagnostics=sol.diagnostics(),
    )
