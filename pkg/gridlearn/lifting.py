"""
Exact quadratic lifting of the swing equations.

The lifting map T(delta, ddelta) = (delta, ddelta, sin delta, cos delta) = (x1, x2, x3, x4)
turns the swing dynamics into

    dx/dt = A x + H (x kron x) + B u,    y = C x

with, for oscillator i (m_i = w_R / 2 J_i, s = sin, c = cos):

    dx1_i = x2_i
    dx2_i = -(D_i / 2 J_i) x2_i + m_i B_i u
            - m_i sum_{j != i} K_ij [ cos(g_ij) (x3_i x4_j - x4_i x3_j) - sin(g_ij) (x4_i x4_j + x3_i x3_j) ]
    dx3_i = x4_i x2_i
    dx4_i = -x3_i x2_i

which follows from sin(a - b - g) = (s_a c_b - c_a s_b) cos g - (c_a c_b + s_a s_b) sin g.

Layout actually assembled: each coupled pair (i, j) contributes its own four
products to row n + i, so the per-oscillator blocks of the quadratic operator
hold one entry per neighbour rather than the single diagonal K_ii entry a
block-diagonal drawing suggests. The input column carries the inverse mass,
B = (0, M_s^-1 B_s, 0, 0). Both are pinned by the exactness check against the
chain-rule derivative (`chain_rule_derivative`).

H is kept as (row, i, j, value) triplets; column i * 4n + j of the dense
4n x 16n^2 matrix multiplies x_i x_j (zero-based), and the dense form is never
built for evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Tuple, Union

import numpy as np
from scipy import sparse

from gridlearn.errors import DimensionError, check_dim
from gridlearn.swing_model import SwingNetwork, swing_rhs_stacked


@dataclass(frozen=True, eq=False)
class LiftedState:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.shape[0] % 4:
            raise DimensionError(f"lifted state length must be divisible by 4, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0] // 4

    def block(self, k: int) -> np.ndarray:
        """Block k in 1..4: delta, ddelta, sin delta, cos delta."""
        n = self.n
        return self.values[(k - 1) * n:k * n]


def lift_state(delta, delta_dot) -> LiftedState:
    delta = np.asarray(delta, dtype=float)
    delta_dot = np.asarray(delta_dot, dtype=float)
    check_dim(delta.ndim == 1 and delta.shape == delta_dot.shape,
              f"delta {delta.shape} and delta_dot {delta_dot.shape} must be equal-length vectors")
    return LiftedState(np.concatenate([delta, delta_dot, np.sin(delta), np.cos(delta)]))


def lift_columns(Z: np.ndarray) -> np.ndarray:
    """Apply the lifting map to every column of a 2n x S matrix of stacked (delta; ddelta)."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] % 2:
        raise DimensionError(f"state snapshots must have 2n rows, got shape {Z.shape}")
    n = Z.shape[0] // 2
    delta = Z[:n]
    return np.vstack([delta, Z[n:], np.sin(delta), np.cos(delta)])


def unlift(X: np.ndarray, from_trig: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """Angles and velocities of lifted states (a 4n vector or 4n x S matrix).

    from_trig=True reads the angles off atan2(x3, x4), shifted by whole turns
    onto the branch nearest the delta block.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim not in (1, 2) or X.shape[0] % 4:
        raise DimensionError(f"lifted states must have 4n rows, got shape {X.shape}")
    n = X.shape[0] // 4
    delta, ddelta = X[:n], X[n:2 * n]
    if from_trig:
        wrapped = np.arctan2(X[2 * n:3 * n], X[3 * n:])
        delta = wrapped + 2.0 * np.pi * np.round((delta - wrapped) / (2.0 * np.pi))
    return delta, ddelta


@dataclass(frozen=True, eq=False)
class LiftedOperators:
    a: np.ndarray
    h_rows: np.ndarray
    h_i: np.ndarray
    h_j: np.ndarray
    h_vals: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        for name in ("a", "h_rows", "h_i", "h_j", "h_vals", "b", "c"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        d = self.a.shape[0]
        check_dim(self.a.shape == (d, d) and d % 4 == 0, f"A must be 4n x 4n, got {self.a.shape}")
        check_dim(self.b.shape == (d,), f"B must have length {d}, got {self.b.shape}")
        check_dim(self.c.ndim == 2 and self.c.shape[1] == d, f"C must be p x {d}, got {self.c.shape}")
        check_dim(self.h_rows.shape == self.h_i.shape == self.h_j.shape == self.h_vals.shape,
                  "H triplet arrays must have equal length")

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @property
    def n(self) -> int:
        return self.dim // 4

    @property
    def nnz(self) -> int:
        return self.h_vals.shape[0]

    @cached_property
    def _scatter(self) -> sparse.csr_matrix:
        # sums per-entry products into their rows
        return sparse.csr_matrix(
            (np.ones(self.nnz), (self.h_rows, np.arange(self.nnz))), shape=(self.dim, self.nnz))

    def h_matrix(self) -> sparse.csr_matrix:
        """H as a sparse 4n x (4n)^2 matrix (column i * 4n + j)."""
        d = self.dim
        cols = self.h_i.astype(np.int64) * d + self.h_j
        return sparse.csr_matrix((self.h_vals, (self.h_rows, cols)), shape=(d, d * d))

    def quadratic(self, x: np.ndarray) -> np.ndarray:
        """H (x kron x) for a vector, or column-wise for a 4n x S matrix."""
        if x.ndim == 1:
            w = self.h_vals * x[self.h_i] * x[self.h_j]
            return np.bincount(self.h_rows, weights=w, minlength=self.dim)
        w = self.h_vals[:, None] * x[self.h_i] * x[self.h_j]
        return np.asarray(self._scatter @ w)

    def with_h_values(self, h_vals: np.ndarray) -> "LiftedOperators":
        return LiftedOperators(self.a, self.h_rows, self.h_i, self.h_j, h_vals, self.b, self.c)


def assemble_lifted_operators(net: SwingNetwork) -> LiftedOperators:
    n = net.n
    d = 4 * n
    i1, i2, i3, i4 = 0, n, 2 * n, 3 * n
    m = net.omega_r / (2.0 * net.inertia)        # M_s^-1 diagonal

    a = np.zeros((d, d))
    idx = np.arange(n)
    a[i1 + idx, i2 + idx] = 1.0
    a[i2 + idx, i2 + idx] = -net.damping_diag * m

    b = np.zeros(d)
    b[i2:i2 + n] = net.power * m

    c = np.zeros((net.p, d))
    c[:, i1:i1 + n] = net.output_weights

    rows, ii, jj, vals = [], [], [], []

    def add(row, p, q, v):
        if v != 0.0:
            rows.append(row)
            ii.append(p)
            jj.append(q)
            vals.append(v)

    for i in range(n):
        for j in np.flatnonzero(net.coupling[i]):
            if j == i:
                continue
            k = net.coupling[i, j] * m[i]
            cg = np.cos(net.phase_shift[i, j])
            sg = np.sin(net.phase_shift[i, j])
            row = i2 + i
            add(row, i3 + i, i4 + j, -k * cg)
            add(row, i4 + i, i3 + j, k * cg)
            add(row, i4 + i, i4 + j, k * sg)
            add(row, i3 + i, i3 + j, k * sg)
        add(i3 + i, i4 + i, i2 + i, 1.0)
        add(i4 + i, i3 + i, i2 + i, -1.0)

    return LiftedOperators(
        a=a,
        h_rows=np.asarray(rows, dtype=np.int64),
        h_i=np.asarray(ii, dtype=np.int64),
        h_j=np.asarray(jj, dtype=np.int64),
        h_vals=np.asarray(vals, dtype=float),
        b=b,
        c=c,
    )


def lifted_rhs(ops: LiftedOperators, x: Union[LiftedState, np.ndarray], u: float) -> np.ndarray:
    """A x + H (x kron x) + B u."""
    x = x.values if isinstance(x, LiftedState) else np.asarray(x, dtype=float)
    check_dim(x.shape == (ops.dim,), f"lifted state must have length {ops.dim}, got {x.shape}")
    return ops.a @ x + ops.quadratic(x) + ops.b * u


def lifted_rhs_columns(ops: LiftedOperators, X: np.ndarray, U: np.ndarray) -> np.ndarray:
    """lifted_rhs applied to each column of X with the matching scalar input in U (1 x S or S)."""
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float).reshape(-1)
    check_dim(X.ndim == 2 and X.shape[0] == ops.dim, f"X must have {ops.dim} rows, got {X.shape}")
    check_dim(U.shape[0] == X.shape[1], f"U has {U.shape[0]} samples, X has {X.shape[1]}")
    return ops.a @ X + ops.quadratic(X) + np.outer(ops.b, U)


def chain_rule_derivative(net: SwingNetwork, delta, delta_dot, u: float) -> np.ndarray:
    """d/dt of the lifted state along the nonlinear dynamics."""
    delta = np.asarray(delta, dtype=float)
    delta_dot = np.asarray(delta_dot, dtype=float)
    check_dim(delta.shape == (net.n,) and delta_dot.shape == (net.n,),
              f"delta and delta_dot must have length {net.n}")
    accel = swing_rhs_stacked(net, np.concatenate([delta, delta_dot]), u)[net.n:]
    return np.concatenate([delta_dot, accel, np.cos(delta) * delta_dot, -np.sin(delta) * delta_dot])


def chain_rule_columns(net: SwingNetwork, Z: np.ndarray, U: np.ndarray) -> np.ndarray:
    """chain_rule_derivative for every column of a 2n x S matrix of stacked (delta; ddelta)."""
    U = np.asarray(U, dtype=float).reshape(-1)
    check_dim(Z.shape == (2 * net.n, U.shape[0]), f"Z must be {2 * net.n} x {U.shape[0]}, got {Z.shape}")
    return np.column_stack([chain_rule_derivative(net, z[:net.n], z[net.n:], uk)
                            for z, uk in zip(Z.T, U)])


def lifted_blocks_pattern(ops: LiftedOperators) -> dict:
    """Block indices (1..4) touched by each operator, for structural checks."""
    n = ops.n
    blk = lambda k: int(k) // n + 1
    a_rows, a_cols = np.nonzero(ops.a)
    return {
        "a": sorted({(blk(r), blk(c)) for r, c in zip(a_rows, a_cols)}),
        "h": sorted({(blk(r), blk(p), blk(q)) for r, p, q in zip(ops.h_rows, ops.h_i, ops.h_j)}),
        "b": sorted({blk(r) for r in np.flatnonzero(ops.b)}),
        "c": sorted({blk(k) for k in np.flatnonzero(np.any(ops.c != 0, axis=0))}),
    }
