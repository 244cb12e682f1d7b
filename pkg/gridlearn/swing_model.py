"""
Coupled-oscillator swing-equation network.

Each oscillator i obeys

    (2 J_i / w_R) d2delta_i + (D_i / w_R) ddelta_i + sum_{j != i} K_ij sin(delta_i - delta_j - gamma_ij) = B_i u

or, stacked, M_s d2delta + D_s ddelta + f_s(delta) = B_s u with output y = C_s delta.
The network constants are assumed precomputed (power flow + Kron reduction happen
elsewhere); this module only evaluates the dynamics.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from gridlearn.errors import DimensionError, check_dim

ArrayLike = Union[np.ndarray, list, tuple]


def _frozen(a, ndim: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SwingNetwork:
    """Physical parameters of an n-oscillator network. Immutable after construction."""

    n: int
    omega_r: float
    inertia: np.ndarray
    damping: np.ndarray
    coupling: np.ndarray
    phase_shift: np.ndarray
    power: np.ndarray
    output_weights: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise DimensionError(f"n must be positive, got {self.n}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "omega_r", float(self.omega_r))
        for name, ndim in (("inertia", 1), ("damping", 1), ("power", 1),
                           ("coupling", 2), ("phase_shift", 2), ("output_weights", 2)):
            object.__setattr__(self, name, _frozen(getattr(self, name), ndim, name))

        check_dim(self.inertia.shape == (n,), f"inertia must have length {n}, got {self.inertia.shape}")
        check_dim(self.damping.shape == (n,), f"damping must have length {n}, got {self.damping.shape}")
        check_dim(self.power.shape == (n,), f"power must have length {n}, got {self.power.shape}")
        check_dim(self.coupling.shape == (n, n), f"coupling must be {n}x{n}, got {self.coupling.shape}")
        check_dim(self.phase_shift.shape == (n, n), f"phase_shift must be {n}x{n}, got {self.phase_shift.shape}")
        check_dim(self.output_weights.ndim == 2 and self.output_weights.shape[1] == n,
                  f"output_weights must be p x {n}, got {self.output_weights.shape}")

        if self.omega_r <= 0:
            raise ValueError(f"omega_r must be positive, got {self.omega_r}")
        if np.any(self.inertia <= 0):
            raise ValueError("inertia must be strictly positive (M_s must be invertible)")
        if np.any(self.damping < 0):
            raise ValueError("damping must be non-negative")
        if np.any(self.coupling < 0):
            raise ValueError("coupling must be non-negative")
        if np.any(np.diag(self.coupling) != 0):
            raise ValueError("coupling must have a zero diagonal")

    @property
    def p(self) -> int:
        return self.output_weights.shape[0]

    @property
    def mass(self) -> np.ndarray:
        """Diagonal of M_s = diag(2 J_i / w_R)."""
        return 2.0 * self.inertia / self.omega_r

    @property
    def damping_diag(self) -> np.ndarray:
        """Diagonal of D_s = diag(D_i / w_R)."""
        return self.damping / self.omega_r

    def mass_matrix(self) -> np.ndarray:
        return np.diag(self.mass)

    def damping_matrix(self) -> np.ndarray:
        return np.diag(self.damping_diag)


@dataclass(frozen=True, eq=False)
class SwingState:
    angles: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "angles", _frozen(self.angles, 1, "angles"))
        object.__setattr__(self, "velocities", _frozen(self.velocities, 1, "velocities"))
        check_dim(self.angles.shape == self.velocities.shape,
                  f"angles {self.angles.shape} and velocities {self.velocities.shape} differ in length")

    @property
    def n(self) -> int:
        return self.angles.shape[0]

    def stacked(self) -> np.ndarray:
        """(delta; ddelta) as one length-2n vector."""
        return np.concatenate([self.angles, self.velocities])

    @classmethod
    def from_stacked(cls, z: ArrayLike) -> "SwingState":
        z = np.asarray(z, dtype=float)
        if z.ndim != 1 or z.shape[0] % 2:
            raise DimensionError(f"stacked state must have even length 2n, got shape {z.shape}")
        n = z.shape[0] // 2
        return cls(z[:n], z[n:])


def _check_state(net: SwingNetwork, state: SwingState) -> None:
    check_dim(state.n == net.n, f"state has n={state.n}, network has n={net.n}")


def coupling_force(net: SwingNetwork, angles: ArrayLike) -> np.ndarray:
    """f_s(delta)_i = sum_{j != i} K_ij sin(delta_i - delta_j - gamma_ij)."""
    delta = np.asarray(angles, dtype=float)
    check_dim(delta.shape == (net.n,), f"angles must have length {net.n}, got {delta.shape}")
    # zero diagonal of K removes the j == i term
    diff = delta[:, None] - delta[None, :] - net.phase_shift
    return np.sum(net.coupling * np.sin(diff), axis=1)


def swing_rhs(net: SwingNetwork, state: SwingState, u: float) -> np.ndarray:
    """First-order form: (ddelta, M_s^-1 (B_s u - D_s ddelta - f_s(delta)))."""
    _check_state(net, state)
    return swing_rhs_stacked(net, state.stacked(), u)


def swing_rhs_stacked(net: SwingNetwork, z: np.ndarray, u: float) -> np.ndarray:
    """swing_rhs on a stacked (delta; ddelta) vector, the form the integrator uses."""
    n = net.n
    check_dim(z.shape == (2 * n,), f"stacked state must have length {2 * n}, got {z.shape}")
    delta, ddelta = z[:n], z[n:]
    accel = (net.power * u - net.damping_diag * ddelta - coupling_force(net, delta)) / net.mass
    return np.concatenate([ddelta, accel])


def swing_output(net: SwingNetwork, state: SwingState) -> np.ndarray:
    """y = C_s delta."""
    _check_state(net, state)
    return net.output_weights @ state.angles


def mean_output_weights(n: int) -> np.ndarray:
    """Single output row averaging all phase angles."""
    return np.full((1, n), 1.0 / n)
