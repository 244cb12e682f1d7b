"""Fixed-step RK4 time integration and snapshot collection."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from gridlearn.errors import DimensionError, IntegrationDivergedError, check_dim
from gridlearn.lifting import LiftedOperators, lifted_rhs
from gridlearn.swing_model import SwingNetwork, SwingState, swing_rhs_stacked

logger = logging.getLogger(__name__)

Rhs = Callable[[np.ndarray, np.ndarray], np.ndarray]
InputSignal = Callable[[float], Union[float, np.ndarray]]

DERIVATIVE_SCHEMES = ("forward", "central")


@dataclass(frozen=True, eq=False)
class SnapshotSet:
    """Uniformly sampled trajectory: states d x S, inputs q x S, optional derivatives and outputs."""

    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    derivatives: Optional[np.ndarray] = None
    outputs: Optional[np.ndarray] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        S = times.shape[0]
        check_dim(states.shape[1] == S, f"states have {states.shape[1]} columns, times have {S}")
        check_dim(inputs.shape[1] == S, f"inputs have {inputs.shape[1]} columns, times have {S}")
        if S >= 2:
            steps = np.diff(times)
            if np.any(steps <= 0):
                raise ValueError("snapshot times must be strictly increasing")
            if np.max(np.abs(steps - steps[0])) > 1e-12 * max(abs(steps[0]), np.max(np.abs(times))):
                raise ValueError("snapshot times must be uniformly spaced")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "inputs", inputs)
        if self.derivatives is not None:
            der = np.atleast_2d(np.asarray(self.derivatives, dtype=float))
            check_dim(der.shape == states.shape, f"derivatives {der.shape} do not match states {states.shape}")
            object.__setattr__(self, "derivatives", der)
        if self.outputs is not None:
            out = np.atleast_2d(np.asarray(self.outputs, dtype=float))
            check_dim(out.shape[1] == S, f"outputs have {out.shape[1]} columns, times have {S}")
            object.__setattr__(self, "outputs", out)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    @property
    def num_samples(self) -> int:
        return self.times.shape[0]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.num_samples > 1 else 0.0

    @property
    def t_span(self) -> Tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])


# -- input signals ------------------------------------------------------------

def constant_input(value: float = 1.0) -> InputSignal:
    return lambda t: value


def sinusoid_input(value: float = 1.0, amplitude: float = 0.5, frequency: float = 1.0) -> InputSignal:
    """value + amplitude * sin(2 pi f t)."""
    return lambda t: value + amplitude * np.sin(2.0 * np.pi * frequency * t)


def _input_vector(signal: InputSignal, t: float) -> np.ndarray:
    return np.atleast_1d(np.asarray(signal(t), dtype=float))


def num_samples(t_span: Sequence[float], dt: float) -> int:
    t0, t1 = float(t_span[0]), float(t_span[1])
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not t1 > t0:
        raise ValueError(f"empty time span [{t0}, {t1}]")
    return int(round((t1 - t0) / dt)) + 1


# -- integration --------------------------------------------------------------

def integrate(rhs: Rhs, x0, t_span: Sequence[float], dt: float,
              input: Optional[InputSignal] = None, max_norm: Optional[float] = None,
              progress: bool = False) -> SnapshotSet:
    """Classical RK4 with fixed step; every step is sampled, both endpoints included.

    `rhs(x, u)` receives the state and the input vector evaluated at the stage time.
    """
    signal = input if input is not None else constant_input(1.0)
    S = num_samples(t_span, dt)
    t0 = float(t_span[0])
    times = t0 + dt * np.arange(S)

    x = np.array(x0, dtype=float).reshape(-1)
    states = np.empty((x.shape[0], S))
    u0 = _input_vector(signal, times[0])
    inputs = np.empty((u0.shape[0], S))
    states[:, 0] = x
    inputs[:, 0] = u0

    half = 0.5 * dt
    steps = range(S - 1)
    if progress:
        steps = tqdm(steps, desc="RK4", unit="step", leave=False)
    for k in steps:
        t = times[k]
        u_mid = _input_vector(signal, t + half)
        k1 = rhs(x, inputs[:, k])
        k2 = rhs(x + half * k1, u_mid)
        k3 = rhs(x + half * k2, u_mid)
        k4 = rhs(x + dt * k3, _input_vector(signal, t + dt))
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            logger.warning("integration diverged at t=%.6g (non-finite state)", times[k + 1])
            raise IntegrationDivergedError(times[k + 1])
        if max_norm is not None and np.linalg.norm(x) > max_norm:
            logger.warning("integration diverged at t=%.6g (|x| > %.1e)", times[k + 1], max_norm)
            raise IntegrationDivergedError(times[k + 1], f"state norm exceeded {max_norm:.1e}")
        states[:, k + 1] = x
        inputs[:, k + 1] = _input_vector(signal, times[k + 1])

    return SnapshotSet(times=times, states=states, inputs=inputs)


def collect_swing_snapshots(net: SwingNetwork, x0: SwingState, t_span, dt: float,
                            input: Optional[InputSignal] = None, progress: bool = False) -> SnapshotSet:
    """Simulate the nonlinear network; states are stacked (delta; ddelta), outputs C_s delta."""
    check_dim(x0.n == net.n, f"initial state has n={x0.n}, network has n={net.n}")
    logger.debug("simulating swing network n=%d on [%g, %g] with dt=%g", net.n, t_span[0], t_span[1], dt)
    snap = integrate(lambda z, u: swing_rhs_stacked(net, z, u[0]), x0.stacked(), t_span, dt,
                     input=input, progress=progress)
    check_dim(snap.inputs.shape[0] == 1, "swing networks take a scalar input")
    return replace(snap, outputs=net.output_weights @ snap.states[:net.n])


def collect_lifted_snapshots(ops: LiftedOperators, x0, t_span, dt: float,
                             input: Optional[InputSignal] = None, progress: bool = False) -> SnapshotSet:
    """Simulate the 4n-dimensional quadratic model; outputs C x."""
    x0 = getattr(x0, "values", x0)
    snap = integrate(lambda x, u: lifted_rhs(ops, x, u[0]), x0, t_span, dt,
                     input=input, progress=progress)
    return replace(snap, outputs=ops.c @ snap.states)


def lift_snapshots(snap: SnapshotSet) -> SnapshotSet:
    """Apply the lifting map column-wise to (delta; ddelta) snapshots.

    Derivative snapshots, when present, are lifted by the chain rule.
    """
    if snap.dim % 2:
        raise DimensionError(f"swing snapshots must have 2n rows, got {snap.dim}")
    n = snap.dim // 2
    delta, ddelta = snap.states[:n], snap.states[n:]
    s, c = np.sin(delta), np.cos(delta)
    lifted = np.vstack([delta, ddelta, s, c])
    derivatives = None
    if snap.derivatives is not None:
        d1, d2 = snap.derivatives[:n], snap.derivatives[n:]
        derivatives = np.vstack([d1, d2, c * d1, -s * d1])
    return replace(snap, states=lifted, derivatives=derivatives)


def derivative_snapshots(snap: SnapshotSet, scheme: str = "forward") -> SnapshotSet:
    """Finite-difference time derivatives of the states.

    forward: (x_{k+1} - x_k) / dt, last column by backward difference.
    central: (x_{k+1} - x_{k-1}) / 2 dt inside, one-sided at both ends.
    """
    if scheme not in DERIVATIVE_SCHEMES:
        raise ValueError(f"scheme must be one of {DERIVATIVE_SCHEMES}, got '{scheme}'")
    S = snap.num_samples
    if S < 2:
        raise DimensionError(f"need at least 2 snapshots for finite differences, got {S}")
    X, dt = snap.states, snap.dt
    D = np.empty_like(X)
    D[:, :-1] = (X[:, 1:] - X[:, :-1]) / dt
    D[:, -1] = D[:, -2]
    if scheme == "central" and S >= 3:
        D[:, 1:-1] = (X[:, 2:] - X[:, :-2]) / (2.0 * dt)
    return replace(snap, derivatives=D)


def exact_derivatives(snap: SnapshotSet, rhs: Rhs) -> SnapshotSet:
    """Evaluate a known right-hand side at every snapshot. Oracle use only."""
    D = np.column_stack([rhs(x, u) for x, u in zip(snap.states.T, snap.inputs.T)])
    return replace(snap, derivatives=D)


def concatenate(snaps: Sequence[SnapshotSet]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack several trajectories into one (states, derivatives, inputs) data set."""
    if any(s.derivatives is None for s in snaps):
        raise ValueError("every snapshot set needs derivatives before concatenation")
    return (np.hstack([s.states for s in snaps]),
            np.hstack([s.derivatives for s in snaps]),
            np.hstack([s.inputs for s in snaps]))
