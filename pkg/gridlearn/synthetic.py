"""
Seeded synthetic networks for tests, oracles and desk-scale experiments.

Parameter ranges (per oscillator i, coupled pair (i, j)):

    omega_r   2*pi*60 rad/s
    J_i       U(1.5, 2.5)
    D_i       J_i * U(6, 10)          (decay rate D_i / 4 J_i of 1.5..2.5 1/s)
    B_i       0.05 + N(0, 0.02)       (net positive power: the network drifts at a common frequency)
    K_ij      ring:      U(0.15, 0.25) to both neighbours, plus chords to i + n/2
              complete:  U(0.5, 1.0) / n
    gamma_ij  U(0, 0.1), symmetric
"""
from __future__ import annotations

import numpy as np

from gridlearn.swing_model import SwingNetwork, mean_output_weights

TOPOLOGIES = ("ring", "complete")


def synthetic_network(n: int, topology: str = "ring", seed: int = 0,
                      phase_shifts: bool = True) -> SwingNetwork:
    if topology not in TOPOLOGIES:
        raise ValueError(f"topology must be one of {TOPOLOGIES}, got '{topology}'")
    rng = np.random.default_rng(seed)

    inertia = rng.uniform(1.5, 2.5, n)
    damping = inertia * rng.uniform(6.0, 10.0, n)
    power = 0.05 + rng.normal(0.0, 0.02, n)

    coupling = np.zeros((n, n))
    if n > 1:
        if topology == "ring":
            for i in range(n):
                j = (i + 1) % n
                if i != j:
                    coupling[i, j] = coupling[j, i] = rng.uniform(0.15, 0.25)
            if n >= 6:
                for i in range(n // 2):
                    j = i + n // 2
                    coupling[i, j] = coupling[j, i] = 0.08
        else:
            upper = np.triu(rng.uniform(0.5, 1.0, (n, n)) / n, k=1)
            coupling = upper + upper.T

    if phase_shifts:
        upper = np.triu(rng.uniform(0.0, 0.1, (n, n)), k=1)
        phase_shift = upper + upper.T
    else:
        phase_shift = np.zeros((n, n))

    return SwingNetwork(
        n=n,
        omega_r=2.0 * np.pi * 60.0,
        inertia=inertia,
        damping=damping,
        coupling=coupling,
        phase_shift=phase_shift,
        power=power,
        output_weights=mean_output_weights(n),
    )


def random_network(n: int, seed: int = 0) -> SwingNetwork:
    """Dense random network with general (asymmetric) couplings and phase shifts, for property checks."""
    rng = np.random.default_rng(seed)
    coupling = rng.uniform(0.0, 2.0, (n, n))
    np.fill_diagonal(coupling, 0.0)
    return SwingNetwork(
        n=n,
        omega_r=rng.uniform(50.0, 400.0),
        inertia=rng.uniform(0.5, 5.0, n),
        damping=rng.uniform(0.0, 3.0, n),
        coupling=coupling,
        phase_shift=rng.uniform(-0.5, 0.5, (n, n)),
        power=rng.normal(0.0, 1.0, n),
        output_weights=rng.normal(0.0, 1.0, (2, n)),
    )
