import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from gridlearn.synthetic import random_network, synthetic_network  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_network():
    """Dense asymmetric n=3 network with phase shifts."""
    return random_network(3, seed=7)


@pytest.fixture
def ring_network():
    return synthetic_network(6, topology="ring", seed=3)


@pytest.fixture
def small_config(tmp_path):
    """Config dict for a 4-oscillator generated ring on a 1 s horizon."""
    return {
        "network": {"generator": "ring", "n": 4, "seed": 1},
        "t_span": [0.0, 1.0],
        "dt": 1.0e-3,
        "initial_condition": {"kind": "random", "magnitude": 0.1},
        "seed": 0,
        "tol": 1.5e-4,
        "mu": 1.0e-3,
        "output_dir": str(tmp_path / "out"),
    }
