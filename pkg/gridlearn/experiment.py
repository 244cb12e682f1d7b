"""Typed experiment description shared by the library and the config loader."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

IC_KINDS = ("zero", "random", "explicit")
INPUT_KINDS = ("constant", "sinusoid")
DERIVATIVE_MODES = ("forward-difference", "central-difference", "exact-rhs")
GENERATORS = ("ring", "complete")


@dataclass(frozen=True)
class InitialCondition:
    """zero, seeded random angles of the given magnitude (rad) with zero velocities, or explicit vectors."""

    kind: str = "random"
    magnitude: float = 0.1
    angles: Optional[Tuple[float, ...]] = None
    velocities: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True)
class InputConfig:
    """u(t) = value, or value + amplitude * sin(2 pi frequency t)."""

    kind: str = "constant"
    value: float = 1.0
    amplitude: float = 0.0
    frequency: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    # path to a network file, or {generator: ring | complete, n: int, seed: int}
    network: Union[str, Dict[str, Any]] = "networks/ring20.yaml"
    t_span: Tuple[float, float] = (0.0, 3.0)
    dt: float = 1e-3
    initial_condition: InitialCondition = field(default_factory=InitialCondition)
    input: InputConfig = field(default_factory=InputConfig)
    tol: float = 1.5e-4
    r: Optional[int] = None
    mu: float = 1e-3
    derivative_mode: str = "forward-difference"
    output_dir: str = "results"
    seed: int = 0
    logs_dir: Optional[str] = None
    mu_sweep: Tuple[float, ...] = (0.0, 1e-6, 1e-3, 1.0)
    eval_initial_condition: Optional[InitialCondition] = None

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["t_span"] = list(self.t_span)
        d["mu_sweep"] = list(self.mu_sweep)
        for key in ("initial_condition", "eval_initial_condition"):
            ic = d.get(key)
            if ic:
                for vec in ("angles", "velocities"):
                    if ic[vec] is not None:
                        ic[vec] = list(ic[vec])
        return d
