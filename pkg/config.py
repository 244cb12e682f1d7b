import os
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from gridlearn.errors import ConfigError
from gridlearn.experiment import (DERIVATIVE_MODES, GENERATORS, IC_KINDS, INPUT_KINDS, ExperimentConfig,
                                  InitialCondition, InputConfig)

HERE = Path(__file__).resolve().parent


def read_config(path="config.yaml") -> dict:
    cfg_path = Path(path)
    if not cfg_path.exists():
        raise ConfigError(f"config file {cfg_path} not found")
    with cfg_path.open() as fh:
        try:
            cfg = yaml.safe_load(fh)
        except yaml.YAMLError as e:
            raise ConfigError(f"{cfg_path}: invalid YAML: {e}")
    if cfg is None:
        return {}
    if not isinstance(cfg, dict):
        raise ConfigError(f"{cfg_path}: top level must be a mapping")
    return cfg


def _expand_tildes(obj):
    """Recursively expand '~' in all string values of a Python structure."""
    if isinstance(obj, str):
        return os.path.expanduser(obj)
    if isinstance(obj, list):
        return [_expand_tildes(x) for x in obj]
    if isinstance(obj, dict):
        return {k: _expand_tildes(v) for k, v in obj.items()}
    return obj


def expand_user_config(cfg) -> str:
    """Write a tilde-expanded copy of `cfg` to a temporary YAML file and return its path."""
    tmp = tempfile.NamedTemporaryFile(
        prefix="gridlearn_config_",
        suffix=".yaml",
        delete=False,
        mode="w",
        encoding="utf-8")
    with tmp as out:
        yaml.safe_dump(_expand_tildes(cfg), out, default_flow_style=False, sort_keys=False)
    return tmp.name


def _number(value, name, kind=float):
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a {kind.__name__}, got {value!r}")


def _initial_condition(raw, name) -> InitialCondition:
    if raw is None:
        return InitialCondition()
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected a mapping")
    kind = raw.get("kind", "random")
    if kind not in IC_KINDS:
        raise ConfigError(f"{name}.kind: must be one of {IC_KINDS}, got '{kind}'")
    vec = lambda key: None if raw.get(key) is None else tuple(_number(v, f"{name}.{key}") for v in raw[key])
    ic = InitialCondition(
        kind=kind,
        magnitude=_number(raw.get("magnitude", 0.1), f"{name}.magnitude"),
        angles=vec("angles"),
        velocities=vec("velocities"),
    )
    if kind == "explicit" and ic.angles is None:
        raise ConfigError(f"{name}.angles: required for an explicit initial condition")
    if ic.magnitude < 0:
        raise ConfigError(f"{name}.magnitude: must be non-negative")
    return ic


def _input(raw) -> InputConfig:
    if raw is None:
        return InputConfig()
    if not isinstance(raw, dict):
        raise ConfigError("input: expected a mapping")
    kind = raw.get("kind", "constant")
    if kind not in INPUT_KINDS:
        raise ConfigError(f"input.kind: must be one of {INPUT_KINDS}, got '{kind}'")
    return InputConfig(
        kind=kind,
        value=_number(raw.get("value", 1.0), "input.value"),
        amplitude=_number(raw.get("amplitude", 0.0), "input.amplitude"),
        frequency=_number(raw.get("frequency", 1.0), "input.frequency"),
    )


def _resolve(path, base: Path) -> str:
    p = Path(os.path.expanduser(str(path)))
    return str(p if p.is_absolute() else base / p)


def _network(raw, base: Path):
    if isinstance(raw, dict):
        gen = raw.get("generator", "ring")
        if gen not in GENERATORS:
            raise ConfigError(f"network.generator: must be one of {GENERATORS}, got '{gen}'")
        return {
            "generator": gen,
            "n": _number(raw.get("n"), "network.n", int),
            "seed": _number(raw.get("seed", 0), "network.seed", int),
        }
    if not raw:
        raise ConfigError("network: a network file path or generator mapping is required")
    path = _resolve(raw, base)
    if not Path(path).exists():
        raise ConfigError(f"network: file {path} not found")
    return path


def _validate(cfg: ExperimentConfig) -> ExperimentConfig:
    t0, t1 = cfg.t_span
    if not t1 > t0:
        raise ConfigError(f"t_span: end {t1} must exceed start {t0}")
    if not 0 < cfg.dt < t1 - t0:
        raise ConfigError(f"dt: must satisfy 0 < dt < {t1 - t0}, got {cfg.dt}")
    if not 0 < cfg.tol < 1:
        raise ConfigError(f"tol: must lie in (0, 1), got {cfg.tol}")
    if cfg.r is not None and cfg.r < 1:
        raise ConfigError(f"r: must be a positive integer, got {cfg.r}")
    if cfg.mu < 0:
        raise ConfigError(f"mu: must be non-negative, got {cfg.mu}")
    if any(m < 0 for m in cfg.mu_sweep):
        raise ConfigError("mu_sweep: all values must be non-negative")
    if cfg.derivative_mode not in DERIVATIVE_MODES:
        raise ConfigError(f"derivative_mode: must be one of {DERIVATIVE_MODES}, got '{cfg.derivative_mode}'")
    try:
        Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"output_dir: cannot create {cfg.output_dir}: {e}")
    return cfg


def experiment_from_dict(raw: Dict[str, Any], base: Optional[Path] = None) -> ExperimentConfig:
    """Build a validated ExperimentConfig; relative paths resolve against `base`."""
    base = Path(base) if base is not None else Path.cwd()
    defaults = ExperimentConfig()
    unknown = set(raw) - set(defaults.to_dict())
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")

    t_span = raw.get("t_span", defaults.t_span)
    if not isinstance(t_span, (list, tuple)) or len(t_span) != 2:
        raise ConfigError(f"t_span: expected [start, end], got {t_span!r}")
    r = raw.get("r")
    eval_ic = raw.get("eval_initial_condition")
    logs_dir = raw.get("logs_dir")

    cfg = ExperimentConfig(
        network=_network(raw.get("network", defaults.network), base),
        t_span=(_number(t_span[0], "t_span"), _number(t_span[1], "t_span")),
        dt=_number(raw.get("dt", defaults.dt), "dt"),
        initial_condition=_initial_condition(raw.get("initial_condition"), "initial_condition"),
        input=_input(raw.get("input")),
        tol=_number(raw.get("tol", defaults.tol), "tol"),
        r=None if r is None else _number(r, "r", int),
        mu=_number(raw.get("mu", defaults.mu), "mu"),
        derivative_mode=str(raw.get("derivative_mode", defaults.derivative_mode)),
        output_dir=_resolve(raw.get("output_dir", defaults.output_dir), base),
        seed=_number(raw.get("seed", defaults.seed), "seed", int),
        logs_dir=None if logs_dir is None else _resolve(logs_dir, base),
        mu_sweep=tuple(_number(m, "mu_sweep") for m in raw.get("mu_sweep", defaults.mu_sweep)),
        eval_initial_condition=None if eval_ic is None else _initial_condition(eval_ic, "eval_initial_condition"),
    )
    return _validate(cfg)


def apply_overrides(cfg: ExperimentConfig, overrides: Optional[Dict[str, Any]]) -> ExperimentConfig:
    """Command-line overrides; keys without a value are ignored. Paths resolve against the working directory."""
    if not overrides:
        return cfg
    o = {k: v for k, v in overrides.items() if v is not None}
    changes: Dict[str, Any] = {}
    for key in ("dt", "tol", "mu"):
        if key in o:
            changes[key] = _number(o[key], key)
    for key in ("r", "seed"):
        if key in o:
            changes[key] = _number(o[key], key, int)
    if "derivative_mode" in o:
        changes["derivative_mode"] = str(o["derivative_mode"])
    if "output_dir" in o:
        changes["output_dir"] = _resolve(o["output_dir"], Path.cwd())
    if "network" in o:
        changes["network"] = _network(o["network"], Path.cwd())
    if "t_start" in o or "t_end" in o:
        changes["t_span"] = (_number(o.get("t_start", cfg.t_span[0]), "t_start"),
                             _number(o.get("t_end", cfg.t_span[1]), "t_end"))
    if "ic_magnitude" in o:
        changes["initial_condition"] = replace(cfg.initial_condition,
                                               magnitude=_number(o["ic_magnitude"], "ic_magnitude"))
    return _validate(replace(cfg, **changes))


def load_experiment(path=None, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    cfg_path = Path(path) if path is not None else HERE / "config.yaml"
    raw = _expand_tildes(read_config(cfg_path))
    cfg = experiment_from_dict(raw, base=cfg_path.resolve().parent)
    return apply_overrides(cfg, overrides)
