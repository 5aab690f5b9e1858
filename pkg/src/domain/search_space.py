from typing import Any, Dict, Iterable, List, Mapping, Sequence

import numpy as np

from .errors import DuplicateParam, InvalidBounds, OutOfBounds
from .models import Config, ParamSpace, ParamSpec

# tolerance for floating round-trip through the unit cube
_EPS = 1e-12

PRESET_SPACES: Dict[str, List[Dict[str, Any]]] = {
    # PPO on Cartpole-v1
    "cartpole_ppo": [
        {"name": "log_learning_rate", "transform": "log10", "low": -5.0, "high": -1.0},
        {"name": "entropy_coefficient", "transform": "linear", "low": 0.0, "high": 1.0},
        {"name": "discount_factor", "transform": "linear", "low": 0.0, "high": 1.0},
        {"name": "likelihood_ratio_clipping", "transform": "linear", "low": 0.0, "high": 1.0},
    ],
    # PPO on the inverted pendulum swing-up
    "pendulum_ppo": [
        {"name": "log_learning_rate", "transform": "log10", "low": -5.0, "high": -1.0},
        {"name": "log_entropy_coefficient", "transform": "log10", "low": -5.0, "high": 0.0},
    ],
}


def build_space(specs: Sequence[ParamSpec]) -> ParamSpace:
    """Validate parameter specs and freeze their order."""
    if not specs:
        raise InvalidBounds("a search space needs at least one parameter")
    seen = set()
    for spec in specs:
        if spec.name in seen:
            raise DuplicateParam(f"parameter '{spec.name}' declared twice")
        seen.add(spec.name)
        if not (np.isfinite(spec.low) and np.isfinite(spec.high)) or spec.low >= spec.high:
            raise InvalidBounds(f"parameter '{spec.name}' has empty interval [{spec.low}, {spec.high}]")
    return ParamSpace(params=tuple(specs))


def space_from_dicts(entries: Iterable[Mapping[str, Any]]) -> ParamSpace:
    return build_space([
        ParamSpec.create(e["name"], e.get("transform", "linear"), e["low"], e["high"])
        for e in entries
    ])


def preset_space(name: str) -> ParamSpace:
    if name not in PRESET_SPACES:
        raise KeyError(f"unknown preset space '{name}', expected one of {sorted(PRESET_SPACES)}")
    return space_from_dicts(PRESET_SPACES[name])


def sample_uniform(space: ParamSpace, rng: np.random.Generator) -> Config:
    """Draw every coordinate independently uniform on [low, high]."""
    values = rng.uniform(space.lows, space.highs)
    return Config(values=dict(zip(space.names, (float(v) for v in values))))


def validate_config(space: ParamSpace, config: Config) -> None:
    if set(config.values) != set(space.names):
        raise OutOfBounds(f"config keys {sorted(config.values)} do not match space {space.names}")
    for spec in space.params:
        value = config.values[spec.name]
        span = spec.high - spec.low
        if not np.isfinite(value) or value < spec.low - _EPS * span or value > spec.high + _EPS * span:
            raise OutOfBounds(f"{spec.name}={value} outside [{spec.low}, {spec.high}]")


def to_unit(space: ParamSpace, config: Config) -> np.ndarray:
    """Affine map of a config onto [0, 1]^d in the space's parameter order."""
    validate_config(space, config)
    values = np.array([config.values[name] for name in space.names], dtype=float)
    unit = (values - space.lows) / (space.highs - space.lows)
    return np.clip(unit, 0.0, 1.0)


def from_unit(space: ParamSpace, u: Any) -> Config:
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != space.dimension:
        raise OutOfBounds(f"expected a {space.dimension}-d unit vector, got {u.shape[0]}")
    if not np.all(np.isfinite(u)) or np.any(u < -_EPS) or np.any(u > 1.0 + _EPS):
        raise OutOfBounds(f"unit vector {u.tolist()} outside [0, 1]^{space.dimension}")
    u = np.clip(u, 0.0, 1.0)
    values = space.lows + u * (space.highs - space.lows)
    return Config(values=dict(zip(space.names, (float(v) for v in values))))


def to_raw(space: ParamSpace, config: Config) -> Dict[str, float]:
    """Values in the trainer's units, e.g. 10**x for log10 parameters."""
    validate_config(space, config)
    return {spec.name: spec.to_raw(config.values[spec.name]) for spec in space.params}
