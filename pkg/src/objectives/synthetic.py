from functools import lru_cache
from typing import Optional
import logging

import numpy as np

from ..domain.models import Config, ObjectiveKind, ObjectiveSpec, ParamSpace, stable_hash64
from ..domain.search_space import to_unit
from ..ports.optimizer_port import ObjectivePort

logger = logging.getLogger(__name__)

BRANIN_MINIMUM = 0.397887357729738
QUADRATIC_OPTIMUM = 0.6

_DIMENSIONS = {
    ObjectiveKind.NOISY_QUADRATIC_1D: 1,
    ObjectiveKind.NOISY_BRANIN_2D: 2,
    ObjectiveKind.NOISY_BRANIN_HETERO: 2,
}


def quadratic(unit: np.ndarray) -> np.ndarray:
    """(x - 0.6)^2 on the unit interval."""
    unit = np.atleast_2d(unit)
    return (unit[:, 0] - QUADRATIC_OPTIMUM) ** 2


def branin(unit: np.ndarray) -> np.ndarray:
    """Branin on [-5, 10] x [0, 15], addressed through the unit square."""
    unit = np.atleast_2d(unit)
    x1 = -5.0 + 15.0 * unit[:, 0]
    x2 = 15.0 * unit[:, 1]
    b = 5.1 / (4 * np.pi ** 2)
    c = 5 / np.pi
    r = 6
    s = 10
    t = 1 / (8 * np.pi)
    return (x2 - b * x1 ** 2 + c * x1 - r) ** 2 + s * (1 - t) * np.cos(x1) + s


@lru_cache(maxsize=None)
def value_range(kind: ObjectiveKind) -> float:
    """max - min of the noise-free loss over the unit box."""
    if kind is ObjectiveKind.NOISY_QUADRATIC_1D:
        return max(QUADRATIC_OPTIMUM, 1.0 - QUADRATIC_OPTIMUM) ** 2
    grid = np.linspace(0.0, 1.0, 1001)
    u1, u2 = np.meshgrid(grid, grid, indexing="ij")
    values = branin(np.column_stack([u1.ravel(), u2.ravel()]))
    return float(values.max() - BRANIN_MINIMUM)


def noise_multiplier(kind: ObjectiveKind, unit: np.ndarray) -> float:
    """Heteroscedastic variant scales seed noise from 0.25 to 1.75 along the first coordinate."""
    if kind is ObjectiveKind.NOISY_BRANIN_HETERO:
        return 0.25 + 1.5 * float(unit[0])
    return 1.0


def noise_draw(config: Config, seed: int) -> float:
    """Standard normal pinned by (config, seed), like an RL seed pins a training run."""
    stream = stable_hash64(config.canonical_bytes(), (int(seed) % 2 ** 64).to_bytes(8, "little"))
    return float(np.random.default_rng(stream).standard_normal())


def true_loss(kind: ObjectiveKind, space: ParamSpace, config: Config) -> float:
    unit = to_unit(space, config)
    if kind is ObjectiveKind.NOISY_QUADRATIC_1D:
        return float(quadratic(unit)[0])
    return float(branin(unit)[0])


def evaluate_objective(spec: ObjectiveSpec, space: ParamSpace, config: Config, seed: int,
                       budget_fraction: float = 1.0) -> float:
    """Noisy loss of a synthetic objective; pure in (spec, config, seed, budget_fraction)."""
    if spec.kind not in _DIMENSIONS:
        raise ValueError(f"{spec.kind.value} is not a synthetic objective")
    if not 0.0 < budget_fraction <= 1.0:
        raise ValueError(f"budget fraction must lie in (0, 1], got {budget_fraction}")
    unit = to_unit(space, config)
    loss = true_loss(spec.kind, space, config)
    if spec.noise_sd == 0.0 and budget_fraction == 1.0:
        return loss
    span = value_range(spec.kind)
    sd = spec.noise_sd * span * noise_multiplier(spec.kind, unit) / np.sqrt(budget_fraction)
    # truncated training looks worse than full training
    bias = (1.0 - budget_fraction) * spec.bias_scale * span
    return float(loss + bias + sd * noise_draw(config, seed))


def check_space(kind: ObjectiveKind, space: ParamSpace) -> None:
    expected = _DIMENSIONS.get(kind)
    if expected is None:
        raise ValueError(f"{kind.value} is not a synthetic objective")
    if space.dimension != expected:
        raise ValueError(f"{kind.value} needs a {expected}-d space, got {space.dimension}-d")


class SyntheticObjective(ObjectivePort):
    """Seed-deterministic noisy test function."""

    def __init__(self, spec: ObjectiveSpec, space: ParamSpace):
        check_space(spec.kind, space)
        self.spec = spec
        self.space = space

    async def evaluate(self, config: Config, seed: int, budget_fraction: float = 1.0) -> float:
        return evaluate_objective(self.spec, self.space, config, seed, budget_fraction)

    def true_loss(self, config: Config) -> Optional[float]:
        return true_loss(self.spec.kind, self.space, config)

    def optimum_loss(self) -> Optional[float]:
        if self.spec.kind is ObjectiveKind.NOISY_QUADRATIC_1D:
            return 0.0
        return BRANIN_MINIMUM
