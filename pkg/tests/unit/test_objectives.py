import numpy as np
import pytest

from src.domain.models import Config, ObjectiveKind, ObjectiveSpec
from src.objectives import ExternalObjective, SyntheticObjective, create_objective
from src.objectives.synthetic import (
    BRANIN_MINIMUM, branin, check_space, evaluate_objective, noise_draw, value_range,
)
from tests.test_utils import unit_space

BRANIN_MINIMIZERS = [(-np.pi, 12.275), (np.pi, 2.275), (9.42478, 2.475)]


def _branin_config(x1, x2):
    return Config(values={"x1": (x1 + 5.0) / 15.0, "x2": x2 / 15.0})


def _quadratic(noise_sd=0.1):
    return ObjectiveSpec(kind=ObjectiveKind.NOISY_QUADRATIC_1D, noise_sd=noise_sd)


def _mean_over_seeds(spec, space, config, seeds, budget_fraction=1.0):
    return float(np.mean([evaluate_objective(spec, space, config, s, budget_fraction) for s in seeds]))


def test_noise_free_quadratic_is_exact():
    """Test with zero noise the objective returns (x - 0.6)^2 for every seed"""
    space = unit_space(1)
    for seed in (0, 1, 2 ** 63 + 5):
        assert evaluate_objective(_quadratic(0.0), space, Config(values={"x": 0.2}), seed) == pytest.approx(0.16)


def test_same_seed_same_value():
    """Test an evaluation is a pure function of config and seed"""
    space = unit_space(1)
    config = Config(values={"x": 0.35})
    a = evaluate_objective(_quadratic(), space, config, 42)
    assert evaluate_objective(_quadratic(), space, config, 42) == a
    assert evaluate_objective(_quadratic(), space, config, 43) != a
    assert noise_draw(config, 7) == noise_draw(Config(values={"x": 0.35}), 7)


def test_branin_minimizers():
    """Test the three Branin minimizers reach the known minimum"""
    for x1, x2 in BRANIN_MINIMIZERS:
        unit = np.array([(x1 + 5.0) / 15.0, x2 / 15.0])
        assert float(branin(unit)[0]) == pytest.approx(BRANIN_MINIMUM, abs=1e-4)


@pytest.mark.asyncio
async def test_branin_objective_true_loss():
    """Test the noise-free loss and optimum of the Branin objective"""
    objective = SyntheticObjective(ObjectiveSpec(kind=ObjectiveKind.NOISY_BRANIN_2D, noise_sd=0.2), unit_space(2))
    config = _branin_config(np.pi, 2.275)
    assert objective.true_loss(config) == pytest.approx(BRANIN_MINIMUM, abs=1e-4)
    assert objective.optimum_loss() == BRANIN_MINIMUM
    assert await objective.evaluate(config, 3) != objective.true_loss(config)


def test_seed_average_converges():
    """Test the mean over 2000 seeds lies within four standard errors of the true loss"""
    space = unit_space(1)
    spec = _quadratic(0.1)
    config = Config(values={"x": 0.1})
    sd = 0.1 * value_range(ObjectiveKind.NOISY_QUADRATIC_1D)
    mean = _mean_over_seeds(spec, space, config, range(2000))
    assert abs(mean - 0.25) <= 4 * sd / np.sqrt(2000)


def test_partial_budget_is_biased_and_noisier():
    """Test a 1/9 training looks worse on average and varies more than full training"""
    space = unit_space(1)
    spec = _quadratic(0.1)
    config = Config(values={"x": 0.6})
    span = value_range(ObjectiveKind.NOISY_QUADRATIC_1D)
    partial = [evaluate_objective(spec, space, config, s, 1 / 9) for s in range(2000)]
    full = [evaluate_objective(spec, space, config, s, 1.0) for s in range(2000)]
    expected_bias = (8 / 9) * spec.bias_scale * span
    assert abs(np.mean(partial) - expected_bias) <= 4 * 3 * 0.1 * span / np.sqrt(2000)
    assert np.std(partial) == pytest.approx(3 * np.std(full), rel=0.15)


def test_heteroscedastic_noise_grows_with_first_coordinate():
    """Test the hetero variant is about seven times noisier at x1=1 than at x1=0"""
    space = unit_space(2)
    spec = ObjectiveSpec(kind=ObjectiveKind.NOISY_BRANIN_HETERO, noise_sd=0.1)

    def spread(config):
        true = float(branin(np.array([config["x1"], config["x2"]]))[0])
        return np.std([evaluate_objective(spec, space, config, s) - true for s in range(2000)])

    low, high = spread(Config(values={"x1": 0.0, "x2": 0.5})), spread(Config(values={"x1": 1.0, "x2": 0.5}))
    assert high / low == pytest.approx(1.75 / 0.25, rel=0.15)


def test_value_ranges():
    """Test the quadratic range is 0.36 and the Branin range is about 307.7"""
    assert value_range(ObjectiveKind.NOISY_QUADRATIC_1D) == pytest.approx(0.36)
    assert value_range(ObjectiveKind.NOISY_BRANIN_2D) == pytest.approx(307.73, rel=1e-3)


def test_dimension_mismatch_rejected():
    """Test a synthetic objective refuses a space of the wrong dimension"""
    with pytest.raises(ValueError):
        check_space(ObjectiveKind.NOISY_BRANIN_2D, unit_space(1))
    with pytest.raises(ValueError):
        SyntheticObjective(_quadratic(), unit_space(2))


def test_invalid_budget_fraction():
    """Test budget fractions outside (0, 1] are rejected"""
    with pytest.raises(ValueError):
        evaluate_objective(_quadratic(), unit_space(1), Config(values={"x": 0.5}), 0, 0.0)


def test_objective_factory():
    """Test the factory picks the worker adapter only for external objectives"""
    assert isinstance(create_objective(_quadratic(), unit_space(1)), SyntheticObjective)
    external = ObjectiveSpec(kind=ObjectiveKind.EXTERNAL, command="python worker.py")
    assert isinstance(create_objective(external, unit_space(1), workers=2), ExternalObjective)
