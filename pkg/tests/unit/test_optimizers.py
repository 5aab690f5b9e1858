from dataclasses import replace

import numpy as np
import pytest

from src.domain.errors import BudgetExhausted, DuplicateResult, EmptyAggregate, EmptyLedger, UnknownTrial
from src.domain.models import BudgetAccount, MethodKind, TrialStatus, charge_budget
from src.domain.search_space import to_unit
from src.optimizers.asha import ASHAOptimizer
from src.optimizers.base import repeated_mean
from src.optimizers.bayes_opt import BayesOptOptimizer
from src.optimizers.factory import METHODS, create_optimizer, method_spec
from src.optimizers.random_search import RandomSearchOptimizer
from tests.test_utils import unit_space


def _optimizer(name, capacity=100.0, seed=0, dimension=1, **overrides):
    return create_optimizer(method_spec(name, **overrides), unit_space(dimension),
                            BudgetAccount.create(capacity), seed)


def _loss(unit):
    return float(np.sum((unit - 0.3) ** 2))


def _drive(optimizer, steps):
    for _ in range(steps):
        trial = optimizer.suggest()
        optimizer.observe(trial.trial_id, _loss(to_unit(optimizer.space, trial.config)))


def test_repeated_mean():
    """Test repeated evaluations are averaged and an empty list is rejected"""
    assert repeated_mean([1.0, 2.0, 6.0]) == pytest.approx(3.0)
    assert repeated_mean([4.0]) == 4.0
    with pytest.raises(EmptyAggregate):
        repeated_mean([])


def test_random_repetition_pattern():
    """Test random_x3 repeats each config three times with distinct seeds"""
    optimizer = _optimizer("random_x3", capacity=9.0)
    trials = [optimizer.suggest() for _ in range(9)]
    assert [t.config_id for t in trials] == [0, 0, 0, 1, 1, 1, 2, 2, 2]
    assert len({t.seed for t in trials}) == 9
    assert all(0 <= t.seed < 2 ** 63 for t in trials)
    assert optimizer.account.spent == pytest.approx(9.0)


def test_budget_exhausted_when_trial_does_not_fit():
    """Test a full-budget trial is refused with 0.5 remaining"""
    optimizer = _optimizer("random")
    optimizer.account = replace(optimizer.account, spent=99.5)
    with pytest.raises(BudgetExhausted):
        optimizer.suggest()
    assert optimizer.trials == []


def test_spend_never_exceeds_capacity():
    """Test suggest stops at the capacity for every method"""
    for name in ("random", "random_x5", "asha"):
        optimizer = _optimizer(name, capacity=7.0)
        with pytest.raises(BudgetExhausted):
            while True:
                trial = optimizer.suggest()
                optimizer.observe(trial.trial_id, 1.0)
        assert optimizer.account.spent <= 7.0 + BudgetAccount.TOLERANCE


def test_result_errors():
    """Test unknown trial ids and duplicate results are rejected"""
    optimizer = _optimizer("random")
    trial = optimizer.suggest()
    with pytest.raises(UnknownTrial):
        optimizer.observe(5, 1.0)
    optimizer.observe(trial.trial_id, 1.0)
    with pytest.raises(DuplicateResult):
        optimizer.observe(trial.trial_id, 2.0)
    with pytest.raises(DuplicateResult):
        optimizer.fail(trial.trial_id, "late")


def test_non_finite_value_rejected():
    """Test NaN observations never reach the ledger"""
    optimizer = _optimizer("random")
    trial = optimizer.suggest()
    with pytest.raises(ValueError):
        optimizer.observe(trial.trial_id, float("nan"))
    assert trial.status is TrialStatus.PENDING


def test_failed_trial_keeps_budget_and_skips_aggregate():
    """Test a failed trial stays charged and is ignored by the per-config mean"""
    optimizer = _optimizer("random_x3")
    first, second = optimizer.suggest(), optimizer.suggest()
    optimizer.fail(first.trial_id, "WorkerError: diverged")
    optimizer.observe(second.trial_id, 0.4)
    assert optimizer.account.spent == pytest.approx(2.0)
    assert optimizer.config_mean(0) == pytest.approx(0.4)
    assert first.status is TrialStatus.FAILED and first.error == "WorkerError: diverged"


def test_incumbent_is_lowest_mean():
    """Test the best observed config has the lowest per-config mean"""
    optimizer = _optimizer("random_x3")
    values = [3.0, 1.0, 2.0, 0.5, 0.6, 0.4, 1.0, 1.0, 1.0]
    for value in values:
        optimizer.observe(optimizer.suggest().trial_id, value)
    assert optimizer.best_observed_id() == 1
    assert optimizer.select_incumbent() == optimizer.configs[1]
    assert optimizer.best_observed_value(optimizer.configs[1]) == pytest.approx(0.5)


def test_incumbent_needs_a_completed_trial():
    """Test an empty ledger has no incumbent"""
    optimizer = _optimizer("random")
    optimizer.suggest()
    with pytest.raises(EmptyLedger):
        optimizer.select_incumbent()


def test_bo_initial_design_is_random():
    """Test BO samples max(5, 2d) configs before fitting a model"""
    optimizer = _optimizer("bo_ei", dimension=3)
    assert optimizer.initial_design == 6
    _drive(optimizer, 6)
    assert optimizer.model is None
    _drive(optimizer, 1)
    assert optimizer.model is not None


def test_bo_refits_on_every_new_config():
    """Test each acquired config comes from a model fit on all completed configs so far"""
    optimizer = _optimizer("bo_ei")
    _drive(optimizer, 6)
    first = optimizer.model
    _drive(optimizer, 1)
    assert optimizer.model is not first
    assert first.dataset.size == 5
    assert optimizer.model.dataset.size == 6


def test_bo_repetitions_share_a_config():
    """Test bo_ei_x3 evaluates each acquired config three times"""
    optimizer = _optimizer("bo_ei_x3")
    _drive(optimizer, 21)
    assert [t.config_id for t in optimizer.trials] == [i // 3 for i in range(21)]
    assert optimizer.dataset().size == 7


def test_bo_converges_on_smooth_objective():
    """Test BO recommends a config near the minimizer of a noise-free quadratic"""
    for name in ("bo_ei", "bo_lcb", "bo_qnei"):
        optimizer = _optimizer(name, seed=4)
        _drive(optimizer, 12)
        assert abs(optimizer.select_incumbent()["x"] - 0.3) < 0.1, name


def test_bo_incumbent_is_reproducible():
    """Test selecting the incumbent twice from the same ledger gives the same config"""
    optimizer = _optimizer("bo_qnei", seed=2)
    _drive(optimizer, 8)
    assert optimizer.select_incumbent() == optimizer.select_incumbent()


def test_same_seed_same_trials():
    """Test two optimizers with the same seed issue identical trial sequences"""
    for name in ("random", "asha", "bo_ei"):
        a, b = _optimizer(name, seed=11), _optimizer(name, seed=11)
        _drive(a, 8)
        _drive(b, 8)
        assert [(t.config, t.seed, t.budget_fraction) for t in a.trials] == \
               [(t.config, t.seed, t.budget_fraction) for t in b.trials]


def test_factory_methods():
    """Test every method name builds the matching optimizer class"""
    expected = {
        MethodKind.RANDOM_SEARCH: RandomSearchOptimizer,
        MethodKind.ASHA: ASHAOptimizer,
        MethodKind.BO_EI: BayesOptOptimizer,
        MethodKind.BO_LCB: BayesOptOptimizer,
        MethodKind.BO_QNEI: BayesOptOptimizer,
    }
    for name, (kind, repetitions) in METHODS.items():
        optimizer = _optimizer(name)
        assert isinstance(optimizer, expected[kind])
        assert optimizer.repetitions == repetitions


def test_method_overrides():
    """Test method_spec applies knob overrides and rejects unknown names"""
    spec = method_spec("bo_lcb", beta=0.5, label="lcb_low", repetitions=None)
    assert (spec.beta, spec.label, spec.repetitions) == (0.5, "lcb_low", 1)
    with pytest.raises(KeyError):
        method_spec("grid")


def test_bo_rejects_non_bo_method():
    """Test a BO optimizer cannot be built for a random-search method"""
    with pytest.raises(ValueError):
        BayesOptOptimizer(unit_space(1), BudgetAccount.create(10), method_spec("random"), 0)


def test_matched_budget_at_capacity_100():
    """Test random x1 runs 100 trials, random x5 runs 20 configs x 5 and ASHA spends within one agent of the capacity"""
    for name in ("random", "random_x5", "asha"):
        optimizer = _optimizer(name, capacity=100.0, seed=1)
        with pytest.raises(BudgetExhausted):
            while True:
                trial = optimizer.suggest()
                optimizer.observe(trial.trial_id, _loss(to_unit(optimizer.space, trial.config)))
        assert 99.0 - 1e-9 <= optimizer.account.spent <= 100.0 + 1e-9, name
        if name == "random":
            assert len(optimizer.trials) == 100
        if name == "random_x5":
            assert len(optimizer.configs) == 20
            assert all(len(v) == 5 for v in optimizer.config_values.values())


def test_charge_budget():
    """Test charges add fractions and an overdraft leaves the account unchanged"""
    account = BudgetAccount.create(3.0)
    for fraction in [1 / 9] * 9 + [1 / 3] * 3 + [1.0]:
        account = charge_budget(account, fraction)
    assert account.spent == pytest.approx(3.0)

    small = BudgetAccount.create(1.0)
    small = charge_budget(small, 0.5)
    with pytest.raises(BudgetExhausted):
        charge_budget(small, 1.0)
    assert small.spent == 0.5
    with pytest.raises(ValueError):
        charge_budget(small, 0.0)
