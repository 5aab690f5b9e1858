from typing import Dict, List, Optional
import logging

import numpy as np

from ..domain.errors import BudgetExhausted, DuplicateResult, EmptyAggregate, EmptyLedger, UnknownTrial
from ..domain.models import BudgetAccount, Config, MethodSpec, ParamSpace, TrialRecord, TrialStatus
from ..ports.optimizer_port import OptimizerPort

logger = logging.getLogger(__name__)

_SEED_LIMIT = 2 ** 63


def repeated_mean(values: List[float]) -> float:
    """Arithmetic mean of repeated evaluations of one config."""
    if len(values) == 0:
        raise EmptyAggregate("cannot average an empty list of evaluations")
    return float(np.mean(np.asarray(values, dtype=float)))


class LedgerOptimizer(OptimizerPort):
    """Trial ledger, per-config aggregation and budget accounting shared by every method."""

    def __init__(self, space: ParamSpace, account: BudgetAccount, method: MethodSpec, seed: int):
        if method.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {method.repetitions}")
        self.space = space
        self.account = account
        self.method = method
        self.seed = int(seed)
        self.rng = np.random.default_rng(self.seed)
        self.trials: List[TrialRecord] = []
        self.configs: List[Config] = []
        self.config_values: Dict[int, List[float]] = {}
        self._used_seeds: set = set()

    @property
    def repetitions(self) -> int:
        return self.method.repetitions

    def config_mean(self, config_id: int) -> float:
        return repeated_mean(self.config_values.get(config_id, []))

    def config_means(self) -> Dict[int, float]:
        return {cid: repeated_mean(vals) for cid, vals in self.config_values.items() if vals}

    def _require_budget(self, cost: float) -> None:
        if not self.account.can_afford(cost):
            raise BudgetExhausted(
                f"{self.method.label}: cost {cost:g} exceeds remaining budget {self.account.remaining:g}"
            )

    def _new_config(self, config: Config) -> int:
        self.configs.append(config)
        return len(self.configs) - 1

    def _draw_seed(self) -> int:
        while True:
            seed = int(self.rng.integers(0, _SEED_LIMIT))
            if seed not in self._used_seeds:
                self._used_seeds.add(seed)
                return seed

    def _issue(self, config_id: int, budget_fraction: float = 1.0, rung: int = -1) -> TrialRecord:
        self.account = self.account.charge(budget_fraction)
        trial = TrialRecord(
            trial_id=len(self.trials),
            config_id=config_id,
            config=self.configs[config_id],
            seed=self._draw_seed(),
            budget_fraction=budget_fraction,
            rung=rung,
        )
        self.trials.append(trial)
        logger.debug(
            f"[{self.method.label}] trial {trial.trial_id} config {config_id} "
            f"budget {budget_fraction:.4g} spent {self.account.spent:.4g}"
        )
        return trial

    def _pending(self, trial_id: int) -> TrialRecord:
        if not 0 <= trial_id < len(self.trials):
            raise UnknownTrial(trial_id)
        trial = self.trials[trial_id]
        if trial.status is not TrialStatus.PENDING:
            raise DuplicateResult(f"trial {trial_id} already {trial.status.value}")
        return trial

    def observe(self, trial_id: int, value: float) -> None:
        trial = self._pending(trial_id)
        value = float(value)
        if not np.isfinite(value):
            raise ValueError(f"trial {trial_id} reported non-finite value {value}")
        trial.value = value
        trial.status = TrialStatus.COMPLETED
        self._on_completed(trial)

    def fail(self, trial_id: int, error: str) -> None:
        trial = self._pending(trial_id)
        trial.status = TrialStatus.FAILED
        trial.error = error
        logger.warning(f"[{self.method.label}] trial {trial_id} failed: {error}")

    def _on_completed(self, trial: TrialRecord) -> None:
        self.config_values.setdefault(trial.config_id, []).append(trial.value)

    def best_observed_id(self) -> int:
        """Config id with the lowest per-config mean; ties go to the earlier config."""
        means = self.config_means()
        if not means:
            raise EmptyLedger(f"{self.method.label}: no completed trials")
        return min(means, key=lambda cid: (means[cid], cid))

    def best_observed_value(self, config: Config) -> Optional[float]:
        """Per-config mean of `config` if it was evaluated, else None."""
        for cid, candidate in enumerate(self.configs):
            if candidate == config and self.config_values.get(cid):
                return self.config_mean(cid)
        return None

    def select_incumbent(self) -> Config:
        return self.configs[self.best_observed_id()]
