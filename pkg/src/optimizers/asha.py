from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Set, Union
import logging

import numpy as np

from ..domain.errors import EmptyLedger
from ..domain.models import BudgetAccount, Config, MethodSpec, ParamSpace, TrialRecord
from ..domain.search_space import sample_uniform
from .base import LedgerOptimizer

logger = logging.getLogger(__name__)


class RungResult(NamedTuple):
    trial_id: int
    config_id: int
    value: float


@dataclass(frozen=True)
class Promote:
    config_id: int
    to_rung: int


@dataclass(frozen=True)
class NewConfig:
    config: Config
    rung: int = 0


@dataclass
class RungLadder:
    """Successive-halving state: completed results and promotions per rung."""
    eta: int = 3
    min_fraction: float = 1.0 / 9.0
    num_rungs: int = 3
    results: List[List[RungResult]] = field(default_factory=list)
    promoted: List[Set[int]] = field(default_factory=list)

    @classmethod
    def create(cls, eta: int = 3, min_fraction: float = 1.0 / 9.0, num_rungs: int = 3) -> 'RungLadder':
        if eta < 2:
            raise ValueError(f"eta must be >= 2, got {eta}")
        if num_rungs < 1:
            raise ValueError(f"num_rungs must be >= 1, got {num_rungs}")
        if not 0.0 < min_fraction <= 1.0:
            raise ValueError(f"min_fraction must lie in (0, 1], got {min_fraction}")
        if min_fraction * eta ** (num_rungs - 1) < 1.0 - 1e-9:
            raise ValueError(
                f"top rung would train at {min_fraction * eta ** (num_rungs - 1):.4g} < 1 of full budget; "
                f"raise num_rungs or min_fraction"
            )
        return cls(eta=eta, min_fraction=min_fraction, num_rungs=num_rungs,
                   results=[[] for _ in range(num_rungs)],
                   promoted=[set() for _ in range(num_rungs)])

    @property
    def top_rung(self) -> int:
        return self.num_rungs - 1

    def budget_fraction(self, rung: int) -> float:
        if rung >= self.top_rung:
            return 1.0
        return min(1.0, self.min_fraction * self.eta ** rung)

    def record(self, rung: int, trial_id: int, config_id: int, value: float) -> None:
        self.results[rung].append(RungResult(trial_id, config_id, float(value)))

    def ranked(self, rung: int) -> List[RungResult]:
        return sorted(self.results[rung], key=lambda r: (r.value, r.trial_id))

    def next_promotion(self) -> Optional[Promote]:
        """Highest-rung config inside the top 1/eta of its rung that was not yet promoted."""
        for rung in range(self.top_rung - 1, -1, -1):
            n_top = len(self.results[rung]) // self.eta
            for result in self.ranked(rung)[:n_top]:
                if result.config_id not in self.promoted[rung]:
                    return Promote(config_id=result.config_id, to_rung=rung + 1)
        return None

    def mark_promoted(self, promotion: Promote) -> None:
        source = promotion.to_rung - 1
        if promotion.config_id in self.promoted[source]:
            raise ValueError(f"config {promotion.config_id} already promoted from rung {source}")
        self.promoted[source].add(promotion.config_id)


def asha_next_action(ladder: RungLadder, space: ParamSpace, rng: np.random.Generator) -> Union[Promote, NewConfig]:
    """Promote when possible (scanning from the top rung down), else start a new config at rung 0."""
    promotion = ladder.next_promotion()
    if promotion is not None:
        return promotion
    return NewConfig(config=sample_uniform(space, rng))


class ASHAOptimizer(LedgerOptimizer):
    """Asynchronous successive halving with training steps as the resource."""

    def __init__(self, space: ParamSpace, account: BudgetAccount, method: MethodSpec, seed: int):
        super().__init__(space, account, method, seed)
        self.ladder = RungLadder.create(method.eta, method.min_fraction, method.num_rungs)

    def suggest(self) -> TrialRecord:
        promotion = self.ladder.next_promotion()
        if promotion is not None:
            self._require_budget(self.ladder.budget_fraction(promotion.to_rung))
            self.ladder.mark_promoted(promotion)
            logger.debug(f"[{self.method.label}] promote config {promotion.config_id} to rung {promotion.to_rung}")
            return self._issue(promotion.config_id, self.ladder.budget_fraction(promotion.to_rung), promotion.to_rung)
        self._require_budget(self.ladder.budget_fraction(0))
        action = asha_next_action(self.ladder, self.space, self.rng)
        return self._issue(self._new_config(action.config), self.ladder.budget_fraction(0), 0)

    def _on_completed(self, trial: TrialRecord) -> None:
        self.ladder.record(trial.rung, trial.trial_id, trial.config_id, trial.value)

    def _selection_rung(self) -> int:
        for rung in range(self.ladder.top_rung, -1, -1):
            if self.ladder.results[rung]:
                return rung
        raise EmptyLedger(f"{self.method.label}: no completed trials")

    def select_incumbent(self) -> Config:
        """Best config at the top rung, or at the highest populated rung when the top is empty."""
        best = self.ladder.ranked(self._selection_rung())[0]
        return self.configs[best.config_id]

    def best_observed_value(self, config: Config) -> Optional[float]:
        try:
            rung = self._selection_rung()
        except EmptyLedger:
            return None
        for result in self.ladder.ranked(rung):
            if self.configs[result.config_id] == config:
                return result.value
        return None
