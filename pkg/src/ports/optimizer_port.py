from abc import ABC, abstractmethod
from typing import Optional

from ..domain.models import Config, TrialRecord


class OptimizerPort(ABC):
    """Base interface for all hyperparameter search strategies."""

    @abstractmethod
    def suggest(self) -> TrialRecord:
        """Issue the next trial, charging its cost to the budget account."""
        pass

    @abstractmethod
    def observe(self, trial_id: int, value: float) -> None:
        """Record the (minimization) objective value of a pending trial."""
        pass

    @abstractmethod
    def fail(self, trial_id: int, error: str) -> None:
        """Mark a pending trial as failed; its budget stays spent."""
        pass

    @abstractmethod
    def select_incumbent(self) -> Config:
        """Return the configuration currently deemed best."""
        pass


class ObjectivePort(ABC):
    """Interface for anything that turns (config, seed, budget) into a loss."""

    @abstractmethod
    async def evaluate(self, config: Config, seed: int, budget_fraction: float = 1.0) -> float:
        """Evaluate one trial and return its loss (lower is better)."""
        pass

    def true_loss(self, config: Config) -> Optional[float]:
        """Noise-free loss, when the objective knows it."""
        return None

    def optimum_loss(self) -> Optional[float]:
        """Global minimum of the noise-free loss, when known."""
        return None

    async def close(self) -> None:
        """Release worker processes or other resources."""
        pass
