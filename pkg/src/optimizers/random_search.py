from ..domain.models import TrialRecord
from ..domain.search_space import sample_uniform
from .base import LedgerOptimizer


class RandomSearchOptimizer(LedgerOptimizer):
    """Uniform random search; each sampled config is evaluated K times with distinct seeds."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._current = None
        self._emitted = 0

    def suggest(self) -> TrialRecord:
        self._require_budget(1.0)
        if self._current is None or self._emitted >= self.repetitions:
            self._current = self._new_config(sample_uniform(self.space, self.rng))
            self._emitted = 0
        self._emitted += 1
        return self._issue(self._current)
