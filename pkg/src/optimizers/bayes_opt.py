from typing import Optional
import logging

import numpy as np

from ..domain.acquisitions import maximize_acquisition, recommend_best_predicted
from ..domain.gp import GPModel, fit_gp
from ..domain.models import (
    AcqSpec, AcquisitionSettings, BudgetAccount, Config, Dataset, MethodSpec, ParamSpace,
    SurrogateSettings, TrialRecord,
)
from ..domain.search_space import sample_uniform, to_unit
from .base import LedgerOptimizer

logger = logging.getLogger(__name__)

_SEED_LIMIT = 2 ** 63


class BayesOptOptimizer(LedgerOptimizer):
    """GP-based Bayesian optimization with EI, LCB or qNEI.

    Repeated evaluations of a config are averaged and the GP sees one point per config.
    The model is refit on every suggestion after the initial design.
    """

    def __init__(self, space: ParamSpace, account: BudgetAccount, method: MethodSpec, seed: int,
                 surrogate: SurrogateSettings = SurrogateSettings(),
                 acquisition: AcquisitionSettings = AcquisitionSettings()):
        super().__init__(space, account, method, seed)
        if method.acquisition is None:
            raise ValueError(f"method {method.kind.value} is not a Bayesian optimization method")
        self.surrogate = surrogate
        self.acquisition = acquisition
        self.initial_design = max(5, 2 * space.dimension)
        self.model: Optional[GPModel] = None
        self._current: Optional[int] = None
        self._emitted = 0

    def dataset(self) -> Dataset:
        """Per-config means of completed trials, in unit-cube coordinates."""
        means = self.config_means()
        ids = sorted(means)
        points = np.array([to_unit(self.space, self.configs[cid]) for cid in ids]).reshape(len(ids), self.space.dimension)
        return Dataset.create(points, [means[cid] for cid in ids])

    def _fit(self, seed: int) -> GPModel:
        model = fit_gp(self.dataset(), self.surrogate, seed=seed)
        self.model = model
        return model

    def _next_config(self) -> Config:
        if len(self.configs) < self.initial_design or len(self.config_means()) < 2:
            return sample_uniform(self.space, self.rng)
        fit_seed = int(self.rng.integers(0, _SEED_LIMIT))
        mc_seed = int(self.rng.integers(0, _SEED_LIMIT))
        model = self._fit(fit_seed)
        spec = AcqSpec(kind=self.method.acquisition, beta=self.method.beta,
                       mc_samples=self.method.mc_samples, mc_seed=mc_seed)
        return maximize_acquisition(model, self.space, spec, self.rng, self.acquisition)

    def suggest(self) -> TrialRecord:
        self._require_budget(1.0)
        if self._current is None or self._emitted >= self.repetitions:
            self._current = self._new_config(self._next_config())
            self._emitted = 0
        self._emitted += 1
        return self._issue(self._current)

    def select_incumbent(self) -> Config:
        """Minimizer of the posterior mean of a model refit on all completed configs."""
        if len(self.config_means()) < 2:
            return super().select_incumbent()
        # a pure function of the ledger, so checkpoints are reproducible
        rng = np.random.default_rng([self.seed, len(self.trials)])
        model = self._fit(int(rng.integers(0, _SEED_LIMIT)))
        return recommend_best_predicted(model, self.space, rng, self.acquisition)
