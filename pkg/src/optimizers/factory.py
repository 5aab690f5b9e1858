from dataclasses import replace
from typing import Any, Dict, Tuple

from ..domain.models import (
    AcquisitionSettings, BudgetAccount, MethodKind, MethodSpec, ParamSpace, SurrogateSettings,
)
from .asha import ASHAOptimizer
from .base import LedgerOptimizer
from .bayes_opt import BayesOptOptimizer
from .random_search import RandomSearchOptimizer

# method name -> (optimizer kind, default repetitions)
METHODS: Dict[str, Tuple[MethodKind, int]] = {
    "random": (MethodKind.RANDOM_SEARCH, 1),
    "random_x3": (MethodKind.RANDOM_SEARCH, 3),
    "random_x5": (MethodKind.RANDOM_SEARCH, 5),
    "asha": (MethodKind.ASHA, 1),
    "bo_ei": (MethodKind.BO_EI, 1),
    "bo_ei_x3": (MethodKind.BO_EI, 3),
    "bo_lcb": (MethodKind.BO_LCB, 1),
    "bo_qnei": (MethodKind.BO_QNEI, 1),
}


def method_spec(name: str, **overrides: Any) -> MethodSpec:
    """Build a MethodSpec from a method name plus optional knob overrides."""
    if name not in METHODS:
        raise KeyError(f"unknown method '{name}', expected one of {sorted(METHODS)}")
    kind, repetitions = METHODS[name]
    spec = MethodSpec(label=name, kind=kind, repetitions=repetitions)
    knobs = {k: v for k, v in overrides.items() if v is not None}
    return replace(spec, **knobs) if knobs else spec


def create_optimizer(method: MethodSpec, space: ParamSpace, account: BudgetAccount, seed: int,
                     surrogate: SurrogateSettings = SurrogateSettings(),
                     acquisition: AcquisitionSettings = AcquisitionSettings()) -> LedgerOptimizer:
    if method.kind is MethodKind.RANDOM_SEARCH:
        return RandomSearchOptimizer(space, account, method, seed)
    if method.kind is MethodKind.ASHA:
        return ASHAOptimizer(space, account, method, seed)
    return BayesOptOptimizer(space, account, method, seed, surrogate, acquisition)
