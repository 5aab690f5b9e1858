from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Any, List, Mapping, Optional, Tuple
import hashlib
import json

import numpy as np

from .errors import BudgetExhausted, InvalidBounds, OutOfBounds


class Transform(Enum):
    LINEAR = "linear"
    LOG10 = "log10"


class AcqKind(Enum):
    EI = "ei"
    LCB = "lcb"
    QNEI = "qnei"


class MethodKind(Enum):
    RANDOM_SEARCH = "random_search"
    BO_EI = "bo_ei"
    BO_LCB = "bo_lcb"
    BO_QNEI = "bo_qnei"
    ASHA = "asha"


class ObjectiveKind(Enum):
    NOISY_QUADRATIC_1D = "noisy_quadratic_1d"
    NOISY_BRANIN_2D = "noisy_branin_2d"
    NOISY_BRANIN_HETERO = "noisy_branin_hetero"
    EXTERNAL = "external"


class TrialStatus(Enum):
    PENDING = "pending"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass(frozen=True)
class ParamSpec:
    """One continuous hyperparameter, bounds given in transformed space."""
    name: str
    transform: Transform
    low: float
    high: float

    @classmethod
    def create(cls, name: str, transform: str | Transform, low: float, high: float) -> 'ParamSpec':
        return cls(name=name, transform=Transform(transform), low=float(low), high=float(high))

    def to_raw(self, value: float) -> float:
        if self.transform is Transform.LOG10:
            return float(10.0 ** value)
        return float(value)


@dataclass(frozen=True)
class ParamSpace:
    """Ordered box of parameters; the order fixes unit-cube coordinates."""
    params: Tuple[ParamSpec, ...]

    @property
    def dimension(self) -> int:
        return len(self.params)

    @property
    def names(self) -> List[str]:
        return [p.name for p in self.params]

    @property
    def lows(self) -> np.ndarray:
        return np.array([p.low for p in self.params], dtype=float)

    @property
    def highs(self) -> np.ndarray:
        return np.array([p.high for p in self.params], dtype=float)


@dataclass(frozen=True)
class Config:
    """A point in a ParamSpace, values in transformed space."""
    values: Mapping[str, float]

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def __hash__(self) -> int:
        return hash(self.key())

    def key(self) -> Tuple[Tuple[str, float], ...]:
        return tuple(sorted((k, float(v)) for k, v in self.values.items()))

    def canonical_bytes(self) -> bytes:
        """Stable byte encoding used for seed-noise hashing."""
        return json.dumps(dict(self.key()), sort_keys=True, separators=(",", ":")).encode("utf8")

    def to_dict(self) -> Dict[str, float]:
        return {k: float(v) for k, v in self.values.items()}


def stable_hash64(*parts: bytes) -> int:
    """64-bit unsigned hash that does not depend on PYTHONHASHSEED."""
    digest = hashlib.blake2b(digest_size=8)
    for part in parts:
        digest.update(len(part).to_bytes(8, "little"))
        digest.update(part)
    return int.from_bytes(digest.digest(), "little")


@dataclass(frozen=True)
class Dataset:
    """Observed (unit-cube point, objective value) pairs, minimization convention."""
    points: np.ndarray
    values: np.ndarray

    @classmethod
    def create(cls, points: Any, values: Any) -> 'Dataset':
        vals = np.asarray(values, dtype=float).reshape(-1)
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            # a flat sequence is one coordinate per observation
            pts = pts.reshape(vals.shape[0], -1) if vals.shape[0] else pts.reshape(0, 0)
        if pts.shape[0] != vals.shape[0]:
            raise ValueError(f"{pts.shape[0]} points but {vals.shape[0]} values")
        if np.any(pts < 0.0) or np.any(pts > 1.0):
            raise OutOfBounds("dataset points must lie in the unit cube")
        if not np.all(np.isfinite(vals)):
            raise ValueError("dataset values must be finite")
        return cls(points=pts, values=vals)

    @property
    def size(self) -> int:
        return int(self.values.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.points.shape[1])


@dataclass(frozen=True)
class GPHyperparams:
    """Matern 5/2 ARD kernel parameters and homoscedastic noise, standardized units."""
    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float

    @classmethod
    def from_log(cls, theta: np.ndarray) -> 'GPHyperparams':
        theta = np.asarray(theta, dtype=float)
        return cls(
            lengthscales=np.exp(theta[:-2]),
            signal_variance=float(np.exp(theta[-2])),
            noise_variance=float(np.exp(theta[-1])),
        )

    def to_log(self) -> np.ndarray:
        return np.concatenate([
            np.log(np.asarray(self.lengthscales, dtype=float)),
            [np.log(self.signal_variance), np.log(self.noise_variance)],
        ])


@dataclass(frozen=True)
class PosteriorPrediction:
    """Posterior moments at one point, original output units."""
    mean: float
    variance: float
    includes_observation_noise: bool


@dataclass(frozen=True)
class SurrogateSettings:
    standardize: bool = True
    restarts: int = 10
    jitter_start: float = 1e-9
    jitter_max: float = 1e-4
    lengthscale_bounds: Tuple[float, float] = (1e-3, 10.0)
    signal_variance_bounds: Tuple[float, float] = (1e-4, 100.0)
    noise_variance_bounds: Tuple[float, float] = (1e-8, 10.0)


@dataclass(frozen=True)
class AcqSpec:
    """Acquisition selector and its knobs."""
    kind: AcqKind
    beta: float = 2.0
    mc_samples: int = 128
    mc_seed: int = 0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.kind is AcqKind.QNEI and self.mc_samples < 16:
            raise ValueError(f"qNEI needs at least 16 MC samples, got {self.mc_samples}")


@dataclass(frozen=True)
class AcquisitionSettings:
    n_candidates: int = 1024
    n_refine: int = 10


@dataclass(frozen=True)
class Incumbent:
    """Minimum observed value of the current dataset."""
    value: float

    @classmethod
    def from_dataset(cls, data: Dataset) -> 'Incumbent':
        return cls(value=float(np.min(data.values)))


@dataclass
class TrialRecord:
    """One objective evaluation in the trial ledger."""
    trial_id: int
    config_id: int
    config: Config
    seed: int
    budget_fraction: float = 1.0
    rung: int = -1
    value: Optional[float] = None
    status: TrialStatus = TrialStatus.PENDING
    error: Optional[str] = None


@dataclass(frozen=True)
class BudgetAccount:
    """Agent-equivalent spend ledger."""
    capacity: float
    spent: float = 0.0
    checkpoints: Tuple[float, ...] = ()

    # absorbs float drift from summing fractions like 1/9
    TOLERANCE = 1e-9

    @classmethod
    def create(cls, capacity: float, checkpoints: Optional[List[float]] = None) -> 'BudgetAccount':
        points = tuple(float(c) for c in (checkpoints or [capacity]))
        if capacity <= 0:
            raise InvalidBounds(f"capacity must be positive, got {capacity}")
        if any(b <= a for a, b in zip(points, points[1:])):
            raise InvalidBounds(f"checkpoints must be strictly increasing: {points}")
        if points and (points[0] <= 0 or points[-1] > capacity + cls.TOLERANCE):
            raise InvalidBounds(f"checkpoints must lie in (0, {capacity}]: {points}")
        return cls(capacity=float(capacity), spent=0.0, checkpoints=points)

    @property
    def remaining(self) -> float:
        return self.capacity - self.spent

    def can_afford(self, cost: float) -> bool:
        return self.spent + cost <= self.capacity + self.TOLERANCE

    def charge(self, budget_fraction: float) -> 'BudgetAccount':
        if not 0.0 < budget_fraction <= 1.0:
            raise ValueError(f"budget fraction must lie in (0, 1], got {budget_fraction}")
        if not self.can_afford(budget_fraction):
            raise BudgetExhausted(
                f"cost {budget_fraction:g} exceeds remaining budget {self.remaining:g}"
            )
        return replace(self, spent=self.spent + budget_fraction)


def charge_budget(account: BudgetAccount, budget_fraction: float) -> BudgetAccount:
    return account.charge(budget_fraction)


@dataclass(frozen=True)
class ObjectiveSpec:
    """Which objective to evaluate and how noisy it is."""
    kind: ObjectiveKind
    noise_sd: float = 0.0
    bias_scale: float = 0.5
    command: Optional[str] = None
    timeout_s: float = 600.0

    def __post_init__(self):
        if not 0.0 <= self.noise_sd <= 1.0:
            raise ValueError(f"noise_sd must lie in [0, 1], got {self.noise_sd}")
        if self.kind is ObjectiveKind.EXTERNAL and not (self.command or "").strip():
            raise ValueError("external objective requires a non-empty command")


@dataclass(frozen=True)
class MethodSpec:
    """An optimizer and its knobs, as named in a config method block."""
    label: str
    kind: MethodKind
    repetitions: int = 1
    beta: float = 2.0
    mc_samples: int = 128
    eta: int = 3
    min_fraction: float = 1.0 / 9.0
    num_rungs: int = 3

    @property
    def acquisition(self) -> Optional[AcqKind]:
        return {
            MethodKind.BO_EI: AcqKind.EI,
            MethodKind.BO_LCB: AcqKind.LCB,
            MethodKind.BO_QNEI: AcqKind.QNEI,
        }.get(self.kind)


@dataclass(frozen=True)
class ExperimentSpec:
    """A full benchmark run definition for one method."""
    space: ParamSpace
    objective: ObjectiveSpec
    method: MethodSpec
    capacity: float = 100.0
    checkpoints: Tuple[float, ...] = (25.0, 50.0, 100.0)
    final_eval_seeds: int = 20
    hpo_runs: int = 1
    master_seed: int = 0
    workers: int = 1
    deterministic: bool = False
    surrogate: SurrogateSettings = field(default_factory=SurrogateSettings)
    acquisition: AcquisitionSettings = field(default_factory=AcquisitionSettings)

    def __post_init__(self):
        if self.final_eval_seeds < 1:
            raise ValueError("final_eval_seeds must be >= 1")
        if self.hpo_runs < 1:
            raise ValueError("hpo_runs must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        BudgetAccount.create(self.capacity, list(self.checkpoints))


@dataclass(frozen=True)
class CheckpointRecord:
    """Outcome of one (run, checkpoint) pair, reward framing (higher is better)."""
    method: str
    run_index: int
    checkpoint: float
    config: Config
    final_mean: float
    true_value: Optional[float]
    regret: Optional[float]
    best_observed: Optional[float]
    trials_used: int
    spent: float

    @property
    def optimism_gap(self) -> Optional[float]:
        if self.best_observed is None:
            return None
        return self.final_mean - self.best_observed


@dataclass
class ExperimentReport:
    """Checkpoint records of every run plus the runs that aborted."""
    records: List[CheckpointRecord] = field(default_factory=list)
    failures: List[Dict[str, Any]] = field(default_factory=list)

    def extend(self, other: 'ExperimentReport') -> None:
        self.records.extend(other.records)
        self.failures.extend(other.failures)

    @property
    def succeeded(self) -> bool:
        return not self.failures
