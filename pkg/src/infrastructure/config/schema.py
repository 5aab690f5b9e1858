from pathlib import Path
from typing import List, Literal, Optional, Union
import json
import logging
import os

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ...domain.errors import ConfigError
from ...domain.models import (
    AcquisitionSettings, ExperimentSpec, MethodKind, ObjectiveKind, ObjectiveSpec, ParamSpace, SurrogateSettings,
)
from ...domain.search_space import PRESET_SPACES, preset_space, space_from_dicts
from ...objectives.synthetic import check_space
from ...optimizers.asha import RungLadder
from ...optimizers.factory import METHODS, method_spec

logger = logging.getLogger(__name__)

DEFAULT_WORKER_TIMEOUT = 600.0


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ParamSection(Section):
    name: str = Field(min_length=1)
    transform: Literal["linear", "log10"] = "linear"
    low: float
    high: float


class ObjectiveSection(Section):
    kind: Literal["noisy_quadratic_1d", "noisy_branin_2d", "noisy_branin_hetero", "external"]
    noise_sd: float = Field(default=0.0, ge=0.0, le=1.0)
    bias_scale: float = Field(default=0.5, ge=0.0)
    command: Optional[str] = None
    timeout_s: Optional[float] = Field(default=None, gt=0.0)


class MethodSection(Section):
    method: str
    label: Optional[str] = None
    repetitions: Optional[int] = Field(default=None, ge=1)
    beta: Optional[float] = Field(default=None, ge=0.0)
    mc_samples: Optional[int] = Field(default=None, ge=16)
    eta: Optional[int] = Field(default=None, ge=2)
    min_fraction: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    num_rungs: Optional[int] = Field(default=None, ge=1)

    @field_validator("method")
    @classmethod
    def known_method(cls, value: str) -> str:
        if value not in METHODS:
            raise ValueError(f"unknown method '{value}', expected one of {sorted(METHODS)}")
        return value


class BudgetSection(Section):
    capacity: float = Field(default=100.0, gt=0.0)
    checkpoints: List[float] = Field(default_factory=lambda: [25.0, 50.0, 100.0])


class EvaluationSection(Section):
    final_eval_seeds: int = Field(default=20, ge=1)
    hpo_runs: int = Field(default=1, ge=1)


class GPSection(Section):
    standardize: bool = True
    restarts: int = Field(default=10, ge=1)


class AcquisitionSection(Section):
    n_candidates: int = Field(default=1024, ge=1)
    n_refine: int = Field(default=10, ge=0)


class RunConfigFile(Section):
    """Top-level experiment configuration file."""
    space: Union[str, List[ParamSection]]
    objective: ObjectiveSection
    methods: List[MethodSection] = Field(min_length=1)
    budget: BudgetSection = Field(default_factory=BudgetSection)
    evaluation: EvaluationSection = Field(default_factory=EvaluationSection)
    master_seed: int = Field(default=0, ge=0, lt=2 ** 64)
    workers: int = Field(default=1, ge=1)
    deterministic: bool = False
    gp: GPSection = Field(default_factory=GPSection)
    acquisition: AcquisitionSection = Field(default_factory=AcquisitionSection)

    @field_validator("space")
    @classmethod
    def known_preset(cls, value):
        if isinstance(value, str) and value not in PRESET_SPACES:
            raise ValueError(f"unknown preset space '{value}', expected one of {sorted(PRESET_SPACES)}")
        return value


def _format_errors(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        where = ".".join(str(p) for p in item.get("loc", ())) or "<root>"
        if item.get("type") == "extra_forbidden":
            parts.append(f"unknown key '{where}'")
        else:
            parts.append(f"{where}: {item.get('msg')}")
    return "; ".join(parts)


def parse_run_config(raw: Union[str, bytes, dict]) -> RunConfigFile:
    try:
        if isinstance(raw, dict):
            return RunConfigFile.model_validate(raw)
        return RunConfigFile.model_validate_json(raw)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {_format_errors(e)}")


def load_run_config(path: Union[str, Path]) -> RunConfigFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read configuration '{path}': {e.strerror or e}")
    try:
        json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"configuration '{path}' is not valid JSON: {e}")
    return parse_run_config(text)


def _space(config: RunConfigFile) -> ParamSpace:
    if isinstance(config.space, str):
        return preset_space(config.space)
    return space_from_dicts(p.model_dump() for p in config.space)


def worker_timeout(config: RunConfigFile) -> float:
    if config.objective.timeout_s is not None:
        return config.objective.timeout_s
    raw = os.getenv("SEEDTUNE_WORKER_TIMEOUT")
    if raw:
        try:
            return float(raw)
        except ValueError:
            logger.warning(f"Ignoring non-numeric SEEDTUNE_WORKER_TIMEOUT={raw!r}")
    return DEFAULT_WORKER_TIMEOUT


def build_experiments(config: RunConfigFile, seed: Optional[int] = None,
                      deterministic: Optional[bool] = None) -> List[ExperimentSpec]:
    """One ExperimentSpec per method block; CLI overrides win over file values."""
    try:
        space = _space(config)
        objective = ObjectiveSpec(
            kind=ObjectiveKind(config.objective.kind),
            noise_sd=config.objective.noise_sd,
            bias_scale=config.objective.bias_scale,
            command=config.objective.command,
            timeout_s=worker_timeout(config),
        )
        if objective.kind is not ObjectiveKind.EXTERNAL:
            check_space(objective.kind, space)
        specs = []
        for block in config.methods:
            knobs = block.model_dump(exclude={"method"})
            method = method_spec(block.method, **knobs)
            if method.kind is MethodKind.ASHA:
                RungLadder.create(method.eta, method.min_fraction, method.num_rungs)
            specs.append(ExperimentSpec(
                space=space,
                objective=objective,
                method=method,
                capacity=config.budget.capacity,
                checkpoints=tuple(config.budget.checkpoints),
                final_eval_seeds=config.evaluation.final_eval_seeds,
                hpo_runs=config.evaluation.hpo_runs,
                master_seed=config.master_seed if seed is None else int(seed),
                workers=config.workers,
                deterministic=config.deterministic if deterministic is None else deterministic,
                surrogate=SurrogateSettings(standardize=config.gp.standardize, restarts=config.gp.restarts),
                acquisition=AcquisitionSettings(
                    n_candidates=config.acquisition.n_candidates, n_refine=config.acquisition.n_refine,
                ),
            ))
    except (ValueError, KeyError) as e:
        raise ConfigError(f"invalid configuration: {e}")

    labels = [s.method.label for s in specs]
    duplicates = sorted({label for label in labels if labels.count(label) > 1})
    if duplicates:
        raise ConfigError(f"method labels must be unique, repeated: {duplicates}")
    return specs
