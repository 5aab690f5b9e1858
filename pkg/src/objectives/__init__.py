from ..domain.models import ObjectiveKind, ObjectiveSpec, ParamSpace
from ..ports.optimizer_port import ObjectivePort
from .external import ExternalObjective
from .synthetic import BRANIN_MINIMUM, SyntheticObjective, evaluate_objective, value_range


def create_objective(spec: ObjectiveSpec, space: ParamSpace, workers: int = 1) -> ObjectivePort:
    if spec.kind is ObjectiveKind.EXTERNAL:
        return ExternalObjective(spec, space, workers=workers)
    return SyntheticObjective(spec, space)
