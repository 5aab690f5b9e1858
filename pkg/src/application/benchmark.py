from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy.stats import bootstrap

from ..domain.models import ExperimentReport, ExperimentSpec, ObjectiveKind, ObjectiveSpec, ParamSpec
from ..domain.search_space import build_space
from ..infrastructure.storage.results_log import ResultsLog
from ..optimizers.factory import method_spec
from .experiment_runner import ExperimentRunner

logger = logging.getLogger(__name__)

# (expected better, expected worse) by median regret at the last checkpoint
DIRECTIONS = (("bo_qnei", "random"), ("random", "random_x5"), ("bo_qnei", "bo_ei"))


@dataclass(frozen=True)
class MedianCI:
    median: float
    low: float
    high: float
    runs: int


@dataclass(frozen=True)
class DirectionCheck:
    better: str
    worse: str
    better_stats: MedianCI
    worse_stats: MedianCI

    @property
    def holds(self) -> bool:
        return self.better_stats.median <= self.worse_stats.median

    def describe(self) -> str:
        b, w = self.better_stats, self.worse_stats
        return (f"{'OK  ' if self.holds else 'MISS'} median regret {self.better} <= {self.worse}: "
                f"{b.median:.4f} vs {w.median:.4f} "
                f"(CIs {b.low:.4f}-{b.high:.4f} / {w.low:.4f}-{w.high:.4f})")


def median_ci(values: Sequence[float], seed: int) -> MedianCI:
    """Median with a 95% percentile-bootstrap interval."""
    data = np.asarray(values, dtype=float)
    m = float(np.median(data))
    if data.size < 2 or np.all(data == data[0]):
        return MedianCI(m, m, m, int(data.size))
    result = bootstrap((data,), np.median, confidence_level=0.95, n_resamples=2000,
                       method="percentile", random_state=seed)
    return MedianCI(m, float(result.confidence_interval.low), float(result.confidence_interval.high),
                    int(data.size))


def final_checkpoint(report: ExperimentReport) -> float:
    return max(r.checkpoint for r in report.records)


def regrets_at(report: ExperimentReport, method: str, checkpoint: float) -> List[float]:
    return [r.regret for r in report.records
            if r.method == method and r.checkpoint == checkpoint and r.regret is not None]


def regret_stats(report: ExperimentReport, methods: Sequence[str], seed: int) -> Dict[str, MedianCI]:
    final = final_checkpoint(report)
    stats = {}
    for method in methods:
        values = regrets_at(report, method, final)
        if values:
            stats[method] = median_ci(values, seed)
    return stats


def check_directions(stats: Dict[str, MedianCI],
                     directions: Sequence[Tuple[str, str]] = DIRECTIONS) -> List[DirectionCheck]:
    """Direction checks for every pair whose two methods both ran."""
    return [DirectionCheck(better, worse, stats[better], stats[worse])
            for better, worse in directions if better in stats and worse in stats]


def median_optimism_gap(report: ExperimentReport, method: str = "random") -> Optional[float]:
    """Median of best_observed minus final_mean at the last checkpoint; positive means optimistic."""
    final = final_checkpoint(report)
    gaps = [r.optimism_gap for r in report.records
            if r.method == method and r.checkpoint == final and r.optimism_gap is not None]
    if not gaps:
        return None
    return -float(np.median(gaps))


async def run_benchmark(methods: Sequence[str], runs: int, noise_sd: float, seed: int, out: Path,
                        capacity: float = 100.0,
                        checkpoints: Tuple[float, ...] = (25.0, 50.0, 100.0)) -> ExperimentReport:
    """Every method on noisy Branin with a shared master seed; events go to out/results.jsonl."""
    space = build_space([ParamSpec.create("x1", "linear", 0.0, 1.0), ParamSpec.create("x2", "linear", 0.0, 1.0)])
    objective = ObjectiveSpec(kind=ObjectiveKind.NOISY_BRANIN_2D, noise_sd=noise_sd)
    report = ExperimentReport()
    with ResultsLog(Path(out) / "results.jsonl") as log:
        runner = ExperimentRunner(log)
        for name in methods:
            spec = ExperimentSpec(space=space, objective=objective, method=method_spec(name),
                                  capacity=capacity, checkpoints=tuple(checkpoints),
                                  hpo_runs=runs, master_seed=seed)
            report.extend(await runner.run_experiment(spec))
    logger.info(f"Benchmark finished: {len(report.records)} records over {len(methods)} method(s)")
    return report
