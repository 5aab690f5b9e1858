from pathlib import Path
from typing import List, Union
import logging

from prometheus_client import CollectorRegistry, Counter, Gauge, write_to_textfile

from ...application.summary import AggregateRow
from ...domain.models import ExperimentReport

logger = logging.getLogger(__name__)


def write_text(text: str, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    return path


def write_metrics(report: ExperimentReport, aggregates: List[AggregateRow], path: Union[str, Path]) -> Path:
    """Prometheus textfile with trial counters, budget spent and reward medians."""
    registry = CollectorRegistry()
    trials = Counter("seedtune_trials", "Trials used by the final checkpoint of each run",
                     ["method"], registry=registry)
    failures = Counter("seedtune_failed_runs", "HPO runs aborted by an error", ["method"], registry=registry)
    spent = Gauge("seedtune_budget_spent", "Agent-equivalents charged by the final checkpoint",
                  ["method", "run"], registry=registry)
    median = Gauge("seedtune_final_reward_median", "Median final-evaluation reward across HPO runs",
                   ["method", "checkpoint"], registry=registry)
    regret = Gauge("seedtune_regret_median", "Median noise-free regret of the recommendation",
                   ["method", "checkpoint"], registry=registry)

    last: dict = {}
    for record in report.records:
        key = (record.method, record.run_index)
        if key not in last or record.checkpoint > last[key].checkpoint:
            last[key] = record
    for (method, run), record in last.items():
        trials.labels(method).inc(record.trials_used)
        spent.labels(method, str(run)).set(record.spent)
    for failure in report.failures:
        failures.labels(failure["method"]).inc()
    for row in aggregates:
        labels = (row.method, f"{row.checkpoint:g}")
        median.labels(*labels).set(row.median)
        if row.regret_median is not None:
            regret.labels(*labels).set(row.regret_median)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_to_textfile(str(path), registry)
    logger.debug(f"Wrote metrics for {len(last)} runs to {path}")
    return path
