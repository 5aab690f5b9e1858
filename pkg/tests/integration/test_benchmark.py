import pytest

from src.application.benchmark import (
    MedianCI, check_directions, median_ci, median_optimism_gap, regret_stats, run_benchmark,
)
from src.infrastructure.storage.results_log import read_events

METHODS = ["random", "random_x5", "bo_ei"]


@pytest.fixture
async def small_benchmark(tmp_path):
    report = await run_benchmark(METHODS, runs=3, noise_sd=0.2, seed=5, out=tmp_path,
                                 capacity=20.0, checkpoints=(10.0, 20.0))
    return report, tmp_path / "results.jsonl"


@pytest.mark.asyncio
async def test_benchmark_logs_optimism_gap(small_benchmark):
    """Test every final evaluation logs final_mean minus best_observed as its optimism gap"""
    report, log_path = small_benchmark
    assert report.succeeded
    events = read_events(log_path, "final_evaluation")
    assert len(events) == len(METHODS) * 3 * 2
    for event in events:
        assert event["optimism_gap"] == pytest.approx(event["final_mean"] - event["best_observed"])
    gap = median_optimism_gap(report)
    assert gap is not None
    assert gap == pytest.approx(-sorted(
        r.optimism_gap for r in report.records if r.method == "random" and r.checkpoint == 20.0
    )[1])


@pytest.mark.asyncio
async def test_benchmark_direction_report(small_benchmark):
    """Test regret statistics cover every method and only pairs that both ran are checked"""
    report, _ = small_benchmark
    stats = regret_stats(report, METHODS, seed=5)
    assert set(stats) == set(METHODS)
    for s in stats.values():
        assert s.runs == 3
        assert s.low <= s.median <= s.high
        assert s.median >= 0.0
    checks = check_directions(stats)
    assert [(c.better, c.worse) for c in checks] == [("random", "random_x5")]
    assert checks[0].describe().split()[0] in ("OK", "MISS")


def test_median_ci_degenerate_inputs():
    """Test a single value or identical values give a zero-width interval"""
    assert median_ci([0.4], seed=0) == MedianCI(0.4, 0.4, 0.4, 1)
    assert median_ci([2.0, 2.0, 2.0], seed=0) == MedianCI(2.0, 2.0, 2.0, 3)
    wide = median_ci([0.1, 0.5, 0.9, 0.3, 0.7], seed=0)
    assert wide.low <= 0.5 <= wide.high
