"""Desk-scale comparison on noisy Branin: median regret per method with bootstrap CIs.

Checks three directions at the final checkpoint (bo_qnei <= random, random <= random_x5,
bo_qnei <= bo_ei) and the optimism gap of random search's recommendation.
"""
import argparse
import asyncio
import sys
from pathlib import Path

from dotenv import load_dotenv

# Add project root to Python path
project_root = str(Path(__file__).parent.parent)
if project_root not in sys.path:
    sys.path.append(project_root)

from src.application.benchmark import (
    check_directions, median_optimism_gap, regret_stats, run_benchmark,
)
from src.application.summary import markdown_tables, summarize
from src.infrastructure.cli.main import configure_logging

load_dotenv()


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=20)
    parser.add_argument("--noise-sd", type=float, default=0.2)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--capacity", type=float, default=100.0)
    parser.add_argument("--out", default="benchmark_out")
    parser.add_argument("--methods", nargs="+",
                        default=["random", "random_x3", "random_x5", "asha", "bo_ei", "bo_lcb", "bo_qnei"])
    args = parser.parse_args()
    configure_logging()

    out = Path(args.out)
    checkpoints = (args.capacity / 4, args.capacity / 2, args.capacity)
    report = asyncio.run(run_benchmark(args.methods, args.runs, args.noise_sd, args.seed, out,
                                       args.capacity, checkpoints))
    if not report.records:
        print("no checkpoint records produced", file=sys.stderr)
        return 1
    print(markdown_tables(summarize(report)))

    stats = regret_stats(report, args.methods, args.seed)
    for method, s in stats.items():
        print(f"{method:>10}: median regret {s.median:.4f}  95% CI [{s.low:.4f}, {s.high:.4f}]  (n={s.runs})")
    checks = check_directions(stats)
    for check in checks:
        print(check.describe())

    gap = median_optimism_gap(report)
    if gap is not None:
        print(f"random optimism gap (best observed minus final mean): median {gap:.4f}")
    print(f"Results log: {out / 'results.jsonl'}")
    return 1 if any(not c.holds for c in checks) or not report.succeeded else 0


if __name__ == "__main__":
    sys.exit(main())
