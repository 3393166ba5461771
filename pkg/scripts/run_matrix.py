#!/usr/bin/env python3
"""Run the full metric x strategy x pruning-percentage matrix and print the table.

Reuses the dataset and baseline under --out if they exist, so it composes
with run_baseline.py.  Every cell writes its schedule trace under
<out>/traces/ and one row into <out>/experiments.csv.

Example:
    python3 scripts/run_matrix.py --out runs/desk --percent 5 15 30 50 70 95
"""

import argparse

from radarprune.dataset import DatasetConfig
from radarprune.experiment import (
    DEFAULT_METRICS,
    DEFAULT_PERCENTAGES,
    DEFAULT_STRATEGIES,
    ExperimentSpec,
    run_matrix,
    run_report,
)
from radarprune.schedules import ScheduleConfig
from radarprune.train import TrainConfig


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/desk")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--per-class", type=int, default=200)
    ap.add_argument("--epochs", type=int, default=14, help="baseline epochs if not yet trained")
    ap.add_argument("--metric", nargs="+", default=list(DEFAULT_METRICS))
    ap.add_argument("--strategy", nargs="+", default=list(DEFAULT_STRATEGIES))
    ap.add_argument("--percent", type=float, nargs="+", default=list(DEFAULT_PERCENTAGES))
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    spec = ExperimentSpec(
        seed=args.seed,
        out_dir=args.out,
        dataset=DatasetConfig(per_class=args.per_class, seed=args.seed, freq_jitter_hz=2.0e6),
        train=TrainConfig(epochs=args.epochs, seed=args.seed),
        schedule=ScheduleConfig(seed=args.seed),
        metrics=tuple(args.metric),
        strategies=tuple(args.strategy),
        pruning_percentages=tuple(args.percent),
        workers=args.workers,
    )
    reports, failures = run_matrix(spec)
    print(f"{len(reports)} cells succeeded, {len(failures)} failed")
    for f in failures:
        print(f"  FAILED {f['cell']}: {f['error']}")
    print(run_report(spec))
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
