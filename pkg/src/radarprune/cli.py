"""Command-line interface.

Subcommands: generate, train, saliency, prune, matrix, report.  Every
command reads an ExperimentSpec JSON via --config; common fields can be
overridden by flags.  Exit code is 0 only if everything requested
succeeded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiment, schedules
from .saliency import SaliencyMetric

METRIC_CHOICES = [m.value for m in SaliencyMetric]
STRATEGY_CHOICES = [s.value for s in schedules.PruneStrategy] + sorted(
    schedules.STRATEGY_ALIASES
)


def _load_spec(args) -> experiment.ExperimentSpec:
    if args.config:
        spec = experiment.ExperimentSpec.from_json_file(args.config)
    else:
        spec = experiment.ExperimentSpec()
    if args.out is not None:
        spec.out_dir = args.out
    if args.seed is not None:
        spec.seed = args.seed
        spec.dataset.seed = args.seed
        spec.train.seed = args.seed
        spec.schedule.seed = args.seed
    if getattr(args, "per_class", None) is not None:
        spec.dataset.per_class = args.per_class
    if getattr(args, "workers", None) is not None:
        spec.workers = args.workers
    if getattr(args, "export_pgm", None) is not None:
        spec.export_pgm = args.export_pgm
    return spec


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="ExperimentSpec JSON file")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--seed", type=int, help="root seed (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radarprune",
        description="CNN filter pruning experiments on synthetic radar TF maps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize the dataset")
    _add_common(p)
    p.add_argument("--per-class", type=int, dest="per_class")
    p.add_argument(
        "--export-pgm",
        type=int,
        nargs="?",
        const=8,
        dest="export_pgm",
        help="write up to N channel-0 PGM images per split (default 8)",
    )

    p = sub.add_parser("train", help="train and save the baseline model")
    _add_common(p)
    p.add_argument("--per-class", type=int, dest="per_class")

    p = sub.add_parser("saliency", help="score baseline filters under one metric")
    _add_common(p)
    p.add_argument("--metric", required=True, choices=METRIC_CHOICES)
    p.add_argument("--bins", type=int, default=10, help="histogram bins")

    p = sub.add_parser("prune", help="run a single prune-retrain cell")
    _add_common(p)
    p.add_argument("--metric", required=True, choices=METRIC_CHOICES)
    p.add_argument("--strategy", required=True, choices=STRATEGY_CHOICES)
    p.add_argument("--percent", required=True, type=float)

    p = sub.add_parser("matrix", help="run the full metric x strategy x p matrix")
    _add_common(p)
    p.add_argument("--per-class", type=int, dest="per_class")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("report", help="validate and pretty-print experiment results")
    _add_common(p)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = _load_spec(args)

    if args.command == "generate":
        data = experiment.run_generate(spec)
        sizes = {name: len(split) for name, split in data.splits.items()}
        print(f"dataset written to {spec.paths()['dataset']}: {sizes}")
        return 0

    if args.command == "train":
        _, acc = experiment.run_train(spec)
        print(f"baseline test accuracy {acc:.4f}; model at {spec.paths()['baseline_model']}")
        return 0

    if args.command == "saliency":
        path = experiment.run_saliency(spec, args.metric, args.bins)
        print(f"saliency table written to {path}")
        return 0

    if args.command == "prune":
        data = experiment.load_or_generate(spec)
        baseline = experiment.load_or_train(spec, data)
        try:
            report, trace = experiment.run_cell(
                spec, baseline, data, args.metric, args.strategy, args.percent
            )
        except Exception as exc:
            print(f"cell failed: {exc!r}", file=sys.stderr)
            return 1
        print(
            f"{report.approach} p={args.percent:g}: compression "
            f"{report.compression_pct:.3f}%, speedup {report.speedup:.2f}x, "
            f"top-1 {report.top1_accuracy:.4f} ({len(trace.steps)} steps)"
        )
        return 0

    if args.command == "matrix":
        reports, failures = experiment.run_matrix(spec)
        print(f"{len(reports)} cells succeeded, {len(failures)} failed")
        for f in failures:
            print(f"  FAILED {f['cell']}: {f['error']}", file=sys.stderr)
        print(f"results: {spec.paths()['matrix_csv']}")
        return 1 if failures else 0

    if args.command == "report":
        csv_path = spec.paths()["matrix_csv"]
        if not Path(csv_path).exists():
            print(f"no results at {csv_path}", file=sys.stderr)
            return 1
        print(experiment.run_report(spec))
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    raise SystemExit(main())
