#!/usr/bin/env python3
"""Generate the dataset, train the baseline model, and print its report row.

Example:
    python3 scripts/run_baseline.py --out runs/desk --per-class 200 --epochs 14
"""

import argparse

from radarprune.dataset import DatasetConfig
from radarprune.experiment import ExperimentSpec, run_generate, run_train
from radarprune.surgery import model_flops, model_params
from radarprune.train import TrainConfig


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/desk", help="experiment output directory")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--per-class", type=int, default=200)
    ap.add_argument("--epochs", type=int, default=14)
    ap.add_argument("--snr-db", type=float, nargs="+", default=[20.0])
    ap.add_argument("--freq-jitter-hz", type=float, default=2.0e6)
    args = ap.parse_args()

    spec = ExperimentSpec(
        seed=args.seed,
        out_dir=args.out,
        dataset=DatasetConfig(
            per_class=args.per_class,
            snr_db=tuple(args.snr_db),
            seed=args.seed,
            freq_jitter_hz=args.freq_jitter_hz,
        ),
        train=TrainConfig(epochs=args.epochs, seed=args.seed),
    )
    data = run_generate(spec)
    sizes = {name: len(split) for name, split in data.splits.items()}
    print(f"dataset: {sizes}")
    model, acc = run_train(spec, data)
    print(
        f"baseline: {model_params(model)} params, {model_flops(model) / 1e6:.2f} MFLOPs, "
        f"test top-1 {acc:.4f}"
    )
    print(f"artifacts under {spec.paths()['out']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
