#!/usr/bin/env python3
"""Write time-frequency map images (PGM) for a quick visual check.

Synthesizes a few records per class at the requested SNR and dumps the
log-magnitude channel as 8-bit PGM files, one per record.

Example:
    python3 scripts/export_tfmaps.py --out tfmaps --per-class 3 --snr-db 20
"""

import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from radarprune.dataset import write_pgm
from radarprune.radar import default_class_specs, pulse_jitter, synthesize
from radarprune.tfmap import tf_image


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="tfmaps")
    ap.add_argument("--per-class", type=int, default=3)
    ap.add_argument("--snr-db", type=float, default=20.0)
    ap.add_argument("--freq-jitter-hz", type=float, default=2.0e6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = 0
    for label, base in default_class_specs().items():
        for i in range(args.per_class):
            seq = np.random.SeedSequence([args.seed, int(label), i])
            draw_ss, synth_ss = seq.spawn(2)
            spec = base
            if base.pulse_width_s:
                spec = replace(base, snr_db=args.snr_db)
                spec = pulse_jitter(spec, args.freq_jitter_hz, np.random.default_rng(draw_ss))
            img = tf_image(synthesize(spec, synth_ss))
            path = out / f"{label.name.lower()}_{i}.pgm"
            write_pgm(path, img.data[0])
            written += 1
    print(f"wrote {written} PGM images under {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
