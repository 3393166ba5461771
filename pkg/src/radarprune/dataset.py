"""Dataset construction: synthesis -> TF images -> train/val/test splits.

Splits follow a 4080:1800:2400 ratio.  Total split sizes come from
largest-remainder rounding; inside each split the six classes stay
balanced to within one example via cyclic assignment of the remainder.
Every example is reproducible from (root seed, class index, example
index), which the on-disk index records next to the drawn spec.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import serialize
from .radar import ClassLabel, WaveformSpec, default_class_specs, pulse_jitter, synthesize
from .tfmap import DEFAULT_FRAMES, DEFAULT_WINDOW, TFExample, tf_image

SPLIT_RATIO = (4080, 1800, 2400)
SPLIT_NAMES = ("train", "val", "test")


@dataclass
class DatasetConfig:
    per_class: int = 60
    snr_db: tuple[float, ...] = (20.0,)
    seed: int = 0
    sample_rate_hz: float = 10e6
    num_samples: int = DEFAULT_WINDOW * DEFAULT_FRAMES
    window: int = DEFAULT_WINDOW
    frames: int = DEFAULT_FRAMES
    freq_jitter_hz: float = 0.5e6
    class_overrides: dict = field(default_factory=dict)

    def class_specs(self) -> dict[ClassLabel, WaveformSpec]:
        specs = default_class_specs(self.sample_rate_hz, self.num_samples)
        for name, fields in self.class_overrides.items():
            label = ClassLabel[name]
            specs[label] = replace(specs[label], **fields)
        return specs


@dataclass
class Split:
    x: np.ndarray  # (N, 3, H, W) float32
    y: np.ndarray  # (N,) int64
    index: list[dict]

    def __len__(self) -> int:
        return int(self.y.shape[0])


@dataclass
class Dataset:
    splits: dict[str, Split]

    @property
    def train(self) -> Split:
        return self.splits["train"]

    @property
    def val(self) -> Split:
        return self.splits["val"]

    @property
    def test(self) -> Split:
        return self.splits["test"]


def split_totals(total: int) -> tuple[int, int, int]:
    """Largest-remainder apportionment of ``total`` by SPLIT_RATIO."""
    denom = sum(SPLIT_RATIO)
    exact = [total * r / denom for r in SPLIT_RATIO]
    floors = [int(f) for f in exact]
    leftover = total - sum(floors)
    order = sorted(range(3), key=lambda i: exact[i] - floors[i], reverse=True)
    for i in order[:leftover]:
        floors[i] += 1
    return tuple(floors)  # type: ignore[return-value]


def split_allocation(per_class: int, num_classes: int = 6) -> dict[str, list[int]]:
    """Per-class example counts for each split.

    Remainders are handed out in one cyclic pass over the classes, so
    every class ends up with exactly ``per_class`` examples and each
    split's label histogram is balanced to within one.
    """
    totals = split_totals(per_class * num_classes)
    alloc = {name: [t // num_classes] * num_classes for name, t in zip(SPLIT_NAMES, totals)}
    cursor = 0
    for name, t in zip(SPLIT_NAMES, totals):
        for _ in range(t % num_classes):
            alloc[name][cursor % num_classes] += 1
            cursor += 1
    return alloc


def example_seed(root_seed: int, label: int, idx: int) -> list[int]:
    return [int(root_seed), int(label), int(idx)]


def _make_example(cfg: DatasetConfig, base: WaveformSpec, label: ClassLabel, idx: int):
    entropy = example_seed(cfg.seed, int(label), idx)
    seq = np.random.SeedSequence(entropy)
    draw_ss, synth_ss = seq.spawn(2)
    rng = np.random.default_rng(draw_ss)
    snr = float(cfg.snr_db[idx % len(cfg.snr_db)])
    spec = replace(base, snr_db=snr)
    spec = pulse_jitter(spec, cfg.freq_jitter_hz, rng)
    iq = synthesize(spec, synth_ss)
    fm = tf_image(iq, cfg.window, cfg.frames)
    row = {
        "label": int(label),
        "class": label.name,
        "seed": entropy,
        "spec": _spec_dict(spec),
    }
    return fm, row


def _spec_dict(spec: WaveformSpec) -> dict:
    d = asdict(spec)
    d["label"] = spec.label.name
    return d


def build_dataset(cfg: DatasetConfig) -> Dataset:
    """Generate all examples and assign them to balanced splits."""
    if cfg.per_class < 1:
        raise ValueError("per_class must be >= 1")
    if not cfg.snr_db:
        raise ValueError("snr_db must list at least one value")
    specs = cfg.class_specs()
    alloc = split_allocation(cfg.per_class, len(specs))
    buckets: dict[str, list] = {name: [] for name in SPLIT_NAMES}
    for label in sorted(specs, key=int):
        base = specs[label]
        shuffle_rng = np.random.default_rng(
            np.random.SeedSequence([cfg.seed, 999, int(label)])
        )
        order = shuffle_rng.permutation(cfg.per_class)
        bounds = np.cumsum([alloc[name][int(label)] for name in SPLIT_NAMES])
        assigned = {}
        for pos, idx in enumerate(order):
            name = SPLIT_NAMES[int(np.searchsorted(bounds, pos, side="right"))]
            assigned[int(idx)] = name
        for idx in range(cfg.per_class):
            fm, row = _make_example(cfg, base, label, idx)
            buckets[assigned[idx]].append((fm, row))
    splits = {}
    for name in SPLIT_NAMES:
        items = buckets[name]
        x = np.stack([fm.data for fm, _ in items]).astype(np.float32)
        y = np.array([row["label"] for _, row in items], dtype=np.int64)
        splits[name] = Split(x, y, [row for _, row in items])
    return Dataset(splits)


def examples_of(split: Split) -> list[TFExample]:
    from .nn import FeatureMap

    return [TFExample(FeatureMap(split.x[i]), int(split.y[i])) for i in range(len(split))]


def save_dataset(root: str | Path, ds: Dataset) -> None:
    """One directory per split: index.json plus one tensor container per example."""
    root = Path(root)
    for name, split in ds.splits.items():
        d = root / name
        d.mkdir(parents=True, exist_ok=True)
        index = []
        for i in range(len(split)):
            fname = f"ex{i:05d}.rpz"
            row = dict(split.index[i])
            row["file"] = fname
            index.append(row)
            serialize.save_arrays(
                d / fname,
                {"tensor": split.x[i]},
                {"label": int(split.y[i]), "seed": row["seed"]},
            )
        (d / "index.json").write_text(
            json.dumps(index, sort_keys=True, indent=1) + "\n"
        )


def load_dataset(root: str | Path) -> Dataset:
    root = Path(root)
    splits = {}
    for name in SPLIT_NAMES:
        d = root / name
        index = json.loads((d / "index.json").read_text())
        xs, ys = [], []
        for row in index:
            arrays, meta = serialize.load_arrays(d / row["file"])
            xs.append(arrays["tensor"])
            ys.append(meta["label"])
        splits[name] = Split(
            np.stack(xs).astype(np.float32), np.array(ys, dtype=np.int64), index
        )
    return Dataset(splits)


def write_pgm(path: str | Path, channel: np.ndarray) -> None:
    """Binary PGM (P5) of a [0,1] single-channel image, maxval 255."""
    a = np.asarray(channel)
    if a.ndim != 2:
        raise ValueError(f"PGM export needs a 2-D array, got shape {a.shape}")
    pix = np.clip(np.rint(a * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{a.shape[1]} {a.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + pix.tobytes())


def export_pgms(root: str | Path, ds: Dataset, limit_per_split: int | None = None) -> int:
    """Dump channel-0 maps as PGM files next to each split; returns count."""
    root = Path(root)
    written = 0
    for name, split in ds.splits.items():
        d = root / name / "pgm"
        d.mkdir(parents=True, exist_ok=True)
        n = len(split) if limit_per_split is None else min(limit_per_split, len(split))
        for i in range(n):
            write_pgm(d / f"ex{i:05d}_c{int(split.y[i])}.pgm", split.x[i][0])
            written += 1
    return written
