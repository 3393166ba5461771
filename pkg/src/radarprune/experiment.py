"""Experiment orchestration: dataset, baseline, cells, and the full matrix.

All parameters live in one JSON config (see ``ExperimentSpec``); every
artifact under ``out_dir`` is reproducible bit-for-bit from that file.
A matrix run executes one cell per (metric, strategy, pruning %) and
isolates failures: a diverging cell is recorded in failures.json and the
remaining cells still run.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import dataset as ds
from . import nn, saliency, schedules, surgery
from .presets import build_preset
from .train import TrainConfig, TrainingDiverged, evaluate, train

DEFAULT_PERCENTAGES = (5.0, 15.0, 30.0, 50.0, 70.0, 95.0)
DEFAULT_METRICS = ("l1", "apoz", "kmeans")
DEFAULT_STRATEGIES = ("iterative-multi-layer", "one-shot")


@dataclass
class ExperimentSpec:
    seed: int = 0
    out_dir: str = "runs/exp"
    preset: str = "desk"
    dataset: ds.DatasetConfig = field(default_factory=ds.DatasetConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    schedule: schedules.ScheduleConfig = field(default_factory=schedules.ScheduleConfig)
    metrics: tuple[str, ...] = DEFAULT_METRICS
    strategies: tuple[str, ...] = DEFAULT_STRATEGIES
    pruning_percentages: tuple[float, ...] = DEFAULT_PERCENTAGES
    workers: int = 1
    export_pgm: int = 0  # channel-0 PGMs per split written by `generate`

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentSpec":
        kwargs = dict(raw)
        for key, sub in (
            ("dataset", ds.DatasetConfig),
            ("train", TrainConfig),
            ("schedule", schedules.ScheduleConfig),
        ):
            if key in kwargs and isinstance(kwargs[key], dict):
                kwargs[key] = _dataclass_from_dict(sub, kwargs[key])
        for key in ("metrics", "strategies", "pruning_percentages"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        if "dataset" in kwargs and isinstance(kwargs["dataset"].snr_db, list):
            kwargs["dataset"].snr_db = tuple(kwargs["dataset"].snr_db)
        return cls(**kwargs)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1)

    def paths(self) -> dict[str, Path]:
        out = Path(self.out_dir)
        return {
            "out": out,
            "dataset": out / "dataset",
            "baseline_model": out / "baseline" / "model.rpz",
            "baseline_report": out / "baseline" / "report.csv",
            "baseline_history": out / "baseline" / "history.json",
            "traces": out / "traces",
            "matrix_csv": out / "experiments.csv",
            "plot_data": out / "plot_data.json",
            "failures": out / "failures.json",
        }


def _dataclass_from_dict(cls, raw: dict):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - names
    if unknown:
        raise ValueError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    return cls(**raw)


def run_generate(spec: ExperimentSpec) -> ds.Dataset:
    """Build the dataset and write it (plus optional PGMs) under out_dir."""
    data = ds.build_dataset(spec.dataset)
    root = spec.paths()["dataset"]
    ds.save_dataset(root, data)
    if spec.export_pgm:
        ds.export_pgms(root, data, spec.export_pgm)
    return data


def load_or_generate(spec: ExperimentSpec) -> ds.Dataset:
    root = spec.paths()["dataset"]
    if (root / "train" / "index.json").exists():
        return ds.load_dataset(root)
    data = ds.build_dataset(spec.dataset)
    ds.save_dataset(root, data)
    return data


def run_train(spec: ExperimentSpec, data: ds.Dataset | None = None):
    """Train the baseline, save it, and record its reference report row."""
    data = data or load_or_generate(spec)
    paths = spec.paths()
    model = build_preset(spec.preset, spec.seed, num_classes=6, input_shape=data.train.x.shape[1:])
    model, history = train(model, data.train.x, data.train.y, spec.train)
    acc = evaluate(model, data.test.x, data.test.y)
    paths["baseline_model"].parent.mkdir(parents=True, exist_ok=True)
    nn.save_model(paths["baseline_model"], model)
    paths["baseline_history"].write_text(json.dumps({"loss": history}, indent=1) + "\n")
    report = surgery.CompressionReport(
        approach="baseline",
        pruning_pct=0.0,
        params_base=surgery.model_params(model),
        params_pruned=surgery.model_params(model),
        flops_base=surgery.model_flops(model),
        flops_pruned=surgery.model_flops(model),
        top1_accuracy=acc,
    )
    surgery.write_reports_csv(paths["baseline_report"], [report])
    return model, acc


def load_or_train(spec: ExperimentSpec, data: ds.Dataset):
    path = spec.paths()["baseline_model"]
    if path.exists():
        return nn.load_model(path)
    return run_train(spec, data)[0]


def run_saliency(spec: ExperimentSpec, metric: str, bins: int = 10) -> Path:
    """Score the saved baseline under one metric; write CSV + histogram JSON."""
    data = load_or_generate(spec)
    model = load_or_train(spec, data)
    table = saliency.compute_saliency(
        model,
        saliency.SaliencyMetric(metric),
        eval_x=data.val.x,
        k=spec.schedule.kmeans_k,
        seed=spec.schedule.seed,
        sample_cap=spec.schedule.apoz_sample_cap,
    )
    out = spec.paths()["out"]
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"saliency_{table.metric.value}.csv"
    saliency.export_scores_csv(csv_path, table)
    hist = saliency.saliency_histogram(table, bins)
    (out / f"saliency_{table.metric.value}_hist.json").write_text(
        json.dumps(hist, sort_keys=True, indent=1) + "\n"
    )
    return csv_path


def cell_name(metric: str, strategy: str, pct: float) -> str:
    strategy = schedules.parse_strategy(strategy).value
    return f"{metric}_{strategy}_p{pct:g}"


def run_cell(
    spec: ExperimentSpec,
    baseline: nn.NetworkGraph,
    data: ds.Dataset,
    metric: str,
    strategy: str,
    pct: float,
):
    """One experiment cell: schedule run + report row + trace file."""
    digest = hashlib.sha256(
        f"{spec.seed}:{cell_name(metric, strategy, pct)}".encode()
    ).digest()
    scfg = dataclasses.replace(
        spec.schedule, seed=int.from_bytes(digest[:8], "little") >> 1
    )
    pruned, trace = schedules.run_schedule(baseline, strategy, metric, pct, data, scfg)
    acc = evaluate(pruned, data.test.x, data.test.y)
    name = cell_name(metric, strategy, pct)
    report = surgery.make_report(
        approach=f"{metric}/{schedules.parse_strategy(strategy).value}",
        pruning_pct=pct,
        base=baseline,
        pruned=pruned,
        top1_accuracy=acc,
    )
    traces_dir = spec.paths()["traces"]
    traces_dir.mkdir(parents=True, exist_ok=True)
    trace.save(traces_dir / f"{name}.json")
    return report, trace


def run_matrix(spec: ExperimentSpec):
    """Every (metric, strategy, p) cell; failures recorded, not fatal.

    Returns (reports, failures).  Rows land in experiments.csv in cell
    order; (p, accuracy) series per metric/strategy go to plot_data.json.
    """
    data = load_or_generate(spec)
    baseline = load_or_train(spec, data)
    baseline_acc = evaluate(baseline, data.test.x, data.test.y)
    cells = [
        (m, s, p)
        for m in spec.metrics
        for s in spec.strategies
        for p in spec.pruning_percentages
    ]

    def runner(cell):
        m, s, p = cell
        return run_cell(spec, baseline, data, m, s, p)

    results: dict[tuple, surgery.CompressionReport] = {}
    failures: list[dict] = []
    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            futures = {pool.submit(runner, cell): cell for cell in cells}
            for fut, cell in futures.items():
                try:
                    results[cell] = fut.result()[0]
                except Exception as exc:  # cell isolation
                    failures.append({"cell": cell_name(*cell), "error": repr(exc)})
    else:
        for cell in cells:
            try:
                results[cell] = runner(cell)[0]
            except Exception as exc:
                failures.append({"cell": cell_name(*cell), "error": repr(exc)})

    paths = spec.paths()
    paths["out"].mkdir(parents=True, exist_ok=True)
    reports = [results[c] for c in cells if c in results]
    surgery.write_reports_csv(paths["matrix_csv"], reports)
    plot = {"baseline_accuracy": baseline_acc, "series": []}
    for m in spec.metrics:
        for s in spec.strategies:
            sname = schedules.parse_strategy(s).value
            points = [
                [p, results[(m, s, p)].top1_accuracy]
                for p in spec.pruning_percentages
                if (m, s, p) in results
            ]
            plot["series"].append({"metric": m, "strategy": sname, "points": points})
    paths["plot_data"].write_text(json.dumps(plot, sort_keys=True, indent=1) + "\n")
    paths["failures"].write_text(json.dumps(failures, indent=1) + "\n")
    return reports, failures


def run_report(spec: ExperimentSpec) -> str:
    """Validate the experiment CSV and format it as a readable table."""
    paths = spec.paths()
    rows = surgery.read_reports_csv(paths["matrix_csv"])
    if paths["baseline_report"].exists():
        rows = surgery.read_reports_csv(paths["baseline_report"]) + rows
    lines = []
    header = ["approach", "p%", "compression%", "MFLOPs", "params(M)", "speedup", "top-1"]
    lines.append("  ".join(f"{h:>14}" for h in header))
    for row in rows:
        flops_m = float(row["flops"]) / 1e6
        params_m = float(row["trainable_params"]) / 1e6
        lines.append(
            "  ".join(
                [
                    f"{row['approach']:>14}",
                    f"{float(row['layer_pruning_pct']):>14.1f}",
                    f"{float(row['model_compression_pct']):>14.3f}",
                    f"{flops_m:>14.4f}",
                    f"{params_m:>14.4f}",
                    f"{float(row['speedup']):>14.2f}",
                    f"{float(row['top1_accuracy']):>14.4f}",
                ]
            )
        )
    return "\n".join(lines)
