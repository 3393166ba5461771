"""Prune-retrain schedules.

Three strategies share the same per-layer removal targets
(floor(p/100 * filters) of the starting model):

* ``iterative-multi-layer``: repeat {score the current model, mark the
  remaining filters per layer, remove delta = min marks-per-layer from
  every still-active layer, retrain} until every layer hits its target.
  Saliency is recomputed each step from the model as pruned and
  retrained so far.
* ``layer-sequential``: finish layers one at a time in graph order (or
  the configured ``layer_order``); each layer is scored once, then
  chipped away ``delta_per_step`` filters per prune-retrain step until
  its target is met.
* ``one-shot``: score the starting model once, remove the full plan in
  a single cut, retrain once.

Retrain length follows the pruning percentage: ``retrain_epochs_low``
below ``epoch_threshold_pct``, ``retrain_epochs_high`` at or above it.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .nn import Conv2D, NetworkGraph
from .saliency import SaliencyMetric, SaliencyTable, compute_saliency, model_hash, prune_order, select_prunable
from .surgery import PrunePlan, apply_prune, model_flops, model_params
from .train import TrainConfig, evaluate, train


class ScheduleError(RuntimeError):
    pass


class PruneStrategy(str, Enum):
    ITERATIVE_MULTI_LAYER = "iterative-multi-layer"
    LAYER_SEQUENTIAL = "layer-sequential"
    ONE_SHOT = "one-shot"


# command-line shorthands for the strategies
STRATEGY_ALIASES = {
    "setup-a": PruneStrategy.ITERATIVE_MULTI_LAYER,
    "setup-b-seq": PruneStrategy.LAYER_SEQUENTIAL,
    "setup-b-greedy": PruneStrategy.ONE_SHOT,
}


def parse_strategy(name: str) -> PruneStrategy:
    if name in STRATEGY_ALIASES:
        return STRATEGY_ALIASES[name]
    return PruneStrategy(name)


@dataclass
class ScheduleConfig:
    retrain_epochs_low: int = 10
    retrain_epochs_high: int = 30
    epoch_threshold_pct: float = 50.0
    delta_per_step: int = 1  # layer-sequential step size
    layer_order: tuple[int, ...] | None = None  # layer-sequential visit order; None = graph order
    learning_rate: float = 0.005
    momentum: float = 0.9
    clip_norm: float | None = 5.0
    batch_size: int = 32
    seed: int = 0
    max_iters: int = 1000  # safety bound on schedule steps
    kmeans_k: int | None = None
    apoz_sample_cap: int | None = None
    eval_each_step: bool = True


@dataclass
class TraceStep:
    step: int
    removed: dict[int, list[int]]  # layer -> filter indices removed this step
    delta: int
    retrain_epochs: int
    params_after: int
    flops_after: int
    val_accuracy: float | None
    saliency_model_hash: str
    post_retrain_hash: str


@dataclass
class ScheduleTrace:
    strategy: str
    metric: str
    pruning_pct: float
    start_hash: str
    steps: list[TraceStep] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def retrain_epochs_for(pruning_pct: float, cfg: ScheduleConfig) -> int:
    if pruning_pct < cfg.epoch_threshold_pct:
        return cfg.retrain_epochs_low
    return cfg.retrain_epochs_high


def layer_targets(model: NetworkGraph, pruning_pct: float) -> dict[int, int]:
    """floor(p/100 * filters) per conv layer, computed once up front."""
    if not 0 <= pruning_pct < 100:
        raise ValueError(f"pruning percentage must be in [0, 100), got {pruning_pct}")
    targets = {}
    for i in model.conv_indices():
        layer = model.layers[i]
        assert isinstance(layer, Conv2D)
        targets[i] = int(math.floor(pruning_pct / 100.0 * layer.num_filters))
    return targets


def _retrain_seed(cfg: ScheduleConfig, step: int) -> int:
    return int(np.random.SeedSequence([cfg.seed, step]).generate_state(1)[0])


class _Runner:
    def __init__(self, model, metric, pruning_pct, data, cfg: ScheduleConfig, strategy):
        self.model = model.copy()
        self.metric = SaliencyMetric(metric)
        self.p = float(pruning_pct)
        self.data = data
        self.cfg = cfg
        self.epochs = retrain_epochs_for(self.p, cfg)
        self.trace = ScheduleTrace(
            strategy.value, self.metric.value, self.p, model_hash(self.model)
        )

    def saliency(self, layer_ids=None) -> SaliencyTable:
        return compute_saliency(
            self.model,
            self.metric,
            eval_x=self.data.val.x,
            layer_ids=layer_ids,
            k=self.cfg.kmeans_k,
            seed=self.cfg.seed,
            sample_cap=self.cfg.apoz_sample_cap,
        )

    def prune_retrain(self, plan: PrunePlan, saliency_hash: str, delta: int) -> None:
        self.model = apply_prune(self.model, plan)
        step_no = len(self.trace.steps)
        tcfg = TrainConfig(
            epochs=self.epochs,
            batch_size=self.cfg.batch_size,
            learning_rate=self.cfg.learning_rate,
            momentum=self.cfg.momentum,
            clip_norm=self.cfg.clip_norm,
            seed=_retrain_seed(self.cfg, step_no),
        )
        train(self.model, self.data.train.x, self.data.train.y, tcfg)
        acc = (
            evaluate(self.model, self.data.val.x, self.data.val.y)
            if self.cfg.eval_each_step
            else None
        )
        self.trace.steps.append(
            TraceStep(
                step=step_no,
                removed={k: list(map(int, v)) for k, v in plan.per_layer.items()},
                delta=delta,
                retrain_epochs=self.epochs,
                params_after=model_params(self.model),
                flops_after=model_flops(self.model),
                val_accuracy=acc,
                saliency_model_hash=saliency_hash,
                post_retrain_hash=model_hash(self.model),
            )
        )


def run_schedule(
    model: NetworkGraph,
    strategy: PruneStrategy | str,
    metric: SaliencyMetric | str,
    pruning_pct: float,
    data,
    cfg: ScheduleConfig | None = None,
) -> tuple[NetworkGraph, ScheduleTrace]:
    """Prune ``model`` down to the per-layer targets under one strategy.

    ``data`` must expose train/val splits with ``.x``/``.y`` arrays.
    Returns a new model; the input model is untouched.
    """
    strategy = parse_strategy(strategy) if isinstance(strategy, str) else strategy
    cfg = cfg or ScheduleConfig()
    runner = _Runner(model, metric, pruning_pct, data, cfg, strategy)
    targets = layer_targets(runner.model, runner.p)

    if strategy is PruneStrategy.ITERATIVE_MULTI_LAYER:
        _run_iterative(runner, targets)
    elif strategy is PruneStrategy.LAYER_SEQUENTIAL:
        _run_layer_sequential(runner, targets)
    else:
        _run_one_shot(runner, targets)
    return runner.model, runner.trace


def _run_iterative(runner: _Runner, targets: dict[int, int]) -> None:
    remaining = {l: t for l, t in targets.items() if t > 0}
    while remaining:
        if len(runner.trace.steps) >= runner.cfg.max_iters:
            raise ScheduleError(f"exceeded max_iters={runner.cfg.max_iters}")
        table = runner.saliency(layer_ids=sorted(remaining))
        marks = {l: prune_order(table, l)[: remaining[l]] for l in sorted(remaining)}
        delta = min(len(m) for m in marks.values())
        plan = PrunePlan({l: [int(i) for i in m[:delta]] for l, m in marks.items()})
        runner.prune_retrain(plan, table.model_hash, delta)
        remaining = {l: r - delta for l, r in remaining.items() if r - delta > 0}


def _run_layer_sequential(runner: _Runner, targets: dict[int, int]) -> None:
    if runner.cfg.delta_per_step < 1:
        raise ScheduleError("delta_per_step must be >= 1")
    if runner.cfg.layer_order is None:
        order = sorted(targets)
    else:
        order = [int(i) for i in runner.cfg.layer_order]
        if sorted(order) != sorted(targets):
            raise ScheduleError(
                f"layer_order {order} is not a permutation of the conv layers {sorted(targets)}"
            )
    for layer_id in order:
        if targets[layer_id] == 0:
            continue
        table = runner.saliency(layer_ids=[layer_id])
        marks = [int(i) for i in prune_order(table, layer_id)[: targets[layer_id]]]
        while marks:
            if len(runner.trace.steps) >= runner.cfg.max_iters:
                raise ScheduleError(f"exceeded max_iters={runner.cfg.max_iters}")
            take, marks = marks[: runner.cfg.delta_per_step], marks[runner.cfg.delta_per_step :]
            plan = PrunePlan({layer_id: take})
            runner.prune_retrain(plan, table.model_hash, len(take))
            # removal shifts the indices of filters still marked
            marks = [m - sum(1 for t in take if t < m) for m in marks]


def _run_one_shot(runner: _Runner, targets: dict[int, int]) -> None:
    if not any(targets.values()):
        return
    table = runner.saliency()
    plan = select_prunable(table, runner.p)
    runner.prune_retrain(plan, table.model_hash, plan.total_marks())
