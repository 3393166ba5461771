"""Structural pruning surgery and compression accounting.

``apply_prune`` physically removes conv filters and propagates the lost
channels through shape-preserving layers (ReLU, pooling) into the next
weight-bearing layer: a downstream conv loses the matching kernel depth
slices; a dense layer after a flatten loses the weight rows fed by the
removed feature map's flattened positions.

FLOPs here count multiply-accumulates: a conv layer costs
filters * out_h * out_w * kh * kw * depth, a dense layer in * out.
Activation and pooling layers are free.  Trainable parameter counts
include biases.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .nn import Conv2D, Dense, Flatten, MaxPool, NetworkGraph, ReLU, Softmax


class PruneError(ValueError):
    """Raised for invalid prune plans."""


@dataclass
class PrunePlan:
    """Filter indices to remove, keyed by conv layer index.

    Index lists are ordered most-prunable first; removal itself is
    order-insensitive.
    """

    per_layer: dict[int, list[int]] = field(default_factory=dict)
    pruning_pct: float | None = None

    def is_empty(self) -> bool:
        return not any(self.per_layer.values())

    def total_marks(self) -> int:
        return sum(len(v) for v in self.per_layer.values())

    def validate_against(self, model: NetworkGraph) -> None:
        for layer_id, marks in self.per_layer.items():
            if not 0 <= layer_id < len(model.layers):
                raise PruneError(f"no layer {layer_id} in model")
            layer = model.layers[layer_id]
            if not isinstance(layer, Conv2D):
                raise PruneError(f"layer {layer_id} is not a conv layer")
            if len(set(marks)) != len(marks):
                raise PruneError(f"duplicate filter indices for layer {layer_id}")
            for m in marks:
                if not 0 <= m < layer.num_filters:
                    raise PruneError(
                        f"filter {m} out of range for layer {layer_id} "
                        f"({layer.num_filters} filters)"
                    )
            if len(marks) >= layer.num_filters:
                raise PruneError(f"plan would empty layer {layer_id}")


def conv_layer_flops(layer: Conv2D, out_shape: tuple[int, int, int]) -> int:
    f, oh, ow = out_shape
    kh, kw = layer.kernel_shape
    return f * oh * ow * kh * kw * layer.depth


def layer_param_count(layer) -> int:
    if isinstance(layer, (Conv2D, Dense)):
        return int(layer.weights.size + layer.bias.size)
    return 0


def model_params(model: NetworkGraph) -> int:
    return sum(layer_param_count(l) for l in model.layers)


def model_flops(model: NetworkGraph) -> int:
    shapes = model.validate()
    total = 0
    for layer, out_shape in zip(model.layers, shapes[1:]):
        if isinstance(layer, Conv2D):
            total += conv_layer_flops(layer, out_shape)
        elif isinstance(layer, Dense):
            total += int(layer.weights.shape[0] * layer.weights.shape[1])
    return total


def _prune_one_layer(model: NetworkGraph, layer_id: int, marks: list[int]) -> None:
    """Remove filters from one conv layer in place, fixing the consumer."""
    shapes = model.validate()
    conv = model.layers[layer_id]
    keep = np.array(sorted(set(range(conv.num_filters)) - set(marks)), dtype=np.int64)
    model.layers[layer_id] = Conv2D(
        conv.weights[keep].copy(), conv.bias[keep].copy(), conv.stride, conv.padding
    )
    j = layer_id + 1
    flat_shape = None
    while j < len(model.layers):
        nxt = model.layers[j]
        if isinstance(nxt, (ReLU, MaxPool)):
            j += 1
            continue
        if isinstance(nxt, Flatten):
            flat_shape = shapes[j]  # (C, H, W) feeding the flatten, pre-prune
            j += 1
            continue
        if isinstance(nxt, Conv2D):
            model.layers[j] = Conv2D(
                nxt.weights[:, keep].copy(), nxt.bias.copy(), nxt.stride, nxt.padding
            )
            return
        if isinstance(nxt, Dense):
            if flat_shape is None:
                raise PruneError(
                    f"dense layer {j} consumes conv {layer_id} without a flatten"
                )
            c, h, w = flat_shape
            w3 = nxt.weights.reshape(c, h * w, nxt.weights.shape[1])
            model.layers[j] = Dense(
                w3[keep].reshape(-1, nxt.weights.shape[1]).copy(), nxt.bias.copy()
            )
            return
        raise PruneError(
            f"cannot propagate channel removal through layer {j} ({nxt.kind})"
        )
    raise PruneError(f"conv layer {layer_id} has no downstream weight-bearing layer")


def apply_prune(model: NetworkGraph, plan: PrunePlan) -> NetworkGraph:
    """Return a pruned copy of the model; the input is never mutated."""
    plan.validate_against(model)
    pruned = model.copy()
    for layer_id in sorted(plan.per_layer):
        marks = plan.per_layer[layer_id]
        if marks:
            _prune_one_layer(pruned, layer_id, list(marks))
    pruned.validate()
    return pruned


CSV_COLUMNS = [
    "approach",
    "layer_pruning_pct",
    "model_compression_pct",
    "flops",
    "trainable_params",
    "speedup",
    "top1_accuracy",
]


@dataclass
class CompressionReport:
    approach: str
    pruning_pct: float
    params_base: int
    params_pruned: int
    flops_base: int
    flops_pruned: int
    top1_accuracy: float

    @property
    def compression_pct(self) -> float:
        return 100.0 * (1.0 - self.params_pruned / self.params_base)

    @property
    def speedup(self) -> float:
        return self.flops_base / self.flops_pruned

    def row(self) -> list:
        return [
            self.approach,
            self.pruning_pct,
            self.compression_pct,
            self.flops_pruned,
            self.params_pruned,
            self.speedup,
            self.top1_accuracy,
        ]


def make_report(
    approach: str,
    pruning_pct: float,
    base: NetworkGraph,
    pruned: NetworkGraph,
    top1_accuracy: float,
) -> CompressionReport:
    params_base = model_params(base)
    params_pruned = model_params(pruned)
    flops_base = model_flops(base)
    flops_pruned = model_flops(pruned)
    if params_pruned > params_base or flops_pruned > flops_base:
        raise PruneError("pruned model is larger than its baseline")
    return CompressionReport(
        approach, pruning_pct, params_base, params_pruned, flops_base, flops_pruned, top1_accuracy
    )


def write_reports_csv(path: str | Path, reports: list[CompressionReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for rep in reports:
            w.writerow(rep.row())


def read_reports_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        missing = [c for c in CSV_COLUMNS if c not in row]
        if missing:
            raise PruneError(f"report CSV missing columns {missing}")
    return rows
