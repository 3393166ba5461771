"""Filter saliency scoring and prunable-filter selection.

Three metrics:

* ``l1``: sum of absolute kernel weights (bias excluded); small norm
  means prunable, so the prune order is lowest-first.
* ``apoz``: average fraction of exactly-zero post-ReLU activations over
  an evaluation batch; high sparsity means prunable (highest-first).
* ``kmeans``: Euclidean distance from the flattened filter to its
  cluster centroid after Lloyd's k-means; outliers are prunable
  (highest-first).

Scores are float64.  Ties in any ordering break toward the lower filter
index.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .nn import Conv2D, FilterTensor, NetworkGraph, ReLU, model_bytes
from .surgery import PrunePlan

ZERO_TOL = 1e-12  # |activation| at or below this counts as zero


class SaliencyMetric(str, Enum):
    L1_NORM = "l1"
    APOZ = "apoz"
    KMEANS_DIST = "kmeans"


LOWEST_FIRST = "lowest_first"
HIGHEST_FIRST = "highest_first"

ORDERING = {
    SaliencyMetric.L1_NORM: LOWEST_FIRST,
    SaliencyMetric.APOZ: HIGHEST_FIRST,
    SaliencyMetric.KMEANS_DIST: HIGHEST_FIRST,
}


@dataclass
class SaliencyTable:
    metric: SaliencyMetric
    ordering: str
    scores: dict[int, np.ndarray]  # conv layer index -> per-filter float64
    model_hash: str

    def layers(self) -> list[int]:
        return sorted(self.scores)


def model_hash(model: NetworkGraph) -> str:
    return hashlib.sha256(model_bytes(model)).hexdigest()


def l1_score(flt: FilterTensor) -> float:
    return float(np.abs(flt.weights).sum(dtype=np.float64))


def l1_scores(layer: Conv2D) -> np.ndarray:
    return np.abs(layer.weights).sum(axis=(1, 2, 3), dtype=np.float64)


def activation_zero_stats(model: NetworkGraph, x: np.ndarray, chunk_size: int = 64):
    """Streaming zero counts of post-ReLU conv activations.

    Returns {conv layer index: (zero_count per filter, examples, map_elems)}.
    """
    if x.shape[0] == 0:
        raise ValueError("APoZ needs at least one evaluation example")
    conv_after = {
        i: model.layers[i + 1]
        for i in model.conv_indices()
        if i + 1 < len(model.layers) and isinstance(model.layers[i + 1], ReLU)
    }
    counts: dict[int, np.ndarray] = {}
    elems: dict[int, int] = {}
    for start in range(0, x.shape[0], chunk_size):
        out = np.asarray(x[start : start + chunk_size], dtype=model.dtype)
        for i, layer in enumerate(model.layers):
            out = layer.forward(out)
            if i in conv_after:
                act = conv_after[i].forward(out)
                zero = (np.abs(act) <= ZERO_TOL).sum(axis=(0, 2, 3))
                counts[i] = counts.get(i, 0) + zero.astype(np.int64)
                elems[i] = act.shape[2] * act.shape[3]
    return {i: (counts[i], int(x.shape[0]), elems[i]) for i in counts}


def apoz_scores(model: NetworkGraph, x: np.ndarray, chunk_size: int = 64) -> dict[int, np.ndarray]:
    stats = activation_zero_stats(model, x, chunk_size)
    return {
        i: zero.astype(np.float64) / (m * n) for i, (zero, m, n) in stats.items()
    }


def default_k(num_filters: int) -> int:
    return min(max(2, round(math.sqrt(num_filters))), num_filters)


def _argmax_tied(values: np.ndarray, rng: np.random.Generator) -> int:
    top = values.max()
    cand = np.flatnonzero(values == top)
    if cand.size == 1:
        return int(cand[0])
    return int(cand[rng.integers(cand.size)])


def kmeans_scores(
    vectors: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-8,
) -> np.ndarray:
    """Distance of each vector to its Lloyd's k-means centroid.

    Init is farthest-point: the first centroid is the vector farthest
    from the global mean, each next the one farthest from all chosen so
    far.  The seed only breaks exact distance ties, so scores are
    permutation-invariant up to tie-breaking.  Convergence: max centroid
    shift < tol or max_iter sweeps.  An emptied cluster keeps its
    previous centroid.
    """
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError(f"expected (filters, features), got shape {v.shape}")
    n = v.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must be within [1, {n}]")
    rng = np.random.default_rng(seed)
    centroids = np.empty((k, v.shape[1]), dtype=np.float64)
    d = np.linalg.norm(v - v.mean(axis=0), axis=1)
    centroids[0] = v[_argmax_tied(d, rng)]
    mind = np.linalg.norm(v - centroids[0], axis=1)
    for j in range(1, k):
        centroids[j] = v[_argmax_tied(mind, rng)]
        mind = np.minimum(mind, np.linalg.norm(v - centroids[j], axis=1))
    for _ in range(max_iter):
        dist = np.linalg.norm(v[:, None, :] - centroids[None], axis=2)
        assign = dist.argmin(axis=1)
        new = centroids.copy()
        for j in range(k):
            members = v[assign == j]
            if members.shape[0]:
                new[j] = members.mean(axis=0)
        shift = np.linalg.norm(new - centroids, axis=1).max()
        centroids = new
        if shift < tol:
            break
    dist = np.linalg.norm(v[:, None, :] - centroids[None], axis=2)
    assign = dist.argmin(axis=1)
    return np.take_along_axis(dist, assign[:, None], axis=1)[:, 0]


def flattened_filters(layer: Conv2D) -> np.ndarray:
    return layer.weights.reshape(layer.num_filters, -1).astype(np.float64)


def compute_saliency(
    model: NetworkGraph,
    metric: SaliencyMetric,
    eval_x: np.ndarray | None = None,
    layer_ids: list[int] | None = None,
    k: int | None = None,
    seed: int = 0,
    sample_cap: int | None = None,
) -> SaliencyTable:
    """Score every target conv layer of the model under one metric.

    APoZ requires ``eval_x`` (held-out examples); ``sample_cap`` limits
    how many of them are used.  ``k`` overrides the per-layer default
    cluster count for the k-means metric.
    """
    metric = SaliencyMetric(metric)
    targets = model.conv_indices() if layer_ids is None else list(layer_ids)
    for i in targets:
        if not isinstance(model.layers[i], Conv2D):
            raise ValueError(f"layer {i} is not a conv layer")
    scores: dict[int, np.ndarray] = {}
    if metric is SaliencyMetric.APOZ:
        if eval_x is None:
            raise ValueError("APoZ needs evaluation examples")
        x = eval_x if sample_cap is None else eval_x[:sample_cap]
        all_scores = apoz_scores(model, x)
        for i in targets:
            if i not in all_scores:
                raise ValueError(f"conv layer {i} is not followed by ReLU; APoZ undefined")
            scores[i] = all_scores[i]
    elif metric is SaliencyMetric.L1_NORM:
        for i in targets:
            scores[i] = l1_scores(model.layers[i])
    else:
        for i in targets:
            layer = model.layers[i]
            kk = default_k(layer.num_filters) if k is None else k
            scores[i] = kmeans_scores(flattened_filters(layer), kk, seed=seed)
    return SaliencyTable(metric, ORDERING[metric], scores, model_hash(model))


def prune_order(table: SaliencyTable, layer_id: int) -> np.ndarray:
    """Filter indices sorted most-prunable first; ties to the lower index."""
    s = table.scores[layer_id]
    key = s if table.ordering == LOWEST_FIRST else -s
    return np.lexsort((np.arange(s.shape[0]), key))


def select_prunable(table: SaliencyTable, pruning_pct: float) -> PrunePlan:
    """Mark floor(p/100 * filters) per layer in prune order.

    Requires 0 <= p < 100; the floor rule then always leaves at least
    one filter per layer.
    """
    if not 0 <= pruning_pct < 100:
        raise ValueError(f"pruning percentage must be in [0, 100), got {pruning_pct}")
    per_layer: dict[int, list[int]] = {}
    for layer_id in table.layers():
        n = table.scores[layer_id].shape[0]
        count = int(math.floor(pruning_pct / 100.0 * n))
        if count >= n:
            raise ValueError(f"plan would empty layer {layer_id}")
        if count:
            per_layer[layer_id] = [int(i) for i in prune_order(table, layer_id)[:count]]
    return PrunePlan(per_layer, pruning_pct=pruning_pct)


def saliency_histogram(table: SaliencyTable, bins: int = 10) -> dict[int, dict]:
    """Per-layer score histogram; counts always sum to the filter count."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    out = {}
    for layer_id, s in table.scores.items():
        counts, edges = np.histogram(s, bins=bins)
        out[layer_id] = {"edges": edges.tolist(), "counts": counts.tolist()}
    return out


def export_scores_csv(path: str | Path, table: SaliencyTable) -> None:
    """CSV of ranked scores: layer, filter, metric, score, rank (1 = first pruned)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["layer", "filter", "metric", "score", "rank"])
        for layer_id in table.layers():
            order = prune_order(table, layer_id)
            rank = np.empty(order.shape[0], dtype=np.int64)
            rank[order] = np.arange(1, order.shape[0] + 1)
            for f in range(order.shape[0]):
                w.writerow(
                    [
                        layer_id,
                        f,
                        table.metric.value,
                        repr(float(table.scores[layer_id][f])),
                        int(rank[f]),
                    ]
                )
