"""Shared builders for the test suite.

Toy networks here are deliberately small so finite-difference checks,
hand simulations, and exhaustive oracles stay fast.  ``dyadic`` draws
values from a power-of-two lattice; products and short sums of such
values are exact in float32, which makes bit-level equality assertions
independent of BLAS reduction order.
"""

from __future__ import annotations

from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from radarprune.nn import (
    Conv2D,
    Dense,
    Flatten,
    MaxPool,
    NetworkGraph,
    ReLU,
    Softmax,
)

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def dyadic(rng: np.random.Generator, shape, denom: int = 8, span: int = 8, dtype=np.float32):
    """Random multiples of 1/denom in [-span/denom, span/denom]."""
    return (rng.integers(-span, span + 1, size=shape) / denom).astype(dtype)


def two_conv_net(
    seed: int = 0,
    widths: tuple[int, int] = (5, 4),
    in_shape: tuple[int, int, int] = (2, 10, 10),
    classes: int = 3,
    kernel: int = 3,
    pool: int = 2,
    lattice: bool = False,
    scale: float = 0.5,
) -> NetworkGraph:
    """conv/ReLU/conv/ReLU/pool/flatten/dense/softmax on a small input."""
    rng = np.random.default_rng(seed)

    def draw(shape, s):
        if lattice:
            return dyadic(rng, shape) * np.float32(s)
        return rng.normal(0.0, s, size=shape).astype(np.float32)

    c, h, w = in_shape
    f1, f2 = widths
    conv1 = Conv2D(draw((f1, c, kernel, kernel), scale), draw((f1,), scale), padding="valid")
    conv2 = Conv2D(draw((f2, f1, kernel, kernel), scale), draw((f2,), scale), padding="valid")
    oh = (h - kernel + 1 - kernel + 1) // pool
    ow = (w - kernel + 1 - kernel + 1) // pool
    feat = f2 * oh * ow
    dense = Dense(draw((feat, classes), 0.25), draw((classes,), 0.25))
    model = NetworkGraph(
        in_shape,
        [conv1, ReLU(), conv2, ReLU(), MaxPool(pool), Flatten(), dense, Softmax()],
    )
    model.validate()
    return model


def toy_splits(
    seed: int = 0,
    in_shape: tuple[int, int, int] = (2, 10, 10),
    classes: int = 3,
    n_train: int = 12,
    n_val: int = 6,
):
    """A train/val container matching the schedule runner's data contract."""
    rng = np.random.default_rng(seed)

    def split(n):
        x = rng.normal(0.0, 1.0, size=(n,) + tuple(in_shape)).astype(np.float32)
        y = rng.integers(0, classes, size=n).astype(np.int64)
        return SimpleNamespace(x=x, y=y)

    return SimpleNamespace(train=split(n_train), val=split(n_val))


def separable_blobs(seed: int = 0, per_class: int = 20, in_shape=(3, 8, 8), classes: int = 2):
    """Linearly separable image-like data: class c lights up row band c."""
    rng = np.random.default_rng(seed)
    h = in_shape[1]
    band = h // classes
    xs, ys = [], []
    for c in range(classes):
        x = rng.normal(0.0, 0.1, size=(per_class,) + tuple(in_shape)).astype(np.float32)
        x[:, :, c * band : (c + 1) * band, :] += 1.0
        xs.append(x)
        ys.append(np.full(per_class, c, dtype=np.int64))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    order = rng.permutation(x.shape[0])
    return x[order], y[order]


@pytest.fixture(scope="session")
def small_dataset():
    """One small radar dataset shared by the tests that need real TF maps."""
    from radarprune.dataset import DatasetConfig, build_dataset

    return build_dataset(DatasetConfig(per_class=6, seed=0))
