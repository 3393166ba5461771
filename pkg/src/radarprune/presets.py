"""Model presets.

``desk`` is the architecture used throughout the test suite: four conv
blocks sized 80/160/160/160 on a (3, 128, 128) input.  Filter counts
are multiples of 20 so floor(p/100 * filters) is exact at the canonical
pruning percentages {5, 15, 30, 50, 70, 95}, the block sizes differ so
multi-layer schedules take several steps, and even a 95% cut leaves
every conv with at least 4 filters, which keeps the survivor trainable.

``vgg16`` is the conventional 13-conv stack with a two-layer 4096-wide
head (head widths are an assumption, stated here, not used by any
acceptance path).
"""

from __future__ import annotations

import numpy as np

from .nn import Dense, Flatten, MaxPool, NetworkGraph, ReLU, Softmax, init_conv, init_dense

PRESET_NAMES = ("desk", "vgg16")


def desk_preset(seed: int = 0, num_classes: int = 6, input_shape=(3, 128, 128)) -> NetworkGraph:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 101]))
    c, h, w = input_shape
    layers = []
    pools = (8, 2, 2, 2)
    widths = (80, 160, 160, 160)
    in_ch = c
    spatial = h
    for width, pool in zip(widths, pools):
        layers += [init_conv(rng, in_ch, width), ReLU(), MaxPool(pool)]
        in_ch = width
        spatial //= pool
    layers += [Flatten()]
    layers += [init_dense(rng, in_ch * spatial * spatial, num_classes), Softmax()]
    model = NetworkGraph(input_shape, layers)
    model.validate()
    return model


def vgg16_preset(seed: int = 0, num_classes: int = 6, input_shape=(3, 128, 128)) -> NetworkGraph:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 116]))
    blocks = [(64, 64), (128, 128), (256, 256, 256), (512, 512, 512), (512, 512, 512)]
    c, h, w = input_shape
    layers = []
    in_ch = c
    spatial = h
    for block in blocks:
        for width in block:
            layers += [init_conv(rng, in_ch, width), ReLU()]
            in_ch = width
        layers += [MaxPool(2)]
        spatial //= 2
    layers += [Flatten()]
    feat = in_ch * spatial * spatial
    layers += [init_dense(rng, feat, 4096), ReLU()]
    layers += [init_dense(rng, 4096, 4096), ReLU()]
    layers += [init_dense(rng, 4096, num_classes), Softmax()]
    model = NetworkGraph(input_shape, layers)
    model.validate()
    return model


def build_preset(name: str, seed: int = 0, num_classes: int = 6, input_shape=(3, 128, 128)) -> NetworkGraph:
    if name == "desk":
        return desk_preset(seed, num_classes, input_shape)
    if name == "vgg16":
        return vgg16_preset(seed, num_classes, input_shape)
    raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
