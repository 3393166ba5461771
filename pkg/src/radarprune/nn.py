"""Minimal dense-tensor CNN engine.

Layers operate on channel-major batches shaped (B, C, H, W).  Convolution
follows the textbook sliding-dot-product definition: with unit stride and
no padding an (H, W) input and a (kh, kw) kernel give an
(H - kh + 1, W - kw + 1) output, each entry the sum over the kernel window
and all input channels.  'same' padding zero-pads so the output spatial
size equals ceil(size / stride).

Weights and activations are float32; loss/statistics accumulation happens
in float64.  All randomness flows through explicit numpy generators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import serialize


class ShapeError(ValueError):
    """Raised when tensor shapes are incompatible with a layer."""


@dataclass
class FeatureMap:
    """Channel-major activation tensor, shape (channels, height, width)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3:
            raise ShapeError(f"FeatureMap needs 3 dims, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1 or arr.shape[2] < 1:
            raise ShapeError(f"FeatureMap dims must be positive, got {arr.shape}")
        self.data = arr

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass
class FilterTensor:
    """A single conv filter: weights shaped (depth, kh, kw) plus its bias."""

    weights: np.ndarray
    bias: float

    def __post_init__(self):
        arr = np.asarray(self.weights)
        if arr.ndim != 3:
            raise ShapeError(f"filter weights need 3 dims, got {arr.shape}")
        self.weights = arr


def _pad_amounts(size: int, k: int, stride: int, padding: str) -> tuple[int, int]:
    if padding == "valid":
        return 0, 0
    out = -(-size // stride)  # ceil
    total = max((out - 1) * stride + k - size, 0)
    return total // 2, total - total // 2


def _im2col(xp: np.ndarray, kh: int, kw: int, stride: int):
    """Unfold padded input (B,C,Hp,Wp) into (B, oh*ow, C*kh*kw) patches."""
    B, C, Hp, Wp = xp.shape
    if Hp < kh or Wp < kw:
        raise ShapeError(f"input {Hp}x{Wp} smaller than kernel {kh}x{kw}")
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]
    oh, ow = win.shape[2], win.shape[3]
    cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5))
    return cols.reshape(B, oh * ow, C * kh * kw), oh, ow


def _col2im(dcols, xp_shape, kh, kw, stride, oh, ow):
    B, C, Hp, Wp = xp_shape
    dxp = np.zeros(xp_shape, dtype=dcols.dtype)
    d6 = dcols.reshape(B, oh, ow, C, kh, kw).transpose(0, 3, 1, 2, 4, 5)
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i : i + oh * stride : stride, j : j + ow * stride : stride] += d6[
                :, :, :, :, i, j
            ]
    return dxp


class Conv2D:
    """2-D convolution over all input channels.

    weights: (filters, depth, kh, kw); bias: (filters,).  ``padding`` is
    'valid' (no padding) or 'same'; stride >= 1.
    """

    kind = "conv2d"

    def __init__(self, weights: np.ndarray, bias: np.ndarray, stride: int = 1, padding: str = "valid"):
        weights = np.asarray(weights)
        bias = np.asarray(bias)
        if weights.ndim != 4:
            raise ShapeError(f"conv weights need 4 dims, got {weights.shape}")
        if min(weights.shape) < 1:
            raise ShapeError(f"conv layer needs at least one filter, channel, and kernel tap; got {weights.shape}")
        if bias.shape != (weights.shape[0],):
            raise ShapeError(f"bias shape {bias.shape} != ({weights.shape[0]},)")
        if stride < 1:
            raise ShapeError("stride must be >= 1")
        if padding not in ("valid", "same"):
            raise ShapeError(f"padding must be 'valid' or 'same', got {padding!r}")
        self.weights = weights
        self.bias = bias
        self.stride = stride
        self.padding = padding

    @property
    def num_filters(self) -> int:
        return self.weights.shape[0]

    @property
    def depth(self) -> int:
        return self.weights.shape[1]

    @property
    def kernel_shape(self) -> tuple[int, int]:
        return self.weights.shape[2], self.weights.shape[3]

    def filter_at(self, i: int) -> FilterTensor:
        return FilterTensor(self.weights[i], float(self.bias[i]))

    @property
    def filters(self) -> list[FilterTensor]:
        return [self.filter_at(i) for i in range(self.num_filters)]

    def output_shape(self, in_shape):
        C, H, W = in_shape
        if C != self.depth:
            raise ShapeError(f"conv expects {self.depth} channels, got {C}")
        kh, kw = self.kernel_shape
        (pt, pb) = _pad_amounts(H, kh, self.stride, self.padding)
        (pl, pr) = _pad_amounts(W, kw, self.stride, self.padding)
        oh = (H + pt + pb - kh) // self.stride + 1
        ow = (W + pl + pr - kw) // self.stride + 1
        if oh < 1 or ow < 1:
            raise ShapeError(f"conv output would be empty for input {in_shape}")
        return (self.num_filters, oh, ow)

    def forward(self, x: np.ndarray, cache: dict | None = None) -> np.ndarray:
        B, C, H, W = x.shape
        if C != self.depth:
            raise ShapeError(f"conv expects {self.depth} channels, got {C}")
        kh, kw = self.kernel_shape
        pt, pb = _pad_amounts(H, kh, self.stride, self.padding)
        pl, pr = _pad_amounts(W, kw, self.stride, self.padding)
        xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr))) if pt + pb + pl + pr else x
        cols, oh, ow = _im2col(xp, kh, kw, self.stride)
        wmat = self.weights.reshape(self.num_filters, -1)
        out = cols @ wmat.T + self.bias
        out = out.transpose(0, 2, 1).reshape(B, self.num_filters, oh, ow)
        if cache is not None:
            cache.update(cols=cols, xp_shape=xp.shape, oh=oh, ow=ow, pads=(pt, pb, pl, pr))
        return out

    def backward(self, grad: np.ndarray, cache: dict):
        B = grad.shape[0]
        kh, kw = self.kernel_shape
        oh, ow = cache["oh"], cache["ow"]
        cols = cache["cols"]
        g2 = grad.reshape(B, self.num_filters, oh * ow).transpose(0, 2, 1)
        dw = np.tensordot(g2, cols, axes=([0, 1], [0, 1]))  # (F, C*kh*kw)
        db = g2.sum(axis=(0, 1))
        dcols = g2 @ self.weights.reshape(self.num_filters, -1)
        dxp = _col2im(dcols, cache["xp_shape"], kh, kw, self.stride, oh, ow)
        pt, pb, pl, pr = cache["pads"]
        Hp, Wp = cache["xp_shape"][2], cache["xp_shape"][3]
        dx = dxp[:, :, pt : Hp - pb, pl : Wp - pr]
        return dx, (dw.reshape(self.weights.shape), db)


class ReLU:
    kind = "relu"

    def output_shape(self, in_shape):
        return in_shape

    def forward(self, x, cache=None):
        if cache is not None:
            cache["mask"] = x > 0
        return np.maximum(x, 0)

    def backward(self, grad, cache):
        return grad * cache["mask"], None


class MaxPool:
    """Square max pooling; stride defaults to the window (non-overlapping).

    Gradient routes to the first (row-major) maximum inside each window.
    """

    kind = "maxpool"

    def __init__(self, window: int, stride: int | None = None):
        if window < 1:
            raise ShapeError("pool window must be >= 1")
        self.window = window
        self.stride = window if stride is None else stride
        if self.stride < 1:
            raise ShapeError("pool stride must be >= 1")

    def output_shape(self, in_shape):
        C, H, W = in_shape
        if H < self.window or W < self.window:
            raise ShapeError(f"pool window {self.window} exceeds input {H}x{W}")
        oh = (H - self.window) // self.stride + 1
        ow = (W - self.window) // self.stride + 1
        return (C, oh, ow)

    def forward(self, x, cache=None):
        B, C, H, W = x.shape
        _, oh, ow = self.output_shape((C, H, W))
        w = self.window
        win = np.lib.stride_tricks.sliding_window_view(x, (w, w), axis=(2, 3))
        win = win[:, :, :: self.stride, :: self.stride]
        flat = win.reshape(B, C, oh, ow, w * w)
        arg = flat.argmax(axis=-1)
        out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
        if cache is not None:
            cache.update(arg=arg, in_shape=x.shape, oh=oh, ow=ow)
        return out

    def backward(self, grad, cache):
        B, C, H, W = cache["in_shape"]
        oh, ow = cache["oh"], cache["ow"]
        arg = cache["arg"]
        dx = np.zeros((B, C, H, W), dtype=grad.dtype)
        bi, ci, hi, wi = np.indices((B, C, oh, ow), sparse=False)
        habs = hi * self.stride + arg // self.window
        wabs = wi * self.stride + arg % self.window
        np.add.at(dx, (bi, ci, habs, wabs), grad)
        return dx, None


class Flatten:
    """Channel-major flatten: (C, H, W) -> C*H*W with index c*H*W + i*W + j."""

    kind = "flatten"

    def output_shape(self, in_shape):
        C, H, W = in_shape
        return (C * H * W,)

    def forward(self, x, cache=None):
        if cache is not None:
            cache["in_shape"] = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad, cache):
        return grad.reshape(cache["in_shape"]), None


class Dense:
    """Affine layer; weights shaped (in_features, out_features)."""

    kind = "dense"

    def __init__(self, weights: np.ndarray, bias: np.ndarray):
        weights = np.asarray(weights)
        bias = np.asarray(bias)
        if weights.ndim != 2 or bias.shape != (weights.shape[1],):
            raise ShapeError(f"bad dense shapes {weights.shape} / {bias.shape}")
        self.weights = weights
        self.bias = bias

    def output_shape(self, in_shape):
        if len(in_shape) != 1 or in_shape[0] != self.weights.shape[0]:
            raise ShapeError(
                f"dense expects ({self.weights.shape[0]},) input, got {in_shape}"
            )
        return (self.weights.shape[1],)

    def forward(self, x, cache=None):
        if cache is not None:
            cache["x"] = x
        return x @ self.weights + self.bias

    def backward(self, grad, cache):
        dw = cache["x"].T @ grad
        db = grad.sum(axis=0)
        dx = grad @ self.weights.T
        return dx, (dw, db)


class Softmax:
    kind = "softmax"

    def output_shape(self, in_shape):
        if len(in_shape) != 1:
            raise ShapeError(f"softmax expects a vector, got {in_shape}")
        return in_shape

    def forward(self, x, cache=None):
        z = x - x.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def backward(self, grad, cache):  # pragma: no cover - fused with the loss
        raise NotImplementedError("softmax gradient is fused with cross-entropy")


LAYER_KINDS = {"conv2d", "relu", "maxpool", "flatten", "dense", "softmax"}


class NetworkGraph:
    """An ordered stack of layers applied to (C, H, W) inputs.

    The last layer must be Softmax so ``forward`` yields class
    probabilities.  ``validate`` walks the shape chain and raises
    ShapeError on any incompatibility.
    """

    def __init__(self, input_shape: tuple[int, int, int], layers: list):
        self.input_shape = tuple(int(d) for d in input_shape)
        self.layers = list(layers)

    def validate(self) -> list[tuple]:
        if len(self.input_shape) != 3:
            raise ShapeError(f"input shape must be (C,H,W), got {self.input_shape}")
        shapes = [self.input_shape]
        for layer in self.layers:
            shapes.append(layer.output_shape(shapes[-1]))
        if self.layers and not isinstance(self.layers[-1], Softmax):
            raise ShapeError("last layer must be softmax")
        return shapes

    @property
    def num_classes(self) -> int:
        return self.validate()[-1][0]

    def conv_indices(self) -> list[int]:
        return [i for i, l in enumerate(self.layers) if isinstance(l, Conv2D)]

    def forward_batch(self, x: np.ndarray, caches: list | None = None) -> np.ndarray:
        out = x
        for layer in self.layers:
            cache = {} if caches is not None else None
            out = layer.forward(out, cache)
            if caches is not None:
                caches.append(cache)
        return out

    def forward(self, fm: FeatureMap) -> np.ndarray:
        """Class-probability vector for a single feature map."""
        if fm.data.shape != self.input_shape:
            raise ShapeError(
                f"input shape {fm.data.shape} != model input {self.input_shape}"
            )
        x = np.asarray(fm.data, dtype=self.dtype)[None]
        return self.forward_batch(x)[0]

    @property
    def dtype(self):
        for layer in self.layers:
            if hasattr(layer, "weights"):
                return layer.weights.dtype
        return np.float32

    def astype(self, dtype) -> "NetworkGraph":
        return NetworkGraph(
            self.input_shape, [_copy_layer(l, dtype) for l in self.layers]
        )

    def copy(self) -> "NetworkGraph":
        return self.astype(None)


def _copy_layer(layer, dtype=None):
    def cast(a):
        return a.copy() if dtype is None else a.astype(dtype)

    if isinstance(layer, Conv2D):
        return Conv2D(cast(layer.weights), cast(layer.bias), layer.stride, layer.padding)
    if isinstance(layer, Dense):
        return Dense(cast(layer.weights), cast(layer.bias))
    if isinstance(layer, MaxPool):
        return MaxPool(layer.window, layer.stride)
    if isinstance(layer, ReLU):
        return ReLU()
    if isinstance(layer, Flatten):
        return Flatten()
    if isinstance(layer, Softmax):
        return Softmax()
    raise TypeError(f"unknown layer {layer!r}")


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype=np.float32):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def init_conv(rng, in_channels: int, filters: int, kernel: int = 3, stride: int = 1, padding: str = "same") -> Conv2D:
    fan_in = in_channels * kernel * kernel
    fan_out = filters * kernel * kernel
    w = glorot_uniform(rng, (filters, in_channels, kernel, kernel), fan_in, fan_out)
    return Conv2D(w, np.zeros(filters, dtype=np.float32), stride, padding)


def init_dense(rng, in_features: int, out_features: int) -> Dense:
    w = glorot_uniform(rng, (in_features, out_features), in_features, out_features)
    return Dense(w, np.zeros(out_features, dtype=np.float32))


def record_activations(model: NetworkGraph, x: np.ndarray) -> dict[int, np.ndarray]:
    """Post-ReLU activation maps for every conv layer directly followed by ReLU.

    Returns {conv layer index: (B, filters, oh, ow)}.
    """
    out = np.asarray(x, dtype=model.dtype)
    recorded: dict[int, np.ndarray] = {}
    for i, layer in enumerate(model.layers):
        out = layer.forward(out)
        if (
            isinstance(layer, ReLU)
            and i > 0
            and isinstance(model.layers[i - 1], Conv2D)
        ):
            recorded[i - 1] = out
    return recorded


def save_model(path, model: NetworkGraph) -> None:
    arrays, meta = _model_payload(model)
    serialize.save_arrays(path, arrays, meta)


def model_bytes(model: NetworkGraph) -> bytes:
    arrays, meta = _model_payload(model)
    return serialize.pack_arrays(arrays, meta)


def _model_payload(model: NetworkGraph):
    arrays: dict[str, np.ndarray] = {}
    descriptors = []
    for i, layer in enumerate(model.layers):
        desc: dict = {"kind": layer.kind}
        if isinstance(layer, Conv2D):
            desc.update(stride=layer.stride, padding=layer.padding)
            arrays[f"layer{i}/weights"] = layer.weights
            arrays[f"layer{i}/bias"] = layer.bias
        elif isinstance(layer, Dense):
            arrays[f"layer{i}/weights"] = layer.weights
            arrays[f"layer{i}/bias"] = layer.bias
        elif isinstance(layer, MaxPool):
            desc.update(window=layer.window, stride=layer.stride)
        descriptors.append(desc)
    meta = {
        "format": "radarprune-model",
        "format_version": 1,
        "input_shape": list(model.input_shape),
        "layers": descriptors,
    }
    return arrays, meta


def load_model(path) -> NetworkGraph:
    arrays, meta = serialize.load_arrays(path)
    return _model_from_payload(arrays, meta)


def model_from_bytes(blob: bytes) -> NetworkGraph:
    arrays, meta = serialize.unpack_arrays(blob)
    return _model_from_payload(arrays, meta)


def _model_from_payload(arrays, meta) -> NetworkGraph:
    if meta.get("format") != "radarprune-model":
        raise serialize.ContainerError(f"not a model container: {meta.get('format')!r}")
    if meta.get("format_version") != 1:
        raise serialize.ContainerError(
            f"unsupported model format version {meta.get('format_version')!r}"
        )
    layers = []
    for i, desc in enumerate(meta["layers"]):
        kind = desc["kind"]
        if kind == "conv2d":
            layers.append(
                Conv2D(
                    arrays[f"layer{i}/weights"],
                    arrays[f"layer{i}/bias"],
                    desc["stride"],
                    desc["padding"],
                )
            )
        elif kind == "relu":
            layers.append(ReLU())
        elif kind == "maxpool":
            layers.append(MaxPool(desc["window"], desc["stride"]))
        elif kind == "flatten":
            layers.append(Flatten())
        elif kind == "dense":
            layers.append(Dense(arrays[f"layer{i}/weights"], arrays[f"layer{i}/bias"]))
        elif kind == "softmax":
            layers.append(Softmax())
        else:
            raise serialize.ContainerError(f"unknown layer kind {kind!r}")
    return NetworkGraph(tuple(meta["input_shape"]), layers)
