"""Digital floating-point reference network.

Every layer is evaluated exactly as the software model defines it, in
float64; the analog pipeline is verified against these functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .convmap import output_dims
from .errors import ConfigError, GeometryError

LAYER_KINDS = frozenset({
    "conv", "depthwise_conv", "pointwise_conv", "batchnorm",
    "relu", "hard_sigmoid", "hard_swish",
    "gap", "fc", "se_block", "residual_add",
})

ACTIVATION_KINDS = frozenset({"relu", "hard_sigmoid", "hard_swish"})

# kinds that look weights up by name
PARAMETERIZED_KINDS = frozenset({
    "conv", "depthwise_conv", "pointwise_conv", "batchnorm", "fc", "se_block",
})


@dataclass(frozen=True)
class LayerSpec:
    """One layer description; unused fields stay at their defaults.

    source (residual_add only) is the index of the earlier layer whose
    output is added, with -1 meaning the network input.
    """

    kind: str
    name: str = ""
    out_channels: int = 0
    kernel: tuple[int, int] = (1, 1)
    stride: int = 1
    padding: int = 0
    eps: float = 1e-5
    reduced: int = 0
    out_features: int = 0
    source: int = -1

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ConfigError(f"unknown layer kind {self.kind!r}")
        k = self.kernel
        if isinstance(k, int):
            k = (k, k)
        object.__setattr__(self, "kernel", (int(k[0]), int(k[1])))
        if self.kind in PARAMETERIZED_KINDS and not self.name:
            raise ConfigError(f"{self.kind} layer needs a name to look weights up by")


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layers plus the input/output contract."""

    input_shape: tuple[int, int, int]
    class_count: int
    layers: tuple[LayerSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        shape = tuple(int(d) for d in self.input_shape)
        if len(shape) != 3 or min(shape) < 1:
            raise ConfigError(f"input_shape must be (channels, height, width), got {self.input_shape!r}")
        object.__setattr__(self, "input_shape", shape)
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.class_count < 1:
            raise ConfigError(f"class_count must be positive, got {self.class_count!r}")


def conv2d_ref(x, kernel, bias=0.0, stride: int = 1, padding: int = 0):
    """Strided cross-correlation with zero padding.

    Args:
        x: input of shape (C_in, H, W), or (H, W) with a 2-D kernel.
        kernel: (C_out, C_in, F_r, F_c), or (F_r, F_c) for one channel.
        bias: scalar or per-output-channel vector.

    Returns:
        (C_out, O_r, O_c) output, squeezed to (O_r, O_c) for 2-D input.
    """
    x = np.asarray(x, dtype=np.float64)
    k = np.asarray(kernel, dtype=np.float64)
    squeeze = x.ndim == 2 and k.ndim == 2
    if x.ndim == 2:
        x = x[None]
    if k.ndim == 2:
        k = k[None, None]
    if x.ndim != 3 or k.ndim != 4:
        raise GeometryError(f"bad conv shapes: input {np.shape(x)}, kernel {np.shape(k)}")
    c_out, c_in, f_r, f_c = k.shape
    if x.shape[0] != c_in:
        raise GeometryError(f"kernel expects {c_in} input channels, input has {x.shape[0]}")
    o_r = output_dims(x.shape[1], f_r, padding, stride)
    o_c = output_dims(x.shape[2], f_c, padding, stride)
    b = np.broadcast_to(np.asarray(bias, dtype=np.float64), (c_out,))

    xp = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    out = np.zeros((c_out, o_r, o_c))
    for co in range(c_out):
        acc = np.zeros((o_r, o_c))
        for ci in range(c_in):
            for r in range(f_r):
                for c in range(f_c):
                    acc += k[co, ci, r, c] * xp[ci,
                                                r: r + stride * o_r: stride,
                                                c: c + stride * o_c: stride]
        out[co] = acc + b[co]
    return out[0] if squeeze else out


def depthwise_conv_ref(x, kernel, stride: int = 1, padding: int = 0):
    """Per-channel convolution, no cross-channel sum; kernel shape (C, F_r, F_c)."""
    x = np.asarray(x, dtype=np.float64)
    k = np.asarray(kernel, dtype=np.float64)
    if x.ndim != 3 or k.ndim != 3:
        raise GeometryError(f"bad depthwise shapes: input {x.shape}, kernel {k.shape}")
    if x.shape[0] != k.shape[0]:
        raise GeometryError(f"input has {x.shape[0]} channels, kernel has {k.shape[0]}")
    return np.stack([conv2d_ref(x[c], k[c], 0.0, stride, padding)
                     for c in range(x.shape[0])])


def batchnorm_ref(x, mean, var, gamma, beta, eps: float = 1e-5):
    """y = (x - mean) / sqrt(var + eps) * gamma + beta, per channel on 3-D input."""
    x = np.asarray(x, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if eps <= 0:
        raise ConfigError(f"eps must be positive, got {eps!r}")
    if np.any(var < 0):
        raise ConfigError("variance must be nonnegative")
    if x.ndim == 3:
        mean, var = mean.reshape(-1, 1, 1), var.reshape(-1, 1, 1)
        gamma, beta = gamma.reshape(-1, 1, 1), beta.reshape(-1, 1, 1)
        if mean.shape[0] != x.shape[0]:
            raise GeometryError(f"{mean.shape[0]} channel params for {x.shape[0]} channels")
    return (x - mean) / np.sqrt(var + eps) * gamma + beta


def activation_ref(x, kind: str):
    """Elementwise activation: relu, hard_sigmoid, or hard_swish."""
    x = np.asarray(x, dtype=np.float64)
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "hard_sigmoid":
        return np.clip(x + 3.0, 0.0, 6.0) / 6.0
    if kind == "hard_swish":
        return x * (np.clip(x + 3.0, 0.0, 6.0) / 6.0)
    raise ConfigError(f"unknown activation kind {kind!r}")


def gap_ref(x):
    """Spatial mean per channel: (C, H, W) -> (C,)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[1] * x.shape[2] == 0:
        raise GeometryError(f"global average pool needs (C, H, W) with H*W >= 1, got {x.shape}")
    return x.mean(axis=(1, 2))


def fc_ref(x, w, b):
    """y = W @ x + b."""
    x = np.asarray(x, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[1] != x.shape[0]:
        raise GeometryError(f"weight shape {w.shape} does not accept input of length {x.shape[0]}")
    b = np.broadcast_to(np.asarray(b, dtype=np.float64), (w.shape[0],))
    return w @ x + b


def se_block_ref(x, fc1, fc2):
    """Squeeze-and-excitation: gate channels by hsig(fc2(relu(fc1(gap(x)))))."""
    x = np.asarray(x, dtype=np.float64)
    w1, b1 = fc1
    w2, b2 = fc2
    s = gap_ref(x)
    s = activation_ref(fc_ref(s, w1, b1), "relu")
    s = activation_ref(fc_ref(s, w2, b2), "hard_sigmoid")
    if s.shape[0] != x.shape[0]:
        raise GeometryError(f"gate length {s.shape[0]} for {x.shape[0]} channels")
    return x * s[:, None, None]


def forward_ref(net: NetworkSpec, image, weights) -> np.ndarray:
    """Run the whole reference network; returns the class-score vector.

    weights is a WeightStore or any mapping from tensor name to array.
    """
    from .formats import WeightStore

    if not isinstance(weights, WeightStore):
        weights = WeightStore.from_arrays(dict(weights))

    x = np.asarray(image, dtype=np.float64)
    if x.shape != net.input_shape:
        raise GeometryError(f"image shape {x.shape} != input shape {net.input_shape}")
    outputs: list[np.ndarray] = []
    for layer in net.layers:
        kind = layer.kind
        if kind in ("conv", "pointwise_conv"):
            k = weights.get(f"{layer.name}.weight")
            b = weights.get(f"{layer.name}.bias")
            x = conv2d_ref(x, k, b, layer.stride if kind == "conv" else 1,
                           layer.padding if kind == "conv" else 0)
        elif kind == "depthwise_conv":
            k = weights.get(f"{layer.name}.weight")
            x = depthwise_conv_ref(x, k, layer.stride, layer.padding)
        elif kind == "batchnorm":
            x = batchnorm_ref(x,
                              weights.get(f"{layer.name}.mean"),
                              weights.get(f"{layer.name}.var"),
                              weights.get(f"{layer.name}.gamma"),
                              weights.get(f"{layer.name}.beta"),
                              layer.eps)
        elif kind in ACTIVATION_KINDS:
            x = activation_ref(x, kind)
        elif kind == "gap":
            x = gap_ref(x)
        elif kind == "fc":
            x = fc_ref(x, weights.get(f"{layer.name}.weight"),
                       weights.get(f"{layer.name}.bias"))
        elif kind == "se_block":
            x = se_block_ref(x,
                             (weights.get(f"{layer.name}.fc1.weight"),
                              weights.get(f"{layer.name}.fc1.bias")),
                             (weights.get(f"{layer.name}.fc2.weight"),
                              weights.get(f"{layer.name}.fc2.bias")))
        elif kind == "residual_add":
            other = np.asarray(image, dtype=np.float64) if layer.source < 0 else outputs[layer.source]
            if other.shape != x.shape:
                raise GeometryError(
                    f"residual join of shapes {other.shape} and {x.shape}")
            x = x + other
        else:  # pragma: no cover - LayerSpec already validates kinds
            raise ConfigError(f"unknown layer kind {kind!r}")
        outputs.append(x)
    scores = np.asarray(x, dtype=np.float64).ravel()
    if scores.shape[0] != net.class_count:
        raise GeometryError(
            f"network yields {scores.shape[0]} scores, class_count is {net.class_count}")
    return scores
