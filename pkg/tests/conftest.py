"""Shared oracles and generators for the test suite.

The oracles here are deliberately built on different machinery than
the package (stride tricks instead of index formulas, matmul instead
of current summation) so agreement is meaningful.
"""

import numpy as np
import pytest

from xbarnet import DeviceParams, LayerSpec, NetworkSpec, output_dims


@pytest.fixture
def dp():
    return DeviceParams()


def im2col_conv(x2d, kernel, bias=0.0, stride=1, padding=0):
    """Unfold-and-matmul convolution; flat output, row-major windows."""
    xp = np.pad(np.asarray(x2d, dtype=np.float64), padding)
    k = np.asarray(kernel, dtype=np.float64)
    win = np.lib.stride_tricks.sliding_window_view(xp, k.shape)[::stride, ::stride]
    cols = win.reshape(-1, k.size)
    return cols @ k.ravel() + bias


def window_origin_indices(geom):
    """Flat padded-grid index of each window's top-left cell, window order."""
    idx = np.arange(geom.rows_padded * geom.cols_padded).reshape(
        geom.rows_padded, geom.cols_padded)
    win = np.lib.stride_tricks.sliding_window_view(
        idx, (geom.kernel_rows, geom.kernel_cols))[::geom.stride, ::geom.stride]
    return win[..., 0, 0].ravel()


def valid_conv_cases():
    """Every (W, F, P, S) combo in the sweep bounds with integral output."""
    cases = []
    for w in range(1, 9):
        for f in range(1, w + 1):
            for p in range(3):
                for s in range(1, 4):
                    if (w - f + 2 * p) % s != 0:
                        continue
                    if f > w + 2 * p:
                        continue
                    cases.append((w, f, p, s))
    return cases


def random_program(rng, max_dim=30):
    """Arbitrary valid crossbar program, mixing integral and fractional ohms."""
    from xbarnet import CrossbarProgram

    rows = int(rng.integers(1, max_dim + 1))
    cols = int(rng.integers(1, max_dim + 1))
    n_cells = int(rng.integers(0, min(rows * cols, 40) + 1))
    coords = rng.choice(rows * cols, size=n_cells, replace=False)
    cells = []
    for flat in coords:
        r, c = divmod(int(flat), cols)
        if rng.random() < 0.5:
            res = float(rng.integers(1, 10**6))
        else:
            res = float(rng.uniform(1e-3, 1e9))
        cells.append((r, c, res))
    label = "".join(rng.choice(list("abcxyz_.0-"), size=int(rng.integers(1, 9))))
    rf = float(rng.uniform(0.5, 2000.0))
    return CrossbarProgram(rows=rows, cols=cols, cells=tuple(cells), rf=rf, label=label)


def make_random_spec(rng, max_blocks=4, max_channels=8):
    """Random bottleneck-style network within the parity-sweep bounds."""
    size = int(rng.choice([8, 10, 12]))
    c_in = int(rng.integers(1, 4))
    class_count = int(rng.integers(2, 11))
    layers = []

    stem_ch = int(rng.integers(2, max_channels + 1))
    layers.append(LayerSpec(kind="conv", name="stem", out_channels=stem_ch,
                            kernel=(2, 2), stride=2))
    layers.append(LayerSpec(kind="batchnorm", name="bn_stem"))
    layers.append(LayerSpec(kind="hard_swish"))
    channels = stem_ch
    spatial = (size - 2) // 2 + 1

    for bi in range(int(rng.integers(1, max_blocks + 1))):
        act = str(rng.choice(["relu", "hard_swish"]))
        expand = int(rng.integers(channels, max_channels + 1))
        block_in = len(layers) - 1
        # stride-2 k2 needs an even spatial extent to keep outputs integral
        downsample = bool(rng.random() < 0.3) and spatial >= 2 and spatial % 2 == 0
        name = f"b{bi}"
        layers.append(LayerSpec(kind="pointwise_conv", name=f"{name}.expand",
                                out_channels=expand))
        layers.append(LayerSpec(kind="batchnorm", name=f"{name}.bn1"))
        layers.append(LayerSpec(kind=act))
        if downsample:
            layers.append(LayerSpec(kind="depthwise_conv", name=f"{name}.dw",
                                    kernel=(2, 2), stride=2))
            spatial = (spatial - 2) // 2 + 1
        else:
            layers.append(LayerSpec(kind="depthwise_conv", name=f"{name}.dw",
                                    kernel=(3, 3), padding=1))
        layers.append(LayerSpec(kind="batchnorm", name=f"{name}.bn2"))
        layers.append(LayerSpec(kind=act))
        if rng.random() < 0.6:
            layers.append(LayerSpec(kind="se_block", name=f"{name}.se",
                                    reduced=max(1, expand // 4)))
        project = int(rng.integers(1, max_channels + 1))
        if not downsample and rng.random() < 0.7:
            project = channels
        layers.append(LayerSpec(kind="pointwise_conv", name=f"{name}.project",
                                out_channels=project))
        layers.append(LayerSpec(kind="batchnorm", name=f"{name}.bn3"))
        if not downsample and project == channels:
            layers.append(LayerSpec(kind="residual_add", source=block_in))
        channels = project

    layers.append(LayerSpec(kind="gap"))
    layers.append(LayerSpec(kind="fc", name="head", out_features=class_count))
    return NetworkSpec(input_shape=(c_in, size, size), class_count=class_count,
                       layers=tuple(layers))


def random_weights_for(spec, rng, sparsity=0.0):
    """Random weight dict for a spec; sparsity zeroes that fraction of values."""
    arrays = {}
    channels = spec.input_shape[0]
    shape = spec.input_shape

    def u(*dims, lo=-0.8, hi=0.8):
        arr = rng.uniform(lo, hi, dims)
        if sparsity:
            arr[rng.random(dims) < sparsity] = 0.0
        return arr

    for layer in spec.layers:
        kind = layer.kind
        if kind in ("conv", "pointwise_conv"):
            f_r, f_c = layer.kernel if kind == "conv" else (1, 1)
            scale = 1.0 / np.sqrt(channels * f_r * f_c)
            arrays[f"{layer.name}.weight"] = u(layer.out_channels, channels, f_r, f_c,
                                               lo=-scale, hi=scale)
            arrays[f"{layer.name}.bias"] = u(layer.out_channels, lo=-0.2, hi=0.2)
            channels = layer.out_channels
            stride = layer.stride if kind == "conv" else 1
            pad = layer.padding if kind == "conv" else 0
            shape = (channels,
                     output_dims(shape[1], f_r, pad, stride),
                     output_dims(shape[2], f_c, pad, stride))
        elif kind == "depthwise_conv":
            f_r, f_c = layer.kernel
            scale = 1.0 / np.sqrt(f_r * f_c)
            arrays[f"{layer.name}.weight"] = u(channels, f_r, f_c, lo=-scale, hi=scale)
            shape = (channels,
                     output_dims(shape[1], f_r, layer.padding, layer.stride),
                     output_dims(shape[2], f_c, layer.padding, layer.stride))
        elif kind == "batchnorm":
            arrays[f"{layer.name}.mean"] = u(channels, lo=-0.5, hi=0.5)
            arrays[f"{layer.name}.var"] = rng.uniform(0.25, 4.0, channels)
            arrays[f"{layer.name}.gamma"] = u(channels, lo=-1.0, hi=1.0)
            arrays[f"{layer.name}.beta"] = u(channels, lo=-0.5, hi=0.5)
        elif kind == "se_block":
            r = layer.reduced
            arrays[f"{layer.name}.fc1.weight"] = u(r, channels)
            arrays[f"{layer.name}.fc1.bias"] = u(r, lo=-0.2, hi=0.2)
            arrays[f"{layer.name}.fc2.weight"] = u(channels, r)
            arrays[f"{layer.name}.fc2.bias"] = u(channels, lo=-0.2, hi=0.2)
        elif kind == "gap":
            shape = (channels,)
        elif kind == "fc":
            in_len = int(np.prod(shape))
            scale = 1.0 / np.sqrt(in_len)
            arrays[f"{layer.name}.weight"] = u(layer.out_features, in_len,
                                               lo=-scale, hi=scale)
            arrays[f"{layer.name}.bias"] = u(layer.out_features, lo=-0.2, hi=0.2)
            shape = (layer.out_features,)
    return arrays


def expected_cell_count(spec, weights):
    """Memristor count derived straight from nonzero weight entries.

    Conv-family weights are replicated once per output location; FC and
    SE weights map one cell per nonzero entry; a normalization channel
    programs two centering cells plus one per nonzero scale and shift;
    pooling programs one cell per pooled element.
    """
    total = 0
    channels = spec.input_shape[0]
    shape = spec.input_shape
    for layer in spec.layers:
        kind = layer.kind
        if kind in ("conv", "pointwise_conv"):
            f_r, f_c = layer.kernel if kind == "conv" else (1, 1)
            stride = layer.stride if kind == "conv" else 1
            pad = layer.padding if kind == "conv" else 0
            o_r = output_dims(shape[1], f_r, pad, stride)
            o_c = output_dims(shape[2], f_c, pad, stride)
            out_count = o_r * o_c
            k = weights[f"{layer.name}.weight"]
            b = weights[f"{layer.name}.bias"]
            total += out_count * int(np.count_nonzero(k))
            total += out_count * int(np.count_nonzero(b))
            channels = layer.out_channels
            shape = (channels, o_r, o_c)
        elif kind == "depthwise_conv":
            f_r, f_c = layer.kernel
            o_r = output_dims(shape[1], f_r, layer.padding, layer.stride)
            o_c = output_dims(shape[2], f_c, layer.padding, layer.stride)
            k = weights[f"{layer.name}.weight"]
            total += o_r * o_c * int(np.count_nonzero(k))
            shape = (channels, o_r, o_c)
        elif kind == "batchnorm":
            gamma = weights[f"{layer.name}.gamma"]
            beta = weights[f"{layer.name}.beta"]
            total += 2 * channels
            total += int(np.count_nonzero(gamma)) + int(np.count_nonzero(beta))
        elif kind == "se_block":
            total += shape[1] * shape[2] * channels
            for part in ("fc1", "fc2"):
                total += int(np.count_nonzero(weights[f"{layer.name}.{part}.weight"]))
                total += int(np.count_nonzero(weights[f"{layer.name}.{part}.bias"]))
        elif kind == "gap":
            total += shape[1] * shape[2] * channels
            shape = (channels,)
        elif kind == "fc":
            total += int(np.count_nonzero(weights[f"{layer.name}.weight"]))
            total += int(np.count_nonzero(weights[f"{layer.name}.bias"]))
            shape = (layer.out_features,)
    return total
