#!/usr/bin/env python3
"""Generate random demo weights and sample images for a model config.

Usage: python scripts/make_demo_weights.py [out_dir] [--config PATH]
                                           [--seed N] [--images N]

Writes weights.manifest + weights.bin + images.f32 into out_dir.
The weights are random (the network is untrained); they exist so the
CLI and the parity checks can run against the shipped config.
"""

import argparse
from pathlib import Path

import numpy as np

from xbarnet import load_network_spec
from xbarnet.formats import write_weights


def random_weights(spec, rng):
    arrays = {}
    channels = spec.input_shape[0]
    shape = spec.input_shape

    def u(*dims, lo=-0.5, hi=0.5):
        return rng.uniform(lo, hi, dims)

    for layer in spec.layers:
        kind = layer.kind
        if kind in ("conv", "pointwise_conv"):
            f_r, f_c = layer.kernel if kind == "conv" else (1, 1)
            fan_in = channels * f_r * f_c
            scale = 1.0 / np.sqrt(fan_in)
            arrays[f"{layer.name}.weight"] = u(layer.out_channels, channels, f_r, f_c,
                                               lo=-scale, hi=scale)
            arrays[f"{layer.name}.bias"] = u(layer.out_channels, lo=-0.1, hi=0.1)
            channels = layer.out_channels
            stride = layer.stride if kind == "conv" else 1
            pad = layer.padding if kind == "conv" else 0
            h = (shape[1] - f_r + 2 * pad) // stride + 1
            w = (shape[2] - f_c + 2 * pad) // stride + 1
            shape = (channels, h, w)
        elif kind == "depthwise_conv":
            f_r, f_c = layer.kernel
            scale = 1.0 / np.sqrt(f_r * f_c)
            arrays[f"{layer.name}.weight"] = u(channels, f_r, f_c, lo=-scale, hi=scale)
            h = (shape[1] - f_r + 2 * layer.padding) // layer.stride + 1
            w = (shape[2] - f_c + 2 * layer.padding) // layer.stride + 1
            shape = (channels, h, w)
        elif kind == "batchnorm":
            arrays[f"{layer.name}.mean"] = u(channels, lo=-0.2, hi=0.2)
            arrays[f"{layer.name}.var"] = rng.uniform(0.5, 1.5, channels)
            arrays[f"{layer.name}.gamma"] = rng.uniform(0.5, 1.0, channels) * rng.choice(
                [-1.0, 1.0], channels)
            arrays[f"{layer.name}.beta"] = u(channels, lo=-0.2, hi=0.2)
        elif kind == "se_block":
            r = layer.reduced
            arrays[f"{layer.name}.fc1.weight"] = u(r, channels)
            arrays[f"{layer.name}.fc1.bias"] = u(r, lo=-0.1, hi=0.1)
            arrays[f"{layer.name}.fc2.weight"] = u(channels, r)
            arrays[f"{layer.name}.fc2.bias"] = u(channels, lo=-0.1, hi=0.1)
        elif kind == "gap":
            shape = (channels,)
        elif kind == "fc":
            in_len = int(np.prod(shape))
            scale = 1.0 / np.sqrt(in_len)
            arrays[f"{layer.name}.weight"] = u(layer.out_features, in_len,
                                               lo=-scale, hi=scale)
            arrays[f"{layer.name}.bias"] = u(layer.out_features, lo=-0.1, hi=0.1)
            shape = (layer.out_features,)
    return arrays


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", nargs="?", default="data/demo")
    parser.add_argument("--config", default="configs/cifar10_small.json")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--images", type=int, default=4)
    args = parser.parse_args()

    spec = load_network_spec(args.config)
    rng = np.random.default_rng(args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    arrays = random_weights(spec, rng)
    write_weights(arrays, out / "weights.manifest")

    images = rng.uniform(-1.0, 1.0, (args.images, *spec.input_shape))
    images.astype("<f4").tofile(out / "images.f32")

    total = sum(int(np.prod(a.shape)) for a in arrays.values())
    print(f"wrote {len(arrays)} tensors ({total} values) and "
          f"{args.images} images to {out}")


if __name__ == "__main__":
    main()
