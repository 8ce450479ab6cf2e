"""Whole-network compilation and analog inference.

compile_network lowers every layer of a NetworkSpec onto its circuit
(crossbar programs for conv/BN/GAP/FC, functional blocks for
activations, adders, and channel gates) and records the shape each
stage produces. forward_analog then walks the stages, encoding row
voltages, evaluating columns, and decoding back to the logical domain
between stages.

Stage indices match layer indices in the originating spec, so residual
junctions address earlier stage outputs directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bnmap import BNCircuit, BNParams, stage_programs, compile_bn, evaluate_bn_circuit_array
from .convmap import (ConvGeometry, PlacementPlan, compile_depthwise,
                      compile_multichannel_conv, decode_output, encode_input)
from .crossbar import CrossbarProgram, DeviceParams, evaluate_crossbar
from .errors import ConfigError, GeometryError
from .functional import (activation_circuit, analog_add, analog_mul,
                         hard_sigmoid_circuit, relu_circuit)
from .poolfc import (FcProgram, GapProgram, compile_fc, compile_gap,
                     decode_column_voltages, fc_input_voltages, gap_input_voltages)
from .reference import ACTIVATION_KINDS, NetworkSpec


@dataclass(frozen=True)
class ConvStage:
    """Standard or pointwise convolution: one program per output channel."""

    kind: str
    name: str
    geometry: ConvGeometry
    channel_programs: tuple[tuple[CrossbarProgram, PlacementPlan], ...]
    out_shape: tuple[int, int, int]

    def programs(self):
        return [prog for prog, _ in self.channel_programs]

    def forward(self, x, dp: DeviceParams):
        voltages = encode_input(x, self.geometry, dp)
        out = np.empty(self.out_shape)
        for co, (prog, _) in enumerate(self.channel_programs):
            flat = decode_output(evaluate_crossbar(prog, voltages), self.geometry, dp)
            out[co] = flat.reshape(self.out_shape[1:])
        return out


@dataclass(frozen=True)
class DepthwiseStage:
    """Per-channel convolution: independent single-channel programs."""

    kind: str
    name: str
    geometry: ConvGeometry
    channel_programs: tuple[tuple[CrossbarProgram, PlacementPlan], ...]
    out_shape: tuple[int, int, int]

    def programs(self):
        return [prog for prog, _ in self.channel_programs]

    def forward(self, x, dp: DeviceParams):
        out = np.empty(self.out_shape)
        for c, (prog, _) in enumerate(self.channel_programs):
            voltages = encode_input(x[c], self.geometry, dp)
            flat = decode_output(evaluate_crossbar(prog, voltages), self.geometry, dp)
            out[c] = flat.reshape(self.out_shape[1:])
        return out


@dataclass(frozen=True)
class BNStage:
    """Per-channel normalization circuits, two cascaded columns each."""

    kind: str
    name: str
    circuits: tuple[BNCircuit, ...]
    params: tuple[BNParams, ...]
    stage_programs: tuple[CrossbarProgram, ...]
    out_shape: tuple[int, int, int]

    def programs(self):
        return list(self.stage_programs)

    def forward(self, x, dp: DeviceParams):
        out = np.empty(self.out_shape)
        for c, (circuit, params) in enumerate(zip(self.circuits, self.params)):
            out[c] = evaluate_bn_circuit_array(circuit, x[c], params, dp)
        return out


@dataclass(frozen=True)
class ActivationStage:
    kind: str
    out_shape: tuple

    def programs(self):
        return []

    def forward(self, x, dp: DeviceParams):
        return activation_circuit(x, self.kind)


@dataclass(frozen=True)
class SEStage:
    """Squeeze-and-excitation: pool, two dense layers, channel gate."""

    kind: str
    name: str
    gap: GapProgram
    fc1: FcProgram
    fc2: FcProgram
    out_shape: tuple[int, int, int]

    def programs(self):
        return [self.gap.program, self.fc1.program, self.fc2.program]

    def forward(self, x, dp: DeviceParams):
        pooled = decode_column_voltages(
            evaluate_crossbar(self.gap.program, gap_input_voltages(x, self.gap, dp)), dp)
        hidden = relu_circuit(decode_column_voltages(
            evaluate_crossbar(self.fc1.program, fc_input_voltages(pooled, self.fc1, dp)), dp))
        gate = hard_sigmoid_circuit(decode_column_voltages(
            evaluate_crossbar(self.fc2.program, fc_input_voltages(hidden, self.fc2, dp)), dp))
        return analog_mul(x, gate)


@dataclass(frozen=True)
class ResidualStage:
    kind: str
    source: int
    out_shape: tuple

    def programs(self):
        return []

    def forward(self, x, dp: DeviceParams, history=None, image=None):
        other = image if self.source < 0 else history[self.source]
        return analog_add(x, other)


@dataclass(frozen=True)
class GapStage:
    kind: str
    gap: GapProgram
    out_shape: tuple[int]

    def programs(self):
        return [self.gap.program]

    def forward(self, x, dp: DeviceParams):
        voltages = gap_input_voltages(x, self.gap, dp)
        return decode_column_voltages(evaluate_crossbar(self.gap.program, voltages), dp)


@dataclass(frozen=True)
class FcStage:
    kind: str
    name: str
    fc: FcProgram
    out_shape: tuple[int]

    def programs(self):
        return [self.fc.program]

    def forward(self, x, dp: DeviceParams):
        voltages = fc_input_voltages(np.asarray(x).ravel(), self.fc, dp)
        return decode_column_voltages(evaluate_crossbar(self.fc.program, voltages), dp)


@dataclass(frozen=True)
class CompiledNetwork:
    """Ordered analog stages plus the spec and device parameters used."""

    stages: tuple
    spec: NetworkSpec
    dp: DeviceParams

    def iter_programs(self):
        """Yield (stage_index, program) for every crossbar in order."""
        for i, stage in enumerate(self.stages):
            for prog in stage.programs():
                yield i, prog


def _shape3(shape, layer_name: str, kind: str):
    if not (isinstance(shape, tuple) and len(shape) == 3):
        raise GeometryError(f"{kind} layer {layer_name!r} needs a (C, H, W) input, "
                            f"got shape {shape!r}")
    return shape


def _check_kernel_shape(arr, expected, name):
    if arr.shape != expected:
        raise GeometryError(f"tensor {name!r} has shape {arr.shape}, expected {expected}")
    return arr


def compile_network(spec: NetworkSpec, dp: DeviceParams, weights) -> CompiledNetwork:
    """Lower every layer; raises on missing weights or broken shape chains."""
    from .formats import WeightStore

    if not isinstance(weights, WeightStore):
        weights = WeightStore.from_arrays(dict(weights))
    if not spec.layers:
        raise ConfigError("model has no layers")

    stages = []
    shape = spec.input_shape
    prev_name = "input"
    shape_history = []
    for index, layer in enumerate(spec.layers):
        kind = layer.kind
        label = layer.name or f"{kind}{index}"
        if kind in ("conv", "pointwise_conv"):
            c_in, h, w = _shape3(shape, label, kind)
            stride = layer.stride if kind == "conv" else 1
            padding = layer.padding if kind == "conv" else 0
            f_r, f_c = layer.kernel if kind == "conv" else (1, 1)
            kernel = _check_kernel_shape(
                weights.get(f"{layer.name}.weight"),
                (layer.out_channels, c_in, f_r, f_c), f"{layer.name}.weight")
            bias = _check_kernel_shape(
                weights.get(f"{layer.name}.bias"), (layer.out_channels,), f"{layer.name}.bias")
            geom = ConvGeometry.of(h, w, f_r, f_c, padding=padding, stride=stride)
            programs = compile_multichannel_conv(kernel, bias, geom, dp, label=layer.name)
            shape = (layer.out_channels, geom.out_rows, geom.out_cols)
            stages.append(ConvStage(kind, layer.name, geom, tuple(programs), shape))
        elif kind == "depthwise_conv":
            c_in, h, w = _shape3(shape, label, kind)
            f_r, f_c = layer.kernel
            kernel = _check_kernel_shape(
                weights.get(f"{layer.name}.weight"), (c_in, f_r, f_c), f"{layer.name}.weight")
            geom = ConvGeometry.of(h, w, f_r, f_c, padding=layer.padding, stride=layer.stride)
            programs = compile_depthwise(kernel, geom, dp, label=layer.name)
            shape = (c_in, geom.out_rows, geom.out_cols)
            stages.append(DepthwiseStage(kind, layer.name, geom, tuple(programs), shape))
        elif kind == "batchnorm":
            c_in, _, _ = _shape3(shape, label, kind)
            fields = {f: weights.get(f"{layer.name}.{f}")
                      for f in ("mean", "var", "gamma", "beta")}
            for f, arr in fields.items():
                _check_kernel_shape(arr, (c_in,), f"{layer.name}.{f}")
            params = tuple(BNParams(mean=fields["mean"][c], var=fields["var"][c],
                                    gamma=fields["gamma"][c], beta=fields["beta"][c],
                                    eps=layer.eps)
                           for c in range(c_in))
            circuits = tuple(compile_bn(p, dp) for p in params)
            progs = tuple(prog for c, circ in enumerate(circuits)
                          for prog in stage_programs(circ, dp, f"{layer.name}.c{c}"))
            stages.append(BNStage(kind, layer.name, circuits, params, progs, shape))
        elif kind in ACTIVATION_KINDS:
            stages.append(ActivationStage(kind, shape))
        elif kind == "se_block":
            c_in, h, w = _shape3(shape, label, kind)
            if layer.reduced < 1:
                raise ConfigError(f"se_block {layer.name!r} needs reduced >= 1")
            w1 = _check_kernel_shape(weights.get(f"{layer.name}.fc1.weight"),
                                     (layer.reduced, c_in), f"{layer.name}.fc1.weight")
            b1 = _check_kernel_shape(weights.get(f"{layer.name}.fc1.bias"),
                                     (layer.reduced,), f"{layer.name}.fc1.bias")
            w2 = _check_kernel_shape(weights.get(f"{layer.name}.fc2.weight"),
                                     (c_in, layer.reduced), f"{layer.name}.fc2.weight")
            b2 = _check_kernel_shape(weights.get(f"{layer.name}.fc2.bias"),
                                     (c_in,), f"{layer.name}.fc2.bias")
            stages.append(SEStage(kind, layer.name,
                                  compile_gap(h * w, c_in, dp, label=f"{layer.name}.pool"),
                                  compile_fc(w1, b1, dp, label=f"{layer.name}.fc1"),
                                  compile_fc(w2, b2, dp, label=f"{layer.name}.fc2"),
                                  shape))
        elif kind == "residual_add":
            if layer.source >= index:
                raise ConfigError(f"residual_add at layer {index} references layer "
                                  f"{layer.source}, which is not earlier")
            other_shape = spec.input_shape if layer.source < 0 else shape_history[layer.source]
            other_name = "input" if layer.source < 0 else (
                spec.layers[layer.source].name or f"layer{layer.source}")
            if other_shape != shape:
                raise GeometryError(
                    f"residual_add cannot join {other_name!r} {other_shape} "
                    f"with {prev_name!r} {shape}")
            stages.append(ResidualStage(kind, layer.source, shape))
        elif kind == "gap":
            c_in, h, w = _shape3(shape, label, kind)
            shape = (c_in,)
            stages.append(GapStage(kind, compile_gap(h * w, c_in, dp, label=f"gap{index}"), shape))
        elif kind == "fc":
            in_len = int(np.prod(shape))
            w_arr = _check_kernel_shape(weights.get(f"{layer.name}.weight"),
                                        (layer.out_features, in_len), f"{layer.name}.weight")
            b_arr = _check_kernel_shape(weights.get(f"{layer.name}.bias"),
                                        (layer.out_features,), f"{layer.name}.bias")
            shape = (layer.out_features,)
            stages.append(FcStage(kind, layer.name,
                                  compile_fc(w_arr, b_arr, dp, label=layer.name), shape))
        else:  # pragma: no cover - LayerSpec validates kinds
            raise ConfigError(f"unknown layer kind {kind!r}")
        shape_history.append(shape)
        prev_name = layer.name or f"layer{index}"

    if not (isinstance(shape, tuple) and int(np.prod(shape)) == spec.class_count):
        raise GeometryError(f"final stage {prev_name!r} yields shape {shape}, "
                            f"class_count is {spec.class_count}")
    return CompiledNetwork(stages=tuple(stages), spec=spec, dp=dp)


def forward_analog(net: CompiledNetwork, image) -> np.ndarray:
    """Evaluate every stage in order; returns the decoded score vector."""
    x = np.asarray(image, dtype=np.float64)
    if x.shape != net.spec.input_shape:
        raise GeometryError(f"image shape {x.shape} != input shape {net.spec.input_shape}")
    history = []
    out = x
    for stage in net.stages:
        if isinstance(stage, ResidualStage):
            out = stage.forward(out, net.dp, history=history, image=x)
        else:
            out = stage.forward(out, net.dp)
        history.append(out)
    return np.asarray(out, dtype=np.float64).ravel()


def predict(net: CompiledNetwork, image) -> int:
    """Index of the highest score; ties go to the lowest index."""
    return int(np.argmax(forward_analog(net, image)))
