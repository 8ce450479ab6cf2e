"""Hardware cost accounting over compiled networks.

Counts programmed cells and amplifiers, estimates worst-case static
power and pipeline latency, and bins the stored weights for the
distribution report. Reference constants from published figures for
comparable designs are attached to the rendered report as labeled
comparison lines, never silently mixed into computed values.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .crossbar import DeviceParams
from .errors import ConfigError
from .formats import WeightStore
from .pipeline import (ActivationStage, BNStage, CompiledNetwork, ConvStage,
                       DepthwiseStage, FcStage, GapStage, ResidualStage, SEStage)

# published comparison points rendered next to computed values
REFERENCE_MEMRISTOR_POWER_W = 1.1e-6
REFERENCE_CMOS_POWER_W = 60e-6
REFERENCE_ANALOG_LATENCY_S = 1.24e-6
REFERENCE_GPU_LATENCY_S = 165.4e-6
REFERENCE_STAGE_COUNT = 12400

DEFAULT_T_DEVICE_S = 1e-10
DEFAULT_W_MAX = 0.2

# amplifiers per element inside the functional blocks
AMP_COUNTS = {
    "relu": 1,
    "hard_sigmoid": 2,
    "hard_swish": 3,
    "adder": 1,
    "multiplier": 1,
}

# sequential crossbar/amplifier settling steps each stage kind adds
STAGE_DEPTHS = {
    "conv": 1,
    "pointwise_conv": 1,
    "depthwise_conv": 1,
    "batchnorm": 2,
    "relu": 1,
    "hard_sigmoid": 1,
    "hard_swish": 1,
    "se_block": 6,
    "residual_add": 1,
    "gap": 1,
    "fc": 1,
}


@dataclass(frozen=True)
class LatencyModel:
    """t_total = t_device x stage_count; stage_count None derives from the net."""

    t_device: float = DEFAULT_T_DEVICE_S
    stage_count: int | None = None

    def __post_init__(self):
        if not (self.t_device > 0 and np.isfinite(self.t_device)):
            raise ConfigError(f"t_device must be positive, got {self.t_device!r}")
        if self.stage_count is not None and self.stage_count < 1:
            raise ConfigError(f"stage_count must be >= 1, got {self.stage_count!r}")


@dataclass(frozen=True)
class StageResources:
    index: int
    kind: str
    label: str
    memristors: int
    opamps: int
    opamps_baseline: int


@dataclass(frozen=True)
class PowerEstimate:
    per_device_w: float
    total_w: float
    device_count: int
    w_max: float
    v_scale: float


@dataclass(frozen=True)
class Histogram:
    edges: tuple[float, ...]
    counts: tuple[int, ...]

    @property
    def bin_count(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class CostReport:
    memristor_count: int
    opamp_count: int
    opamp_count_baseline: int
    per_device_power_w: float
    max_power_w: float
    latency_s: float
    t_device_s: float
    stage_count: int
    w_max: float
    v_scale: float
    histogram: Histogram
    stages: tuple[StageResources, ...]

    def __post_init__(self):
        if min(self.memristor_count, self.opamp_count, self.opamp_count_baseline) < 0:
            raise ConfigError("resource counts cannot be negative")
        if self.opamp_count > self.opamp_count_baseline:
            raise ConfigError("baseline op-amp count cannot be below the mapped count")


def _elements(shape) -> int:
    return int(np.prod(shape))


def stage_resources(stage, index: int) -> StageResources:
    """Cells, amplifiers, and the dual-array baseline for one stage."""
    label = getattr(stage, "name", "") or stage.kind
    if isinstance(stage, (ConvStage, DepthwiseStage, FcStage)):
        programs = stage.programs()
        mem = sum(p.cell_count for p in programs)
        tias = sum(p.cols for p in programs)
        return StageResources(index, stage.kind, label, mem, tias, 2 * tias)
    if isinstance(stage, BNStage):
        programs = stage.programs()
        mem = sum(p.cell_count for p in programs)
        tias = sum(p.cols for p in programs)
        return StageResources(index, stage.kind, label, mem, tias, tias)
    if isinstance(stage, ActivationStage):
        amps = _elements(stage.out_shape) * AMP_COUNTS[stage.kind]
        return StageResources(index, stage.kind, label, 0, amps, amps)
    if isinstance(stage, SEStage):
        channels = stage.out_shape[0]
        reduced = stage.fc1.out_features
        mem = sum(p.cell_count for p in stage.programs())
        func = (reduced * AMP_COUNTS["relu"]
                + channels * AMP_COUNTS["hard_sigmoid"]
                + channels * AMP_COUNTS["multiplier"])
        fc_tias = stage.fc1.program.cols + stage.fc2.program.cols
        gap_tias = stage.gap.program.cols
        return StageResources(index, stage.kind, label,
                              mem,
                              gap_tias + fc_tias + func,
                              gap_tias + 2 * fc_tias + func)
    if isinstance(stage, ResidualStage):
        amps = _elements(stage.out_shape) * AMP_COUNTS["adder"]
        return StageResources(index, stage.kind, label, 0, amps, amps)
    if isinstance(stage, GapStage):
        mem = stage.gap.program.cell_count
        tias = stage.gap.program.cols
        return StageResources(index, stage.kind, label, mem, tias, tias)
    raise ConfigError(f"cannot account for stage type {type(stage).__name__}")


def count_resources(net: CompiledNetwork) -> tuple[int, int, int]:
    """(memristors, op-amps, baseline op-amps) summed over all stages."""
    mem = amps = base = 0
    for i, stage in enumerate(net.stages):
        res = stage_resources(stage, i)
        mem += res.memristors
        amps += res.opamps
        base += res.opamps_baseline
    return mem, amps, base


def analog_depth(net: CompiledNetwork) -> int:
    """Sequential settling steps through the pipeline."""
    return sum(STAGE_DEPTHS[stage.kind] for stage in net.stages)


def estimate_latency(net: CompiledNetwork, model: LatencyModel = LatencyModel()) -> float:
    """t_device x stage_count, deriving the count from the net unless overridden."""
    stages = model.stage_count if model.stage_count is not None else analog_depth(net)
    if stages < 1:
        raise ConfigError("latency needs at least one pipeline stage")
    return model.t_device * stages


def estimate_power(net: CompiledNetwork, dp: DeviceParams,
                   w_max: float = DEFAULT_W_MAX) -> PowerEstimate:
    """Worst-case static power: every cell at full input voltage and w_max."""
    if w_max < 0:
        raise ConfigError(f"w_max must be nonnegative, got {w_max!r}")
    per_device = dp.v_scale * dp.v_scale * w_max * dp.g_unit
    count = count_resources(net)[0]
    return PowerEstimate(per_device_w=per_device, total_w=per_device * count,
                         device_count=count, w_max=w_max, v_scale=dp.v_scale)


def weight_histogram(store: WeightStore, bins: int = 20) -> Histogram:
    """Uniform bins over [min, max]; half-open except the last bin.

    An empty store gives an empty histogram; an all-equal store
    collapses to the single bin [v, v].
    """
    if bins < 1:
        raise ConfigError(f"bins must be >= 1, got {bins!r}")
    arrays = [np.asarray(a, dtype=np.float64).ravel() for _, a in store.items()]
    values = np.concatenate(arrays) if arrays else np.empty(0)
    if values.size == 0:
        return Histogram(edges=(), counts=())
    vmin, vmax = float(values.min()), float(values.max())
    if vmin == vmax:
        return Histogram(edges=(vmin, vmax), counts=(int(values.size),))
    counts, edges = np.histogram(values, bins=bins, range=(vmin, vmax))
    return Histogram(edges=tuple(float(e) for e in edges),
                     counts=tuple(int(c) for c in counts))


def build_cost_report(net: CompiledNetwork, dp: DeviceParams,
                      store: WeightStore | None = None,
                      latency: LatencyModel = LatencyModel(),
                      bins: int = 20, w_max: float = DEFAULT_W_MAX) -> CostReport:
    """Assemble every analyzer product into one report."""
    per_stage = tuple(stage_resources(s, i) for i, s in enumerate(net.stages))
    mem, amps, base = count_resources(net)
    power = estimate_power(net, dp, w_max=w_max)
    stage_count = (latency.stage_count if latency.stage_count is not None
                   else analog_depth(net))
    hist = weight_histogram(store, bins) if store is not None else Histogram((), ())
    return CostReport(
        memristor_count=mem,
        opamp_count=amps,
        opamp_count_baseline=base,
        per_device_power_w=power.per_device_w,
        max_power_w=power.total_w,
        latency_s=estimate_latency(net, LatencyModel(latency.t_device, stage_count)),
        t_device_s=latency.t_device,
        stage_count=stage_count,
        w_max=w_max,
        v_scale=dp.v_scale,
        histogram=hist,
        stages=per_stage,
    )


def _fmt(value: float) -> str:
    return repr(float(value))


def render_report(report: CostReport) -> str:
    """Stable plain-text rendering with labeled reference lines."""
    power_ratio = report.per_device_power_w / REFERENCE_MEMRISTOR_POWER_W
    ratio = (report.opamp_count / report.opamp_count_baseline
             if report.opamp_count_baseline else 0.0)
    lines = [
        f"memristors: {report.memristor_count}",
        f"op-amps: {report.opamp_count} (dual-array baseline {report.opamp_count_baseline}, "
        f"ratio {_fmt(ratio)})",
        f"per-device max power: {_fmt(report.per_device_power_w)} W "
        f"(v={_fmt(report.v_scale)} V, w={_fmt(report.w_max)}, worst case)",
        f"  reference memristor estimate: {_fmt(REFERENCE_MEMRISTOR_POWER_W)} W "
        f"(modeling delta x{_fmt(power_ratio)})",
        f"  reference CMOS equivalent: {_fmt(REFERENCE_CMOS_POWER_W)} W",
        f"total max power: {_fmt(report.max_power_w)} W over {report.memristor_count} devices",
        f"latency: {_fmt(report.latency_s)} s "
        f"({_fmt(report.t_device_s)} s/stage x {report.stage_count} stages)",
        f"  reference analog latency: {_fmt(REFERENCE_ANALOG_LATENCY_S)} s",
        f"  reference GPU latency: {_fmt(REFERENCE_GPU_LATENCY_S)} s",
    ]
    lines.append("stages:")
    for s in report.stages:
        lines.append(f"  {s.index} {s.kind} {s.label}: cells {s.memristors}, "
                     f"op-amps {s.opamps}, baseline {s.opamps_baseline}")
    if report.histogram.bin_count:
        lines.append("weight histogram:")
        edges, counts = report.histogram.edges, report.histogram.counts
        for i, count in enumerate(counts):
            closer = "]" if i == len(counts) - 1 else ")"
            lines.append(f"  [{_fmt(edges[i])}, {_fmt(edges[i + 1])}{closer} {count}")
    return "\n".join(lines) + "\n"


def report_to_dict(report: CostReport) -> dict:
    """JSON-ready view of the report, references included."""
    return {
        "memristor_count": report.memristor_count,
        "opamp_count": report.opamp_count,
        "opamp_count_baseline": report.opamp_count_baseline,
        "per_device_power_w": report.per_device_power_w,
        "max_power_w": report.max_power_w,
        "latency_s": report.latency_s,
        "t_device_s": report.t_device_s,
        "stage_count": report.stage_count,
        "w_max": report.w_max,
        "v_scale": report.v_scale,
        "references": {
            "memristor_power_w": REFERENCE_MEMRISTOR_POWER_W,
            "cmos_power_w": REFERENCE_CMOS_POWER_W,
            "analog_latency_s": REFERENCE_ANALOG_LATENCY_S,
            "gpu_latency_s": REFERENCE_GPU_LATENCY_S,
        },
        "histogram": {
            "edges": list(report.histogram.edges),
            "counts": list(report.histogram.counts),
        },
        "stages": [
            {
                "index": s.index,
                "kind": s.kind,
                "label": s.label,
                "memristors": s.memristors,
                "opamps": s.opamps,
                "opamps_baseline": s.opamps_baseline,
            }
            for s in report.stages
        ],
    }


def histogram_csv(hist: Histogram) -> str:
    """One `lo,hi,count` row per bin; empty histogram gives empty text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for i, count in enumerate(hist.counts):
        writer.writerow([repr(hist.edges[i]), repr(hist.edges[i + 1]), count])
    return buf.getvalue()
