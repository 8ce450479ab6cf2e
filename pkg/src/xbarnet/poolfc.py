"""Global average pooling and fully connected layers on crossbars.

Pooling feeds every spatial element of a channel, negated, into one
column through identical 1/N-weight cells; the readout inversion turns
the negative average current into the positive mean. The FC mapper
reuses the signed-weight row split: negative entries go on original
rows, positive entries on negated rows, and the bias pair rides on the
two rail rows at the bottom.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convmap import V_BIAS
from .crossbar import CrossbarProgram, DeviceParams, _weights_to_resistances, weight_to_resistance
from .errors import GeometryError


@dataclass(frozen=True)
class GapProgram:
    """Mean-pooling crossbar: channels * spatial_count rows, one column per channel."""

    program: CrossbarProgram
    spatial_count: int
    channels: int


@dataclass(frozen=True)
class FcProgram:
    """Dense layer crossbar: 2 * in_features + 2 rows, one column per output."""

    program: CrossbarProgram
    in_features: int
    out_features: int


def compile_gap(spatial_count: int, channels: int, dp: DeviceParams,
                label: str = "gap") -> GapProgram:
    """Program uniform 1/N cells, channel c's block feeding column c."""
    n = int(spatial_count)
    c = int(channels)
    if n < 1:
        raise GeometryError(f"pooling needs at least one element per channel, got {spatial_count!r}")
    if c < 1:
        raise GeometryError(f"pooling needs at least one channel, got {channels!r}")
    r = weight_to_resistance(1.0 / n, dp)
    cells = tuple((ch * n + i, ch, r) for ch in range(c) for i in range(n))
    program = CrossbarProgram(rows=n * c, cols=c, cells=cells, rf=dp.rf, label=label)
    return GapProgram(program=program, spatial_count=n, channels=c)


def gap_input_voltages(x, gp: GapProgram, dp: DeviceParams) -> np.ndarray:
    """Row voltages for a (C, H, W) or (C, N) input: negated and scaled."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim >= 2:
        x = x.reshape(x.shape[0], -1)
    if x.shape != (gp.channels, gp.spatial_count):
        raise GeometryError(
            f"input shape {x.shape} does not flatten to "
            f"({gp.channels}, {gp.spatial_count})")
    return -x.ravel() * dp.v_scale


def compile_fc(w, b, dp: DeviceParams, label: str = "fc") -> FcProgram:
    """Lower y = W x + b onto one crossbar.

    Row layout for n inputs: [0, n) original, [n, 2n) negated,
    row 2n the +V_b rail, row 2n+1 the -V_b rail.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise GeometryError(f"weight matrix must be 2-D, got shape {w.shape}")
    out_features, n = w.shape
    b = np.broadcast_to(np.asarray(b, dtype=np.float64), (out_features,))

    rows_w, cols_w = np.nonzero(w.T)          # rows_w indexes inputs, cols_w outputs
    vals = w.T[rows_w, cols_w]
    rows_w = rows_w + np.where(vals > 0, n, 0)
    res_w = _weights_to_resistances(vals, dp)

    cells = [(int(r), int(c), float(res)) for r, c, res in zip(rows_w, cols_w, res_w)]
    for j in np.flatnonzero(b):
        row = 2 * n + 1 if b[j] > 0 else 2 * n
        cells.append((row, int(j), weight_to_resistance(abs(b[j]), dp)))

    program = CrossbarProgram(rows=2 * n + 2, cols=out_features,
                              cells=tuple(cells), rf=dp.rf, label=label)
    return FcProgram(program=program, in_features=n, out_features=out_features)


def fc_input_voltages(x, fp: FcProgram, dp: DeviceParams) -> np.ndarray:
    """Row voltages: scaled input, its negation, then the two rails."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != fp.in_features:
        raise GeometryError(f"input length {x.shape[0]} != {fp.in_features}")
    v = x * dp.v_scale
    rails = np.array([V_BIAS * dp.v_scale, -V_BIAS * dp.v_scale])
    return np.concatenate([v, -v, rails])


def decode_column_voltages(v_out, dp: DeviceParams) -> np.ndarray:
    """Undo the input voltage scaling on a vector of column outputs."""
    return np.asarray(v_out, dtype=np.float64) / dp.v_scale
