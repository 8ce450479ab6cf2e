"""Lowering of 2-D convolutions onto crossbar programs.

Row layout of a compiled program for C_in input channels, with the
padded input holding N = padded_rows * padded_cols elements per channel:

    [0, C_in*N)        flattened padded channels, driven at +x * v_scale
    [C_in*N, 2*C_in*N) the same rows again, driven at -x * v_scale
    2*C_in*N           bias rail, driven at +V_b * v_scale
    2*C_in*N + 1       bias rail, driven at -V_b * v_scale

Each output element owns one column.  Positive kernel weights are
programmed against the negated rows and negative weights against the
original rows, so the inverting read-out restores the intended sign
with a single amplifier per column.  Bias cells follow the same rule:
a positive bias sits on the -V_b rail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .crossbar import CrossbarProgram, DeviceParams, _weights_to_resistances, weight_to_resistance
from .errors import GeometryError

V_BIAS = 1.0


def output_dims(w: int, f: int, p: int, s: int) -> int:
    """Output size along one axis: (w - f + 2p)/s + 1, required to be integral.

    Args:
        w: unpadded input size.
        f: kernel size.
        p: padding.
        s: stride.
    """
    if w < 1 or f < 1 or s < 1 or p < 0:
        raise GeometryError(f"invalid geometry: W={w}, F={f}, P={p}, S={s}")
    span = w - f + 2 * p
    if span < 0 or span % s != 0:
        raise GeometryError(
            f"output size (W - F + 2P)/S + 1 is not a positive integer "
            f"for W={w}, F={f}, P={p}, S={s}"
        )
    return span // s + 1


@dataclass(frozen=True)
class ConvGeometry:
    """Placement geometry of one convolution.

    rows_padded/cols_padded store the padded input dims; the flattened
    padded input is what the row regions hold, so all placement offsets
    are computed against these.
    """

    rows_padded: int
    cols_padded: int
    kernel_rows: int
    kernel_cols: int
    padding: int = 0
    stride: int = 1
    out_rows: int = 0
    out_cols: int = 0

    def __post_init__(self):
        o_r = output_dims(self.rows_padded - 2 * self.padding, self.kernel_rows, self.padding, self.stride)
        o_c = output_dims(self.cols_padded - 2 * self.padding, self.kernel_cols, self.padding, self.stride)
        if self.out_rows == 0 and self.out_cols == 0:
            object.__setattr__(self, "out_rows", o_r)
            object.__setattr__(self, "out_cols", o_c)
        elif (self.out_rows, self.out_cols) != (o_r, o_c):
            raise GeometryError(
                f"stored output dims {(self.out_rows, self.out_cols)} disagree "
                f"with computed {(o_r, o_c)}"
            )
        if self.kernel_rows > self.rows_padded or self.kernel_cols > self.cols_padded:
            raise GeometryError(
                f"kernel {self.kernel_rows}x{self.kernel_cols} exceeds padded "
                f"input {self.rows_padded}x{self.cols_padded}"
            )

    @classmethod
    def of(cls, in_rows: int, in_cols: int, kernel_rows: int, kernel_cols: int,
           padding: int = 0, stride: int = 1) -> "ConvGeometry":
        """Build geometry from unpadded input dims, validating the output equation."""
        return cls(in_rows + 2 * padding, in_cols + 2 * padding,
                   kernel_rows, kernel_cols, padding, stride)

    @property
    def in_rows(self) -> int:
        return self.rows_padded - 2 * self.padding

    @property
    def in_cols(self) -> int:
        return self.cols_padded - 2 * self.padding

    @property
    def input_cells(self) -> int:
        """N: flattened padded size of one channel."""
        return self.rows_padded * self.cols_padded

    @property
    def out_count(self) -> int:
        return self.out_rows * self.out_cols


@dataclass(frozen=True)
class PlacementPlan:
    """Kernel-cell coordinates with their signed weights, before materialization.

    entries hold kernel placements only; bias cells live on the two rows
    named by bias_rows (+V_b rail, -V_b rail).  region_split is the first
    negated-region row, i.e. C_in * N for channel-stacked programs.
    """

    entries: tuple[tuple[int, int, float], ...]
    bias_rows: tuple[int, int]
    region_split: int


def placement_start(i: int, geom: ConvGeometry) -> tuple[int, int]:
    """Starting rows of output element i in the original and negated regions.

    The original-region start is (floor(i / out_cols) * cols_padded +
    i mod out_cols) * stride — the flat index of the sliding window's
    top-left corner in the padded input; the negated-region start sits
    one full region (N) higher.
    """
    if not 0 <= i < geom.out_count:
        raise IndexError(f"output index {i} outside [0, {geom.out_count})")
    base = ((i // geom.out_cols) * geom.cols_padded + i % geom.out_cols) * geom.stride
    return base, base + geom.input_cells


def _window_starts(geom: ConvGeometry) -> np.ndarray:
    i = np.arange(geom.out_count, dtype=np.intp)
    return ((i // geom.out_cols) * geom.cols_padded + i % geom.out_cols) * geom.stride


def _lower_kernel_stack(kernel_stack: np.ndarray, bias: float, geom: ConvGeometry,
                        dp: DeviceParams, label: str) -> tuple[CrossbarProgram, PlacementPlan]:
    """Compile one output channel: C_in kernel slices into one column set."""
    c_in = kernel_stack.shape[0]
    n = geom.input_cells
    split = c_in * n
    starts = _window_starts(geom)
    cols_base = np.arange(geom.out_count, dtype=np.intp)

    row_parts, col_parts, res_parts, w_parts = [], [], [], []
    for ci in range(c_in):
        nz_r, nz_c = np.nonzero(kernel_stack[ci])
        if nz_r.size == 0:
            continue
        w = kernel_stack[ci][nz_r, nz_c]
        res = _weights_to_resistances(w, dp)
        offsets = nz_r * geom.cols_padded + nz_c + ci * n
        rows = starts[:, None] + offsets[None, :] + np.where(w > 0, split, 0)[None, :]
        shape = rows.shape
        row_parts.append(rows.ravel())
        col_parts.append(np.broadcast_to(cols_base[:, None], shape).ravel())
        res_parts.append(np.broadcast_to(res[None, :], shape).ravel())
        w_parts.append(np.broadcast_to(w[None, :], shape).ravel())

    if row_parts:
        rows_all = np.concatenate(row_parts)
        cols_all = np.concatenate(col_parts)
        res_all = np.concatenate(res_parts)
        w_all = np.concatenate(w_parts)
    else:
        rows_all = cols_all = np.empty(0, dtype=np.intp)
        res_all = w_all = np.empty(0)

    order = np.lexsort((cols_all, rows_all))
    entries = tuple(zip(rows_all[order].tolist(), cols_all[order].tolist(),
                        w_all[order].tolist()))
    plan = PlacementPlan(entries=entries, bias_rows=(2 * split, 2 * split + 1),
                         region_split=split)

    cells = list(zip(rows_all.tolist(), cols_all.tolist(), res_all.tolist()))
    if bias != 0:
        bias_row = 2 * split + 1 if bias > 0 else 2 * split
        r_bias = weight_to_resistance(bias, dp)
        cells.extend((bias_row, int(j), r_bias) for j in cols_base)

    program = CrossbarProgram(rows=2 * split + 2, cols=geom.out_count,
                              cells=tuple(cells), rf=dp.rf, label=label)
    return program, plan


def compile_conv(kernel: np.ndarray, bias: float, geom: ConvGeometry,
                 dp: DeviceParams, label: str = "conv") -> tuple[CrossbarProgram, PlacementPlan]:
    """Compile a single-channel convolution into one crossbar program.

    Each nonzero kernel weight at (r, c) lands, for output element i, on
    row start + r*cols_padded + c of the region selected by its sign, in
    column i.  A nonzero bias adds one cell per column on the rail whose
    driven sign cancels the read-out inversion.
    """
    k = np.asarray(kernel, dtype=np.float64)
    if k.shape != (geom.kernel_rows, geom.kernel_cols):
        raise GeometryError(
            f"kernel shape {k.shape} does not match geometry "
            f"{(geom.kernel_rows, geom.kernel_cols)}"
        )
    return _lower_kernel_stack(k[None], float(bias), geom, dp, label)


def compile_depthwise(kernels: np.ndarray, geom: ConvGeometry, dp: DeviceParams,
                      label: str = "dw") -> list[tuple[CrossbarProgram, PlacementPlan]]:
    """One independent single-channel program per channel; no cross-channel current."""
    ks = np.asarray(kernels, dtype=np.float64)
    if ks.ndim != 3:
        raise GeometryError(f"depthwise kernels must be (C, F_r, F_c), got shape {ks.shape}")
    return [compile_conv(ks[c], 0.0, geom, dp, label=f"{label}.c{c}")
            for c in range(ks.shape[0])]


def compile_multichannel_conv(kernel: np.ndarray, biases, geom: ConvGeometry,
                              dp: DeviceParams, label: str = "conv",
                              ) -> list[tuple[CrossbarProgram, PlacementPlan]]:
    """Compile a (C_out, C_in, F_r, F_c) convolution, one program per output channel.

    Input channels stack along rows (C_in positive blocks, then C_in
    negated blocks, then the bias pair), and every kernel slice of one
    output channel lands in the same columns, so the column current is
    the cross-channel sum.
    """
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 4:
        raise GeometryError(f"kernel must be (C_out, C_in, F_r, F_c), got shape {k.shape}")
    c_out = k.shape[0]
    if k.shape[2:] != (geom.kernel_rows, geom.kernel_cols):
        raise GeometryError(
            f"kernel window {k.shape[2:]} does not match geometry "
            f"{(geom.kernel_rows, geom.kernel_cols)}"
        )
    b = np.broadcast_to(np.asarray(biases, dtype=np.float64), (c_out,))
    return [_lower_kernel_stack(k[co], float(b[co]), geom, dp, label=f"{label}.oc{co}")
            for co in range(c_out)]


def encode_input(x: np.ndarray, geom: ConvGeometry, dp: DeviceParams) -> np.ndarray:
    """Row voltages for an input tensor: padded flatten, negated copy, bias rails.

    Accepts (H, W) for single-channel programs or (C, H, W) for
    channel-stacked ones; the returned vector always satisfies
    voltages[split + k] == -voltages[k].
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1:] != (geom.in_rows, geom.in_cols):
        raise GeometryError(
            f"input shape {np.shape(x)} does not match geometry "
            f"{(geom.in_rows, geom.in_cols)}"
        )
    p = geom.padding
    padded = np.pad(arr, ((0, 0), (p, p), (p, p)))
    flat = padded.reshape(-1) * dp.v_scale
    rails = np.array([V_BIAS * dp.v_scale, -V_BIAS * dp.v_scale])
    return np.concatenate([flat, -flat, rails])


def decode_output(v_out: np.ndarray, geom: ConvGeometry, dp: DeviceParams) -> np.ndarray:
    """Recover the (out_rows, out_cols) activation tensor from column voltages."""
    v = np.asarray(v_out, dtype=np.float64)
    if v.shape != (geom.out_count,):
        raise GeometryError(
            f"expected {geom.out_count} column voltages, got shape {v.shape}"
        )
    return v.reshape(geom.out_rows, geom.out_cols) / dp.v_scale
