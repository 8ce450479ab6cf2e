"""Crossbar programs and the analog read-out model.

A program is a sparse set of memristive cells on a rows x cols array.
Driving row i at voltage V_i makes each cell (i, j, R) contribute the
current V_i / R to column j (Ohm's law); the column wire sums those
currents (Kirchhoff), and a per-column trans-impedance stage converts
the sum to a voltage:

    V_j = -R_f * sum_i V_i / R_{i,j}

Absent cells carry no current, so zero weights simply never appear in
the cell list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, GeometryError, ProgramError

Cell = tuple[int, int, float]


@dataclass(frozen=True)
class DeviceParams:
    """Device-level constants shared by compilation and simulation.

    Attributes:
        r_min: smallest programmable resistance, ohms.
        r_max: largest programmable resistance, ohms.
        g_unit: conductance representing a logical weight of 1.0, siemens.
        v_scale: row-driver volts per activation unit.
    """

    r_min: float = 1e-9
    r_max: float = 1e12
    g_unit: float = 1.0
    v_scale: float = 2.5e-3

    def __post_init__(self):
        if not (0 < self.r_min <= self.r_max):
            raise ConfigError(
                f"resistance bounds must satisfy 0 < r_min <= r_max, "
                f"got ({self.r_min!r}, {self.r_max!r})"
            )
        if self.g_unit <= 0:
            raise ConfigError(f"g_unit must be positive, got {self.g_unit!r}")
        if self.v_scale <= 0:
            raise ConfigError(f"v_scale must be positive, got {self.v_scale!r}")

    @property
    def rf(self) -> float:
        """Feedback resistance making the effective weight R_f/R equal the logical weight."""
        return 1.0 / self.g_unit


@dataclass(frozen=True)
class CrossbarProgram:
    """Immutable compiled crossbar: sparse cells plus read-out feedback.

    Cells are canonicalized to (row, col, resistance) tuples sorted by
    (row, col) at construction, so structural equality and serialization
    are order-independent.  Construction does not validate; see
    validate_program for diagnostics.
    """

    rows: int
    cols: int
    cells: tuple[Cell, ...]
    rf: float
    label: str = "xbar"

    def __post_init__(self):
        canon = sorted((int(r), int(c), float(x)) for r, c, x in self.cells)
        object.__setattr__(self, "cells", tuple(canon))
        object.__setattr__(self, "rows", int(self.rows))
        object.__setattr__(self, "cols", int(self.cols))
        object.__setattr__(self, "rf", float(self.rf))
        object.__setattr__(self, "label", str(self.label))

    @cached_property
    def _cell_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.cells:
            empty = np.empty(0, dtype=np.intp)
            return empty, empty, np.empty(0, dtype=np.float64)
        arr = np.asarray(self.cells, dtype=np.float64)
        return (
            arr[:, 0].astype(np.intp),
            arr[:, 1].astype(np.intp),
            np.ascontiguousarray(arr[:, 2]),
        )

    @property
    def cell_count(self) -> int:
        return len(self.cells)


def evaluate_crossbar(program: CrossbarProgram, voltages: np.ndarray) -> np.ndarray:
    """Read every column of a programmed crossbar.

    Args:
        program: the compiled array; its invariants are assumed to hold.
        voltages: one driver voltage per row, volts.

    Returns:
        Per-column output voltages V_j = -rf * sum_i V_i / R_ij.
    """
    v = np.asarray(voltages, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != program.rows:
        raise GeometryError(
            f"program '{program.label}' has {program.rows} rows, "
            f"input vector has shape {v.shape}"
        )
    rows_idx, cols_idx, res = program._cell_arrays
    currents = np.bincount(cols_idx, weights=v[rows_idx] / res, minlength=program.cols)
    if currents.shape[0] != program.cols:
        raise ProgramError(
            f"program '{program.label}' has a cell column outside [0, {program.cols})"
        )
    return -program.rf * currents


def weight_to_resistance(weight: float, dp: DeviceParams) -> float:
    """Resistance realizing |weight| under dp; the sign is handled by row placement."""
    if weight == 0:
        raise ProgramError("zero weight has no cell; omit the memristor instead")
    r = 1.0 / (abs(weight) * dp.g_unit)
    if not (dp.r_min <= r <= dp.r_max):
        raise ProgramError(
            f"weight {weight!r} needs {r:.6g} ohm, outside the programmable "
            f"range [{dp.r_min:g}, {dp.r_max:g}]"
        )
    return r


def resistance_to_weight(resistance: float, dp: DeviceParams) -> float:
    """Magnitude of the logical weight stored by a cell of the given resistance."""
    if not (resistance > 0 and math.isfinite(resistance)):
        raise ProgramError(f"invalid cell resistance {resistance!r}")
    return 1.0 / (resistance * dp.g_unit)


def _weights_to_resistances(weights: np.ndarray, dp: DeviceParams) -> np.ndarray:
    """Vectorized weight_to_resistance over nonzero weights; same error contract."""
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w == 0):
        raise ProgramError("zero weight has no cell; omit the memristor instead")
    r = 1.0 / (np.abs(w) * dp.g_unit)
    bad = (r < dp.r_min) | (r > dp.r_max)
    if np.any(bad):
        first = w[bad][0]
        raise ProgramError(
            f"weight {first!r} needs {1.0 / (abs(first) * dp.g_unit):.6g} ohm, "
            f"outside the programmable range [{dp.r_min:g}, {dp.r_max:g}]"
        )
    return r


def validate_program(program: CrossbarProgram) -> list[str]:
    """Collect structural violations; an empty list means the program is well formed."""
    problems: list[str] = []
    if program.rows <= 0:
        problems.append(f"row count must be positive, got {program.rows}")
    if program.cols <= 0:
        problems.append(f"column count must be positive, got {program.cols}")
    if not (program.rf > 0 and math.isfinite(program.rf)):
        problems.append(f"feedback resistance must be positive and finite, got {program.rf!r}")
    seen: set[tuple[int, int]] = set()
    for row, col, res in program.cells:
        if not 0 <= row < program.rows:
            problems.append(f"cell ({row}, {col}): row outside [0, {program.rows})")
        if not 0 <= col < program.cols:
            problems.append(f"cell ({row}, {col}): col outside [0, {program.cols})")
        if not (res > 0 and math.isfinite(res)):
            problems.append(f"cell ({row}, {col}): resistance {res!r} not positive and finite")
        if (row, col) in seen:
            problems.append(f"duplicate cell at ({row}, {col})")
        seen.add((row, col))
    return problems
