"""Batch normalization lowered to a two-stage crossbar circuit.

Stage 1 centers the input. Its four rows carry (x, E, -x, -E) scaled
to row voltages; programming the weight pattern (1,0,0,1) makes the
column current sum x - E, which the readout amplifier returns negated.
The pattern (0,1,1,0) selects (E, -x) instead, flipping the sign ahead
of time so a negative scale factor never has to be programmed.

Stage 2 applies scale and shift. Row 0 carries the stage-1 output with
weight k = |gamma|/sqrt(var + eps); rows 1 and 2 are the +V_b and -V_b
rails. The shift cell sits on the rail whose polarity cancels the
readout inversion: beta > 0 programs the -V_b rail, beta < 0 the +V_b
rail, beta = 0 programs nothing. Decoding divides by the row voltage
scale, and the result matches the floating-point definition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convmap import V_BIAS
from .crossbar import CrossbarProgram, DeviceParams, evaluate_crossbar, weight_to_resistance
from .errors import ConfigError

_CENTER_DIRECT = (1.0, 0.0, 0.0, 1.0)
_CENTER_FLIPPED = (0.0, 1.0, 1.0, 0.0)


@dataclass(frozen=True)
class BNParams:
    """Per-channel normalization statistics and affine parameters."""

    mean: float
    var: float
    gamma: float
    beta: float
    eps: float = 1e-5

    def __post_init__(self):
        for name in ("mean", "var", "gamma", "beta", "eps"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not np.isfinite([self.mean, self.var, self.gamma, self.beta, self.eps]).all():
            raise ConfigError("normalization parameters must be finite")
        if self.var < 0:
            raise ConfigError(f"variance must be nonnegative, got {self.var!r}")
        if self.eps <= 0:
            raise ConfigError(f"eps must be positive, got {self.eps!r}")

    @property
    def scale(self) -> float:
        """|gamma| / sqrt(var + eps)."""
        return abs(self.gamma) / float(np.sqrt(self.var + self.eps))


@dataclass(frozen=True)
class BNCircuit:
    """Programmed weights of the two cascaded columns.

    stage1_weights covers rows (x, E, -x, -E); stage2_weights is
    (scale on the stage-1 output, +V_b tap, -V_b tap).
    """

    stage1_weights: tuple[float, float, float, float]
    stage2_weights: tuple[float, float, float]
    scale: float

    def __post_init__(self):
        s1 = tuple(float(w) for w in self.stage1_weights)
        s2 = tuple(float(w) for w in self.stage2_weights)
        if s1 not in (_CENTER_DIRECT, _CENTER_FLIPPED):
            raise ConfigError(f"stage-1 pattern must select (x,-E) or (E,-x), got {s1!r}")
        if len(s2) != 3 or min(s2) < 0:
            raise ConfigError(f"stage-2 weights must be 3 nonnegative values, got {s2!r}")
        if s2[1] != 0 and s2[2] != 0:
            raise ConfigError("at most one bias rail may carry the shift cell")
        object.__setattr__(self, "stage1_weights", s1)
        object.__setattr__(self, "stage2_weights", s2)
        object.__setattr__(self, "scale", float(self.scale))


def compile_bn(p: BNParams, dp: DeviceParams) -> BNCircuit:
    """Choose the centering pattern and bias tap for one channel."""
    k = p.scale
    stage1 = _CENTER_DIRECT if p.gamma >= 0 else _CENTER_FLIPPED
    plus_tap = abs(p.beta) if p.beta < 0 else 0.0
    minus_tap = abs(p.beta) if p.beta > 0 else 0.0
    return BNCircuit(stage1, (k, plus_tap, minus_tap), k)


def stage_programs(c: BNCircuit, dp: DeviceParams, label: str) -> tuple[CrossbarProgram, CrossbarProgram]:
    """Materialize the two programmed columns as crossbar programs."""
    cells1 = tuple((row, 0, weight_to_resistance(w, dp))
                   for row, w in enumerate(c.stage1_weights) if w != 0)
    cells2 = tuple((row, 0, weight_to_resistance(w, dp))
                   for row, w in enumerate(c.stage2_weights) if w != 0)
    return (
        CrossbarProgram(rows=4, cols=1, cells=cells1, rf=dp.rf, label=f"{label}.center"),
        CrossbarProgram(rows=3, cols=1, cells=cells2, rf=dp.rf, label=f"{label}.affine"),
    )


def evaluate_bn_circuit(c: BNCircuit, x: float, p: BNParams, dp: DeviceParams,
                        label: str = "bn") -> float:
    """Drive both stages for one scalar input and decode the result."""
    center, affine = stage_programs(c, dp, label)
    v = dp.v_scale
    u = evaluate_crossbar(center, np.array([x, p.mean, -x, -p.mean]) * v)[0]
    rails = np.array([V_BIAS * v, -V_BIAS * v])
    y = evaluate_crossbar(affine, np.array([u, rails[0], rails[1]]))[0]
    return float(y / v)


def evaluate_bn_circuit_array(c: BNCircuit, x: np.ndarray, p: BNParams,
                              dp: DeviceParams) -> np.ndarray:
    """Vectorized evaluate_bn_circuit over an array of inputs.

    Performs the same resistance round-trip and accumulation order as
    the scalar path so results agree bit for bit.
    """
    x = np.asarray(x, dtype=np.float64)
    v = dp.v_scale
    inputs = np.stack([x * v, np.broadcast_to(p.mean * v, x.shape),
                       -x * v, np.broadcast_to(-p.mean * v, x.shape)])
    u = np.zeros_like(x)
    for row, w in enumerate(c.stage1_weights):
        if w != 0:
            u = u + inputs[row] / weight_to_resistance(w, dp)
    u = -dp.rf * u

    rails = (V_BIAS * v, -V_BIAS * v)
    stage2_in = (u, np.broadcast_to(rails[0], x.shape), np.broadcast_to(rails[1], x.shape))
    y = np.zeros_like(x)
    for row, w in enumerate(c.stage2_weights):
        if w != 0:
            y = y + stage2_in[row] / weight_to_resistance(w, dp)
    y = -dp.rf * y
    return y / v
