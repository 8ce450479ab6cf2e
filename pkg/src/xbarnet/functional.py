"""Behavioral models of the non-crossbar analog blocks.

Activations, adders, and multipliers run between crossbar stages. Each
model here mirrors the transfer curve of the corresponding op-amp
circuit; the hard activations are built from one shared limiter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GeometryError


@dataclass(frozen=True)
class LimiterSpec:
    """Output clamp of a saturating amplifier stage."""

    lo: float
    hi: float

    def __post_init__(self):
        if not np.isfinite(self.lo) or not np.isfinite(self.hi) or self.lo >= self.hi:
            raise ConfigError(f"limiter needs lo < hi, got ({self.lo!r}, {self.hi!r})")


HARD_SIGMOID_LIMITER = LimiterSpec(0.0, 6.0)


def limit(x, spec: LimiterSpec):
    """Clamp x into [spec.lo, spec.hi]."""
    return np.clip(np.asarray(x, dtype=np.float64), spec.lo, spec.hi)


def relu_circuit(x):
    """Precision rectifier: passes positive input, grounds negative."""
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def hard_sigmoid_circuit(x):
    """Shift by +3, clamp to [0, 6], divide by 6."""
    x = np.asarray(x, dtype=np.float64)
    return limit(x + 3.0, HARD_SIGMOID_LIMITER) / 6.0


def hard_swish_circuit(x):
    """Input times its own hard sigmoid (rectifier gated by a limiter)."""
    x = np.asarray(x, dtype=np.float64)
    return x * hard_sigmoid_circuit(x)


_ACTIVATIONS = {
    "relu": relu_circuit,
    "hard_sigmoid": hard_sigmoid_circuit,
    "hard_swish": hard_swish_circuit,
}


def activation_circuit(x, kind: str):
    """Dispatch to the named activation model."""
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ConfigError(f"unknown activation kind {kind!r}") from None
    return fn(x)


def analog_add(a, b):
    """Summing junction: elementwise a + b, shapes must match exactly."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise GeometryError(f"adder inputs must match, got {a.shape} and {b.shape}")
    return a + b


def analog_mul(x, gains):
    """Four-quadrant multiplier bank: scale each channel of x by its gain.

    x has shape (C, ...) and gains has shape (C,); a scalar gain is
    broadcast over all channels.
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(gains, dtype=np.float64)
    if g.ndim == 0:
        return x * g
    if g.ndim != 1 or x.ndim < 1 or g.shape[0] != x.shape[0]:
        raise GeometryError(f"{g.shape} gains cannot scale input of shape {x.shape}")
    return x * g.reshape((-1,) + (1,) * (x.ndim - 1))
