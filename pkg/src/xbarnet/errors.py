"""Exception types shared across the package."""


class XbarError(Exception):
    """Base class for every error this package raises deliberately."""


class GeometryError(XbarError, ValueError):
    """Shape, size, or output-geometry constraint violated."""


class ProgramError(XbarError, ValueError):
    """A crossbar program cannot be realized (device limits, bad cells)."""


class ConfigError(XbarError, ValueError):
    """Model config, layer parameters, or device parameters are invalid."""


class NetlistError(XbarError, ValueError):
    """A netlist document violates the grammar."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ManifestError(XbarError, ValueError):
    """A weight manifest or its binary payload is malformed."""


class MissingWeightError(XbarError, LookupError):
    """A tensor named by the model is absent from the weight store."""
