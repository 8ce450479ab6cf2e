"""External formats: weight manifests, netlists, and model configs.

Weight manifest (UTF-8 text, LF):

    VERSION 1
    TENSOR <name> SHAPE <d0>x<d1>... DTYPE f32 FILE <relpath> OFFSET <bytes>

The FILE path is relative to the manifest; payload is little-endian
32-bit floats, row-major, promoted to float64 on load. Blank lines and
lines starting with '#' are ignored.

Netlist (one crossbar per document, LF, trailing newline):

    XBAR <label> ROWS <r> COLS <c> RF <ohms>
    CELL <row> <col> <ohms>
    END

CELL lines are sorted by (row, col). Resistances print as integers
when exact, otherwise as the shortest decimal that round-trips.

Model config is a JSON object with input_shape, class_count, and a
layers array; each layer carries kind plus that kind's fields only.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .crossbar import CrossbarProgram
from .errors import ConfigError, ManifestError, MissingWeightError, NetlistError
from .reference import LayerSpec, NetworkSpec

VERSION_LINE = "VERSION 1"

_NAME_RE = re.compile(r"^[A-Za-z0-9_.\-]+$")


@dataclass
class WeightStore:
    """Named float64 tensors; arrays are stored read-only."""

    entries: dict[str, np.ndarray] = field(default_factory=dict)
    source: str = ""

    @classmethod
    def from_arrays(cls, arrays: dict, source: str = "") -> "WeightStore":
        store = cls(source=source)
        for name, values in arrays.items():
            store.put(name, values)
        return store

    def put(self, name: str, values) -> None:
        if name in self.entries:
            raise ManifestError(f"duplicate tensor name {name!r}")
        arr = np.array(values, dtype=np.float64)
        arr.flags.writeable = False
        self.entries[name] = arr

    def get(self, name: str) -> np.ndarray:
        try:
            return self.entries[name]
        except KeyError:
            raise MissingWeightError(f"weight tensor {name!r} not found"
                                     + (f" in {self.source}" if self.source else "")) from None

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def names(self) -> list[str]:
        return list(self.entries)

    def items(self):
        return self.entries.items()


def _parse_shape(token: str, line_no: int) -> tuple[int, ...]:
    dims = token.split("x")
    try:
        shape = tuple(int(d) for d in dims)
    except ValueError:
        raise ManifestError(f"line {line_no}: bad shape token {token!r}") from None
    if not shape or min(shape) < 0:
        raise ManifestError(f"line {line_no}: bad shape token {token!r}")
    return shape


def import_weights(manifest_path) -> WeightStore:
    """Load every tensor a manifest declares; see the module docstring."""
    path = Path(manifest_path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc

    lines = text.splitlines()
    if not lines or lines[0].strip() != VERSION_LINE:
        raise ManifestError(f"manifest must start with {VERSION_LINE!r}")

    store = WeightStore(source=str(path))
    blobs: dict[Path, bytes] = {}
    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if (len(tokens) != 10 or tokens[0] != "TENSOR" or tokens[2] != "SHAPE"
                or tokens[4] != "DTYPE" or tokens[6] != "FILE" or tokens[8] != "OFFSET"):
            raise ManifestError(f"line {line_no}: malformed tensor record")
        name, shape_tok, dtype, file_tok, offset_tok = (
            tokens[1], tokens[3], tokens[5], tokens[7], tokens[9])
        if dtype != "f32":
            raise ManifestError(f"line {line_no}: unsupported dtype {dtype!r} for {name!r}")
        shape = _parse_shape(shape_tok, line_no)
        try:
            offset = int(offset_tok)
        except ValueError:
            raise ManifestError(f"line {line_no}: bad offset {offset_tok!r}") from None
        if offset < 0:
            raise ManifestError(f"line {line_no}: negative offset for {name!r}")

        blob_path = (path.parent / file_tok).resolve()
        if blob_path not in blobs:
            try:
                blobs[blob_path] = blob_path.read_bytes()
            except OSError as exc:
                raise ManifestError(
                    f"line {line_no}: cannot read data file {file_tok!r}: {exc}") from exc
        blob = blobs[blob_path]

        count = int(np.prod(shape))
        nbytes = count * 4
        if offset + nbytes > len(blob):
            raise ManifestError(
                f"line {line_no}: tensor {name!r} needs bytes [{offset}, {offset + nbytes}) "
                f"but {file_tok!r} has {len(blob)}")
        values = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        store.put(name, values.astype(np.float64).reshape(shape))
    return store


def write_weights(arrays: dict, manifest_path, blob_name: str = "weights.bin") -> None:
    """Write arrays as one blob plus a manifest next to it (f32 storage)."""
    path = Path(manifest_path)
    blob = bytearray()
    lines = [VERSION_LINE]
    for name, values in arrays.items():
        arr = np.ascontiguousarray(np.asarray(values, dtype=np.float64), dtype="<f4")
        shape_tok = "x".join(str(d) for d in arr.shape) if arr.ndim else "1"
        lines.append(f"TENSOR {name} SHAPE {shape_tok} DTYPE f32 "
                     f"FILE {blob_name} OFFSET {len(blob)}")
        blob.extend(arr.tobytes())
    (path.parent / blob_name).write_bytes(bytes(blob))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _format_ohms(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def export_netlist(program: CrossbarProgram) -> str:
    """Serialize one program; deterministic, byte for byte."""
    label = program.label
    if not label or any(ch.isspace() for ch in label):
        raise NetlistError(f"label {label!r} is not serializable")
    lines = [f"XBAR {label} ROWS {program.rows} COLS {program.cols} "
             f"RF {_format_ohms(program.rf)}"]
    lines.extend(f"CELL {r} {c} {_format_ohms(res)}" for r, c, res in program.cells)
    lines.append("END")
    return "\n".join(lines) + "\n"


def _int_token(token: str, what: str, line_no: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise NetlistError(f"bad {what} token {token!r}", line=line_no) from None


def _ohms_token(token: str, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise NetlistError(f"bad resistance token {token!r}", line=line_no) from None
    if not np.isfinite(value) or value <= 0:
        raise NetlistError(f"resistance must be positive, got {token}", line=line_no)
    return value


def parse_netlist(doc: str) -> CrossbarProgram:
    """Inverse of export_netlist; errors carry the offending line number."""
    lines = doc.splitlines()
    pos = 0
    if pos < len(lines) and lines[pos].strip() == VERSION_LINE:
        pos += 1

    if pos >= len(lines):
        raise NetlistError("empty document")
    header = lines[pos].split()
    line_no = pos + 1
    if (len(header) != 8 or header[0] != "XBAR" or header[2] != "ROWS"
            or header[4] != "COLS" or header[6] != "RF"):
        raise NetlistError("malformed XBAR header", line=line_no)
    label = header[1]
    rows = _int_token(header[3], "row count", line_no)
    cols = _int_token(header[5], "column count", line_no)
    rf = _ohms_token(header[7], line_no)
    if rows < 1 or cols < 1:
        raise NetlistError("ROWS and COLS must be positive", line=line_no)

    cells: list[tuple[int, int, float]] = []
    seen: set[tuple[int, int]] = set()
    ended = False
    for pos in range(pos + 1, len(lines)):
        line_no = pos + 1
        tokens = lines[pos].split()
        if tokens == ["END"]:
            ended = True
            break
        if not tokens or tokens[0] != "CELL" or len(tokens) != 4:
            raise NetlistError(f"expected CELL or END, got {lines[pos]!r}", line=line_no)
        r = _int_token(tokens[1], "row", line_no)
        c = _int_token(tokens[2], "column", line_no)
        res = _ohms_token(tokens[3], line_no)
        if not (0 <= r < rows and 0 <= c < cols):
            raise NetlistError(f"cell ({r}, {c}) outside {rows}x{cols} grid", line=line_no)
        if (r, c) in seen:
            raise NetlistError(f"duplicate cell ({r}, {c})", line=line_no)
        seen.add((r, c))
        cells.append((r, c, res))
    if not ended:
        raise NetlistError("document ends without END")
    for extra in range(pos + 1, len(lines)):
        if lines[extra].strip():
            raise NetlistError("content after END", line=extra + 1)

    return CrossbarProgram(rows=rows, cols=cols, cells=tuple(cells), rf=rf, label=label)


_LAYER_FIELDS: dict[str, tuple[set[str], set[str]]] = {
    # kind: (required, optional)
    "conv": ({"name", "out_channels", "kernel"}, {"stride", "padding"}),
    "depthwise_conv": ({"name", "kernel"}, {"stride", "padding"}),
    "pointwise_conv": ({"name", "out_channels"}, set()),
    "batchnorm": ({"name"}, {"eps"}),
    "relu": (set(), set()),
    "hard_sigmoid": (set(), set()),
    "hard_swish": (set(), set()),
    "gap": (set(), set()),
    "fc": ({"name", "out_features"}, set()),
    "se_block": ({"name", "reduced"}, set()),
    "residual_add": ({"source"}, set()),
}


def _layer_from_config(entry: dict, index: int) -> LayerSpec:
    if not isinstance(entry, dict):
        raise ConfigError(f"layer {index}: expected an object, got {type(entry).__name__}")
    kind = entry.get("kind")
    if kind not in _LAYER_FIELDS:
        raise ConfigError(f"layer {index}: unknown kind {kind!r}")
    required, optional = _LAYER_FIELDS[kind]
    given = set(entry) - {"kind"}
    missing = required - given
    if missing:
        raise ConfigError(f"layer {index} ({kind}): missing {sorted(missing)}")
    extra = given - required - optional
    if extra:
        raise ConfigError(f"layer {index} ({kind}): unexpected {sorted(extra)}")

    name = entry.get("name", "")
    if name and not _NAME_RE.match(name):
        raise ConfigError(f"layer {index}: invalid name {name!r}")
    kernel = entry.get("kernel", (1, 1))
    if isinstance(kernel, list):
        kernel = tuple(kernel)
    try:
        return LayerSpec(
            kind=kind,
            name=name,
            out_channels=int(entry.get("out_channels", 0)),
            kernel=kernel,
            stride=int(entry.get("stride", 1)),
            padding=int(entry.get("padding", 0)),
            eps=float(entry.get("eps", 1e-5)),
            reduced=int(entry.get("reduced", 0)),
            out_features=int(entry.get("out_features", 0)),
            source=int(entry.get("source", -1)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"layer {index} ({kind}): {exc}") from exc


def spec_from_config(config: dict) -> NetworkSpec:
    """Build a NetworkSpec from a parsed config object."""
    if not isinstance(config, dict):
        raise ConfigError(f"config must be an object, got {type(config).__name__}")
    unknown = set(config) - {"input_shape", "class_count", "layers"}
    if unknown:
        raise ConfigError(f"unexpected config keys {sorted(unknown)}")
    try:
        input_shape = tuple(int(d) for d in config["input_shape"])
        class_count = int(config["class_count"])
        layer_entries = config["layers"]
    except KeyError as exc:
        raise ConfigError(f"config missing key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if not isinstance(layer_entries, list):
        raise ConfigError("layers must be an array")
    layers = tuple(_layer_from_config(entry, i) for i, entry in enumerate(layer_entries))
    return NetworkSpec(input_shape=input_shape, class_count=class_count, layers=layers)


def load_network_spec(path) -> NetworkSpec:
    """Read a JSON model config from disk."""
    p = Path(path)
    try:
        config = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read model config {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"model config {p} is not valid JSON: {exc}") from exc
    return spec_from_config(config)
