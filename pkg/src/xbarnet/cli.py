"""Command-line driver: compile, simulate, compare, report.

Exit codes: 0 success, 2 configuration or input error, 3 internal
error. compare additionally exits 1 when the parity check fails, so
scripts can tell "disagreement" from "bad invocation". All file
outputs land under --out and are byte-identical across reruns of the
same configuration; diagnostics go to stderr, gated by the XBAR_LOG
environment variable (a logging level name such as DEBUG or INFO).

Images are raw little-endian float32 streams, row-major, one or more
images per file, shaped by the model config's input_shape.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import (DEFAULT_T_DEVICE_S, LatencyModel, build_cost_report,
                       histogram_csv, render_report, report_to_dict)
from .crossbar import DeviceParams
from .errors import ConfigError, XbarError
from .formats import export_netlist, import_weights, load_network_spec
from .pipeline import compile_network, forward_analog
from .reference import forward_ref

log = logging.getLogger("xbarnet")


@dataclass(frozen=True)
class RunConfig:
    """Validated invocation: every path checked before any work starts."""

    model: Path
    weights: Path
    inputs: tuple[Path, ...] = ()
    out: Path | None = None
    tolerance: float = 1e-6
    seed: int = 0
    g_unit: float = 1.0
    v_scale: float = 2.5e-3
    t_device: float = DEFAULT_T_DEVICE_S
    stage_count: int | None = None
    bins: int = 20

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        cfg = cls(
            model=Path(args.model),
            weights=Path(args.weights),
            inputs=tuple(Path(p) for p in (getattr(args, "input", None) or [])),
            out=Path(args.out) if getattr(args, "out", None) else None,
            tolerance=getattr(args, "tolerance", 1e-6),
            seed=args.seed,
            g_unit=args.g_unit,
            v_scale=args.v_scale,
            t_device=getattr(args, "t_device", DEFAULT_T_DEVICE_S),
            stage_count=getattr(args, "stage_count", None),
            bins=getattr(args, "bins", 20),
        )
        for path in (cfg.model, cfg.weights, *cfg.inputs):
            if not path.is_file():
                raise ConfigError(f"no such file: {path}")
        return cfg

    @property
    def device_params(self) -> DeviceParams:
        return DeviceParams(g_unit=self.g_unit, v_scale=self.v_scale)

    @property
    def latency_model(self) -> LatencyModel:
        return LatencyModel(t_device=self.t_device, stage_count=self.stage_count)


def _compile_all(cfg: RunConfig):
    spec = load_network_spec(cfg.model)
    store = import_weights(cfg.weights)
    dp = cfg.device_params
    net = compile_network(spec, dp, store)
    log.info("compiled %d stages from %s", len(net.stages), cfg.model)
    return spec, store, dp, net


def _load_images(cfg: RunConfig, shape):
    """Yield (index, image-or-None, error-or-None) per image, in input order.

    A file whose byte count is not a whole number of images produces a
    single failed record; other files still load.
    """
    size = int(np.prod(shape))
    records = []
    index = 0
    for path in cfg.inputs:
        raw = np.fromfile(path, dtype="<f4")
        if raw.size == 0 or raw.size % size != 0:
            records.append((index, None,
                            f"{path}: {raw.size} values is not a multiple of "
                            f"image size {size}"))
            index += 1
            continue
        for img in raw.reshape(-1, *shape):
            records.append((index, img.astype(np.float64), None))
            index += 1
    return records


def _random_images(cfg: RunConfig, shape, count: int = 32):
    rng = np.random.default_rng(cfg.seed)
    return [(i, img, None)
            for i, img in enumerate(rng.uniform(-1.0, 1.0, size=(count, *shape)))]


def _emit(lines: list[str], out_path: Path | None):
    text = "".join(line + "\n" for line in lines)
    sys.stdout.write(text)
    if out_path is not None:
        out_path.write_text(text, encoding="utf-8")


def cmd_compile(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    if cfg.out is None:
        raise ConfigError("compile requires --out")
    _, store, dp, net = _compile_all(cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    count = 0
    for stage_index, prog in net.iter_programs():
        target = cfg.out / f"{stage_index}_{prog.label}.xbar"
        target.write_text(export_netlist(prog), encoding="utf-8")
        count += 1
    report = build_cost_report(net, dp, store, latency=cfg.latency_model, bins=cfg.bins)
    (cfg.out / "summary.txt").write_text(render_report(report), encoding="utf-8")
    print(f"wrote {count} netlists and summary.txt to {cfg.out}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    if not cfg.inputs:
        raise ConfigError("simulate requires at least one --input")
    spec, _, _, net = _compile_all(cfg)
    lines = []
    for index, image, error in _load_images(cfg, spec.input_shape):
        if error is not None:
            record = {"index": index, "error": error}
        else:
            scores = forward_analog(net, image)
            record = {"index": index,
                      "scores": [float(s) for s in scores],
                      "label": int(np.argmax(scores))}
        lines.append(json.dumps(record, sort_keys=True))
    out_path = cfg.out / "results.jsonl" if cfg.out else None
    if cfg.out:
        cfg.out.mkdir(parents=True, exist_ok=True)
    _emit(lines, out_path)
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    spec, store, _, net = _compile_all(cfg)
    if cfg.inputs:
        records = _load_images(cfg, spec.input_shape)
    else:
        log.info("no inputs given; generating 32 images from seed %d", cfg.seed)
        records = _random_images(cfg, spec.input_shape)
    lines = []
    worst = 0.0
    checked = 0
    mismatched = 0
    failed = 0
    for index, image, error in records:
        if error is not None:
            lines.append(json.dumps({"index": index, "error": error}, sort_keys=True))
            failed += 1
            continue
        analog = forward_analog(net, image)
        digital = forward_ref(spec, image, store)
        diff = float(np.max(np.abs(analog - digital))) if analog.size else 0.0
        match = bool(np.argmax(analog) == np.argmax(digital))
        worst = max(worst, diff)
        checked += 1
        mismatched += 0 if match else 1
        lines.append(json.dumps({"index": index, "max_diff": diff,
                                 "argmax_match": match}, sort_keys=True))
    passed = worst <= cfg.tolerance and failed == 0
    lines.append(json.dumps({"pass": passed, "images": checked,
                             "failed_records": failed,
                             "argmax_mismatches": mismatched,
                             "max_diff": worst,
                             "tolerance": cfg.tolerance}, sort_keys=True))
    out_path = cfg.out / "compare.jsonl" if cfg.out else None
    if cfg.out:
        cfg.out.mkdir(parents=True, exist_ok=True)
    _emit(lines, out_path)
    return 0 if passed else 1


def cmd_report(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    _, store, dp, net = _compile_all(cfg)
    report = build_cost_report(net, dp, store, latency=cfg.latency_model, bins=cfg.bins)
    text = render_report(report)
    sys.stdout.write(text)
    if cfg.out:
        cfg.out.mkdir(parents=True, exist_ok=True)
        (cfg.out / "report.txt").write_text(text, encoding="utf-8")
        (cfg.out / "report.json").write_text(
            json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
        (cfg.out / "histogram.csv").write_text(histogram_csv(report.histogram),
                                               encoding="utf-8")
    return 0


def _add_common(sub: argparse.ArgumentParser, latency: bool = False):
    sub.add_argument("--model", required=True, help="model config (JSON)")
    sub.add_argument("--weights", required=True, help="weight manifest")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--seed", type=int, default=0, help="seed for generated inputs")
    sub.add_argument("--g-unit", type=float, default=1.0, dest="g_unit",
                     help="unit conductance in siemens")
    sub.add_argument("--v-scale", type=float, default=2.5e-3, dest="v_scale",
                     help="row voltage per unit activation")
    if latency:
        sub.add_argument("--t-device", type=float, default=DEFAULT_T_DEVICE_S,
                         dest="t_device", help="per-stage settling time in seconds")
        sub.add_argument("--stage-count", type=int, default=None, dest="stage_count",
                         help="override the derived pipeline depth")
        sub.add_argument("--bins", type=int, default=20, help="weight histogram bins")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xbarnet",
        description="Compile CNNs onto memristor crossbars and simulate them.")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("compile", help="emit netlists and a resource summary")
    _add_common(p, latency=True)
    p.set_defaults(func=cmd_compile)

    p = commands.add_parser("simulate", help="run analog inference on images")
    _add_common(p)
    p.add_argument("--input", action="append", help="raw f32 image file (repeatable)")
    p.set_defaults(func=cmd_simulate)

    p = commands.add_parser("compare", help="check analog scores against the reference")
    _add_common(p)
    p.add_argument("--input", action="append", help="raw f32 image file (repeatable)")
    p.add_argument("--tolerance", type=float, default=1e-6,
                   help="max allowed score difference")
    p.set_defaults(func=cmd_compare)

    p = commands.add_parser("report", help="hardware cost report")
    _add_common(p, latency=True)
    p.set_defaults(func=cmd_report)

    return parser


def _configure_logging():
    level_name = os.environ.get("XBAR_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except XbarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the contract maps these to exit 3
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
