import json
import os
import subprocess
import sys

import numpy as np
import pytest

from xbarnet import parse_netlist, write_weights
from xbarnet.cli import main

IDENTITY_CONFIG = {
    "input_shape": [1, 1, 2],
    "class_count": 2,
    "layers": [{"kind": "fc", "name": "head", "out_features": 2}],
}


def write_model(tmp_path, config, arrays, stem="m"):
    model = tmp_path / f"{stem}.json"
    model.write_text(json.dumps(config), encoding="utf-8")
    manifest = tmp_path / f"{stem}.manifest"
    write_weights(arrays, manifest, blob_name=f"{stem}.bin")
    return model, manifest


@pytest.fixture
def identity_model(tmp_path):
    return write_model(tmp_path, IDENTITY_CONFIG,
                       {"head.weight": np.eye(2), "head.bias": np.zeros(2)})


@pytest.fixture
def random_fc_model(tmp_path):
    rng = np.random.default_rng(7)
    config = {"input_shape": [1, 1, 2], "class_count": 5,
              "layers": [{"kind": "fc", "name": "head", "out_features": 5}]}
    arrays = {"head.weight": rng.uniform(-0.8, 0.8, (5, 2)),
              "head.bias": rng.uniform(-0.5, 0.5, 5)}
    return write_model(tmp_path, config, arrays, stem="r")


def write_images(path, values):
    np.asarray(values, dtype="<f4").tofile(path)
    return path


class TestCompile:
    def test_writes_netlists_and_summary(self, identity_model, tmp_path, capsys):
        model, manifest = identity_model
        out = tmp_path / "out"
        assert main(["compile", "--model", str(model), "--weights", str(manifest),
                     "--out", str(out)]) == 0
        assert "wrote 1 netlists and summary.txt" in capsys.readouterr().out
        prog = parse_netlist((out / "0_head.xbar").read_text())
        assert (prog.label, prog.rows, prog.cols) == ("head", 6, 2)
        assert prog.cell_count == 2
        summary = (out / "summary.txt").read_text()
        assert "memristors: 2" in summary
        assert "op-amps: 2 (dual-array baseline 4" in summary

    def test_requires_out(self, identity_model, capsys):
        model, manifest = identity_model
        assert main(["compile", "--model", str(model),
                     "--weights", str(manifest)]) == 2
        assert "--out" in capsys.readouterr().err

    def test_missing_tensor(self, tmp_path, capsys):
        model, manifest = write_model(tmp_path, IDENTITY_CONFIG,
                                      {"head.weight": np.eye(2)})
        assert main(["compile", "--model", str(model), "--weights", str(manifest),
                     "--out", str(tmp_path / "o")]) == 2
        assert "head.bias" in capsys.readouterr().err

    def test_empty_layers(self, tmp_path, capsys):
        config = dict(IDENTITY_CONFIG, layers=[])
        model, manifest = write_model(tmp_path, config, {})
        assert main(["compile", "--model", str(model), "--weights", str(manifest),
                     "--out", str(tmp_path / "o")]) == 2
        assert "no layers" in capsys.readouterr().err

    def test_missing_model_file(self, identity_model, tmp_path, capsys):
        _, manifest = identity_model
        assert main(["compile", "--model", str(tmp_path / "nope.json"),
                     "--weights", str(manifest),
                     "--out", str(tmp_path / "o")]) == 2
        assert "no such file" in capsys.readouterr().err

    def test_netlists_are_reproducible(self, identity_model, tmp_path, capsys):
        model, manifest = identity_model
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["compile", "--model", str(model),
                         "--weights", str(manifest), "--out", str(out)]) == 0
        capsys.readouterr()
        assert (a / "0_head.xbar").read_bytes() == (b / "0_head.xbar").read_bytes()
        assert (a / "summary.txt").read_bytes() == (b / "summary.txt").read_bytes()


class TestSimulate:
    def test_scores_match_input(self, identity_model, tmp_path, capsys):
        model, manifest = identity_model
        images = write_images(tmp_path / "x.f32",
                              [0.5, -0.25, 1.0, 0.0, -2.0, 4.0])
        out = tmp_path / "sim"
        assert main(["simulate", "--model", str(model), "--weights", str(manifest),
                     "--input", str(images), "--out", str(out)]) == 0
        text = capsys.readouterr().out
        records = [json.loads(line) for line in text.splitlines()]
        assert [r["index"] for r in records] == [0, 1, 2]
        assert records[0]["scores"] == [0.5, -0.25]
        assert records[0]["label"] == 0
        assert records[2]["scores"] == [-2.0, 4.0]
        assert records[2]["label"] == 1
        assert (out / "results.jsonl").read_text() == text

    def test_requires_input(self, identity_model, capsys):
        model, manifest = identity_model
        assert main(["simulate", "--model", str(model),
                     "--weights", str(manifest)]) == 2
        assert "--input" in capsys.readouterr().err

    def test_short_file_fails_only_its_record(self, identity_model, tmp_path, capsys):
        model, manifest = identity_model
        good = write_images(tmp_path / "good.f32", [1.0, 2.0])
        bad = write_images(tmp_path / "bad.f32", [1.0, 2.0, 3.0])
        assert main(["simulate", "--model", str(model), "--weights", str(manifest),
                     "--input", str(good), "--input", str(bad)]) == 0
        records = [json.loads(line)
                   for line in capsys.readouterr().out.splitlines()]
        assert records[0]["scores"] == [1.0, 2.0]
        assert "error" not in records[0]
        assert "not a multiple of image size 2" in records[1]["error"]
        assert records[1]["index"] == 1


class TestCompare:
    def test_generated_images_pass(self, identity_model, capsys):
        model, manifest = identity_model
        assert main(["compare", "--model", str(model),
                     "--weights", str(manifest)]) == 0
        lines = capsys.readouterr().out.splitlines()
        summary = json.loads(lines[-1])
        assert summary["pass"] is True
        assert summary["images"] == 32
        assert summary["failed_records"] == 0
        assert summary["argmax_mismatches"] == 0
        assert summary["max_diff"] <= summary["tolerance"]
        assert len(lines) == 33

    def test_zero_tolerance_fails(self, random_fc_model, capsys):
        model, manifest = random_fc_model
        assert main(["compare", "--model", str(model), "--weights", str(manifest),
                     "--tolerance", "0"]) == 1
        summary = json.loads(capsys.readouterr().out.splitlines()[-1])
        assert summary["pass"] is False
        assert summary["max_diff"] > 0
        # same model clears the default tolerance
        assert main(["compare", "--model", str(model),
                     "--weights", str(manifest)]) == 0
        capsys.readouterr()

    def test_bad_input_file_fails_run(self, identity_model, tmp_path, capsys):
        model, manifest = identity_model
        bad = write_images(tmp_path / "bad.f32", [1.0])
        assert main(["compare", "--model", str(model), "--weights", str(manifest),
                     "--input", str(bad)]) == 1
        summary = json.loads(capsys.readouterr().out.splitlines()[-1])
        assert summary["failed_records"] == 1
        assert summary["images"] == 0

    def test_explicit_images(self, identity_model, tmp_path, capsys):
        model, manifest = identity_model
        images = write_images(tmp_path / "x.f32", [0.25, -0.75])
        assert main(["compare", "--model", str(model), "--weights", str(manifest),
                     "--input", str(images)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert json.loads(lines[0])["argmax_match"] is True
        assert json.loads(lines[-1])["images"] == 1

    def test_seed_changes_generated_images(self, random_fc_model, capsys):
        model, manifest = random_fc_model
        diffs = []
        for seed in ("0", "1"):
            main(["compare", "--model", str(model), "--weights", str(manifest),
                  "--seed", seed])
            diffs.append(json.loads(capsys.readouterr().out.splitlines()[-1])["max_diff"])
        assert diffs[0] != diffs[1]


class TestReport:
    def test_stdout_and_files(self, identity_model, tmp_path, capsys):
        model, manifest = identity_model
        out = tmp_path / "rep"
        assert main(["report", "--model", str(model), "--weights", str(manifest),
                     "--out", str(out), "--bins", "4"]) == 0
        text = capsys.readouterr().out
        assert "memristors: 2" in text
        assert "reference memristor estimate: 1.1e-06 W" in text
        assert "reference CMOS equivalent: 6e-05 W" in text
        assert (out / "report.txt").read_text() == text
        data = json.loads((out / "report.json").read_text())
        assert data["memristor_count"] == 2
        assert data["references"]["gpu_latency_s"] == 165.4e-6
        csv_rows = (out / "histogram.csv").read_text().strip().splitlines()
        assert len(csv_rows) == len(data["histogram"]["counts"])

    def test_latency_overrides(self, identity_model, capsys):
        model, manifest = identity_model
        assert main(["report", "--model", str(model), "--weights", str(manifest),
                     "--stage-count", "12400"]) == 0
        assert "latency: 1.24e-06 s (1e-10 s/stage x 12400 stages)" \
            in capsys.readouterr().out

    def test_byte_identical_reruns(self, identity_model, capsys):
        model, manifest = identity_model
        args = ["report", "--model", str(model), "--weights", str(manifest)]
        assert main(args) == 0
        first = capsys.readouterr().out
        assert main(args) == 0
        assert capsys.readouterr().out == first


class TestDriver:
    def test_help(self, capsys):
        assert main(["--help"]) == 0
        assert "usage: xbarnet" in capsys.readouterr().out

    def test_unknown_command(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_log_env_enables_diagnostics(self, identity_model, tmp_path):
        model, manifest = identity_model
        proc = subprocess.run(
            [sys.executable, "-m", "xbarnet.cli", "compare",
             "--model", str(model), "--weights", str(manifest)],
            capture_output=True, text=True,
            env=dict(os.environ, XBAR_LOG="INFO"))
        assert proc.returncode == 0
        assert "INFO xbarnet: compiled 1 stages" in proc.stderr
        assert "generating 32 images from seed 0" in proc.stderr
