"""End-to-end command-line flows over the committed synthetic fixtures."""
import json

import numpy as np
import pytest

from gbdt2rtl.cli import main

from helpers import DATA_DIR

SYNTH_CSV = str(DATA_DIR / "synth_train.csv")
SYNTH_MODEL = str(DATA_DIR / "synth_model.json")
MC_MODEL = str(DATA_DIR / "xgb_multiclass.json")


@pytest.fixture
def synth_quantizer(tmp_path):
    out = tmp_path / "quant.json"
    rc = main(
        [
            "fit-quantizer",
            "--data", SYNTH_CSV,
            "--label-col", "last",
            "--w-feature", "4",
            "--out", str(out),
        ]
    )
    assert rc == 0
    return str(out)


def mc_quantizer(tmp_path):
    # The toy multiclass model was trained on 3-bit integer features, so an
    # identity grid covers it.
    from gbdt2rtl import FeatureQuantizer

    out = tmp_path / "mc_quant.json"
    out.write_text(FeatureQuantizer(3, (0.0,) * 4, (7.0,) * 4).to_json())
    return str(out)


def test_fit_quantizer_output(tmp_path, capsys):
    out_path = tmp_path / "quant.json"
    rc = main(
        [
            "fit-quantizer",
            "--data", SYNTH_CSV,
            "--label-col", "last",
            "--w-feature", "4",
            "--out", str(out_path),
        ]
    )
    assert rc == 0
    doc = json.loads(out_path.read_text())
    assert doc["w_feature"] == 4
    assert len(doc["mins"]) == 8
    assert "8 features" in capsys.readouterr().out


def test_quantize_data_round_trip(synth_quantizer, tmp_path, capsys):
    out = tmp_path / "q.csv"
    rc = main(
        [
            "quantize-data",
            "--quantizer", synth_quantizer,
            "--data", SYNTH_CSV,
            "--label-col", "last",
            "--out", str(out),
        ]
    )
    assert rc == 0
    mat = np.loadtxt(out, delimiter=",", ndmin=2)
    assert mat.shape == (500, 9)
    assert (mat == np.round(mat)).all()
    assert mat[:, :8].min() >= 0 and mat[:, :8].max() <= 15


def test_compile_idempotent(synth_quantizer, tmp_path, capsys):
    out_dir = tmp_path / "rtl"
    argv = [
        "compile",
        "--model", SYNTH_MODEL,
        "--quantizer", synth_quantizer,
        "--w-tree", "3",
        "--pipeline", "1,1,1",
        "--out-dir", str(out_dir),
        "--dump-quantized", "quantized.json",
    ]
    assert main(argv) == 0
    first = capsys.readouterr().out
    stats_text = first[: first.index("wrote ")]
    stats = json.loads(stats_text)
    assert stats["tree_count"] == 8
    assert stats["latency_cycles"] == 3
    assert f"wrote {out_dir / 'gbdt_top.v'}" in first
    rtl1 = (out_dir / "gbdt_top.v").read_bytes()
    quant1 = (out_dir / "quantized.json").read_bytes()

    assert main(argv) == 0
    capsys.readouterr()
    assert (out_dir / "gbdt_top.v").read_bytes() == rtl1
    assert (out_dir / "quantized.json").read_bytes() == quant1


def test_compile_with_testbench(synth_quantizer, tmp_path, capsys):
    # Build the netlist in-process to derive a vector file, then ask the CLI
    # for RTL plus the self-checking bench.
    from gbdt2rtl import (
        FeatureQuantizer,
        PipelineConfig,
        build_netlist,
        write_vector_file,
    )
    from gbdt2rtl.cli import _load_model, _prepare

    fq = FeatureQuantizer.from_json(open(synth_quantizer).read())
    q = _prepare(SYNTH_MODEL, fq, 3)
    nl = build_netlist(q, PipelineConfig(1, 0, 0))
    vec = tmp_path / "vectors.txt"
    write_vector_file(nl, [[i % 16] * 8 for i in range(10)], vec)

    out_dir = tmp_path / "rtl"
    rc = main(
        [
            "compile",
            "--model", SYNTH_MODEL,
            "--quantizer", synth_quantizer,
            "--w-tree", "3",
            "--pipeline", "1,0,0",
            "--out-dir", str(out_dir),
            "--emit-testbench",
            "--vectors", str(vec),
        ]
    )
    assert rc == 0
    assert (out_dir / "gbdt_top.v").exists()
    tb = (out_dir / "gbdt_top_tb.v").read_text()
    assert "module gbdt_top_tb;" in tb
    assert "10 vectors, latency 1" in tb


def test_predict_matches_committed_accuracy(synth_quantizer, capsys):
    meta = json.loads((DATA_DIR / "synth_meta.json").read_text())
    rc = main(
        [
            "predict",
            "--model", SYNTH_MODEL,
            "--quantizer", synth_quantizer,
            "--w-tree", "3",
            "--data", SYNTH_CSV,
            "--label-col", "last",
            "--json",
        ]
    )
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["num_samples"] == 500
    assert report["accuracy"] == pytest.approx(meta["quantized_accuracy"])
    confusion = np.array(report["confusion"])
    assert confusion.sum() == 500


def test_predict_table_output(synth_quantizer, capsys):
    rc = main(
        [
            "predict",
            "--model", SYNTH_MODEL,
            "--quantizer", synth_quantizer,
            "--w-tree", "3",
            "--data", SYNTH_CSV,
            "--label-col", "last",
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "samples: 500" in out
    assert "accuracy: 0.9" in out
    assert "confusion" in out


def test_simulate_random(synth_quantizer, capsys):
    rc = main(
        [
            "simulate",
            "--model", SYNTH_MODEL,
            "--quantizer", synth_quantizer,
            "--w-tree", "3",
            "--pipeline", "1,1,2",
            "--random", "40",
            "--seed", "7",
        ]
    )
    assert rc == 0
    assert "agreement 100% over 40 inputs (latency 4 cycles)" in capsys.readouterr().out


def test_simulate_with_data(synth_quantizer, capsys):
    rc = main(
        [
            "simulate",
            "--model", SYNTH_MODEL,
            "--quantizer", synth_quantizer,
            "--w-tree", "3",
            "--pipeline", "0,1,0",
            "--data", SYNTH_CSV,
            "--label-col", "last",
        ]
    )
    assert rc == 0
    assert "agreement 100% over 500 inputs" in capsys.readouterr().out


def test_multiclass_model_flow(tmp_path, capsys):
    quant = mc_quantizer(tmp_path)
    rc = main(
        [
            "report",
            "--model", MC_MODEL,
            "--quantizer", quant,
            "--w-tree", "3",
            "--pipeline", "0,0,1",
        ]
    )
    assert rc == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["task"] == "multiclass"
    assert stats["num_classes"] == 3
    assert stats["tree_count"] == 6
    rc = main(
        [
            "simulate",
            "--model", MC_MODEL,
            "--quantizer", quant,
            "--w-tree", "3",
            "--pipeline", "0,0,1",
            "--random", "64",
        ]
    )
    assert rc == 0
    assert "agreement 100%" in capsys.readouterr().out


def test_exit_code_usage_errors(capsys):
    assert main([]) == 2
    assert main(["compile"]) == 2
    assert main(["no-such-command"]) == 2
    capsys.readouterr()


def test_exit_code_file_errors(tmp_path, capsys):
    rc = main(
        [
            "report",
            "--model", str(tmp_path / "missing.json"),
            "--quantizer", str(tmp_path / "missing2.json"),
            "--w-tree", "3",
            "--pipeline", "0,0,0",
        ]
    )
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("error: ")
    assert "\n" == err[err.index("\n") :]  # single line


def test_exit_code_bad_model(tmp_path, synth_quantizer, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"foo": 1}')
    rc = main(
        [
            "report",
            "--model", str(bad),
            "--quantizer", synth_quantizer,
            "--w-tree", "3",
            "--pipeline", "0,0,0",
        ]
    )
    assert rc == 1
    assert "unrecognized model format" in capsys.readouterr().err


def test_exit_code_bad_pipeline(synth_quantizer, capsys):
    rc = main(
        [
            "report",
            "--model", SYNTH_MODEL,
            "--quantizer", synth_quantizer,
            "--w-tree", "3",
            "--pipeline", "1,2",
        ]
    )
    assert rc == 1
    assert "pipeline" in capsys.readouterr().err


def test_help_exits_clean(capsys):
    assert main(["--help"]) == 0
    assert main(["compile", "--help"]) == 0
    capsys.readouterr()
