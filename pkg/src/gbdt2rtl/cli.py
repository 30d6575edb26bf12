"""Command-line front end.

Exit codes: 0 success, 1 file or validation errors, 2 usage errors,
3 cross-check mismatch (a compiler bug, not a user error).
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from .dataio import LABEL_CHOICES, load_csv, save_csv
from .errors import DataError, Gbdt2RtlError, ModelParseError
from .evaluator import evaluate_dataset, predict_quantized
from .features import FeatureQuantizer, integerize_thresholds
from .leaves import dump_quantized_json, quantize_leaves
from .model import (
    GbdtEnsemble,
    _parse_json,
    load_ensemble_json,
    load_xgboost_model,
)
from .netlist import (
    PipelineConfig,
    build_netlist,
    interpret_netlist,
    netlist_stats,
    simulate_pipelined,
)
from .verilog import EmitOptions, emit_files


def _read_text(path) -> str:
    p = Path(path)
    if not p.exists():
        raise DataError(f"file not found: {p}")
    return p.read_text()


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _load_model(path) -> GbdtEnsemble:
    text = _read_text(path)
    doc = _parse_json(text)
    if isinstance(doc, dict) and "learner" in doc:
        return load_xgboost_model(text)
    if isinstance(doc, dict) and "task" in doc:
        return load_ensemble_json(text)
    raise ModelParseError(f"{path}: unrecognized model format")


def _load_quantizer(path) -> FeatureQuantizer:
    return FeatureQuantizer.from_json(_read_text(path))


def _prepare(model_path, quantizer: FeatureQuantizer, w_tree: int):
    ens = _load_model(model_path)
    if ens.num_features != quantizer.num_features:
        raise DataError(
            f"model expects {ens.num_features} features, "
            f"quantizer covers {quantizer.num_features}"
        )
    ens = integerize_thresholds(ens)
    return quantize_leaves(ens, w_tree, quantizer.w_feature)


def _cmd_fit_quantizer(args) -> int:
    data, _ = load_csv(args.data, args.label_col)
    fq = FeatureQuantizer.fit(data, args.w_feature)
    _write_atomic(Path(args.out), fq.to_json())
    print(f"wrote {args.out} ({fq.num_features} features, w_feature={fq.w_feature})")
    return 0


def _cmd_quantize_data(args) -> int:
    fq = _load_quantizer(args.quantizer)
    data, labels = load_csv(args.data, args.label_col)
    qmat = fq.transform_matrix(data)
    save_csv(args.out, qmat, labels, args.label_col)
    print(f"wrote {args.out} ({len(qmat)} rows)")
    return 0


def _cmd_compile(args) -> int:
    fq = _load_quantizer(args.quantizer)
    q = _prepare(args.model, fq, args.w_tree)
    nl = build_netlist(q, PipelineConfig.parse(args.pipeline))
    opts = EmitOptions(
        top_name=args.top,
        emit_testbench=args.emit_testbench,
        vector_file=args.vectors,
    )
    files = emit_files(nl, opts)
    if args.dump_quantized:
        files[args.dump_quantized] = dump_quantized_json(q)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    # All texts are rendered before anything is written, and each file is
    # written to a temp name and renamed, so failures leave no partial files.
    for name, text in sorted(files.items()):
        _write_atomic(out_dir / name, text)
    print(json.dumps(netlist_stats(nl), indent=2, sort_keys=True))
    for name in sorted(files):
        print(f"wrote {out_dir / name}")
    return 0


def _cmd_predict(args) -> int:
    fq = _load_quantizer(args.quantizer)
    q = _prepare(args.model, fq, args.w_tree)
    data, labels = load_csv(args.data, args.label_col)
    report = evaluate_dataset(q, fq, data, labels)
    if args.json:
        print(report.to_json(), end="")
    else:
        print(report.format_table(), end="")
    return 0


def _cmd_simulate(args) -> int:
    fq = _load_quantizer(args.quantizer)
    q = _prepare(args.model, fq, args.w_tree)
    nl = build_netlist(q, PipelineConfig.parse(args.pipeline))

    if args.data:
        data, _ = load_csv(args.data, args.label_col)
        inputs = [[int(v) for v in row] for row in fq.transform_matrix(data)]
    else:
        rng = random.Random(args.seed)
        top = (1 << q.w_feature) - 1
        inputs = [
            [rng.randint(0, top) for _ in range(q.num_features)]
            for _ in range(args.random)
        ]

    lat = nl.latency_cycles
    simulated = simulate_pipelined(nl, inputs)
    for i, qx in enumerate(inputs):
        cls, scores = predict_quantized(q, qx)
        ref = cls if nl.task == "binary" else tuple(scores)
        hw = interpret_netlist(nl, qx)
        if hw != ref:
            print(f"error: interpreter mismatch at input {i}: {hw} != {ref}", file=sys.stderr)
            return 3
        if simulated[i + lat] != ref:
            print(
                f"error: pipeline mismatch at input {i}: {simulated[i + lat]} != {ref}",
                file=sys.stderr,
            )
            return 3
    print(f"agreement 100% over {len(inputs)} inputs (latency {lat} cycles)")
    return 0


def _cmd_report(args) -> int:
    fq = _load_quantizer(args.quantizer)
    q = _prepare(args.model, fq, args.w_tree)
    nl = build_netlist(q, PipelineConfig.parse(args.pipeline))
    print(json.dumps(netlist_stats(nl), indent=2, sort_keys=True))
    return 0


def _add_label_col(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--label-col",
        choices=LABEL_CHOICES,
        default="none",
        help="position of the label column in the CSV (default: none)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gbdt2rtl",
        description="Compile GBDT classifiers into quantized, pipelined Verilog.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-quantizer", help="fit per-feature min/max from a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--w-feature", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_label_col(p)
    p.set_defaults(func=_cmd_fit_quantizer)

    p = sub.add_parser("quantize-data", help="apply a fitted quantizer to a CSV")
    p.add_argument("--quantizer", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_label_col(p)
    p.set_defaults(func=_cmd_quantize_data)

    p = sub.add_parser("compile", help="emit Verilog for a model")
    p.add_argument("--model", required=True)
    p.add_argument("--quantizer", required=True)
    p.add_argument("--w-tree", type=int, required=True)
    p.add_argument("--pipeline", required=True, help="p0,p1,p2")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--top", default="gbdt_top")
    p.add_argument("--emit-testbench", action="store_true")
    p.add_argument("--vectors", help="vector file for the testbench")
    p.add_argument(
        "--dump-quantized",
        metavar="NAME",
        help="also write the quantized ensemble JSON under this name",
    )
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("predict", help="quantized inference over a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--quantizer", required=True)
    p.add_argument("--w-tree", type=int, required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--json", action="store_true", help="emit the report as JSON")
    _add_label_col(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser(
        "simulate", help="cross-check evaluator, netlist interpreter, and pipeline"
    )
    p.add_argument("--model", required=True)
    p.add_argument("--quantizer", required=True)
    p.add_argument("--w-tree", type=int, required=True)
    p.add_argument("--pipeline", required=True, help="p0,p1,p2")
    p.add_argument("--data", help="CSV of raw inputs; omit for random inputs")
    p.add_argument("--random", type=int, default=256, help="random input count")
    p.add_argument("--seed", type=int, default=0)
    _add_label_col(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("report", help="print netlist statistics as JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--quantizer", required=True)
    p.add_argument("--w-tree", type=int, required=True)
    p.add_argument("--pipeline", required=True, help="p0,p1,p2")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (Gbdt2RtlError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
