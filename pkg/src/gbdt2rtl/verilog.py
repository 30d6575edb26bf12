"""Serialize a netlist to synthesizable Verilog-2001.

One file per design: every tree becomes its own module consuming shared key
bits, and the top module hosts the key comparators, pipeline registers,
adder trees, and the decision output. Emission is deterministic: the same
netlist always yields byte-identical text. A self-checking testbench can be
emitted alongside from a vector file.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import ConfigError, DataError
from .model import TASK_BINARY
from .netlist import Netlist, TreeLogic, interpret_netlist

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*\Z")
_TREE_MOD_RE = re.compile(r"tree_\d+_\d+\Z")


@dataclass(frozen=True)
class EmitOptions:
    top_name: str = "gbdt_top"
    emit_testbench: bool = False
    vector_file: str | Path | None = None


def _check_top_name(name: str) -> None:
    if not _IDENT_RE.match(name):
        raise ConfigError(f"top name is not a legal Verilog identifier: {name!r}")
    if _TREE_MOD_RE.match(name):
        raise ConfigError(f"top name collides with generated tree modules: {name!r}")


def _lit(width: int, value: int) -> str:
    return f"{width}'d{value}"


def _header(nl: Netlist, top_name: str) -> list[str]:
    p = nl.pipeline
    lines = [
        f"// {top_name}.v",
        "// Fully unrolled GBDT classifier; one comparator per unique split,",
        "// one module per tree, balanced adder reduction.",
        "//",
        f"// task: {nl.task}  classes: {nl.num_classes}",
        f"// features: {nl.num_features} x {nl.w_feature}-bit"
        f"  (input bus {nl.num_features * nl.w_feature} bits)",
        f"// trees: {len(nl.tree_logics)}  keys: {len(nl.keys)}  w_tree: {nl.w_tree}",
        f"// pipeline: [{p.p0}, {p.p1}, {p.p2}]  latency: {nl.latency_cycles} cycles",
    ]
    if nl.task == TASK_BINARY:
        if nl.constant_classifier:
            lines.append("// decision: constant class 1 (bias is positive)")
        else:
            lines.append(f"// decision: y = (sum >= {nl.binary_threshold})")
    else:
        lines.append(
            f"// decision: argmax over {nl.num_classes} score fields of"
            f" {nl.output_width} bits each (downstream)"
        )
    lines.append("")
    return lines


def _term_text(path) -> str:
    lits = [f"k_{kid}" if pol else f"~k_{kid}" for kid, pol in path]
    if not lits:
        return "1'b1"
    if len(lits) == 1:
        return lits[0]
    return "(" + " & ".join(lits) + ")"


def _tree_module(tl: TreeLogic) -> list[str]:
    name = f"tree_{tl.class_index}_{tl.tree_index}"
    w = tl.out_width
    lines = [f"module {name} ("]
    ports = [f"    input wire k_{kid}," for kid in tl.key_support]
    ports.append(f"    output wire [{w - 1}:0] value")
    lines.extend(ports)
    lines.append(");")
    for sel in tl.selectors:
        expr = " | ".join(_term_text(p) for p in sel.paths)
        lines.append(f"    wire sel_{sel.value} = {expr};")
    out = _lit(w, tl.default_value)
    for sel in reversed(tl.selectors):
        out = f"sel_{sel.value} ? {_lit(w, sel.value)} : {out}"
    lines.append(f"    assign value = {out};")
    lines.append("endmodule")
    return lines


def _always_block(assigns: list[tuple[str, str]]) -> list[str]:
    lines = ["    always @(posedge clk) begin"]
    lines.extend(f"        {dst} <= {src};" for dst, src in assigns)
    lines.append("    end")
    return lines


def _top_module(nl: Netlist, top_name: str) -> list[str]:
    p = nl.pipeline
    w_in = nl.num_features * nl.w_feature
    w_f = nl.w_feature
    lines = [f"module {top_name} ("]
    ports = []
    if nl.latency_cycles > 0:
        ports.append("    input wire clk,")
    ports.append(f"    input wire [{w_in - 1}:0] features,")
    if nl.task == TASK_BINARY:
        ports.append("    output wire y")
    else:
        ports.append(
            f"    output wire [{nl.num_classes * nl.output_width - 1}:0] scores"
        )
    lines.extend(ports)
    lines.append(");")

    lines.append("    // comparator keys")
    for k in nl.keys:
        lo = k.feature * w_f
        hi = lo + w_f - 1
        lines.append(
            f"    wire k_{k.id} = (features[{hi}:{lo}] < {_lit(w_f, k.threshold)});"
            f"  // x{k.feature} < {k.threshold}"
        )
    if p.p0:
        lines.append("")
        lines.append("    // p0: key registers")
        for k in nl.keys:
            lines.append(f"    reg k_{k.id}_q;")
        lines.extend(_always_block([(f"k_{k.id}_q", f"k_{k.id}") for k in nl.keys]))

    def key_src(kid: int) -> str:
        return f"k_{kid}_q" if p.p0 else f"k_{kid}"

    lines.append("")
    lines.append("    // tree scores")
    for tl in nl.tree_logics:
        sig = f"t_{tl.class_index}_{tl.tree_index}"
        lines.append(f"    wire [{tl.out_width - 1}:0] {sig};")
        lines.append(f"    tree_{tl.class_index}_{tl.tree_index} u_tree_{tl.class_index}_{tl.tree_index} (")
        conns = [f"        .k_{kid}({key_src(kid)})," for kid in tl.key_support]
        conns.append(f"        .value({sig})")
        lines.extend(conns)
        lines.append("    );")
    if p.p1:
        lines.append("")
        lines.append("    // p1: tree score registers")
        for tl in nl.tree_logics:
            sig = f"t_{tl.class_index}_{tl.tree_index}"
            lines.append(f"    reg [{tl.out_width - 1}:0] {sig}_q;")
        lines.extend(
            _always_block(
                [
                    (f"t_{tl.class_index}_{tl.tree_index}_q", f"t_{tl.class_index}_{tl.tree_index}")
                    for tl in nl.tree_logics
                ]
            )
        )

    def tree_src(tl: TreeLogic) -> str:
        sig = f"t_{tl.class_index}_{tl.tree_index}"
        return f"{sig}_q" if p.p1 else sig

    m_per = nl.trees_per_class
    roots = []
    for ai, at in enumerate(nl.adder_trees):
        lines.append("")
        label = "adder tree" if nl.task == TASK_BINARY else f"class {ai} adder tree"
        lines.append(f"    // {label}")
        if nl.task == TASK_BINARY:
            srcs = [tree_src(tl) for tl in nl.tree_logics]
        else:
            srcs = [tree_src(tl) for tl in nl.tree_logics[ai * m_per : (ai + 1) * m_per]]
        if at.bias is not None:
            wb = max(1, at.bias.bit_length())
            lines.append(f"    wire [{wb - 1}:0] a{ai}_bias = {_lit(wb, at.bias)};")
            srcs.append(f"a{ai}_bias")
        for lvl_no, level in enumerate(at.levels, start=1):
            nxt = []
            for j, node in enumerate(level.nodes):
                sig = f"a{ai}_l{lvl_no}_s{j}"
                if node.b is None:
                    expr = srcs[node.a]
                else:
                    expr = f"{srcs[node.a]} + {srcs[node.b]}"
                lines.append(f"    wire [{node.width - 1}:0] {sig} = {expr};")
                nxt.append(sig)
            if level.registered:
                for j, node in enumerate(level.nodes):
                    lines.append(f"    reg [{node.width - 1}:0] a{ai}_l{lvl_no}_s{j}_q;")
                lines.extend(
                    _always_block(
                        [
                            (f"a{ai}_l{lvl_no}_s{j}_q", f"a{ai}_l{lvl_no}_s{j}")
                            for j in range(len(level.nodes))
                        ]
                    )
                )
                nxt = [f"{s}_q" for s in nxt]
            srcs = nxt
        roots.append(srcs[0])

    lines.append("")
    lines.append("    // decision output")
    if nl.task == TASK_BINARY:
        if nl.constant_classifier:
            lines.append("    assign y = 1'b1;")
        else:
            theta = nl.binary_threshold
            cmp_w = max(nl.adder_trees[0].root_width, max(1, theta.bit_length()))
            lines.append(f"    assign y = ({roots[0]} >= {_lit(cmp_w, theta)});")
    else:
        w_sum = nl.output_width
        for n, at in enumerate(nl.adder_trees):
            lo = n * w_sum
            hi = lo + w_sum - 1
            pad = w_sum - at.root_width
            rhs = roots[n] if pad == 0 else f"{{{_lit(pad, 0)}, {roots[n]}}}"
            lines.append(f"    assign scores[{hi}:{lo}] = {rhs};")
    lines.append("endmodule")
    return lines


def emit(nl: Netlist, opts: EmitOptions = EmitOptions()) -> dict[str, str]:
    """Render the netlist; returns {filename: text}."""
    _check_top_name(opts.top_name)
    lines = _header(nl, opts.top_name)
    for tl in nl.tree_logics:
        lines.extend(_tree_module(tl))
        lines.append("")
    lines.extend(_top_module(nl, opts.top_name))
    return {f"{opts.top_name}.v": "\n".join(lines) + "\n"}


# ---------------------------------------------------------------------------
# Test vectors and the self-checking bench


def pack_features(nl: Netlist, qx: Sequence[int]) -> int:
    """Feature i occupies bits [i*w_feature +: w_feature] of the input bus."""
    word = 0
    for i, v in enumerate(qx):
        word |= int(v) << (i * nl.w_feature)
    return word


def pack_outputs(nl: Netlist, outs: Sequence[int]) -> int:
    if nl.task == TASK_BINARY:
        return int(outs[0]) & 1
    word = 0
    for n, v in enumerate(outs):
        word |= int(v) << (n * nl.output_width)
    return word


def write_vector_file(nl: Netlist, inputs: Sequence[Sequence[int]], path) -> None:
    """One line per sample: feature ints then expected output int(s),
    space-separated decimal. Expected values come from the interpreter."""
    rows = []
    for qx in inputs:
        res = interpret_netlist(nl, qx)
        outs = [res] if nl.task == TASK_BINARY else list(res)
        rows.append(" ".join(str(int(v)) for v in list(qx) + outs))
    Path(path).write_text("\n".join(rows) + "\n")


def read_vector_file(path, nl: Netlist) -> list[tuple[list[int], list[int]]]:
    p = Path(path)
    if not p.exists():
        raise DataError(f"vector file not found: {p}")
    n_in = nl.num_features
    n_out = 1 if nl.task == TASK_BINARY else nl.num_classes
    out_top = 1 if nl.task == TASK_BINARY else (1 << nl.output_width) - 1
    in_top = (1 << nl.w_feature) - 1
    rows = []
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        toks = line.split()
        if not toks:
            continue
        if len(toks) != n_in + n_out:
            raise DataError(
                f"{p}: line {lineno}: expected {n_in + n_out} integers, got {len(toks)}"
            )
        try:
            vals = [int(t) for t in toks]
        except ValueError as exc:
            raise DataError(f"{p}: line {lineno}: non-integer token") from exc
        feats, outs = vals[:n_in], vals[n_in:]
        if any(not 0 <= v <= in_top for v in feats):
            raise DataError(f"{p}: line {lineno}: feature value out of range")
        if any(not 0 <= v <= out_top for v in outs):
            raise DataError(f"{p}: line {lineno}: expected output out of range")
        rows.append((feats, outs))
    if not rows:
        raise DataError(f"{p}: no vectors")
    return rows


def emit_testbench(nl: Netlist, opts: EmitOptions) -> dict[str, str]:
    """Self-checking bench: drives one vector per cycle, compares after the
    pipeline latency, and prints PASS/FAIL counts."""
    _check_top_name(opts.top_name)
    if opts.vector_file is None:
        raise ConfigError("testbench emission requires a vector file")
    vectors = read_vector_file(opts.vector_file, nl)
    top = opts.top_name
    lat = nl.latency_cycles
    w_in = nl.num_features * nl.w_feature
    n_vec = len(vectors)
    if nl.task == TASK_BINARY:
        w_out = 1
        out_decl = "wire y;"
        out_conn = ".y(y)"
        out_sig = "y"
    else:
        w_out = nl.num_classes * nl.output_width
        out_decl = f"wire [{w_out - 1}:0] scores;"
        out_conn = ".scores(scores)"
        out_sig = "scores"

    lines = [
        f"// {top}_tb.v",
        f"// Self-checking bench for {top}: {n_vec} vectors, latency {lat}.",
        "`timescale 1ns/1ps",
        "",
        f"module {top}_tb;",
        f"    reg [{w_in - 1}:0] features;",
        f"    {out_decl}",
    ]
    if lat > 0:
        lines.append("    reg clk = 1'b0;")
    lines.extend(
        [
            "    integer i;",
            "    integer pass_count;",
            "    integer fail_count;",
            f"    reg [{w_in - 1}:0] stim [0:{n_vec - 1}];",
            f"    reg [{max(1, w_out) - 1}:0] expc [0:{n_vec - 1}];",
            "",
            f"    {top} dut (",
        ]
    )
    if lat > 0:
        lines.append("        .clk(clk),")
    lines.append("        .features(features),")
    lines.append(f"        {out_conn}")
    lines.append("    );")
    if lat > 0:
        lines.append("")
        lines.append("    always #5 clk = ~clk;")
    lines.append("")
    lines.append("    initial begin")
    for i, (feats, outs) in enumerate(vectors):
        sw = pack_features(nl, feats)
        ew = pack_outputs(nl, outs)
        lines.append(
            f"        stim[{i}] = {_lit(w_in, sw)}; expc[{i}] = {_lit(max(1, w_out), ew)};"
        )
    lines.append("        pass_count = 0;")
    lines.append("        fail_count = 0;")
    if lat > 0:
        lines.extend(
            [
                f"        for (i = 0; i < {n_vec + lat - 1}; i = i + 1) begin",
                f"            if (i < {n_vec}) features = stim[i];",
                f"            else features = {_lit(w_in, 0)};",
                "            @(posedge clk);",
                "            #1;",
                f"            if (i >= {lat - 1}) begin",
                f"                if ({out_sig} === expc[i - {lat - 1}]) begin",
                "                    pass_count = pass_count + 1;",
                "                end else begin",
                "                    fail_count = fail_count + 1;",
                f"                    $display(\"FAIL vector %0d: got %0d expected %0d\","
                f" i - {lat - 1}, {out_sig}, expc[i - {lat - 1}]);",
                "                end",
                "            end",
                "        end",
            ]
        )
    else:
        lines.extend(
            [
                f"        for (i = 0; i < {n_vec}; i = i + 1) begin",
                "            features = stim[i];",
                "            #10;",
                f"            if ({out_sig} === expc[i]) begin",
                "                pass_count = pass_count + 1;",
                "            end else begin",
                "                fail_count = fail_count + 1;",
                f"                $display(\"FAIL vector %0d: got %0d expected %0d\","
                f" i, {out_sig}, expc[i]);",
                "            end",
                "        end",
            ]
        )
    lines.extend(
        [
            "        $display(\"PASS=%0d FAIL=%0d\", pass_count, fail_count);",
            "        $finish;",
            "    end",
            "endmodule",
        ]
    )
    return {f"{top}_tb.v": "\n".join(lines) + "\n"}


def emit_files(nl: Netlist, opts: EmitOptions) -> dict[str, str]:
    """RTL plus, when requested, the testbench."""
    files = emit(nl, opts)
    if opts.emit_testbench:
        files.update(emit_testbench(nl, opts))
    return files
