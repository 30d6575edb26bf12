"""Hardware IR for a quantized ensemble, plus software execution of it.

Three layers, mirroring the emitted RTL:

  keys        unique (feature, threshold) comparators shared by all trees
  tree logic  per-tree sum-of-products selectors over key bits
  adder trees balanced binary reduction of tree scores (and the class bias)

Pipeline registers may sit after the keys (p0), after the tree outputs (p1),
and on p2 evenly spaced levels inside the adder trees. Tree logic itself is
never pipelined. interpret_netlist executes the IR combinationally;
PipelineSimulator executes it cycle by cycle with register semantics.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError, ContractViolation, ValidationError
from .leaves import QuantizedEnsemble, QuantTree
from .model import TASK_BINARY

# ---------------------------------------------------------------------------
# IR types


@dataclass(frozen=True)
class Key:
    """One shared comparator bit: x[feature] < threshold."""

    id: int
    feature: int
    threshold: int


@dataclass(frozen=True)
class Selector:
    """Fires when any stored path matches; paths are (key id, polarity)
    literal sequences, polarity True meaning the key bit is asserted."""

    value: int
    paths: tuple[tuple[tuple[int, bool], ...], ...]


@dataclass(frozen=True)
class TreeLogic:
    class_index: int
    tree_index: int
    unique_values: tuple[int, ...]  # ascending, reachable leaves only
    default_value: int
    selectors: tuple[Selector, ...]  # ascending by value; default excluded
    out_width: int

    @property
    def key_support(self) -> tuple[int, ...]:
        ids = {k for sel in self.selectors for path in sel.paths for k, _ in path}
        return tuple(sorted(ids))


@dataclass(frozen=True)
class AdderNode:
    """One node of one adder level: a + b, or a pass-through when b is None."""

    a: int
    b: int | None
    max_value: int

    @property
    def width(self) -> int:
        return max(1, self.max_value.bit_length())


@dataclass(frozen=True)
class AdderLevel:
    nodes: tuple[AdderNode, ...]
    registered: bool


@dataclass(frozen=True)
class AdderTree:
    operand_maxes: tuple[int, ...]  # bias (if any) is the last operand
    bias: int | None
    levels: tuple[AdderLevel, ...]
    register_levels: tuple[int, ...]  # 1-based level numbers

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def operand_widths(self) -> tuple[int, ...]:
        return tuple(max(1, m.bit_length()) for m in self.operand_maxes)

    @property
    def root_max(self) -> int:
        if self.levels:
            return self.levels[-1].nodes[0].max_value
        return self.operand_maxes[0]

    @property
    def root_width(self) -> int:
        return max(1, self.root_max.bit_length())


@dataclass(frozen=True)
class PipelineConfig:
    p0: int = 0
    p1: int = 0
    p2: int = 0

    def __post_init__(self) -> None:
        if self.p0 not in (0, 1) or self.p1 not in (0, 1):
            raise ConfigError(f"p0 and p1 must be 0 or 1, got [{self.p0}, {self.p1}, {self.p2}]")
        if not isinstance(self.p2, int) or self.p2 < 0:
            raise ConfigError(f"p2 must be a nonnegative integer, got {self.p2!r}")

    @property
    def latency(self) -> int:
        return self.p0 + self.p1 + self.p2

    @classmethod
    def parse(cls, text: str) -> "PipelineConfig":
        parts = text.split(",")
        if len(parts) != 3:
            raise ConfigError(f"pipeline must be three comma-separated integers, got {text!r}")
        try:
            a, b, c = (int(p.strip()) for p in parts)
        except ValueError as exc:
            raise ConfigError(f"pipeline must be three comma-separated integers, got {text!r}") from exc
        return cls(a, b, c)


@dataclass(frozen=True)
class Netlist:
    task: str
    num_classes: int
    num_features: int
    w_feature: int
    w_tree: int
    keys: tuple[Key, ...]
    tree_logics: tuple[TreeLogic, ...]  # class-major order
    adder_trees: tuple[AdderTree, ...]  # one for binary, one per class otherwise
    binary_threshold: int | None  # sum >= threshold decides class 1
    constant_classifier: bool  # binary model that always answers class 1
    pipeline: PipelineConfig
    output_width: int  # 1 for binary, per-class score width otherwise

    @property
    def latency_cycles(self) -> int:
        return self.pipeline.latency

    @property
    def trees_per_class(self) -> int:
        if self.task == TASK_BINARY:
            return len(self.tree_logics)
        return len(self.tree_logics) // self.num_classes


# ---------------------------------------------------------------------------
# Builders


def build_keys(q: QuantizedEnsemble):
    """Collect the unique in-range comparisons of an ensemble.

    Returns (keys, binding) where keys are sorted by (feature, threshold)
    and binding maps (flat tree index, node index) of every internal node to
    either a key id or a constant bool for comparisons decided by the input
    range alone: thresholds <= 0 are always false, thresholds above
    2^w_feature - 1 always true.
    """
    top = (1 << q.w_feature) - 1
    pairs = set()
    binding: dict[tuple[int, int], int | bool] = {}
    for ti, tree in enumerate(q.trees):
        for ni, node in enumerate(tree.nodes):
            if node.is_leaf:
                continue
            t = node.threshold
            if t <= 0:
                binding[(ti, ni)] = False
            elif t > top:
                binding[(ti, ni)] = True
            else:
                pairs.add((node.feature, t))
    keys = tuple(Key(i, f, t) for i, (f, t) in enumerate(sorted(pairs)))
    ids = {(k.feature, k.threshold): k.id for k in keys}
    for ti, tree in enumerate(q.trees):
        for ni, node in enumerate(tree.nodes):
            if node.is_leaf or (ti, ni) in binding:
                continue
            binding[(ti, ni)] = ids[(node.feature, node.threshold)]
    return keys, binding


def tree_to_logic(
    tree: QuantTree,
    keymap: dict[int, int | bool],
    *,
    class_index: int = 0,
    tree_index: int = 0,
) -> TreeLogic:
    """Flatten one tree into selector logic over its key bits.

    keymap maps node indices to key ids or constant bools. Constant keys are
    folded before path enumeration; a key repeated along a path contributes
    one literal and forces the same direction below it, so contradictory
    paths never appear. The most frequent leaf value (ties to the smaller)
    becomes the selector-free default.
    """
    paths_by_value: dict[int, list[tuple[tuple[int, bool], ...]]] = {}
    # DFS, left first, carrying the literal assignment along the path.
    stack: list[tuple[int, dict[int, bool]]] = [(0, {})]
    while stack:
        ni, assign = stack.pop()
        node = tree.nodes[ni]
        if node.is_leaf:
            paths_by_value.setdefault(node.value, []).append(tuple(assign.items()))
            continue
        bind = keymap[ni]
        if isinstance(bind, bool):
            stack.append((node.left if bind else node.right, assign))
            continue
        prev = assign.get(bind)
        if prev is None:
            right = dict(assign)
            right[bind] = False
            stack.append((node.right, right))
            left = dict(assign)
            left[bind] = True
            stack.append((node.left, left))
        else:
            stack.append((node.left if prev else node.right, assign))

    values = sorted(paths_by_value)
    default = min(values, key=lambda v: (-len(paths_by_value[v]), v))
    selectors = tuple(
        Selector(v, tuple(paths_by_value[v])) for v in values if v != default
    )
    return TreeLogic(
        class_index=class_index,
        tree_index=tree_index,
        unique_values=tuple(values),
        default_value=default,
        selectors=selectors,
        out_width=max(1, values[-1].bit_length()),
    )


def build_adder_tree(
    operand_maxes: Sequence[int], bias: int | None = None, p2: int = 0
) -> AdderTree:
    """Balanced reduction of the operands, pairing adjacent entries left to
    right; an odd operand passes through to the next level. p2 registers are
    spread over the levels at floor(depth*i/(p2+1)) for i = 1..p2."""
    maxes = [int(m) for m in operand_maxes]
    for m in maxes:
        if m < 0:
            raise ValidationError("adder operands must be nonnegative")
    if bias is not None:
        if bias < 0:
            raise ValidationError("adder bias operand must be nonnegative")
        maxes.append(int(bias))
    if not maxes:
        raise ValidationError("adder tree needs at least one operand")
    depth = (len(maxes) - 1).bit_length()  # ceil(log2(n)), 0 for one operand
    if p2 < 0:
        raise ConfigError(f"p2 must be nonnegative, got {p2}")
    if p2 > 0 and p2 >= depth:
        raise ConfigError(
            f"more stages than adder levels (p2={p2}, adder depth={depth})"
        )
    bounds = sorted({depth * i // (p2 + 1) for i in range(1, p2 + 1)})
    assert len(bounds) == p2, "register levels must be distinct"

    levels = []
    cur = maxes
    for lvl in range(1, depth + 1):
        nodes = []
        nxt = []
        i = 0
        while i + 1 < len(cur):
            m = cur[i] + cur[i + 1]
            nodes.append(AdderNode(a=i, b=i + 1, max_value=m))
            nxt.append(m)
            i += 2
        if i < len(cur):
            nodes.append(AdderNode(a=i, b=None, max_value=cur[i]))
            nxt.append(cur[i])
        levels.append(AdderLevel(tuple(nodes), registered=lvl in bounds))
        cur = nxt
    return AdderTree(
        operand_maxes=tuple(maxes),
        bias=bias,
        levels=tuple(levels),
        register_levels=tuple(bounds),
    )


def build_netlist(q: QuantizedEnsemble, pipeline: PipelineConfig) -> Netlist:
    """Assemble the full IR for a quantized ensemble."""
    if not q.trees:
        raise ValidationError("cannot build hardware for an ensemble with no trees")
    keys, binding = build_keys(q)
    by_tree: list[dict[int, int | bool]] = [{} for _ in q.trees]
    for (ti, ni), bind in binding.items():
        by_tree[ti][ni] = bind

    logics = []
    if q.task == TASK_BINARY:
        for m, tree in enumerate(q.trees):
            logics.append(tree_to_logic(tree, by_tree[m], class_index=0, tree_index=m))
        maxes = [max(tl.unique_values) for tl in logics]
        adders = (build_adder_tree(maxes, bias=None, p2=pipeline.p2),)
        theta = -q.biases[0]
        constant = q.biases[0] > 0
        out_width = 1
    else:
        n_cls = q.num_classes
        m_per = q.trees_per_class
        for n in range(n_cls):
            for m in range(m_per):
                flat = m * n_cls + n
                logics.append(
                    tree_to_logic(q.trees[flat], by_tree[flat], class_index=n, tree_index=m)
                )
        adders = tuple(
            build_adder_tree(
                [max(tl.unique_values) for tl in logics[n * m_per : (n + 1) * m_per]],
                bias=q.biases[n],
                p2=pipeline.p2,
            )
            for n in range(n_cls)
        )
        theta = None
        constant = False
        out_width = max(at.root_width for at in adders)
    return Netlist(
        task=q.task,
        num_classes=q.num_classes,
        num_features=q.num_features,
        w_feature=q.w_feature,
        w_tree=q.w_tree,
        keys=keys,
        tree_logics=tuple(logics),
        adder_trees=adders,
        binary_threshold=theta,
        constant_classifier=constant,
        pipeline=pipeline,
        output_width=out_width,
    )


# ---------------------------------------------------------------------------
# Combinational execution


def _check_inputs(nl: Netlist, qx: Sequence[int]) -> None:
    if len(qx) != nl.num_features:
        raise ContractViolation(f"expected {nl.num_features} inputs, got {len(qx)}")
    top = (1 << nl.w_feature) - 1
    for i, v in enumerate(qx):
        if not 0 <= int(v) <= top:
            raise ContractViolation(f"input {i} = {v} outside [0, {top}]")


def eval_key_bits(nl: Netlist, qx: Sequence[int]) -> tuple[bool, ...]:
    return tuple(qx[k.feature] < k.threshold for k in nl.keys)


def eval_tree_logic(tl: TreeLogic, kbits: Sequence[bool]) -> int:
    """First selector whose any path matches wins, in ascending value order;
    otherwise the default value."""
    for sel in tl.selectors:
        for path in sel.paths:
            for kid, pol in path:
                if kbits[kid] is not pol:
                    break
            else:
                return sel.value
    return tl.default_value


def _run_adder_levels(at: AdderTree, signals: list[int], lo: int, hi: int) -> list[int]:
    """Evaluate levels lo..hi (1-based, inclusive) from the given signals."""
    for level in at.levels[lo - 1 : hi]:
        nxt = []
        for node in level.nodes:
            v = signals[node.a] if node.b is None else signals[node.a] + signals[node.b]
            assert v <= node.max_value, "adder value exceeds declared bound"
            nxt.append(v)
        signals = nxt
    return signals


def _operand_values(nl: Netlist, touts: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    if nl.task == TASK_BINARY:
        return (tuple(touts),)
    m_per = nl.trees_per_class
    return tuple(
        tuple(touts[n * m_per : (n + 1) * m_per]) + (at.bias,)
        for n, at in enumerate(nl.adder_trees)
    )


def _finalize(nl: Netlist, roots: tuple[int, ...]):
    if nl.task == TASK_BINARY:
        return 1 if roots[0] >= nl.binary_threshold else 0
    return roots


def interpret_netlist(nl: Netlist, qx: Sequence[int]):
    """Combinational reference execution.

    Returns the class bit (0/1) for binary netlists and the tuple of
    per-class sums for multiclass ones.
    """
    _check_inputs(nl, qx)
    kbits = eval_key_bits(nl, qx)
    touts = [eval_tree_logic(tl, kbits) for tl in nl.tree_logics]
    roots = tuple(
        _run_adder_levels(at, list(vals), 1, at.depth)[0]
        for at, vals in zip(nl.adder_trees, _operand_values(nl, touts))
    )
    return _finalize(nl, roots)


# ---------------------------------------------------------------------------
# Cycle-accurate execution


def _build_segments(nl: Netlist):
    """Split the IR into (function, registered) stages in dataflow order.

    The number of registered stages equals the pipeline latency. Functions
    pass None through untouched so bubbles drain naturally.
    """
    p = nl.pipeline
    segments = [
        (lambda qx: eval_key_bits(nl, qx), p.p0 == 1),
        (
            lambda kb: tuple(eval_tree_logic(tl, kb) for tl in nl.tree_logics),
            p.p1 == 1,
        ),
    ]
    depth = nl.adder_trees[0].depth
    bounds = nl.adder_trees[0].register_levels

    def adder_segment(lo: int, hi: int, attach: bool, finalize: bool):
        def fn(val):
            if attach:
                groups = [list(v) for v in _operand_values(nl, val)]
            else:
                groups = [list(v) for v in val]
            out = tuple(
                tuple(_run_adder_levels(at, sigs, lo, hi))
                for at, sigs in zip(nl.adder_trees, groups)
            )
            if finalize:
                return _finalize(nl, tuple(s[0] for s in out))
            return out

        return fn

    prev = 0
    first = True
    for b in bounds:
        segments.append((adder_segment(prev + 1, b, first, False), True))
        prev = b
        first = False
    segments.append((adder_segment(prev + 1, depth, first, True), False))
    return segments


class PipelineSimulator:
    """Register-true execution: step() advances one clock cycle.

    Registers start empty; the first latency outputs are None while the
    pipeline fills. Every cycle consumes one input, so the initiation
    interval is 1.
    """

    def __init__(self, nl: Netlist):
        self.netlist = nl
        self._segments = _build_segments(nl)
        n_regs = sum(1 for _, registered in self._segments if registered)
        assert n_regs == nl.latency_cycles
        self._state: list = [None] * n_regs

    @property
    def latency(self) -> int:
        return self.netlist.latency_cycles

    def step(self, qx: Sequence[int] | None):
        """Advance one cycle; None injects a bubble instead of an input."""
        if qx is not None:
            _check_inputs(self.netlist, qx)
        val = qx
        nxt = []
        ri = 0
        for fn, registered in self._segments:
            out = None if val is None else fn(val)
            if registered:
                nxt.append(out)
                val = self._state[ri]
                ri += 1
            else:
                val = out
        self._state = nxt
        return val


def simulate_pipelined(nl: Netlist, stream: Sequence[Sequence[int]]) -> list:
    """Drive one input per cycle and run latency extra cycles to drain.

    Entry t of the result is the output visible at cycle t; for t >= latency
    it equals interpret_netlist(stream[t - latency]). Earlier entries are
    None.
    """
    sim = PipelineSimulator(nl)
    flush = [0] * nl.num_features
    out = [sim.step(qx) for qx in stream]
    out.extend(sim.step(flush) for _ in range(sim.latency))
    return out


# ---------------------------------------------------------------------------
# Reporting


def netlist_stats(nl: Netlist) -> dict:
    """Size and shape numbers for reports; all plain JSON-able values."""
    p = nl.pipeline
    reg_bits = 0
    if p.p0:
        reg_bits += len(nl.keys)
    if p.p1:
        reg_bits += sum(tl.out_width for tl in nl.tree_logics)
    for at in nl.adder_trees:
        for lvl in at.register_levels:
            reg_bits += sum(node.width for node in at.levels[lvl - 1].nodes)
    return {
        "task": nl.task,
        "num_classes": nl.num_classes,
        "num_features": nl.num_features,
        "w_feature": nl.w_feature,
        "w_tree": nl.w_tree,
        "key_count": len(nl.keys),
        "tree_count": len(nl.tree_logics),
        "unique_value_counts": [len(tl.unique_values) for tl in nl.tree_logics],
        "selector_path_count": sum(
            len(sel.paths) for tl in nl.tree_logics for sel in tl.selectors
        ),
        "adder_depths": [at.depth for at in nl.adder_trees],
        "adder_root_widths": [at.root_width for at in nl.adder_trees],
        "adder_level_widths": [
            [[node.width for node in lvl.nodes] for lvl in at.levels]
            for at in nl.adder_trees
        ],
        "register_bits": reg_bits,
        "latency_cycles": nl.latency_cycles,
        "pipeline": [p.p0, p.p1, p.p2],
        "constant_classifier": nl.constant_classifier,
        "output_width": nl.output_width,
        "binary_threshold": nl.binary_threshold,
    }


def _selector_expr(paths):
    def lit(kid: int, pol: bool):
        return ["k", kid] if pol else ["not", ["k", kid]]

    def term(path):
        lits = [lit(k, p) for k, p in path]
        return lits[0] if len(lits) == 1 else ["and"] + lits

    terms = [term(p) for p in paths]
    return terms[0] if len(terms) == 1 else ["or"] + terms


def dump_netlist_json(nl: Netlist) -> str:
    """Debug dump: keys, selector expressions in prefix form, adder shapes."""
    doc = {
        "stats": netlist_stats(nl),
        "keys": [
            {"id": k.id, "feature": k.feature, "threshold": k.threshold} for k in nl.keys
        ],
        "trees": [
            {
                "class": tl.class_index,
                "tree": tl.tree_index,
                "default": tl.default_value,
                "out_width": tl.out_width,
                "selectors": [
                    {"value": sel.value, "expr": _selector_expr(sel.paths)}
                    for sel in tl.selectors
                ],
            }
            for tl in nl.tree_logics
        ],
        "adders": [
            {
                "operand_maxes": list(at.operand_maxes),
                "bias": at.bias,
                "register_levels": list(at.register_levels),
                "levels": [
                    [
                        {"a": n.a, "b": n.b, "max": n.max_value, "width": n.width}
                        for n in lvl.nodes
                    ]
                    for lvl in at.levels
                ],
            }
            for at in nl.adder_trees
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
