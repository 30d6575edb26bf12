"""Leaf-score quantization into unsigned integers plus an integer bias.

Every tree's leaves are shifted so their minimum is exactly zero, one global
scale maps the largest shifted leaf onto 2^w_tree - 1, and the shifted sum
of minimums (plus the model prior f0) folds into a bias term: one integer
for binary models, one per class for multiclass. Multiclass biases are then
shifted by a common constant so none is negative, which leaves the argmax
unchanged.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import ConfigError, ValidationError
from .model import LEAF, TASK_BINARY, TASK_MULTICLASS, GbdtEnsemble

MAX_TREE_BITS = 16


def round_half_away(z: float) -> int:
    """Nearest integer, halves resolved away from zero (2.5 -> 3, -2.5 -> -3)."""
    if not math.isfinite(z):
        raise ValidationError(f"cannot round non-finite value {z!r}")
    if z >= 0.0:
        return int(math.floor(z + 0.5))
    return int(math.ceil(z - 0.5))


@dataclass(frozen=True)
class QuantNode:
    """Integer-domain tree node; thresholds and leaf values are ints."""

    feature: int | None = None
    threshold: int | None = None
    left: int = LEAF
    right: int = LEAF
    value: int | None = None

    @staticmethod
    def internal(feature: int, threshold: int, left: int, right: int) -> "QuantNode":
        return QuantNode(feature=feature, threshold=threshold, left=left, right=right)

    @staticmethod
    def leaf(value: int) -> "QuantNode":
        return QuantNode(value=value)

    @property
    def is_leaf(self) -> bool:
        return self.value is not None


@dataclass(frozen=True)
class QuantTree:
    nodes: tuple[QuantNode, ...]
    width: int  # bits needed for the largest leaf value

    def leaf_values(self) -> list[int]:
        return [n.value for n in self.nodes if n.is_leaf]


@dataclass(frozen=True)
class QuantizedEnsemble:
    task: str
    num_classes: int
    num_features: int
    w_feature: int
    w_tree: int
    trees: tuple[QuantTree, ...]
    biases: tuple[int, ...]  # one entry for binary, num_classes for multiclass
    scale: float  # kept for audit; inference never touches floats
    bias_shift: int = 0  # constant added to multiclass biases after rounding

    @property
    def trees_per_class(self) -> int:
        if self.task == TASK_BINARY:
            return len(self.trees)
        return len(self.trees) // self.num_classes

    @property
    def tree_widths(self) -> tuple[int, ...]:
        return tuple(t.width for t in self.trees)

    def trees_for_class(self, n: int) -> tuple[QuantTree, ...]:
        if self.task == TASK_BINARY:
            raise ValidationError("binary ensembles have no per-class tree split")
        return self.trees[n :: self.num_classes]


def _check_bits(w_tree: int, w_feature: int) -> None:
    if not 1 <= w_tree <= MAX_TREE_BITS:
        raise ConfigError(f"w_tree must be in [1, {MAX_TREE_BITS}], got {w_tree}")
    if not 1 <= w_feature <= 16:
        raise ConfigError(f"w_feature must be in [1, 16], got {w_feature}")


def _quantize_tree(tree, min_leaf: float, scale: float) -> QuantTree:
    nodes = []
    vmax = 0
    for i, node in enumerate(tree.nodes):
        if node.is_leaf:
            qv = round_half_away((node.leaf_value - min_leaf) * scale)
            vmax = max(vmax, qv)
            nodes.append(QuantNode.leaf(qv))
        else:
            t = node.threshold
            if not math.isfinite(t) or t != math.ceil(t):
                raise ValidationError(
                    f"node {i}: threshold {t!r} is not an integer; "
                    "integerize thresholds before quantizing leaves"
                )
            nodes.append(QuantNode.internal(node.feature, int(t), node.left, node.right))
    return QuantTree(tuple(nodes), width=max(1, vmax.bit_length()))


def _mins_and_span(ens: GbdtEnsemble) -> tuple[list[float], float]:
    mins = []
    gmax = 0.0
    for tree in ens.trees:
        vals = tree.leaf_values()
        mn = min(vals)
        mins.append(mn)
        gmax = max(gmax, max(vals) - mn)
    return mins, gmax


def quantize_binary(ens: GbdtEnsemble, w_tree: int, w_feature: int) -> QuantizedEnsemble:
    """Quantize a binary ensemble; the single bias makes QF = bias + sum(tree
    scores) sign-equivalent to the scaled float margin up to rounding."""
    if ens.task != TASK_BINARY:
        raise ValidationError("quantize_binary requires a binary ensemble")
    _check_bits(w_tree, w_feature)
    top = (1 << w_tree) - 1
    if ens.trees:
        mins, gmax = _mins_and_span(ens)
    else:
        mins, gmax = [], 0.0
    scale = top / gmax if gmax > 0.0 else 1.0
    qtrees = tuple(_quantize_tree(t, mn, scale) for t, mn in zip(ens.trees, mins))
    bias = round_half_away((ens.f0 + sum(mins)) * scale)
    return QuantizedEnsemble(
        task=TASK_BINARY,
        num_classes=2,
        num_features=ens.num_features,
        w_feature=w_feature,
        w_tree=w_tree,
        trees=qtrees,
        biases=(bias,),
        scale=scale,
    )


def quantize_multiclass(ens: GbdtEnsemble, w_tree: int, w_feature: int) -> QuantizedEnsemble:
    """Quantize a multiclass ensemble with a single global scale and one
    bias per class, positivized after rounding."""
    if ens.task != TASK_MULTICLASS:
        raise ValidationError("quantize_multiclass requires a multiclass ensemble")
    _check_bits(w_tree, w_feature)
    if not ens.trees:
        raise ValidationError("multiclass ensemble has no trees")
    top = (1 << w_tree) - 1
    mins, gmax = _mins_and_span(ens)
    scale = top / gmax if gmax > 0.0 else 1.0
    qtrees = tuple(_quantize_tree(t, mn, scale) for t, mn in zip(ens.trees, mins))
    n_cls = ens.num_classes
    m_per = len(ens.trees) // n_cls
    biases = [
        round_half_away((ens.f0 + sum(mins[m * n_cls + n] for m in range(m_per))) * scale)
        for n in range(n_cls)
    ]
    shift = max(0, -min(biases))
    biases = tuple(b + shift for b in biases)
    return QuantizedEnsemble(
        task=TASK_MULTICLASS,
        num_classes=n_cls,
        num_features=ens.num_features,
        w_feature=w_feature,
        w_tree=w_tree,
        trees=qtrees,
        biases=biases,
        scale=scale,
        bias_shift=shift,
    )


def quantize_leaves(ens: GbdtEnsemble, w_tree: int, w_feature: int) -> QuantizedEnsemble:
    if ens.task == TASK_BINARY:
        return quantize_binary(ens, w_tree, w_feature)
    return quantize_multiclass(ens, w_tree, w_feature)


def evaluate_quant_tree(tree: QuantTree, qx) -> int:
    """Walk one quantized tree over integer inputs."""
    node = tree.nodes[0]
    while not node.is_leaf:
        node = tree.nodes[node.left if qx[node.feature] < node.threshold else node.right]
    return node.value


def dump_quantized_json(q: QuantizedEnsemble) -> str:
    def node_dict(n: QuantNode):
        if n.is_leaf:
            return {"v": n.value}
        return {"f": n.feature, "t": n.threshold, "l": n.left, "r": n.right}

    doc = {
        "task": q.task,
        "num_classes": q.num_classes,
        "num_features": q.num_features,
        "w_feature": q.w_feature,
        "w_tree": q.w_tree,
        "biases": list(q.biases),
        "scale": q.scale,
        "bias_shift": q.bias_shift,
        "tree_widths": list(q.tree_widths),
        "trees": [{"nodes": [node_dict(n) for n in t.nodes]} for t in q.trees],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_quantized_json(text: str) -> QuantizedEnsemble:
    try:
        doc = json.loads(text)
        trees = []
        for t in doc["trees"]:
            nodes = []
            vmax = 0
            for n in t["nodes"]:
                if "v" in n:
                    v = int(n["v"])
                    vmax = max(vmax, v)
                    nodes.append(QuantNode.leaf(v))
                else:
                    nodes.append(
                        QuantNode.internal(int(n["f"]), int(n["t"]), int(n["l"]), int(n["r"]))
                    )
            trees.append(QuantTree(tuple(nodes), width=max(1, vmax.bit_length())))
        return QuantizedEnsemble(
            task=str(doc["task"]),
            num_classes=int(doc["num_classes"]),
            num_features=int(doc["num_features"]),
            w_feature=int(doc["w_feature"]),
            w_tree=int(doc["w_tree"]),
            trees=tuple(trees),
            biases=tuple(int(b) for b in doc["biases"]),
            scale=float(doc["scale"]),
            bias_shift=int(doc.get("bias_shift", 0)),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad quantized-ensemble document: {exc}") from exc
