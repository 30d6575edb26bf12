"""Canonical in-memory form of a trained GBDT classifier plus float inference.

An ensemble is a flat tuple of decision trees. Binary models carry M trees
voting for class 1. Multiclass models carry N*M trees laid out round-robin
(tree m of class n sits at flat index m*N + n), matching the emission order
of the common boosting libraries.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

from .errors import ModelParseError, ValidationError

LEAF = -1

TASK_BINARY = "binary"
TASK_MULTICLASS = "multiclass"


@dataclass(frozen=True)
class TreeNode:
    """One node of a decision tree: an internal split or a leaf.

    Internal nodes branch left when x[feature] < threshold. Exactly one of
    the two shapes is populated; use the factory methods.
    """

    feature: int | None = None
    threshold: float | None = None
    left: int = LEAF
    right: int = LEAF
    leaf_value: float | None = None

    @staticmethod
    def internal(feature: int, threshold: float, left: int, right: int) -> "TreeNode":
        return TreeNode(feature=feature, threshold=threshold, left=left, right=right)

    @staticmethod
    def leaf(value: float) -> "TreeNode":
        return TreeNode(leaf_value=value)

    @property
    def is_leaf(self) -> bool:
        return self.leaf_value is not None


@dataclass(frozen=True)
class DecisionTree:
    """Node array rooted at index 0."""

    nodes: tuple[TreeNode, ...]

    def leaf_values(self) -> list[float]:
        return [n.leaf_value for n in self.nodes if n.is_leaf]

    def depth(self) -> int:
        def walk(i: int) -> int:
            node = self.nodes[i]
            if node.is_leaf:
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(0)


@dataclass(frozen=True)
class GbdtEnsemble:
    task: str
    num_classes: int
    num_features: int
    f0: float
    trees: tuple[DecisionTree, ...]
    # Provenance notes from the loader; irrelevant to equality.
    load_report: Mapping[str, Any] | None = field(default=None, compare=False, repr=False)

    @property
    def trees_per_class(self) -> int:
        if self.task == TASK_BINARY:
            return len(self.trees)
        return len(self.trees) // self.num_classes

    def trees_for_class(self, n: int) -> tuple[DecisionTree, ...]:
        """Trees voting for class n under the round-robin layout."""
        if self.task == TASK_BINARY:
            raise ValidationError("binary ensembles have no per-class tree split")
        if not 0 <= n < self.num_classes:
            raise ValidationError(f"class index {n} out of range")
        return self.trees[n :: self.num_classes]


def _validate_tree(tree: DecisionTree, num_features: int, label: str) -> None:
    nodes = tree.nodes
    if not nodes:
        raise ValidationError(f"{label}: empty node array")
    seen: set[int] = set()
    stack = [0]
    while stack:
        i = stack.pop()
        if not 0 <= i < len(nodes):
            raise ValidationError(f"{label}: child index {i} out of range")
        if i in seen:
            raise ValidationError(f"{label}: node {i} has more than one parent")
        seen.add(i)
        node = nodes[i]
        if node.is_leaf:
            if node.feature is not None or node.left != LEAF or node.right != LEAF:
                raise ValidationError(f"{label}: node {i} is both leaf and split")
            if not math.isfinite(node.leaf_value):
                raise ValidationError(f"{label}: node {i} has non-finite leaf value")
            continue
        if node.feature is None or node.threshold is None:
            raise ValidationError(f"{label}: node {i} is missing split fields")
        if not 0 <= node.feature < num_features:
            raise ValidationError(
                f"{label}: node {i} references feature {node.feature} "
                f"but the model declares {num_features} features"
            )
        if not math.isfinite(node.threshold):
            raise ValidationError(f"{label}: node {i} has non-finite threshold")
        stack.append(node.right)
        stack.append(node.left)
    if len(seen) != len(nodes):
        raise ValidationError(f"{label}: {len(nodes) - len(seen)} node(s) unreachable from the root")


def validate_ensemble(ens: GbdtEnsemble) -> None:
    """Structural checks; raises ValidationError on the first violation."""
    if ens.task not in (TASK_BINARY, TASK_MULTICLASS):
        raise ValidationError(f"unknown task {ens.task!r}")
    if ens.task == TASK_BINARY and ens.num_classes != 2:
        raise ValidationError("binary task requires num_classes == 2")
    if ens.task == TASK_MULTICLASS and ens.num_classes < 2:
        raise ValidationError("multiclass task requires num_classes >= 2")
    if ens.num_features < 1:
        raise ValidationError("num_features must be at least 1")
    if not math.isfinite(ens.f0):
        raise ValidationError("f0 must be finite")
    if ens.task == TASK_MULTICLASS and len(ens.trees) % ens.num_classes != 0:
        raise ValidationError(
            f"{len(ens.trees)} trees cannot be split evenly across {ens.num_classes} classes"
        )
    for i, tree in enumerate(ens.trees):
        _validate_tree(tree, ens.num_features, f"tree {i}")


def evaluate_tree(tree: DecisionTree, x: Sequence[float]) -> float:
    """Walk one tree; branch left when x[feature] < threshold."""
    node = tree.nodes[0]
    while not node.is_leaf:
        node = tree.nodes[node.left if x[node.feature] < node.threshold else node.right]
    return node.leaf_value


def predict_margin(ens: GbdtEnsemble, x: Sequence[float]) -> list[float]:
    """Raw additive score per class: f0 plus the class's tree outputs.

    Binary models return a single-entry list.
    """
    if len(x) != ens.num_features:
        raise ValidationError(f"expected {ens.num_features} features, got {len(x)}")
    if ens.task == TASK_BINARY:
        return [ens.f0 + sum(evaluate_tree(t, x) for t in ens.trees)]
    return [
        ens.f0 + sum(evaluate_tree(t, x) for t in ens.trees_for_class(n))
        for n in range(ens.num_classes)
    ]


def predict_class_float(ens: GbdtEnsemble, x: Sequence[float]) -> int:
    """Decision rule over float margins: sign for binary, argmax otherwise.

    Ties resolve to the smallest class index.
    """
    margins = predict_margin(ens, x)
    if ens.task == TASK_BINARY:
        return 1 if margins[0] >= 0.0 else 0
    best = 0
    for n in range(1, len(margins)):
        if margins[n] > margins[best]:
            best = n
    return best


def _parse_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"malformed JSON at byte {exc.pos}: {exc.msg}") from exc


def _node_to_dict(node: TreeNode) -> dict[str, Any]:
    if node.is_leaf:
        return {"v": node.leaf_value}
    return {"f": node.feature, "t": node.threshold, "l": node.left, "r": node.right}


def _node_from_dict(d: Mapping[str, Any], label: str) -> TreeNode:
    if "v" in d:
        return TreeNode.leaf(float(d["v"]))
    try:
        return TreeNode.internal(int(d["f"]), float(d["t"]), int(d["l"]), int(d["r"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{label}: bad node record {d!r}") from exc


def dump_ensemble_json(ens: GbdtEnsemble) -> str:
    doc = {
        "task": ens.task,
        "num_classes": ens.num_classes,
        "num_features": ens.num_features,
        "f0": ens.f0,
        "trees": [{"nodes": [_node_to_dict(n) for n in t.nodes]} for t in ens.trees],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_ensemble_json(text: str) -> GbdtEnsemble:
    """Parse the canonical ensemble schema and validate it."""
    doc = _parse_json(text)
    if not isinstance(doc, dict) or "task" not in doc:
        raise ModelParseError("not an ensemble document (missing 'task')")
    try:
        trees = tuple(
            DecisionTree(
                tuple(_node_from_dict(n, f"tree {i}") for n in t["nodes"])
            )
            for i, t in enumerate(doc["trees"])
        )
        ens = GbdtEnsemble(
            task=str(doc["task"]),
            num_classes=int(doc["num_classes"]),
            num_features=int(doc["num_features"]),
            f0=float(doc["f0"]),
            trees=trees,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad ensemble document: {exc}") from exc
    validate_ensemble(ens)
    return ens


def _xgb_tree(tj: Mapping[str, Any], num_features: int, tree_no: int) -> DecisionTree:
    try:
        left = tj["left_children"]
        right = tj["right_children"]
        feat = tj["split_indices"]
        cond = tj["split_conditions"]
    except KeyError as exc:
        raise ValidationError(f"tree {tree_no}: missing array {exc}") from exc
    n = len(left)
    if not (len(right) == len(feat) == len(cond) == n):
        raise ValidationError(f"tree {tree_no}: node arrays disagree on length")
    nodes = []
    for i in range(n):
        if left[i] == -1 and right[i] == -1:
            # In this schema family the leaf value shares node storage with
            # the split condition.
            nodes.append(TreeNode.leaf(float(cond[i])))
        else:
            f = int(feat[i])
            if not 0 <= f < num_features:
                raise ValidationError(
                    f"tree {tree_no}: node {i} references feature {f} "
                    f"but the model declares {num_features} features"
                )
            nodes.append(TreeNode.internal(f, float(cond[i]), int(left[i]), int(right[i])))
    return DecisionTree(tuple(nodes))


def load_xgboost_model(text: str) -> GbdtEnsemble:
    """Load an XGBoost save_model JSON document.

    Supported: gbtree boosters with binary:logistic, multi:softmax, or
    multi:softprob objectives. base_score is interpreted as a probability
    (and mapped through the logit) for binary models when it lies in (0, 1),
    and taken as a raw margin otherwise. The interpretation is recorded in
    the returned ensemble's load_report.
    """
    doc = _parse_json(text)
    if not isinstance(doc, dict) or "learner" not in doc:
        raise ModelParseError("not an XGBoost model document (missing 'learner')")
    learner = doc["learner"]
    try:
        booster = learner["gradient_booster"]
        booster_name = booster.get("name", "gbtree")
        objective = learner["objective"]["name"]
        lmp = learner["learner_model_param"]
        base_score = float(lmp["base_score"])
        num_features = int(lmp["num_feature"])
        num_class = int(lmp.get("num_class", "0"))
        trees_json = booster["model"]["trees"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad XGBoost document: {exc}") from exc

    if booster_name != "gbtree":
        raise ValidationError(f"unsupported booster: {booster_name}")
    if objective == "binary:logistic":
        task, num_classes = TASK_BINARY, 2
    elif objective in ("multi:softmax", "multi:softprob"):
        task, num_classes = TASK_MULTICLASS, num_class
        if num_class < 2:
            raise ValidationError(f"multiclass objective with num_class={num_class}")
    else:
        raise ValidationError(f"unsupported objective: {objective}")

    trees = tuple(_xgb_tree(tj, num_features, i) for i, tj in enumerate(trees_json))
    for tj in trees_json:
        tj.get("default_left")  # parsed but ignored: inputs are never missing
    tree_info = booster["model"].get("tree_info")
    if task == TASK_MULTICLASS and tree_info:
        # Tree i votes for class i mod N (round-robin); reject other layouts.
        for i, cls in enumerate(tree_info):
            if int(cls) != i % num_classes:
                raise ValidationError(
                    f"tree_info assigns tree {i} to class {cls}, "
                    f"expected round-robin class {i % num_classes}"
                )

    if task == TASK_BINARY and 0.0 < base_score < 1.0:
        f0 = math.log(base_score / (1.0 - base_score))
        space = "probability"
    else:
        f0 = base_score
        space = "margin"

    report = {
        "objective": objective,
        "base_score": base_score,
        "base_score_space": space,
        "f0": f0,
        "num_trees": len(trees),
        "class_tree_layout": "round_robin",
        "leaf_value_source": "split_conditions",
    }
    ens = GbdtEnsemble(
        task=task,
        num_classes=num_classes,
        num_features=num_features,
        f0=f0,
        trees=trees,
        load_report=report,
    )
    validate_ensemble(ens)
    return ens


def with_trees(ens: GbdtEnsemble, trees: Sequence[DecisionTree]) -> GbdtEnsemble:
    return replace(ens, trees=tuple(trees))
