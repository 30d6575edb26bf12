"""Shared fixture builders and small oracles used across the test suite."""
from __future__ import annotations

import random
from pathlib import Path

from gbdt2rtl import (
    DecisionTree,
    GbdtEnsemble,
    TreeNode,
    integerize_thresholds,
    quantize_leaves,
)

DATA_DIR = Path(__file__).parent / "data"


# ---------------------------------------------------------------------------
# Hand-built binary fixture: two depth-2 trees over five 4-bit features.
# Input [2, 15, 4, 1, 5] lands on leaves -0.7 and -0.4 (margin -1.1), and
# quantization at w_tree=3 gives bias -5, tree scores {7,2,3,0} / {3,6,0,4}.


def fig_tree_1() -> DecisionTree:
    return DecisionTree(
        (
            TreeNode.internal(1, 10.0, 1, 2),
            TreeNode.internal(2, 3.0, 3, 4),
            TreeNode.internal(0, 1.0, 5, 6),
            TreeNode.leaf(2.0),
            TreeNode.leaf(-0.1),
            TreeNode.leaf(0.5),
            TreeNode.leaf(-0.7),
        )
    )


def fig_tree_2() -> DecisionTree:
    return DecisionTree(
        (
            TreeNode.internal(3, 2.0, 1, 2),
            TreeNode.internal(0, 4.0, 3, 4),
            TreeNode.internal(2, 3.0, 5, 6),
            TreeNode.leaf(-0.4),
            TreeNode.leaf(0.8),
            TreeNode.leaf(-1.4),
            TreeNode.leaf(0.0),
        )
    )


def binary_fixture() -> GbdtEnsemble:
    return GbdtEnsemble("binary", 2, 5, 0.0, (fig_tree_1(), fig_tree_2()))


def binary_fixture_quantized(w_tree: int = 3, w_feature: int = 4):
    return quantize_leaves(integerize_thresholds(binary_fixture()), w_tree, w_feature)


# ---------------------------------------------------------------------------
# Hand-built multiclass fixture: N=3 classes, M=2 stumps each, f0=0.5,
# chosen so the global scale is exactly 2.0, three leaves land on .5 ties,
# one leaf saturates at 7, and the rounded biases (0,-1,-1) positivize by 1.


def _stump(feature: int, threshold: float, left_val: float, right_val: float) -> DecisionTree:
    return DecisionTree(
        (
            TreeNode.internal(feature, threshold, 1, 2),
            TreeNode.leaf(left_val),
            TreeNode.leaf(right_val),
        )
    )


def multiclass_fixture() -> GbdtEnsemble:
    trees = (
        _stump(0, 3.0, -0.75, 1.0),   # class 0, tree 0
        _stump(1, 5.0, 1.25, -1.0),   # class 1, tree 0
        _stump(2, 2.0, -0.5, -0.25),  # class 2, tree 0
        _stump(3, 4.0, 0.25, 2.75),   # class 0, tree 1
        _stump(0, 3.0, 0.0, 2.0),     # class 1, tree 1 (shares a key with c0t0)
        _stump(1, 6.0, 3.0, -0.5),    # class 2, tree 1
    )
    return GbdtEnsemble("multiclass", 3, 4, 0.5, trees)


def multiclass_fixture_quantized(w_tree: int = 3, w_feature: int = 3):
    return quantize_leaves(integerize_thresholds(multiclass_fixture()), w_tree, w_feature)


# ---------------------------------------------------------------------------
# Random model generation


def random_tree(rng: random.Random, num_features: int, max_depth: int, top: int) -> DecisionTree:
    nodes: list[TreeNode | None] = []

    def grow(depth_left: int) -> int:
        idx = len(nodes)
        nodes.append(None)
        if depth_left == 0 or rng.random() < 0.3:
            nodes[idx] = TreeNode.leaf(rng.uniform(-2.0, 2.0))
            return idx
        feature = rng.randrange(num_features)
        # Thresholds straddle the input range so some comparisons fold to
        # constants; mix integral and fractional values.
        threshold = rng.uniform(-1.5, top + 2.5)
        if rng.random() < 0.5:
            threshold = float(int(threshold))
        left = grow(depth_left - 1)
        right = grow(depth_left - 1)
        nodes[idx] = TreeNode.internal(feature, threshold, left, right)
        return idx

    grow(max_depth)
    return DecisionTree(tuple(nodes))


def random_ensemble(
    rng: random.Random,
    task: str,
    *,
    num_classes: int = 2,
    trees_per_class: int = 4,
    num_features: int = 4,
    max_depth: int = 4,
    w_feature: int = 4,
) -> GbdtEnsemble:
    top = (1 << w_feature) - 1
    count = trees_per_class if task == "binary" else trees_per_class * num_classes
    trees = tuple(random_tree(rng, num_features, max_depth, top) for _ in range(count))
    f0 = rng.uniform(-1.0, 1.0)
    return GbdtEnsemble(task, 2 if task == "binary" else num_classes, num_features, f0, trees)


def random_inputs(rng: random.Random, num_features: int, w_feature: int, count: int) -> list[list[int]]:
    top = (1 << w_feature) - 1
    return [[rng.randint(0, top) for _ in range(num_features)] for _ in range(count)]


# ---------------------------------------------------------------------------
# Independent oracle: walk a quantized tree under explicit key outcomes.


def traverse_with_keys(tree, keymap, kbits) -> int:
    """Follow a quantized tree taking directions from key bits (or constant
    bindings), without going through the selector logic."""
    i = 0
    node = tree.nodes[0]
    while not node.is_leaf:
        bind = keymap[i]
        go_left = bind if isinstance(bind, bool) else kbits[bind]
        i = node.left if go_left else node.right
        node = tree.nodes[i]
    return node.value
