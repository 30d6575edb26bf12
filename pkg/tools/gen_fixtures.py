#!/usr/bin/env python3
"""Regenerate the committed fixtures under tests/data/.

Trained fixtures use sklearn's GradientBoostingClassifier (init="zero", so
the raw decision function is exactly the learning-rate-scaled sum of tree
outputs) and are cross-checked against sklearn's own decision_function
before anything is written. The trained trees are serialized both through
the canonical schema and through an XGBoost-style save_model document so
the loader is exercised against frozen oracle margins.

sklearn splits send x <= t left; our trees send x < t left. On integer
inputs the two agree when fractional thresholds are kept and integral
thresholds t are replaced by t + 1.

Run from the repository root: python3 tools/gen_fixtures.py
"""
from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from sklearn.ensemble import GradientBoostingClassifier

import helpers
from gbdt2rtl import (
    DecisionTree,
    EmitOptions,
    FeatureQuantizer,
    GbdtEnsemble,
    PipelineConfig,
    TreeNode,
    build_netlist,
    dump_ensemble_json,
    emit,
    evaluate_dataset,
    integerize_thresholds,
    load_xgboost_model,
    predict_class_float,
    predict_margin,
    quantize_leaves,
)

DATA = ROOT / "tests" / "data"


def sklearn_tree_to_nodes(t, learning_rate: float) -> DecisionTree:
    """Convert one fitted DecisionTreeRegressor; same node index space."""
    nodes = []
    for i in range(t.tree_.node_count):
        left = int(t.tree_.children_left[i])
        right = int(t.tree_.children_right[i])
        if left == -1:
            nodes.append(TreeNode.leaf(float(t.tree_.value[i][0][0]) * learning_rate))
        else:
            thr = float(t.tree_.threshold[i])
            if thr == int(thr):  # x <= t over ints == x < t + 1
                thr = thr + 1.0
            nodes.append(TreeNode.internal(int(t.tree_.feature[i]), thr, left, right))
    return DecisionTree(tuple(nodes))


def convert_binary(clf, num_features: int) -> GbdtEnsemble:
    trees = tuple(
        sklearn_tree_to_nodes(clf.estimators_[m, 0], clf.learning_rate)
        for m in range(clf.n_estimators_)
    )
    return GbdtEnsemble("binary", 2, num_features, 0.0, trees)


def convert_multiclass(clf, num_features: int) -> GbdtEnsemble:
    n_cls = clf.n_classes_
    trees = []
    for m in range(clf.n_estimators_):
        for n in range(n_cls):
            trees.append(sklearn_tree_to_nodes(clf.estimators_[m, n], clf.learning_rate))
    return GbdtEnsemble("multiclass", n_cls, num_features, 0.0, tuple(trees))


def to_xgboost_json(ens: GbdtEnsemble, base_score: str) -> str:
    """Serialize through the XGBoost save_model JSON schema."""
    trees = []
    for tree in ens.trees:
        n = len(tree.nodes)
        left = [-1] * n
        right = [-1] * n
        feat = [0] * n
        cond = [0.0] * n
        parents = [2147483647] * n
        for i, node in enumerate(tree.nodes):
            if node.is_leaf:
                cond[i] = node.leaf_value
            else:
                left[i] = node.left
                right[i] = node.right
                feat[i] = node.feature
                cond[i] = node.threshold
                parents[node.left] = i
                parents[node.right] = i
        trees.append(
            {
                "base_weights": [cond[i] if tree.nodes[i].is_leaf else 0.0 for i in range(n)],
                "categories": [],
                "categories_nodes": [],
                "categories_segments": [],
                "categories_sizes": [],
                "default_left": [0] * n,
                "id": len(trees),
                "left_children": left,
                "loss_changes": [0.0] * n,
                "parents": parents,
                "right_children": right,
                "split_conditions": cond,
                "split_indices": feat,
                "split_type": [0] * n,
                "sum_hessian": [1.0] * n,
                "tree_param": {
                    "num_deleted": "0",
                    "num_feature": str(ens.num_features),
                    "num_nodes": str(n),
                    "size_leaf_vector": "1",
                },
            }
        )
    if ens.task == "binary":
        objective = {"name": "binary:logistic", "reg_loss_param": {"scale_pos_weight": "1"}}
        num_class = "0"
        tree_info = [0] * len(trees)
    else:
        objective = {
            "name": "multi:softmax",
            "softmax_multiclass_param": {"num_class": str(ens.num_classes)},
        }
        num_class = str(ens.num_classes)
        tree_info = [i % ens.num_classes for i in range(len(trees))]
    n_iter = len(trees) // (1 if ens.task == "binary" else ens.num_classes)
    per_iter = len(trees) // n_iter
    doc = {
        "learner": {
            "attributes": {},
            "feature_names": [],
            "feature_types": [],
            "gradient_booster": {
                "model": {
                    "gbtree_model_param": {
                        "num_parallel_tree": "1",
                        "num_trees": str(len(trees)),
                    },
                    "iteration_indptr": [i * per_iter for i in range(n_iter + 1)],
                    "tree_info": tree_info,
                    "trees": trees,
                },
                "name": "gbtree",
            },
            "learner_model_param": {
                "base_score": base_score,
                "boost_from_average": "1",
                "num_class": num_class,
                "num_feature": str(ens.num_features),
                "num_target": "1",
            },
            "objective": objective,
        },
        "version": [2, 0, 3],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def check_margins(ens: GbdtEnsemble, clf, inputs: np.ndarray) -> None:
    """The converted ensemble must reproduce sklearn's raw margins."""
    df = clf.decision_function(inputs)
    for i, row in enumerate(inputs):
        ours = predict_margin(ens, [float(v) for v in row])
        ref = [float(df[i])] if ens.task == "binary" else [float(v) for v in df[i]]
        for a, b in zip(ours, ref):
            assert abs(a - b) < 1e-9, f"margin mismatch at row {i}: {ours} vs {ref}"


def freeze_margins(ens: GbdtEnsemble, inputs: list[list[int]], path: Path) -> None:
    doc = {
        "inputs": inputs,
        "margins": [predict_margin(ens, x) for x in inputs],
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def gen_hand_fixtures() -> None:
    DATA.joinpath("fig_binary.json").write_text(dump_ensemble_json(helpers.binary_fixture()))
    DATA.joinpath("multiclass_hand.json").write_text(
        dump_ensemble_json(helpers.multiclass_fixture())
    )

    nl = build_netlist(helpers.binary_fixture_quantized(3, 4), PipelineConfig(1, 1, 0))
    files = emit(nl, EmitOptions(top_name="gbdt_top"))
    DATA.joinpath("golden_binary.v").write_text(files["gbdt_top.v"])

    nl = build_netlist(helpers.multiclass_fixture_quantized(3, 3), PipelineConfig(0, 1, 1))
    files = emit(nl, EmitOptions(top_name="mc_top"))
    DATA.joinpath("golden_multiclass.v").write_text(files["mc_top.v"])


def gen_synth_binary() -> None:
    rng = np.random.default_rng(20250819)
    n = 500
    y = rng.integers(0, 2, n)
    X = np.empty((n, 8))
    centers = np.array(
        [
            [0.0, 1.0, -0.5, 2.0, 0.0, 1.0, -1.0, 0.5],
            [1.2, -0.3, 0.8, 0.6, 1.5, 1.0, 0.2, -0.7],
        ]
    )
    for i in range(n):
        X[i] = centers[y[i]] + rng.normal(0.0, 1.0, 8)
    # two columns are pure noise
    X[:, 5] = rng.normal(0.0, 1.0, n)
    X[:, 7] = rng.normal(0.0, 1.0, n)

    rows = [",".join(f"{v:.6f}" for v in X[i]) + f",{y[i]}" for i in range(n)]
    DATA.joinpath("synth_train.csv").write_text("\n".join(rows) + "\n")

    fq = FeatureQuantizer.fit(X, 4)
    Xq = fq.transform_matrix(X)
    clf = GradientBoostingClassifier(
        n_estimators=8, max_depth=3, learning_rate=0.5, init="zero", random_state=0
    )
    clf.fit(Xq, y)
    ens = convert_binary(clf, 8)

    check_margins(ens, clf, Xq)
    rr = random.Random(99)
    probe = [[rr.randint(0, 15) for _ in range(8)] for _ in range(100)]
    check_margins(ens, clf, np.array(probe))

    xgb_text = to_xgboost_json(ens, base_score="5E-1")  # logit(0.5) == 0
    DATA.joinpath("synth_model.json").write_text(xgb_text)
    loaded = load_xgboost_model(xgb_text)
    assert loaded.f0 == 0.0 and len(loaded.trees) == len(ens.trees)
    check_margins(loaded, clf, Xq)
    freeze_margins(loaded, probe, DATA / "synth_model_margins.json")

    ens_int = integerize_thresholds(loaded)
    float_correct = sum(
        predict_class_float(ens_int, [float(v) for v in Xq[i]]) == y[i] for i in range(n)
    )
    q = quantize_leaves(ens_int, 3, 4)
    report = evaluate_dataset(q, fq, X, y.astype(float))
    meta = {
        "num_rows": n,
        "num_features": 8,
        "w_feature": 4,
        "w_tree": 3,
        "float_accuracy": float_correct / n,
        "quantized_accuracy": report.accuracy,
    }
    assert abs(meta["float_accuracy"] - meta["quantized_accuracy"]) <= 0.03, meta
    DATA.joinpath("synth_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print("synth binary:", meta)


def gen_toy_multiclass() -> None:
    rng = np.random.default_rng(7)
    per = 40
    centers = np.array(
        [
            [1.0, 5.0, 2.0, 6.0],
            [5.0, 1.0, 6.0, 2.0],
            [6.0, 6.0, 1.0, 1.0],
        ]
    )
    X = np.vstack([centers[k] + rng.normal(0.0, 1.4, (per, 4)) for k in range(3)])
    y = np.repeat([0, 1, 2], per)
    fq = FeatureQuantizer.fit(X, 3)
    Xq = fq.transform_matrix(X)
    clf = GradientBoostingClassifier(
        n_estimators=2, max_depth=2, learning_rate=1.0, init="zero", random_state=1
    )
    clf.fit(Xq, y)
    ens = convert_multiclass(clf, 4)
    check_margins(ens, clf, Xq)
    rr = random.Random(5)
    probe = [[rr.randint(0, 7) for _ in range(4)] for _ in range(100)]
    check_margins(ens, clf, np.array(probe))

    xgb_text = to_xgboost_json(ens, base_score="0E0")
    DATA.joinpath("xgb_multiclass.json").write_text(xgb_text)
    loaded = load_xgboost_model(xgb_text)
    assert loaded.task == "multiclass" and loaded.num_classes == 3
    check_margins(loaded, clf, Xq)
    freeze_margins(loaded, probe, DATA / "xgb_multiclass_margins.json")
    print("toy multiclass: trees =", len(loaded.trees))


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    gen_hand_fixtures()
    gen_synth_binary()
    gen_toy_multiclass()
    print("fixtures written to", DATA)


if __name__ == "__main__":
    main()
