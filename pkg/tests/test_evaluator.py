"""Quantized inference over datasets: predictions, accuracy, confusion."""
import json
import random

import pytest

from gbdt2rtl import (
    ContractViolation,
    DataError,
    FeatureQuantizer,
    evaluate_dataset,
    integerize_thresholds,
    predict_quantized,
    quantize_leaves,
)

from helpers import (
    binary_fixture_quantized,
    multiclass_fixture_quantized,
    random_ensemble,
    random_inputs,
)


def test_predict_binary_golden():
    q = binary_fixture_quantized()
    assert predict_quantized(q, [2, 15, 4, 1, 5]) == (0, [-2])
    assert predict_quantized(q, [0, 0, 0, 0, 0]) == (1, [5])


def test_predict_multiclass_golden():
    q = multiclass_fixture_quantized()
    assert predict_quantized(q, [2, 5, 1, 4]) == (2, [6, 0, 7])


def test_predict_argmax_tie_resolves_low():
    rng = random.Random(41)
    from gbdt2rtl.model import with_trees

    base = random_ensemble(rng, "multiclass", num_classes=2, trees_per_class=2)
    trees = (base.trees[0], base.trees[0], base.trees[2], base.trees[2])
    q = quantize_leaves(integerize_thresholds(with_trees(base, trees)), 3, 4)
    for x in random_inputs(rng, 4, 4, 25):
        cls, scores = predict_quantized(q, x)
        assert scores[0] == scores[1]
        assert cls == 0


def test_predict_input_contract():
    q = binary_fixture_quantized()
    with pytest.raises(ContractViolation):
        predict_quantized(q, [1, 2, 3])
    with pytest.raises(ContractViolation):
        predict_quantized(q, [0, 0, 0, 0, 16])


def test_evaluate_dataset_with_labels():
    q = binary_fixture_quantized()
    fq = FeatureQuantizer(4, (0.0,) * 5, (15.0,) * 5)
    data = [[2, 15, 4, 1, 5], [0, 0, 0, 0, 0], [0, 0, 0, 0, 0]]
    report = evaluate_dataset(q, fq, data, labels=[0, 1, 0])
    assert report.num_samples == 3
    assert report.predictions == [0, 1, 1]
    assert report.scores == [[-2], [5], [5]]
    assert report.accuracy == pytest.approx(2 / 3)
    assert report.confusion == [[1, 1], [0, 1]]
    doc = json.loads(report.to_json())
    assert doc["predictions"] == [0, 1, 1]
    table = report.format_table()
    assert "accuracy: 0.6667" in table
    assert "confusion" in table


def test_evaluate_dataset_without_labels():
    q = multiclass_fixture_quantized()
    fq = FeatureQuantizer(3, (0.0,) * 4, (7.0,) * 4)
    report = evaluate_dataset(q, fq, [[2, 5, 1, 4]])
    assert report.accuracy is None
    assert report.confusion is None
    assert report.predictions == [2]
    assert "predicted class 2: 1" in report.format_table()


def test_evaluate_dataset_quantizes_raw_floats():
    # Raw values outside the fitted range clamp onto the grid first.
    q = binary_fixture_quantized()
    fq = FeatureQuantizer(4, (0.0,) * 5, (15.0,) * 5)
    report = evaluate_dataset(q, fq, [[-10.0, 99.0, 4.2, 1.0, 5.0]])
    cls, _ = predict_quantized(q, [0, 15, 4, 1, 5])
    assert report.predictions == [cls]


def test_evaluate_dataset_errors():
    q = binary_fixture_quantized()
    fq3 = FeatureQuantizer(4, (0.0,) * 3, (1.0,) * 3)
    with pytest.raises(DataError, match="covers 3 features"):
        evaluate_dataset(q, fq3, [[0.0, 0.0, 0.0]])
    fq_w = FeatureQuantizer(5, (0.0,) * 5, (1.0,) * 5)
    with pytest.raises(DataError, match="width 5"):
        evaluate_dataset(q, fq_w, [[0.0] * 5])
    fq = FeatureQuantizer(4, (0.0,) * 5, (15.0,) * 5)
    with pytest.raises(DataError, match="2 labels for 1 rows"):
        evaluate_dataset(q, fq, [[0.0] * 5], labels=[0, 1])
    with pytest.raises(DataError, match="row 0: label 0.5"):
        evaluate_dataset(q, fq, [[0.0] * 5], labels=[0.5])
    with pytest.raises(DataError, match=r"label 2 outside \[0, 2\)"):
        evaluate_dataset(q, fq, [[0.0] * 5], labels=[2])


def test_evaluator_agrees_with_netlist():
    from gbdt2rtl import PipelineConfig, build_netlist, interpret_netlist

    rng = random.Random(42)
    for task in ("binary", "multiclass"):
        ens = random_ensemble(rng, task, num_classes=3, trees_per_class=4)
        q = quantize_leaves(integerize_thresholds(ens), 4, 4)
        nl = build_netlist(q, PipelineConfig())
        for x in random_inputs(rng, 4, 4, 60):
            cls, scores = predict_quantized(q, x)
            got = interpret_netlist(nl, x)
            if task == "binary":
                assert got == cls
            else:
                assert got == tuple(scores)
                assert max(range(3), key=lambda n: (got[n], -n)) == cls
