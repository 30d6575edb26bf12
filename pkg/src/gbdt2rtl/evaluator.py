"""Bit-exact quantized inference and dataset-level accuracy reporting.

predict_quantized is the integer reference the hardware must match: plain
Python integer sums, no saturation, no floats.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .errors import ContractViolation, DataError
from .features import FeatureQuantizer
from .leaves import QuantizedEnsemble, evaluate_quant_tree
from .model import TASK_BINARY


def predict_quantized(q: QuantizedEnsemble, qx: Sequence[int]) -> tuple[int, list[int]]:
    """Integer inference over already-quantized inputs.

    Returns (predicted class, per-class accumulated scores). Binary models
    return one score QF = bias + sum(tree scores), class 1 iff QF >= 0;
    multiclass returns argmax with ties to the smaller index.
    """
    if len(qx) != q.num_features:
        raise ContractViolation(f"expected {q.num_features} inputs, got {len(qx)}")
    top = (1 << q.w_feature) - 1
    for i, v in enumerate(qx):
        if not 0 <= int(v) <= top:
            raise ContractViolation(f"input {i} = {v} outside [0, {top}]")
    if q.task == TASK_BINARY:
        qf = q.biases[0] + sum(evaluate_quant_tree(t, qx) for t in q.trees)
        return (1 if qf >= 0 else 0, [qf])
    scores = [
        q.biases[n] + sum(evaluate_quant_tree(t, qx) for t in q.trees_for_class(n))
        for n in range(q.num_classes)
    ]
    best = 0
    for n in range(1, len(scores)):
        if scores[n] > scores[best]:
            best = n
    return (best, scores)


@dataclass
class PredictionReport:
    num_samples: int
    predictions: list[int]
    scores: list[list[int]]
    accuracy: float | None
    confusion: list[list[int]] | None  # confusion[true][pred], only with labels

    def to_json(self) -> str:
        doc = {
            "num_samples": self.num_samples,
            "predictions": self.predictions,
            "scores": self.scores,
            "accuracy": self.accuracy,
            "confusion": self.confusion,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def format_table(self) -> str:
        lines = [f"samples: {self.num_samples}"]
        if self.accuracy is not None:
            lines.append(f"accuracy: {self.accuracy:.4f}")
            lines.append("confusion (rows true, cols predicted):")
            for row in self.confusion:
                lines.append("  " + " ".join(f"{c:6d}" for c in row))
        else:
            counts: dict[int, int] = {}
            for p in self.predictions:
                counts[p] = counts.get(p, 0) + 1
            for cls in sorted(counts):
                lines.append(f"predicted class {cls}: {counts[cls]}")
        return "\n".join(lines) + "\n"


def evaluate_dataset(
    q: QuantizedEnsemble,
    quantizer: FeatureQuantizer,
    data,
    labels: Sequence[float] | None = None,
) -> PredictionReport:
    """Quantize raw float rows and run integer inference over them."""
    if quantizer.num_features != q.num_features:
        raise DataError(
            f"quantizer covers {quantizer.num_features} features, "
            f"model expects {q.num_features}"
        )
    if quantizer.w_feature != q.w_feature:
        raise DataError(
            f"quantizer width {quantizer.w_feature} != model w_feature {q.w_feature}"
        )
    qmat = quantizer.transform_matrix(data)

    label_ints: list[int] | None = None
    if labels is not None:
        if len(labels) != len(qmat):
            raise DataError(f"{len(labels)} labels for {len(qmat)} rows")
        label_ints = []
        for i, lab in enumerate(labels):
            f = float(lab)
            if f != int(f):
                raise DataError(f"row {i}: label {lab!r} is not an integer")
            v = int(f)
            if not 0 <= v < q.num_classes:
                raise DataError(
                    f"row {i}: label {v} outside [0, {q.num_classes})"
                )
            label_ints.append(v)

    predictions = []
    scores = []
    for row in qmat:
        cls, sc = predict_quantized(q, [int(v) for v in row])
        predictions.append(cls)
        scores.append(sc)

    accuracy = None
    confusion = None
    if label_ints is not None:
        n_cls = q.num_classes
        confusion = [[0] * n_cls for _ in range(n_cls)]
        hits = 0
        for t, p in zip(label_ints, predictions):
            confusion[t][p] += 1
            hits += t == p
        accuracy = hits / len(label_ints) if label_ints else None
    return PredictionReport(
        num_samples=len(predictions),
        predictions=predictions,
        scores=scores,
        accuracy=accuracy,
        confusion=confusion,
    )
