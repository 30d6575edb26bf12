"""Uniform input quantization and split-threshold integerization.

Features are min-max normalized per column and rounded onto the w_feature-bit
integer grid; the hardware then only ever sees unsigned integers. Trained
split thresholds are replaced by their ceilings, which preserves every
comparison outcome over integer inputs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, ValidationError
from .model import DecisionTree, GbdtEnsemble, TreeNode, with_trees

MAX_FEATURE_BITS = 16


@dataclass(frozen=True)
class FeatureQuantizer:
    w_feature: int
    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def __post_init__(self) -> None:
        if not 1 <= self.w_feature <= MAX_FEATURE_BITS:
            raise ConfigError(
                f"w_feature must be in [1, {MAX_FEATURE_BITS}], got {self.w_feature}"
            )
        if len(self.mins) != len(self.maxs):
            raise ValidationError("mins and maxs differ in length")
        for i, (mn, mx) in enumerate(zip(self.mins, self.maxs)):
            if not (math.isfinite(mn) and math.isfinite(mx)):
                raise ValidationError(f"non-finite range for feature {i}")
            if mn > mx:
                raise ValidationError(f"min exceeds max for feature {i}")

    @property
    def num_features(self) -> int:
        return len(self.mins)

    @property
    def levels(self) -> int:
        """Top of the quantized range: 2^w_feature - 1."""
        return (1 << self.w_feature) - 1

    @classmethod
    def fit(cls, data, w_feature: int) -> "FeatureQuantizer":
        """Record per-column min/max over a 2-D training matrix."""
        arr = np.asarray(data, dtype=float)
        if arr.ndim != 2:
            raise DataError("training data must be a 2-D matrix")
        if arr.size == 0:
            raise DataError("empty dataset")
        bad = np.argwhere(~np.isfinite(arr))
        if len(bad):
            r, c = bad[0]
            raise DataError(f"non-finite value at row {r}, column {c}")
        return cls(
            w_feature=w_feature,
            mins=tuple(arr.min(axis=0).tolist()),
            maxs=tuple(arr.max(axis=0).tolist()),
        )

    def transform(self, x) -> list[int]:
        """Quantize one sample. Out-of-range values clamp to the grid ends;
        a constant feature (min == max) always maps to 0."""
        if len(x) != self.num_features:
            raise ValidationError(f"expected {self.num_features} features, got {len(x)}")
        top = self.levels
        out = []
        for i, (v, mn, mx) in enumerate(zip(x, self.mins, self.maxs)):
            v = float(v)
            if math.isnan(v):
                raise DataError(f"NaN input for feature {i}")
            span = mx - mn
            if span <= 0.0:
                out.append(0)
                continue
            t = (v - mn) / span
            t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
            # round half away from zero; t*top is nonnegative here
            out.append(int(math.floor(t * top + 0.5)))
        return out

    def transform_matrix(self, data) -> np.ndarray:
        """Vectorized transform of a 2-D matrix; rows map like transform()."""
        arr = np.asarray(data, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != self.num_features:
            raise ValidationError(
                f"expected a 2-D matrix with {self.num_features} columns"
            )
        if np.isnan(arr).any():
            r, c = np.argwhere(np.isnan(arr))[0]
            raise DataError(f"NaN input at row {r}, column {c}")
        mins = np.asarray(self.mins)
        spans = np.asarray(self.maxs) - mins
        safe = np.where(spans > 0.0, spans, 1.0)
        t = np.clip((arr - mins) / safe, 0.0, 1.0)
        t = np.where(spans > 0.0, t, 0.0)
        return np.floor(t * self.levels + 0.5).astype(np.int64)

    def to_json(self) -> str:
        doc = {"w_feature": self.w_feature, "mins": list(self.mins), "maxs": list(self.maxs)}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "FeatureQuantizer":
        try:
            doc = json.loads(text)
            return cls(
                w_feature=int(doc["w_feature"]),
                mins=tuple(float(v) for v in doc["mins"]),
                maxs=tuple(float(v) for v in doc["maxs"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad quantizer document: {exc}") from exc


def integerize_thresholds(ens: GbdtEnsemble) -> GbdtEnsemble:
    """Replace each split threshold t with ceil(t).

    Over integer inputs, x < t and x < ceil(t) branch identically, so the
    returned ensemble is decision-equivalent on the quantized grid. The
    mapping is idempotent.
    """
    trees = []
    for tree in ens.trees:
        nodes = tuple(
            n if n.is_leaf else TreeNode.internal(
                n.feature, float(math.ceil(n.threshold)), n.left, n.right
            )
            for n in tree.nodes
        )
        trees.append(DecisionTree(nodes))
    return with_trees(ens, trees)
