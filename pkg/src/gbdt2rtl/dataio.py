"""CSV handling for datasets: plain numeric rows, no header, optional label
column at either end."""
from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np

from .errors import DataError

LABEL_CHOICES = ("none", "first", "last")


def load_csv(path, label_col: str = "none") -> tuple[np.ndarray, np.ndarray | None]:
    """Returns (features, labels); labels is None when label_col is 'none'."""
    if label_col not in LABEL_CHOICES:
        raise DataError(f"label_col must be one of {LABEL_CHOICES}, got {label_col!r}")
    p = Path(path)
    if not p.exists():
        raise DataError(f"data file not found: {p}")
    try:
        with warnings.catch_warnings():
            # Empty files are reported as DataError below, not as a warning.
            warnings.simplefilter("ignore", UserWarning)
            arr = np.loadtxt(p, delimiter=",", dtype=float, ndmin=2)
    except ValueError as exc:
        raise DataError(f"{p}: {exc}") from exc
    if arr.size == 0:
        raise DataError(f"{p}: empty dataset")
    if label_col == "none":
        return arr, None
    if arr.shape[1] < 2:
        raise DataError(f"{p}: need at least 2 columns to split off labels")
    if label_col == "first":
        return arr[:, 1:], arr[:, 0]
    return arr[:, :-1], arr[:, -1]


def save_csv(path, features: np.ndarray, labels=None, label_col: str = "none") -> None:
    """Write rows back out; integer-valued cells print without decimals."""
    if label_col not in LABEL_CHOICES:
        raise DataError(f"label_col must be one of {LABEL_CHOICES}, got {label_col!r}")
    feats = np.asarray(features)
    if label_col == "none":
        mat = feats
    else:
        if labels is None:
            raise DataError("label_col given but no labels")
        col = np.asarray(labels).reshape(-1, 1)
        mat = np.hstack([col, feats]) if label_col == "first" else np.hstack([feats, col])

    def cell(v) -> str:
        f = float(v)
        return str(int(f)) if f == int(f) else repr(f)

    lines = [",".join(cell(v) for v in row) for row in mat]
    Path(path).write_text("\n".join(lines) + "\n")
