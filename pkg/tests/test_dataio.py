"""CSV loading and saving, label column handling."""
import numpy as np
import pytest

from gbdt2rtl import DataError
from gbdt2rtl.dataio import load_csv, save_csv


def test_label_column_splits(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1.5,2,0\n3.25,4,1\n")
    feats, labels = load_csv(p, "last")
    assert feats.tolist() == [[1.5, 2.0], [3.25, 4.0]]
    assert labels.tolist() == [0.0, 1.0]
    feats, labels = load_csv(p, "first")
    assert feats.tolist() == [[2.0, 0.0], [4.0, 1.0]]
    assert labels.tolist() == [1.5, 3.25]
    feats, labels = load_csv(p, "none")
    assert feats.shape == (2, 3)
    assert labels is None


def test_single_row_keeps_2d(tmp_path):
    p = tmp_path / "one.csv"
    p.write_text("1,2,3\n")
    feats, _ = load_csv(p)
    assert feats.shape == (1, 3)


def test_load_errors(tmp_path):
    with pytest.raises(DataError, match="not found"):
        load_csv(tmp_path / "nope.csv")
    p = tmp_path / "bad.csv"
    p.write_text("1,x\n")
    with pytest.raises(DataError):
        load_csv(p)
    p.write_text("")
    with pytest.raises(DataError, match="empty"):
        load_csv(p)
    p.write_text("5\n6\n")
    with pytest.raises(DataError, match="at least 2 columns"):
        load_csv(p, "last")
    with pytest.raises(DataError, match="label_col"):
        load_csv(p, "middle")


def test_save_round_trip(tmp_path):
    p = tmp_path / "out.csv"
    feats = np.array([[1.0, 2.5], [3.0, 4.0]])
    save_csv(p, feats, labels=[0, 1], label_col="last")
    text = p.read_text()
    # Integer-valued cells print without a trailing .0.
    assert text == "1,2.5,0\n3,4,1\n"
    back, labels = load_csv(p, "last")
    assert back.tolist() == feats.tolist()
    assert labels.tolist() == [0.0, 1.0]


def test_save_requires_labels_when_split(tmp_path):
    with pytest.raises(DataError, match="no labels"):
        save_csv(tmp_path / "x.csv", np.zeros((2, 2)), None, "first")
