import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtcnn.ensemble import (SUBSETS, ScoreVector, ablate, evaluate, fuse, global_score,
                            group_scores, pair_accuracy, parse_subset, plane_score,
                            predict_label, read_score_dump, subset_name, write_score_dump)
from dtcnn.errors import DataError
from dtcnn.slicer import PLANES
from dtcnn.tensor import make_rng

from oracles import brute_evaluate

XY, XT, YT = PLANES


def test_subset_order():
    assert [subset_name(s) for s in SUBSETS] == [
        "xy", "xt", "yt", "xy+xt", "xy+yt", "xt+yt", "xy+xt+yt"]


def test_parse_subset():
    assert parse_subset("yt+xy") == (XY, YT)
    assert parse_subset("xt,yt") == (XT, YT)
    with pytest.raises(ValueError):
        parse_subset("xy+xy")
    with pytest.raises(ValueError):
        parse_subset("zz")


def test_plane_score_sums_slices():
    s = plane_score([np.array([1.0, 2.0]), np.array([0.5, -1.0])])
    assert s.tolist() == [1.5, 1.0]


def test_plane_score_rejects_mixed():
    a = ScoreVector(np.zeros(2), XY, 0, "a")
    b = ScoreVector(np.zeros(2), XT, 1, "a")
    with pytest.raises(ValueError):
        plane_score([a, b])
    with pytest.raises(ValueError):
        plane_score([np.zeros(2), np.zeros(3)])
    with pytest.raises(ValueError):
        plane_score([])


def test_global_score_subset_only():
    per = {XY: np.array([1.0, 0.0]), XT: np.array([0.0, 3.0])}
    assert global_score(per, (XY,)).tolist() == [1.0, 0.0]
    assert global_score(per, (XY, XT)).tolist() == [1.0, 3.0]
    with pytest.raises(KeyError):
        global_score(per, (YT,))


def test_argmax_ties_lowest():
    assert predict_label([1.0, 3.0, 3.0]) == 1
    assert predict_label([0.0, 0.0]) == 0


def test_fsum_is_order_independent():
    vals = [np.array([1e16]), np.array([1.0]), np.array([-1e16])]
    assert plane_score(vals)[0] == 1.0
    assert plane_score(vals[::-1])[0] == 1.0


def test_raw_and_softmax_disagree():
    scores = {XY: np.array([[20.0, 0.0]]), XT: np.array([[0.0, 5.0], [0.0, 5.0]])}
    assert predict_label(fuse(scores, (XY, XT), "sum")) == 0
    assert predict_label(fuse(scores, (XY, XT), "softmax-sum")) == 1


def test_majority_and_borda():
    scores = {XY: np.array([[1.0, 0.0, 0.5], [0.0, 2.0, 1.0], [3.0, 0.0, 0.0]])}
    assert fuse(scores, (XY,), "majority").tolist() == [2.0, 1.0, 0.0]
    assert fuse(scores, (XY,), "borda").tolist() == [4.0, 3.0, 2.0]  # ties ranked by index
    with pytest.raises(ValueError):
        fuse(scores, (XY,), "max")


def _random_dataset(rng, n_seq, n_classes, m):
    scores, labels = {}, {}
    for i in range(n_seq):
        seq = f"s{i:03d}"
        labels[seq] = int(rng.integers(n_classes))
        scores[seq] = {p: rng.integers(-8, 9, (m, n_classes)) / 4.0 for p in PLANES}
    return scores, labels


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 5), st.integers(1, 4))
def test_evaluate_matches_brute(seed, n_classes, m):
    scores, labels = _random_dataset(make_rng(seed), 12, n_classes, m)
    for subset in SUBSETS:
        ev = evaluate(scores, labels, subset, n_classes)
        acc, conf = brute_evaluate(scores, labels, subset, n_classes)
        assert ev.accuracy == acc
        assert ev.confusion.tolist() == conf


def test_ablate_rows_and_per_class():
    scores, labels = _random_dataset(make_rng(1), 30, 3, 2)
    evals = ablate(scores, labels, 3)
    assert [e.subset for e in evals] == list(SUBSETS)
    e = evals[-1]
    assert np.allclose(e.normalized_confusion().sum(axis=1)[e.confusion.sum(axis=1) > 0], 1)
    assert np.nanmean(e.per_class_accuracy) <= 1


def test_evaluate_missing_scores():
    scores, labels = _random_dataset(make_rng(2), 3, 2, 1)
    del scores["s001"][XT]
    with pytest.raises(DataError):
        evaluate(scores, labels, (XY, XT), 2)
    assert evaluate(scores, labels, (XY,), 2).accuracy >= 0


def test_pair_accuracy_restricts_classes():
    scores = {"a": {XY: np.array([[0.0, 1.0, 9.0]])}, "b": {XY: np.array([[2.0, 1.0, 9.0]])}}
    labels = {"a": 1, "b": 0}
    assert pair_accuracy(scores, labels, (XY,), [0, 1]) == 1.0
    assert evaluate(scores, labels, (XY,), 3).accuracy == 0.0


def test_score_dump_roundtrip(tmp_path):
    rng = make_rng(3)
    recs = [ScoreVector(rng.standard_normal(4), p, i, f"seq{j}")
            for j in range(3) for p in PLANES for i in range(2)]
    path = tmp_path / "scores.tsv"
    write_score_dump(path, recs)
    back = read_score_dump(path)
    assert len(back) == len(recs)
    for a, b in zip(recs, back):
        assert np.array_equal(a.values, b.values)
        assert (a.plane, a.slice_index, a.sequence_id) == (b.plane, b.slice_index, b.sequence_id)
    grouped = group_scores(back[::-1])
    assert grouped["seq1"][XT].shape == (2, 4)
    assert np.array_equal(grouped["seq1"][XT][0], recs[3 * 2 + 2].values)


def test_score_dump_errors(tmp_path):
    with pytest.raises(DataError):
        read_score_dump(tmp_path / "missing.tsv")
    bad = tmp_path / "bad.tsv"
    bad.write_text("sequence_id\tplane\tslice_index\ts0\nx\txy\t0\n")
    with pytest.raises(DataError):
        read_score_dump(bad)
