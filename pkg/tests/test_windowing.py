"""Window slicing, labeling, flattening, and fold plans."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mousetrust.errors import DataError
from mousetrust.kinematics import FeatureFrame
from mousetrust.windowing import (
    DEFAULT_WINDOW_LENGTH,
    LABEL_AUTHENTIC,
    LABEL_INTRUDER,
    LabeledSet,
    Window,
    export_labeled_csv,
    flatten_set,
    flatten_window,
    label_windows,
    make_windows,
    session_folds,
    stratified_folds,
)


def frame_of(n_rows, session="u-poly-000", offset=0.0):
    rows = np.arange(n_rows * 9, dtype=np.float64).reshape(n_rows, 9) + offset
    return FeatureFrame(session, rows, np.arange(n_rows, dtype=np.float64))


def test_non_overlapping_window_count():
    windows = make_windows(frame_of(100), length=40, stride=40)
    assert [w.start_index for w in windows] == [0, 40]


def test_short_frame_yields_no_windows():
    assert make_windows(frame_of(39), length=40) == []


def test_overlapping_window_count():
    windows = make_windows(frame_of(100), length=40, stride=20)
    assert [w.start_index for w in windows] == [0, 20, 40, 60]


def test_default_stride_equals_length():
    assert len(make_windows(frame_of(3 * DEFAULT_WINDOW_LENGTH))) == 3


def test_window_rows_are_frame_slices():
    frame = frame_of(90)
    for w in make_windows(frame, length=40, stride=25):
        assert np.array_equal(w.rows, frame.rows[w.start_index : w.start_index + 40])
        assert w.user_session_id == frame.user_session_id


def test_invalid_window_parameters():
    with pytest.raises(DataError):
        make_windows(frame_of(50), length=0)
    with pytest.raises(DataError):
        make_windows(frame_of(50), length=10, stride=0)


@given(
    st.integers(min_value=0, max_value=300),
    st.integers(min_value=1, max_value=60),
    st.integers(min_value=1, max_value=60),
)
def test_window_count_law(rows, length, stride):
    windows = make_windows(frame_of(rows), length=length, stride=stride)
    expected = (rows - length) // stride + 1 if rows >= length else 0
    assert len(windows) == expected


def test_label_windows_counts():
    by_user = {
        "a": make_windows(frame_of(40 * 10, "a-poly-000"), 40),
        "b": make_windows(frame_of(40 * 90, "b-poly-000"), 40),
    }
    labeled = label_windows(by_user, "a")
    assert labeled.class_counts == (10, 90)
    assert int(labeled.labels.sum()) == 90
    assert labeled.labels.sum() / len(labeled) == 1.0 - 10 / 100


def test_label_windows_all_target():
    by_user = {"a": make_windows(frame_of(200, "a-poly-000"), 40)}
    labeled = label_windows(by_user, "a")
    assert np.all(labeled.labels == LABEL_AUTHENTIC)


def test_label_windows_unknown_target():
    by_user = {"a": make_windows(frame_of(80, "a-poly-000"), 40)}
    with pytest.raises(DataError, match="no windows"):
        label_windows(by_user, "zz")


def test_labeled_set_validation():
    w = make_windows(frame_of(40), 40)
    with pytest.raises(DataError):
        LabeledSet(tuple(w), np.array([5]), "a")
    with pytest.raises(DataError):
        LabeledSet(tuple(w), np.array([0, 1]), "a")


def test_flatten_is_row_major():
    window = make_windows(frame_of(40), 40)[0]
    flat = flatten_window(window)
    assert flat.shape == (360,)
    for r in range(40):
        for c in range(0, 9, 4):
            assert flat[r * 9 + c] == window.rows[r, c]


def test_flatten_single_row_window():
    window = make_windows(frame_of(1), 1)[0]
    assert np.array_equal(flatten_window(window), window.rows[0])


def test_flatten_injective_on_distinct_contents():
    a = make_windows(frame_of(40), 40)[0]
    b = make_windows(frame_of(40, offset=0.5), 40)[0]
    assert not np.array_equal(flatten_window(a), flatten_window(b))
    # equal flats imply equal windows: flattening loses no information
    assert np.array_equal(flatten_window(a).reshape(40, 9), a.rows)


def test_flatten_set_shape():
    by_user = {"a": make_windows(frame_of(120, "a-poly-000"), 40)}
    labeled = label_windows(by_user, "a")
    assert flatten_set(labeled).shape == (3, 360)


def labels_10_90():
    return np.array([LABEL_AUTHENTIC] * 10 + [LABEL_INTRUDER] * 90)


def test_stratified_fold_class_shares():
    plan = stratified_folds(labels_10_90(), k=5, seed=1)
    labels = labels_10_90()
    for fold in range(5):
        test = plan.test_indices(fold)
        assert int((labels[test] == 0).sum()) == 2
        assert int((labels[test] == 1).sum()) == 18


def test_stratified_folds_partition():
    labels = labels_10_90()
    plan = stratified_folds(labels, k=5, seed=7)
    seen = np.concatenate(plan.test_folds)
    assert sorted(seen.tolist()) == list(range(100))
    for i in range(5):
        train = set(plan.train_indices(i).tolist())
        test = set(plan.test_indices(i).tolist())
        assert not train & test
        assert len(train | test) == 100


def test_stratified_folds_deterministic():
    a = stratified_folds(labels_10_90(), k=5, seed=3)
    b = stratified_folds(labels_10_90(), k=5, seed=3)
    assert all(np.array_equal(x, y) for x, y in zip(a.test_folds, b.test_folds))
    c = stratified_folds(labels_10_90(), k=5, seed=4)
    assert any(not np.array_equal(x, y) for x, y in zip(a.test_folds, c.test_folds))


def test_stratified_folds_error_names_small_class():
    labels = np.array([0, 0, 0] + [1] * 50)
    with pytest.raises(DataError, match="authentic"):
        stratified_folds(labels, k=5)
    with pytest.raises(DataError, match="intruder"):
        stratified_folds(np.array([1, 1] + [0] * 50), k=3)
    with pytest.raises(DataError):
        stratified_folds(labels_10_90(), k=1)


@given(
    st.integers(min_value=5, max_value=40),
    st.integers(min_value=5, max_value=200),
    st.integers(min_value=2, max_value=5),
    st.integers(min_value=0, max_value=2**32),
)
def test_stratified_fold_shares_within_one(n0, n1, k, seed):
    if min(n0, n1) < k:
        return
    labels = np.array([0] * n0 + [1] * n1)
    plan = stratified_folds(labels, k=k, seed=seed)
    for fold in range(k):
        test = plan.test_indices(fold)
        for cls, total in ((0, n0), (1, n1)):
            got = int((labels[test] == cls).sum())
            assert abs(got - total / k) <= 1


def test_session_folds_keep_sessions_whole():
    ids = ["s1"] * 4 + ["s2"] * 3 + ["s3"] * 5 + ["s4"] * 2
    plan = session_folds(ids, k=2, seed=0)
    for fold in range(2):
        sessions = {ids[i] for i in plan.test_indices(fold)}
        for sid in sessions:
            members = [i for i, s in enumerate(ids) if s == sid]
            assert set(members) <= set(plan.test_indices(fold).tolist())


def test_session_folds_need_enough_sessions():
    with pytest.raises(DataError, match="sessions"):
        session_folds(["a", "a", "b"], k=3)


def test_export_labeled_csv(tmp_path):
    by_user = {"a": make_windows(frame_of(30, "a-poly-000"), 10)}
    labeled = label_windows(by_user, "a")
    path = tmp_path / "flat.csv"
    export_labeled_csv(path, labeled)
    lines = path.read_text().splitlines()
    assert lines[0].endswith(",label")
    assert len(lines) == 1 + len(labeled)
    assert lines[1].count(",") == 90  # 10 rows x 9 components + label


def test_export_empty_labeled_set_raises(tmp_path):
    empty = LabeledSet(tuple(), np.array([], dtype=np.int64), "a")
    with pytest.raises(DataError, match="empty"):
        export_labeled_csv(tmp_path / "x.csv", empty)
