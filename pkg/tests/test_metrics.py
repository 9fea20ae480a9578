"""ROC/AUC/F1 against an independent pair-counting oracle.

pair_count_auc below is deliberately the naive O(pos x neg) definition,
written without reference to the library's trapezoidal implementation. The
two routes computing the same number through different arithmetic is the
point of the check; neither side may be rewritten in terms of the other.
"""

import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mousetrust.errors import DataError
from mousetrust.metrics import (
    EvalReport,
    balanced_accuracy,
    confusion_counts,
    evaluate,
    evaluate_scores,
    f1_score,
    report_from_dict,
    report_to_dict,
    report_to_json,
    roc_auc,
    roc_csv_lines,
    roc_curve,
    write_roc_csv,
)
from mousetrust.windowing import LabeledSet, make_windows
from mousetrust.kinematics import FeatureFrame


def pair_count_auc(scores, labels):
    """Fraction of (positive, negative) pairs ranked correctly, ties half."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(pos) * len(neg))


def test_worked_auc_example():
    scores = [0.1, 0.4, 0.35, 0.8]
    labels = [0, 0, 1, 1]
    assert roc_auc(scores, labels) == pytest.approx(0.75, abs=1e-12)
    assert pair_count_auc(scores, labels) == 0.75


def test_perfect_and_degenerate_auc():
    assert roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == pytest.approx(1.0, abs=1e-12)
    assert roc_auc([0.5, 0.5, 0.5, 0.5], [0, 0, 1, 1]) == pytest.approx(0.5, abs=1e-12)
    assert roc_auc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == pytest.approx(0.0, abs=1e-12)


def test_roc_curve_two_point_example():
    points = roc_curve([0.9, 0.1], [1, 0])
    assert [(p[0], p[1]) for p in points] == [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
    assert points[0][2] == math.inf
    assert points[1][2] == 0.9


def test_roc_curve_collapses_ties():
    points = roc_curve([0.5, 0.5, 0.5], [1, 0, 1])
    assert [(p[0], p[1]) for p in points] == [(0.0, 0.0), (1.0, 1.0)]


def test_roc_curve_worst_case_passes_through_1_0():
    points = roc_curve([0.9, 0.1], [0, 1])
    assert (1.0, 0.0) in [(p[0], p[1]) for p in points]


def test_roc_curve_monotone():
    rng = np.random.default_rng(0)
    scores = rng.random(60)
    labels = rng.integers(0, 2, 60)
    labels[0], labels[1] = 0, 1
    points = roc_curve(scores, labels)
    for (f0, t0, _), (f1, t1, _) in zip(points, points[1:]):
        assert f1 >= f0 and t1 >= t0


def test_single_class_errors():
    with pytest.raises(DataError):
        roc_curve([0.1, 0.9], [1, 1])
    with pytest.raises(DataError):
        roc_auc([0.1, 0.9], [0, 0])
    with pytest.raises(DataError):
        balanced_accuracy([0.1, 0.9], [1, 1])


def test_input_validation():
    with pytest.raises(DataError):
        roc_auc([0.1], [0, 1])
    with pytest.raises(DataError):
        roc_auc([], [])
    with pytest.raises(DataError):
        roc_auc([math.nan, 0.5], [0, 1])
    with pytest.raises(DataError):
        roc_auc([0.1, 0.5], [0, 2])


def test_trapezoid_equals_pair_counting_on_random_instances():
    rng = np.random.default_rng(42)
    for _ in range(200):
        n = int(rng.integers(2, 51))
        labels = rng.integers(0, 2, n)
        labels[0], labels[1] = 0, 1
        if rng.random() < 0.5:
            scores = np.round(rng.random(n), 1)  # tie-rich
        else:
            scores = rng.normal(size=n)
        assert abs(roc_auc(scores, labels) - pair_count_auc(scores, labels)) < 1e-12


def test_auc_invariant_under_strictly_increasing_transform():
    rng = np.random.default_rng(5)
    scores = rng.random(40)
    labels = rng.integers(0, 2, 40)
    labels[:2] = [0, 1]
    base = roc_auc(scores, labels)
    assert roc_auc(3.0 * scores + 2.0, labels) == base
    assert roc_auc(np.exp(scores), labels) == base


def test_auc_of_negated_scores_complements():
    rng = np.random.default_rng(9)
    scores = rng.permutation(50) / 50.0  # all distinct, no ties
    labels = np.array([0, 1] * 25)
    assert roc_auc(scores, labels) + roc_auc(-scores, labels) == pytest.approx(1.0, abs=1e-12)


def test_f1_worked_example():
    # tp=2, fp=1, fn=1, tn=1 at threshold 0.5
    scores = [0.9, 0.8, 0.2, 0.7, 0.1]
    labels = [1, 1, 1, 0, 0]
    c = confusion_counts(scores, labels)
    assert c == {"tp": 2, "fp": 1, "tn": 1, "fn": 1}
    assert f1_score(scores, labels) == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_f1_perfect_and_degenerate():
    assert f1_score([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0
    assert f1_score([0.1, 0.2, 0.3], [1, 1, 0]) == 0.0  # nothing predicted positive
    assert f1_score([0.9, 0.8], [0, 0]) == 0.0  # no actual positives


def test_balanced_accuracy_hand_value():
    scores = [0.9, 0.8, 0.2, 0.7, 0.1]
    labels = [1, 1, 1, 0, 0]
    assert balanced_accuracy(scores, labels) == pytest.approx((2 / 3 + 1 / 2) / 2)


def test_confusion_counts_sum_to_n():
    rng = np.random.default_rng(1)
    scores = rng.random(33)
    labels = rng.integers(0, 2, 33)
    c = confusion_counts(scores, labels)
    assert c["tp"] + c["fp"] + c["tn"] + c["fn"] == 33


@given(st.integers(min_value=0, max_value=2**32))
def test_dual_route_agreement_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 30))
    labels = rng.integers(0, 2, n)
    labels[0], labels[1] = 0, 1
    scores = np.round(rng.random(n), 2)
    assert abs(roc_auc(scores, labels) - pair_count_auc(scores, labels)) < 1e-12


@given(st.integers(min_value=0, max_value=2**32))
def test_f1_is_one_iff_no_errors(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 30))
    scores = rng.random(n)
    labels = rng.integers(0, 2, n)
    c = confusion_counts(scores, labels)
    f1 = f1_score(scores, labels)
    assert 0.0 <= f1 <= 1.0
    if f1 == 1.0:
        assert c["fp"] == 0 and c["fn"] == 0
    if c["fp"] == 0 and c["fn"] == 0 and c["tp"] > 0:
        assert f1 == 1.0


def _labeled_pair():
    rows = np.arange(18, dtype=np.float64).reshape(2, 9)
    frame_a = FeatureFrame("a-poly-000", rows, np.arange(2.0))
    frame_b = FeatureFrame("b-poly-000", rows + 1.0, np.arange(2.0))
    windows = make_windows(frame_a, 2) + make_windows(frame_b, 2)
    return LabeledSet(tuple(windows), np.array([0, 1]), "a")


def test_evaluate_constant_scorer():
    labeled = _labeled_pair()
    report = evaluate(lambda w: 0.5, labeled, "dt", "a", "low")
    assert report.auc == pytest.approx(0.5, abs=1e-12)
    assert len(report.roc_points) == 2


def test_evaluate_oracle_scorer():
    labeled = _labeled_pair()
    by_identity = {id(w): float(y) for w, y in zip(labeled.windows, labeled.labels)}
    report = evaluate(lambda w: by_identity[id(w)], labeled, "rf", "a", "high")
    assert report.auc == 1.0
    assert report.f1 == 1.0
    assert report.n_authentic == 1 and report.n_intruder == 1


def test_report_auc_matches_roc_auc_exactly():
    rng = np.random.default_rng(12)
    scores = rng.random(80)
    labels = rng.integers(0, 2, 80)
    labels[:2] = [0, 1]
    report = evaluate_scores(scores, labels, "gru", "u", "both")
    assert report.auc == roc_auc(scores, labels)


def test_report_requires_valid_tags_and_curve():
    rng = np.random.default_rng(2)
    scores, labels = rng.random(10), np.array([0, 1] * 5)
    with pytest.raises(DataError):
        evaluate_scores(scores, labels, "gru", "u", "medium")
    with pytest.raises(DataError):
        EvalReport(((0.1, 0.0, 1.0), (1.0, 1.0, 0.0)), 0.5, 0.5, 0.5, {}, 5, 5, "m", "u", "low")


def test_report_json_round_trip():
    rng = np.random.default_rng(4)
    scores = rng.random(30)
    labels = np.array([0, 1] * 15)
    report = evaluate_scores(scores, labels, "lstm", "u3", "low")
    back = report_from_dict(json.loads(report_to_json(report)))
    assert back == report


def test_roc_csv_output(tmp_path):
    report = evaluate_scores([0.9, 0.6, 0.4, 0.1], [1, 1, 0, 0], "dt", "u", "low")
    lines = roc_csv_lines(report)
    assert lines[0] == "fpr,tpr,threshold"
    assert len(lines) == len(report.roc_points) + 1
    path = tmp_path / "roc.csv"
    write_roc_csv(path, report)
    assert path.read_text().splitlines() == lines
