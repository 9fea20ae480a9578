"""ROC curve, ROC-AUC, F1, balanced accuracy, confusion counts.

Positive class is 1 (intruder). AUC here is the trapezoidal area under the
ROC curve; by construction it must agree with the rank statistic (fraction
of positive/negative pairs ordered correctly, ties half) to 1e-12, and the
test suite checks that agreement against an independent pair-counting
implementation rather than reusing this one.

`bal_acc` (balanced accuracy at the decision threshold) is reported next to
AUC and F1 as a third summary; it is a plain mean of true-positive and
true-negative rates, nothing more.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DataError
from .windowing import LabeledSet, Window

SCENARIO_TAGS = ("low", "high", "both")
DEFAULT_THRESHOLD = 0.5


def _check_binary(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DataError("scores and labels must be equal-length 1-D arrays")
    if scores.size == 0:
        raise DataError("empty score array")
    if not np.isfinite(scores).all():
        raise DataError("scores must be finite")
    if not np.isin(labels, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    return scores, labels.astype(np.int64)


def roc_curve(scores, labels) -> list[tuple[float, float, float]]:
    """(fpr, tpr, threshold) triples, thresholds at distinct scores descending.

    Starts at (0, 0) with an infinite sentinel threshold; the final distinct
    score always lands the curve on (1, 1). Tied scores collapse to one point.
    """
    scores, labels = _check_binary(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC needs both classes present")

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    tps = np.cumsum(sorted_labels)
    fps = np.cumsum(1 - sorted_labels)
    # keep only the last index of each tied-score run
    keep = np.flatnonzero(np.diff(sorted_scores, append=-np.inf))
    points = [(0.0, 0.0, math.inf)]
    for i in keep:
        points.append((float(fps[i]) / n_neg, float(tps[i]) / n_pos, float(sorted_scores[i])))
    return points


def roc_auc(scores, labels) -> float:
    """Trapezoidal area under roc_curve(scores, labels)."""
    points = roc_curve(scores, labels)
    area = 0.0
    for (fpr0, tpr0, _), (fpr1, tpr1, _) in zip(points, points[1:]):
        area += (fpr1 - fpr0) * (tpr0 + tpr1) / 2.0
    return area


def confusion_counts(scores, labels, threshold: float = DEFAULT_THRESHOLD) -> dict[str, int]:
    """tp/fp/tn/fn with prediction = 1 when score >= threshold."""
    scores, labels = _check_binary(scores, labels)
    predicted = scores >= threshold
    actual = labels == 1
    return {
        "tp": int(np.sum(predicted & actual)),
        "fp": int(np.sum(predicted & ~actual)),
        "tn": int(np.sum(~predicted & ~actual)),
        "fn": int(np.sum(~predicted & actual)),
    }


def f1_score(scores, labels, threshold: float = DEFAULT_THRESHOLD) -> float:
    """Harmonic precision/recall mean; 0 when either positive set is empty."""
    c = confusion_counts(scores, labels, threshold)
    predicted_pos = c["tp"] + c["fp"]
    actual_pos = c["tp"] + c["fn"]
    if predicted_pos == 0 or actual_pos == 0:
        return 0.0
    precision = c["tp"] / predicted_pos
    recall = c["tp"] / actual_pos
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def balanced_accuracy(scores, labels, threshold: float = DEFAULT_THRESHOLD) -> float:
    """Mean of true-positive rate and true-negative rate at the threshold."""
    c = confusion_counts(scores, labels, threshold)
    n_pos = c["tp"] + c["fn"]
    n_neg = c["tn"] + c["fp"]
    if n_pos == 0 or n_neg == 0:
        raise DataError("balanced accuracy needs both classes present")
    return (c["tp"] / n_pos + c["tn"] / n_neg) / 2.0


@dataclass(frozen=True)
class EvalReport:
    """All evaluation outputs for one (model, user, scenario) cell."""

    roc_points: tuple[tuple[float, float, float], ...]
    auc: float
    f1: float
    bal_acc: float
    confusion: dict[str, int]
    n_authentic: int
    n_intruder: int
    model_tag: str
    user_tag: str
    scenario_tag: str

    def __post_init__(self):
        if self.scenario_tag not in SCENARIO_TAGS:
            raise DataError(f"scenario tag must be one of {SCENARIO_TAGS}")
        first, last = self.roc_points[0], self.roc_points[-1]
        if (first[0], first[1]) != (0.0, 0.0) or (last[0], last[1]) != (1.0, 1.0):
            raise DataError("ROC curve must run from (0,0) to (1,1)")


def evaluate_scores(
    scores, labels, model_tag: str, user_tag: str, scenario_tag: str
) -> EvalReport:
    """Assemble every metric from precomputed probability scores."""
    scores, labels = _check_binary(scores, labels)
    points = roc_curve(scores, labels)
    area = 0.0
    for (fpr0, tpr0, _), (fpr1, tpr1, _) in zip(points, points[1:]):
        area += (fpr1 - fpr0) * (tpr0 + tpr1) / 2.0
    n_intruder = int(labels.sum())
    return EvalReport(
        roc_points=tuple(points),
        auc=area,
        f1=f1_score(scores, labels),
        bal_acc=balanced_accuracy(scores, labels),
        confusion=confusion_counts(scores, labels),
        n_authentic=int(labels.size - n_intruder),
        n_intruder=n_intruder,
        model_tag=model_tag,
        user_tag=user_tag,
        scenario_tag=scenario_tag,
    )


def evaluate(
    scorer: Callable[[Window], float],
    labeled: LabeledSet,
    model_tag: str,
    user_tag: str,
    scenario_tag: str,
) -> EvalReport:
    """Score every window with the model's probability output, then assemble."""
    if not labeled.windows:
        raise DataError("cannot evaluate an empty labeled set")
    scores = np.array([scorer(w) for w in labeled.windows], dtype=np.float64)
    return evaluate_scores(scores, labeled.labels, model_tag, user_tag, scenario_tag)


def report_to_dict(report: EvalReport) -> dict:
    return {
        "model": report.model_tag,
        "user": report.user_tag,
        "scenario": report.scenario_tag,
        "auc": report.auc,
        "f1": report.f1,
        "bal_acc": report.bal_acc,
        "confusion": dict(report.confusion),
        "n_authentic": report.n_authentic,
        "n_intruder": report.n_intruder,
        "roc_points": [list(p) for p in report.roc_points],
    }


def report_to_json(report: EvalReport) -> str:
    # Infinity in the sentinel threshold follows Python json conventions and
    # round-trips through json.loads.
    return json.dumps(report_to_dict(report), sort_keys=True, separators=(",", ":"))


def report_from_dict(payload: dict) -> EvalReport:
    return EvalReport(
        roc_points=tuple(tuple(p) for p in payload["roc_points"]),
        auc=payload["auc"],
        f1=payload["f1"],
        bal_acc=payload["bal_acc"],
        confusion={k: int(v) for k, v in payload["confusion"].items()},
        n_authentic=int(payload["n_authentic"]),
        n_intruder=int(payload["n_intruder"]),
        model_tag=payload["model"],
        user_tag=payload["user"],
        scenario_tag=payload["scenario"],
    )


def roc_csv_lines(report: EvalReport) -> list[str]:
    lines = ["fpr,tpr,threshold"]
    for fpr, tpr, threshold in report.roc_points:
        lines.append(f"{fpr!r},{tpr!r},{threshold!r}")
    return lines


def write_roc_csv(path, report: EvalReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(roc_csv_lines(report)) + "\n")
