"""Fixed-length windows over feature frames, labeling, and fold plans.

Windows carry raw (un-normalized) feature rows. Normalization statistics are
fit per training fold downstream, so test rows can never influence them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError
from .kinematics import FEATURE_WIDTH, FeatureFrame

DEFAULT_WINDOW_LENGTH = 40
DEFAULT_FOLDS = 5

LABEL_AUTHENTIC = 0
LABEL_INTRUDER = 1


@dataclass(frozen=True)
class Window:
    """L consecutive feature rows from one session's frame."""

    user_session_id: str
    rows: np.ndarray  # (L, 9) float64
    start_index: int

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[1] != FEATURE_WIDTH:
            raise DataError(f"window rows must be (L, {FEATURE_WIDTH}), got {self.rows.shape}")
        if self.start_index < 0:
            raise DataError("window start index must be >= 0")

    def __len__(self) -> int:
        return self.rows.shape[0]


def make_windows(
    frame: FeatureFrame, length: int = DEFAULT_WINDOW_LENGTH, stride: int | None = None
) -> list[Window]:
    """Slice a frame into windows starting at 0, stride, 2*stride, ...

    The default stride equals the window length (non-overlapping). A trailing
    remainder shorter than `length` is dropped. A frame shorter than `length`
    yields no windows; that is not an error.
    """
    if stride is None:
        stride = length
    if length < 1 or stride < 1:
        raise DataError("window length and stride must be >= 1")
    n = len(frame)
    windows = []
    for start in range(0, n - length + 1, stride):
        windows.append(Window(frame.user_session_id, frame.rows[start : start + length], start))
    return windows


@dataclass(frozen=True)
class LabeledSet:
    """Windows with binary labels: 0 = target user, 1 = anyone else."""

    windows: tuple[Window, ...]
    labels: np.ndarray  # (n,) int64
    target_user: str

    def __post_init__(self):
        if self.labels.shape != (len(self.windows),):
            raise DataError("labels must align one-to-one with windows")
        if len(self.labels) and not np.isin(self.labels, (LABEL_AUTHENTIC, LABEL_INTRUDER)).all():
            raise DataError("labels must be 0 or 1")

    def __len__(self) -> int:
        return len(self.windows)

    @property
    def class_counts(self) -> tuple[int, int]:
        """(authentic count, intruder count)."""
        ones = int(self.labels.sum())
        return len(self.labels) - ones, ones


def label_windows(windows_by_user: Mapping[str, Sequence[Window]], target_user: str) -> LabeledSet:
    """Label the target user's windows 0 and every other user's windows 1."""
    if target_user not in windows_by_user:
        raise DataError(f"target user {target_user!r} has no windows")
    windows: list[Window] = []
    labels: list[int] = []
    for user in windows_by_user:
        for window in windows_by_user[user]:
            windows.append(window)
            labels.append(LABEL_AUTHENTIC if user == target_user else LABEL_INTRUDER)
    return LabeledSet(tuple(windows), np.array(labels, dtype=np.int64), target_user)


def flatten_window(window: Window) -> np.ndarray:
    """Row-major flattening: row 0's components first, length L*9."""
    return window.rows.reshape(-1)


def flatten_set(labeled: LabeledSet) -> np.ndarray:
    """(n, L*9) design matrix for tree models."""
    return np.stack([flatten_window(w) for w in labeled.windows])


@dataclass(frozen=True)
class FoldPlan:
    """Disjoint test index sets covering all windows, plus complements."""

    k: int
    test_folds: tuple[np.ndarray, ...]
    seed: int
    n_total: int = field(default=0)

    def train_indices(self, fold: int) -> np.ndarray:
        test = set(self.test_folds[fold].tolist())
        return np.array([i for i in range(self.n_total) if i not in test], dtype=np.int64)

    def test_indices(self, fold: int) -> np.ndarray:
        return self.test_folds[fold]


def stratified_folds(labels: np.ndarray, k: int = DEFAULT_FOLDS, seed: int = 0) -> FoldPlan:
    """Per-class shuffle then round-robin assignment to k test folds.

    Each fold's share of every class is within one window of exact
    stratification. Requires k <= count of the smaller class so every test
    fold sees both classes.
    """
    if k < 2:
        raise DataError("fold count must be >= 2")
    labels = np.asarray(labels)
    rng = np.random.default_rng(np.random.SeedSequence((seed,)))
    buckets: list[list[int]] = [[] for _ in range(k)]
    for cls in (LABEL_AUTHENTIC, LABEL_INTRUDER):
        idx = np.flatnonzero(labels == cls)
        if 0 < len(idx) < k:
            name = "authentic" if cls == LABEL_AUTHENTIC else "intruder"
            raise DataError(f"class {name} has {len(idx)} windows, fewer than k={k} folds")
        idx = idx[rng.permutation(len(idx))]
        for j, index in enumerate(idx):
            buckets[j % k].append(int(index))
    folds = tuple(np.array(sorted(b), dtype=np.int64) for b in buckets)
    return FoldPlan(k, folds, seed, n_total=len(labels))


def session_folds(session_ids: Sequence[str], k: int = DEFAULT_FOLDS, seed: int = 0) -> FoldPlan:
    """Leakage-sensitive alternative: whole sessions held out together.

    Windows from one session never straddle the train/test boundary. Class
    balance per fold is not guaranteed here; callers must check it.
    """
    if k < 2:
        raise DataError("fold count must be >= 2")
    distinct = sorted(set(session_ids))
    if len(distinct) < k:
        raise DataError(f"only {len(distinct)} sessions for k={k} folds")
    rng = np.random.default_rng(np.random.SeedSequence((seed,)))
    order = [distinct[i] for i in rng.permutation(len(distinct))]
    assignment = {sid: j % k for j, sid in enumerate(order)}
    buckets: list[list[int]] = [[] for _ in range(k)]
    for index, sid in enumerate(session_ids):
        buckets[assignment[sid]].append(index)
    folds = tuple(np.array(sorted(b), dtype=np.int64) for b in buckets)
    return FoldPlan(k, folds, seed, n_total=len(session_ids))


def export_labeled_csv(path, labeled: LabeledSet) -> None:
    """One flattened window per line, label last, with a generated header."""
    if not labeled.windows:
        raise DataError("cannot export an empty labeled set")
    width = flatten_window(labeled.windows[0]).shape[0]
    header = ",".join([f"f{i}" for i in range(width)] + ["label"])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for window, label in zip(labeled.windows, labeled.labels):
            flat = flatten_window(window)
            fh.write(",".join(repr(float(v)) for v in flat) + f",{int(label)}\n")
