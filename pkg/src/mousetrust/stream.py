"""Streaming continuous-authentication engine.

Events are folded one at a time into the same incremental kinematics builder
the batch pipeline uses, so streaming feature rows equal batch feature rows
on identical event prefixes, value for value. The batch frame drops the two
warm-up rows and the final row; the stream mirrors that by skipping the
first two kinematic rows and holding the newest row back until a later row
confirms it is not the last.

Every `stride` confirmed rows past the first full window, the newest window
is normalized, scored, folded into an exponential moving average, and pushed
through a hysteresis automaton: non-intruder states escalate to intruder at
the intruder threshold, and only a drop to the recovery threshold releases
the intruder state.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import DataError
from .events import MouseEvent, Trace
from .forest import DecisionTree, RandomForest, forest_predict, tree_predict
from .kinematics import (
    FEATURE_WIDTH,
    KinematicsBuilder,
    LEADING_ROWS_DROPPED,
    NormStats,
    normalize_rows,
    record_features,
)
from .rnn import RnnModel, score_window

DECISION_WARMING_UP = "warming_up"
DECISION_AUTHENTIC = "authentic"
DECISION_SUSPICIOUS = "suspicious"
DECISION_INTRUDER = "intruder"

AnyModel = Union[RnnModel, DecisionTree, RandomForest]


@dataclass(frozen=True)
class SessionPolicy:
    window_length: int = 40
    stride: int = 10
    alpha: float = 0.3  # EMA weight of the newest window score
    intruder_threshold: float = 0.7
    recovery_threshold: float = 0.5

    def __post_init__(self):
        if self.window_length < 1 or self.stride < 1:
            raise DataError("window length and stride must be >= 1")
        if not (0.0 < self.alpha <= 1.0):
            raise DataError("alpha must lie in (0, 1]")
        if self.recovery_threshold > self.intruder_threshold:
            raise DataError("recovery threshold must not exceed the intruder threshold")


@dataclass(frozen=True)
class DecisionUpdate:
    timestamp: float  # time of the feature row that completed the window
    window_score: float
    smoothed_score: float
    decision: str
    events_consumed: int
    windows_scored: int


def _scorer_for(model: AnyModel, policy: SessionPolicy) -> Callable[[np.ndarray], float]:
    """A window-scoring closure over normalized (L, 9) rows."""
    flat_width = policy.window_length * FEATURE_WIDTH
    if isinstance(model, RnnModel):
        if model.config.input_width != FEATURE_WIDTH:
            raise DataError("model input width does not match the feature width")
        return lambda rows: score_window(model, rows)
    if isinstance(model, DecisionTree):
        if model.width != flat_width:
            raise DataError(
                f"tree expects width {model.width}, policy windows flatten to {flat_width}"
            )
        return lambda rows: tree_predict(model, rows.reshape(-1))
    if isinstance(model, RandomForest):
        if model.width != flat_width:
            raise DataError(
                f"forest expects width {model.width}, policy windows flatten to {flat_width}"
            )
        return lambda rows: forest_predict(model, rows.reshape(-1))
    raise DataError(f"unsupported model type {type(model).__name__}")


class AuthSession:
    """Single-owner streaming session; one instance per monitored user."""

    def __init__(self, model: AnyModel, norm_stats: NormStats, policy: SessionPolicy):
        if norm_stats.mean.shape[0] != FEATURE_WIDTH:
            raise DataError("normalization stats width does not match the feature width")
        self._score_rows = _scorer_for(model, policy)
        self._stats = norm_stats
        self.policy = policy
        self._builder = KinematicsBuilder()
        self._pending: Optional[tuple[float, tuple[float, ...]]] = None
        self._rows: deque[tuple[float, ...]] = deque(maxlen=policy.window_length)
        self._row_times: deque[float] = deque(maxlen=policy.window_length)
        self._confirmed_rows = 0
        self._last_timestamp: Optional[float] = None
        self.events_consumed = 0
        self.windows_scored = 0
        self.smoothed_score: Optional[float] = None
        self.decision = DECISION_WARMING_UP

    def _next_decision(self, s: float) -> str:
        if self.decision == DECISION_INTRUDER:
            if s <= self.policy.recovery_threshold:
                return DECISION_AUTHENTIC
            return DECISION_INTRUDER
        if s >= self.policy.intruder_threshold:
            return DECISION_INTRUDER
        if s > self.policy.recovery_threshold:
            return DECISION_SUSPICIOUS
        return DECISION_AUTHENTIC

    def push_event(self, event: MouseEvent) -> Optional[DecisionUpdate]:
        """Consume one event; returns an update only when a window was scored."""
        if self._last_timestamp is not None and event.timestamp < self._last_timestamp:
            raise DataError(
                f"out-of-order timestamp {event.timestamp} after {self._last_timestamp}"
            )
        record = self._builder.push(event)
        self._last_timestamp = event.timestamp
        self.events_consumed += 1
        if record is None or self._builder.rows_emitted <= LEADING_ROWS_DROPPED:
            return None

        arrived = (record.t, record_features(record))
        pending, self._pending = self._pending, arrived
        if pending is None:
            return None
        t, features = pending
        self._rows.append(features)
        self._row_times.append(t)
        self._confirmed_rows += 1

        L, stride = self.policy.window_length, self.policy.stride
        if self._confirmed_rows < L or (self._confirmed_rows - L) % stride != 0:
            return None

        raw = np.array(self._rows, dtype=np.float64)
        score = float(self._score_rows(normalize_rows(raw, self._stats)))
        if self.smoothed_score is None:
            self.smoothed_score = score
        else:
            self.smoothed_score = self.policy.alpha * score + (1.0 - self.policy.alpha) * self.smoothed_score
        self.decision = self._next_decision(self.smoothed_score)
        self.windows_scored += 1
        return DecisionUpdate(
            timestamp=self._row_times[-1],
            window_score=score,
            smoothed_score=self.smoothed_score,
            decision=self.decision,
            events_consumed=self.events_consumed,
            windows_scored=self.windows_scored,
        )


def new_session(model: AnyModel, norm_stats: NormStats, policy: SessionPolicy) -> AuthSession:
    return AuthSession(model, norm_stats, policy)


def replay(
    model: AnyModel, norm_stats: NormStats, policy: SessionPolicy, trace: Trace
) -> list[DecisionUpdate]:
    """Fold a whole trace through one session; the ordered update timeline."""
    session = new_session(model, norm_stats, policy)
    updates = []
    for event in trace.events:
        update = session.push_event(event)
        if update is not None:
            updates.append(update)
    return updates


def update_to_dict(update: DecisionUpdate) -> dict:
    return {
        "timestamp": update.timestamp,
        "window_score": update.window_score,
        "smoothed_score": update.smoothed_score,
        "decision": update.decision,
        "events_consumed": update.events_consumed,
        "windows_scored": update.windows_scored,
    }
