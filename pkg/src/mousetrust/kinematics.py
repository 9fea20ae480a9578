"""Per-event kinematics and the 9-component feature frame.

Derivatives use first-order backward differences over consecutive events.
The same incremental builder backs both the batch pipeline and the streaming
engine, so feature values are identical on identical event prefixes by
construction, not by parallel reimplementation.

Feature order is fixed:
x, y, stop_duration, jerk, direction_change, movement_distance,
acceleration, button_code, angle. Velocity is computed internally but is not
a selected feature (it is redundant with movement distance at fixed dt), and
the stop indicator is subsumed by stop_duration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DataError, NumericError
from .events import MouseEvent, Trace

FEATURE_NAMES = (
    "x",
    "y",
    "stop_duration",
    "jerk",
    "direction_change",
    "movement_distance",
    "acceleration",
    "button_code",
    "angle",
)
FEATURE_WIDTH = len(FEATURE_NAMES)

# Warm-up rows whose acceleration or jerk still depend on unseen history, and
# the trailing row, are dropped when building a frame. Kept row count is
# therefore cleaned-event count minus 4.
LEADING_ROWS_DROPPED = 2
TRAILING_ROWS_DROPPED = 1


def wrap_angle(delta: float) -> float:
    """Wrap an angle difference of two atan2 outputs into [-pi, pi]."""
    if delta > math.pi:
        return delta - 2.0 * math.pi
    if delta < -math.pi:
        return delta + 2.0 * math.pi
    return delta


@dataclass(frozen=True, slots=True)
class KinematicRecord:
    """Derived motion quantities for one consecutive-event pair.

    The record is aligned with the later event of the pair. On the first kept
    rows, acceleration and jerk are reported as 0.0 until enough history
    exists; those rows are dropped before modelling.
    """

    t: float
    x: int
    y: int
    dt: float
    movement_distance: float
    velocity: float
    acceleration: float
    jerk: float
    angle: float
    direction_change: float
    stop_duration: float
    button_code: int
    is_stop: bool


class KinematicsBuilder:
    """Incremental kinematics over an event stream.

    push() returns one KinematicRecord per consecutive pair with dt > 0;
    pairs with dt = 0 are skipped (the later event still becomes the base for
    the next difference). State carried between rows: previous velocity and
    acceleration for higher derivatives, previous heading for direction
    change and stop carry-forward, and the accumulated stop time.
    """

    def __init__(self):
        self._prev_event: Optional[MouseEvent] = None
        self._prev_velocity = 0.0
        self._prev_acceleration = 0.0
        self._prev_angle: Optional[float] = None
        self._stop_accum = 0.0
        self._rows_emitted = 0

    @property
    def rows_emitted(self) -> int:
        return self._rows_emitted

    def push(self, event: MouseEvent) -> Optional[KinematicRecord]:
        prev = self._prev_event
        if prev is not None and event.timestamp < prev.timestamp:
            # raise before any state changes so a rejected event leaves the
            # builder usable (the streaming engine relies on this)
            raise DataError(f"out-of-order timestamp {event.timestamp} after {prev.timestamp}")
        self._prev_event = event
        if prev is None:
            return None
        dt = event.timestamp - prev.timestamp
        if dt == 0.0:
            return None

        dx = float(event.x - prev.x)
        dy = float(event.y - prev.y)
        distance = math.hypot(dx, dy)
        velocity = distance / dt

        if self._rows_emitted == 0:
            acceleration = 0.0
            jerk = 0.0
        else:
            acceleration = (velocity - self._prev_velocity) / dt
            jerk = 0.0 if self._rows_emitted == 1 else (acceleration - self._prev_acceleration) / dt

        if distance == 0.0:
            is_stop = True
            self._stop_accum += dt
            stop_duration = self._stop_accum
            angle = self._prev_angle if self._prev_angle is not None else 0.0
        else:
            is_stop = False
            self._stop_accum = 0.0
            stop_duration = 0.0
            angle = math.atan2(dy, dx)

        direction_change = 0.0 if self._prev_angle is None else wrap_angle(angle - self._prev_angle)

        if not all(map(math.isfinite, (velocity, acceleration, jerk, angle, direction_change))):
            raise NumericError(f"non-finite kinematics at t={event.timestamp}")

        self._prev_velocity = velocity
        self._prev_acceleration = acceleration
        self._prev_angle = angle
        self._rows_emitted += 1
        return KinematicRecord(
            t=event.timestamp,
            x=event.x,
            y=event.y,
            dt=dt,
            movement_distance=distance,
            velocity=velocity,
            acceleration=acceleration,
            jerk=jerk,
            angle=angle,
            direction_change=direction_change,
            stop_duration=stop_duration,
            button_code=int(event.button) if event.button is not None else 0,
            is_stop=is_stop,
        )


def derive_kinematics(trace: Trace) -> list[KinematicRecord]:
    """All kinematic rows of a cleaned trace, one per dt>0 event pair."""
    builder = KinematicsBuilder()
    records = []
    for event in trace.events:
        record = builder.push(event)
        if record is not None:
            records.append(record)
    return records


@dataclass(frozen=True)
class FeatureFrame:
    """Time-ordered matrix of the 9 selected features for one session."""

    user_session_id: str
    rows: np.ndarray  # (n, 9) float64, columns per FEATURE_NAMES
    timestamps: np.ndarray  # (n,) float64

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[1] != FEATURE_WIDTH:
            raise DataError(f"feature rows must have width {FEATURE_WIDTH}, got shape {self.rows.shape}")
        if self.timestamps.shape != (self.rows.shape[0],):
            raise DataError("timestamps must align with rows")

    def __len__(self) -> int:
        return self.rows.shape[0]


def record_features(record: KinematicRecord) -> tuple[float, ...]:
    """The 9 selected components of one kinematic record, in frame order."""
    return (
        float(record.x),
        float(record.y),
        record.stop_duration,
        record.jerk,
        record.direction_change,
        record.movement_distance,
        record.acceleration,
        float(record.button_code),
        record.angle,
    )


def to_feature_frame(records: Sequence[KinematicRecord], user_session_id: str) -> FeatureFrame:
    """Select final features and drop derivative warm-up plus trailing rows."""
    usable = records[LEADING_ROWS_DROPPED : len(records) - TRAILING_ROWS_DROPPED]
    if not usable:
        raise DataError("frame empty: trace too short after warm-up and trailing drops")
    rows = np.array([record_features(r) for r in usable], dtype=np.float64)
    timestamps = np.array([r.t for r in usable], dtype=np.float64)
    return FeatureFrame(user_session_id, rows, timestamps)


def trace_to_frame(trace: Trace) -> FeatureFrame:
    """Convenience: derive kinematics and build the frame in one step."""
    return to_feature_frame(derive_kinematics(trace), trace.user_session_id)


@dataclass(frozen=True)
class NormStats:
    """Per-component mean and population standard deviation."""

    mean: np.ndarray  # (9,)
    std: np.ndarray  # (9,)

    def __post_init__(self):
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise DataError("mean and std must be 1-D arrays of equal length")
        if np.any(self.std < 0):
            raise DataError("standard deviations must be non-negative")


def fit_norm_stats(rows: np.ndarray) -> NormStats:
    """Mean and population std per component over a (n, width) row matrix."""
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise DataError("cannot fit normalizer on an empty row matrix")
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    return NormStats(mean, std)


def fit_normalizer(frame: FeatureFrame) -> NormStats:
    return fit_norm_stats(frame.rows)


def normalize_rows(rows: np.ndarray, stats: NormStats) -> np.ndarray:
    """Z-score rows with fixed stats; zero-variance components map to 0."""
    if rows.shape[-1] != stats.mean.shape[0]:
        raise DataError(
            f"component count mismatch: rows have {rows.shape[-1]}, stats have {stats.mean.shape[0]}"
        )
    inv = np.where(stats.std == 0.0, 0.0, np.divide(1.0, stats.std, where=stats.std != 0.0))
    return (rows - stats.mean) * inv


def apply_normalizer(frame: FeatureFrame, stats: NormStats) -> FeatureFrame:
    return FeatureFrame(frame.user_session_id, normalize_rows(frame.rows, stats), frame.timestamps)


def frame_to_csv_lines(frame: FeatureFrame) -> list[str]:
    """Frame rows as CSV with the 9 component names as header."""
    lines = [",".join(FEATURE_NAMES)]
    for row in frame.rows:
        lines.append(",".join(repr(float(v)) for v in row))
    return lines


def write_frame_csv(path, frame: FeatureFrame) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(frame_to_csv_lines(frame)) + "\n")
