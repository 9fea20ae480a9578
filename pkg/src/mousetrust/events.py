"""Raw mouse-event ingestion: CSV parsing, validation, and trace cleaning.

Event files are comma-separated with columns ``ID,Timestamp,X,Y,Button,Duration``
(header optional). Button and Duration use ``-1`` as the "absent" sentinel and
must be absent or present together. Timestamps accept scientific notation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import DataError, ParseError

HEADER_FIELDS = ("ID", "Timestamp", "X", "Y", "Button", "Duration")
INTENSITY_TAGS = ("low", "high", "unknown")

# Events shorter than this cannot yield a single usable kinematic row once
# derivative warm-up rows and the trailing row are dropped downstream.
MIN_TRACE_EVENTS = 5


class Button(enum.IntEnum):
    LEFT = 1
    RIGHT = 2
    MIDDLE = 3


@dataclass(frozen=True, slots=True)
class MouseEvent:
    """One timestamped cursor sample, optionally carrying a button press."""

    user_session_id: str
    timestamp: float
    x: int
    y: int
    button: Optional[Button] = None
    press_duration: Optional[float] = None

    def __post_init__(self):
        if not math.isfinite(self.timestamp) or self.timestamp < 0:
            raise DataError(f"timestamp must be finite and non-negative, got {self.timestamp!r}")
        if self.x < 0 or self.y < 0:
            raise DataError(f"coordinates must be non-negative, got ({self.x}, {self.y})")
        if (self.button is None) != (self.press_duration is None):
            raise DataError("button and press_duration must be both present or both absent")
        if self.press_duration is not None and not self.press_duration > 0:
            raise DataError(f"press_duration must be > 0, got {self.press_duration!r}")


@dataclass(frozen=True, slots=True)
class Trace:
    """One cleaned session: time-ordered events sharing a session id."""

    user_session_id: str
    events: tuple[MouseEvent, ...]
    intensity_tag: str = "unknown"

    def __post_init__(self):
        if self.intensity_tag not in INTENSITY_TAGS:
            raise DataError(f"intensity_tag must be one of {INTENSITY_TAGS}, got {self.intensity_tag!r}")

    def __len__(self) -> int:
        return len(self.events)


def _parse_int_field(raw: str, line_number: int, name: str) -> int:
    try:
        value = float(raw)
    except ValueError:
        raise ParseError(line_number, f"non-numeric {name} field {raw!r}") from None
    if not math.isfinite(value) or value != int(value):
        raise ParseError(line_number, f"{name} must be an integer, got {raw!r}")
    return int(value)


def _is_header(line: str) -> bool:
    fields = [f.strip().lower() for f in line.split(",")]
    return fields == [f.lower() for f in HEADER_FIELDS]


def parse_event_line(raw_line: str, line_number: int = 1) -> Optional[MouseEvent]:
    """Parse one CSV line; None for blank lines and a line-1 header."""
    line = raw_line.strip().lstrip("﻿")
    if not line:
        return None
    if line_number == 1 and _is_header(line):
        return None
    fields = [f.strip() for f in line.split(",")]
    if len(fields) != 6:
        raise ParseError(line_number, f"expected 6 columns, got {len(fields)}")
    session_id, t_raw, x_raw, y_raw, button_raw, duration_raw = fields

    try:
        timestamp = float(t_raw)
    except ValueError:
        raise ParseError(line_number, f"non-numeric Timestamp field {t_raw!r}") from None
    if not math.isfinite(timestamp) or timestamp < 0:
        raise ParseError(line_number, f"Timestamp must be finite and non-negative, got {t_raw!r}")

    x = _parse_int_field(x_raw, line_number, "X")
    y = _parse_int_field(y_raw, line_number, "Y")
    if x < 0 or y < 0:
        raise ParseError(line_number, f"negative coordinates ({x}, {y})")

    button_code = _parse_int_field(button_raw, line_number, "Button")
    if button_code == -1:
        button = None
    elif button_code in (1, 2, 3):
        button = Button(button_code)
    else:
        raise ParseError(line_number, f"Button must be -1, 1, 2 or 3, got {button_code}")

    try:
        duration_value = float(duration_raw)
    except ValueError:
        raise ParseError(line_number, f"non-numeric Duration field {duration_raw!r}") from None
    if not math.isfinite(duration_value):
        raise ParseError(line_number, f"Duration must be finite, got {duration_raw!r}")
    duration = None if duration_value == -1.0 else duration_value

    if (button is None) != (duration is None):
        raise ParseError(line_number, "Button and Duration must be both -1 or both set")
    if duration is not None and not duration > 0:
        raise ParseError(line_number, f"Duration must be > 0, got {duration_raw!r}")

    try:
        return MouseEvent(session_id, timestamp, x, y, button=button, press_duration=duration)
    except DataError as exc:
        raise ParseError(line_number, str(exc)) from None


def parse_events(lines: Iterable[str]) -> list[MouseEvent]:
    """Parse CSV lines into events.

    Skips an optional header line and blank lines; raises ParseError with the
    offending 1-based line number on malformed input.
    """
    events: list[MouseEvent] = []
    for line_number, raw_line in enumerate(lines, start=1):
        event = parse_event_line(raw_line, line_number)
        if event is not None:
            events.append(event)
    return events


def serialize_events(events: Iterable[MouseEvent], header: bool = True) -> list[str]:
    """Render events back to CSV lines; inverse of parse_events on valid data."""
    lines = [",".join(HEADER_FIELDS)] if header else []
    for e in events:
        button = int(e.button) if e.button is not None else -1
        duration = repr(e.press_duration) if e.press_duration is not None else "-1"
        lines.append(f"{e.user_session_id},{repr(e.timestamp)},{e.x},{e.y},{button},{duration}")
    return lines


def read_events_csv(path) -> list[MouseEvent]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_events(fh.read().splitlines())


def write_events_csv(path, events: Iterable[MouseEvent]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(serialize_events(events)) + "\n")


def clean_trace(events: Sequence[MouseEvent], intensity_tag: str = "unknown") -> Trace:
    """Sort, deduplicate, and validate one session's events.

    Events are stably sorted by timestamp, then consecutive exact duplicates
    (same timestamp, position, and button) are dropped. Distinct events at a
    tied timestamp are kept in input order; the later one yields a dt=0
    kinematic row that the feature stage discards.
    """
    if not events:
        raise DataError("trace too short: no events")
    session_ids = {e.user_session_id for e in events}
    if len(session_ids) != 1:
        raise DataError(f"mixed session ids in one trace: {sorted(session_ids)}")

    ordered = sorted(events, key=lambda e: e.timestamp)
    kept: list[MouseEvent] = []
    for event in ordered:
        if kept:
            prev = kept[-1]
            if (
                event.timestamp == prev.timestamp
                and event.x == prev.x
                and event.y == prev.y
                and event.button == prev.button
            ):
                continue
        kept.append(event)

    for prev, cur in zip(kept, kept[1:]):
        if cur.timestamp < prev.timestamp:
            raise DataError("non-monotone timestamps survived sorting")

    if len(kept) < MIN_TRACE_EVENTS:
        raise DataError(f"trace too short: {len(kept)} events after cleaning, need {MIN_TRACE_EVENTS}")
    return Trace(session_ids.pop(), tuple(kept), intensity_tag)
