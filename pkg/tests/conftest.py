"""Shared helpers for the test suite."""

from hypothesis import settings

from mousetrust.events import MouseEvent, Trace

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")

SESSION = "007-poly-000"


def make_events(points, session=SESSION):
    """Events from (timestamp, x, y) triples, no buttons."""
    return [MouseEvent(session, float(t), int(x), int(y)) for t, x, y in points]


def make_trace(points, session=SESSION, tag="unknown"):
    return Trace(session, tuple(make_events(points, session)), intensity_tag=tag)


def walk_points(n, start=0.0, dt=1.0, x0=100, y0=100, step=3):
    """n samples moving diagonally at integer timestamps; never stationary."""
    return [(start + i * dt, x0 + i * step, y0 + i * step) for i in range(n)]
