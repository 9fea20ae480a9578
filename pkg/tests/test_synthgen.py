"""Synthetic session generator: determinism, trace structure, pause budget,
and the between-user separation downstream classifiers depend on."""

import math

import numpy as np
import pytest

from mousetrust.errors import DataError
from mousetrust.events import Button, clean_trace
from mousetrust.kinematics import trace_to_frame
from mousetrust.synthgen import (
    CLICK_DURATION_RANGE,
    GenSpec,
    MEAN_SEGMENT_DISTANCE,
    UserProfile,
    device_quantum,
    expected_pause_fraction,
    generate_trace,
    mean_focal_distance,
    sample_profile,
    session_id,
    user_of,
)


def make_profile(**overrides):
    base = dict(
        user_id="000",
        mode="low",
        base_speed=300.0,
        speed_variation=0.05,
        curvature_bias=0.1,
        tremor_amplitude=0.8,
        pause_probability=0.3,
        pause_duration_scale=0.8,
        click_rate=10.0,
        reaction_latency=0.12,
        focal_point=(960.0, 540.0),
        focal_pull=0.0,
    )
    base.update(overrides)
    return UserProfile(**base)


def stop_fraction(trace):
    events = trace.events
    stops = sum(
        1
        for a, b in zip(events, events[1:])
        if a.x == b.x and a.y == b.y
    )
    return stops / (len(events) - 1)


def test_profile_sampling_deterministic():
    assert sample_profile(42, "low") == sample_profile(42, "low")
    assert sample_profile(42, "high") == sample_profile(42, "high")


def test_profiles_distinct_across_seeds_and_modes():
    speeds = {sample_profile(s, "low").base_speed for s in range(60)}
    assert len(speeds) == 60
    assert sample_profile(7, "low") != sample_profile(7, "high")


def test_sampled_profiles_respect_documented_ranges():
    for seed in range(30):
        low = sample_profile(seed, "low")
        assert 90.0 <= low.base_speed <= 700.0
        assert 0.15 <= low.pause_probability <= 0.60
        assert low.focal_pull == 0.0
        high = sample_profile(seed, "high")
        assert 300.0 <= high.base_speed <= 1400.0
        assert 0.02 <= high.pause_probability <= 0.12
        assert 0.65 <= high.focal_pull <= 0.97
        assert 560.0 <= high.focal_point[0] <= 1360.0


def test_profile_validation():
    with pytest.raises(DataError):
        make_profile(mode="medium")
    with pytest.raises(DataError):
        make_profile(base_speed=0.0)
    with pytest.raises(DataError):
        make_profile(pause_probability=1.5)
    with pytest.raises(DataError):
        make_profile(tremor_amplitude=-0.1)
    with pytest.raises(DataError):
        make_profile(focal_pull=math.nan)


def test_spec_validation():
    with pytest.raises(DataError):
        GenSpec(mode="medium")
    with pytest.raises(DataError):
        GenSpec(duration=0.0)
    with pytest.raises(DataError):
        GenSpec(screen=(0, 1080))
    with pytest.raises(DataError):
        generate_trace(make_profile(mode="low"), GenSpec(mode="high", duration=10.0))


def test_trace_structure_and_determinism():
    profile = sample_profile(3, "low", user_id="007")
    spec = GenSpec(mode="low", duration=30.0, sample_interval=0.05, seed=9)
    trace = generate_trace(profile, spec)

    assert trace.user_session_id == "007-poly-009"
    assert trace.intensity_tag == "low"
    assert len(trace.events) == round(30.0 / 0.05)
    for k, event in enumerate(trace.events):
        assert event.timestamp == k * 0.05
        assert 0 <= event.x <= 1919 and 0 <= event.y <= 1079
        assert float(event.x).is_integer() and float(event.y).is_integer()
        if event.button is not None:
            assert event.button == Button.LEFT
            lo, hi = CLICK_DURATION_RANGE
            assert lo <= event.press_duration <= hi

    again = generate_trace(profile, spec)
    assert again.events == trace.events


def test_trace_survives_cleaning_unchanged():
    profile = sample_profile(5, "high")
    spec = GenSpec(mode="high", duration=20.0, sample_interval=0.05, seed=2)
    trace = generate_trace(profile, spec)
    cleaned = clean_trace(trace.events, intensity_tag="high")
    assert len(cleaned.events) == len(trace.events)


def test_minimum_sample_floor():
    profile = make_profile()
    spec = GenSpec(mode="low", duration=0.01, sample_interval=0.05)
    assert len(generate_trace(profile, spec).events) == 5


def test_click_rate_zero_means_no_buttons():
    profile = make_profile(click_rate=0.0)
    spec = GenSpec(mode="low", duration=20.0, sample_interval=0.05, seed=4)
    trace = generate_trace(profile, spec)
    assert all(e.button is None for e in trace.events)


def test_expected_pause_fraction_arithmetic():
    profile = make_profile(
        base_speed=290.0,
        reaction_latency=0.1,
        pause_probability=0.5,
        pause_duration_scale=0.8,
    )
    stationary = 0.1 + 0.5 * 0.8
    moving = MEAN_SEGMENT_DISTANCE["low"] / 290.0
    assert math.isclose(
        expected_pause_fraction(profile), stationary / (moving + stationary), rel_tol=1e-12
    )


@pytest.mark.parametrize("mode,seed", [("low", 1), ("low", 6), ("high", 1), ("high", 6)])
def test_stop_fraction_tracks_pause_budget(mode, seed):
    # full-length sessions: the stationary share converges to the configured
    # ratio well within a factor-of-1.5 band
    profile = sample_profile(seed, mode)
    spec = GenSpec(mode=mode, duration=900.0, sample_interval=0.05, seed=seed)
    trace = generate_trace(profile, spec)
    expected = expected_pause_fraction(profile)
    observed = stop_fraction(trace)
    assert 0.5 * expected <= observed <= 1.5 * expected


def test_high_mode_traces_orbit_their_own_focal_point():
    spec_a = GenSpec(mode="high", duration=120.0, sample_interval=0.05, seed=11)
    spec_b = GenSpec(mode="high", duration=120.0, sample_interval=0.05, seed=12)
    a = sample_profile(11, "high", user_id="a")
    b = sample_profile(12, "high", user_id="b")
    trace_a = generate_trace(a, spec_a)
    trace_b = generate_trace(b, spec_b)
    assert mean_focal_distance(trace_a, a.focal_point) < mean_focal_distance(
        trace_a, b.focal_point
    )
    assert mean_focal_distance(trace_b, b.focal_point) < mean_focal_distance(
        trace_b, a.focal_point
    )


def test_mean_focal_distance_validation():
    from mousetrust.events import Trace

    with pytest.raises(DataError):
        mean_focal_distance(Trace("a-poly-000", ()), (0.0, 0.0))


def test_device_quantum_stable_and_small():
    quanta = set()
    for seed in range(40):
        profile = sample_profile(seed, "low")
        q = device_quantum(profile)
        assert q == device_quantum(profile)
        assert q in (1, 2, 3)
        quanta.add(q)
    assert len(quanta) >= 2


def test_session_id_round_trip():
    profile = sample_profile(0, "low", user_id="007")
    spec = GenSpec(mode="low", seed=1234)
    sid = session_id(profile, spec)
    assert sid == "007-poly-234"
    assert user_of(sid) == "007"
    assert session_id(profile, GenSpec(mode="high", seed=7)) == "007-tf2-007"


def test_two_users_separate_in_feature_space():
    # the property training relies on: per-window feature distributions of
    # two sampled users differ by at least half a pooled standard deviation
    # on some component
    spec = GenSpec(mode="low", duration=240.0, sample_interval=0.05, seed=21)
    frames = []
    for seed in (21, 25):
        profile = sample_profile(seed, "low", user_id=f"{seed:03d}")
        frames.append(trace_to_frame(generate_trace(profile, spec)).rows)
    mean_a, mean_b = frames[0].mean(axis=0), frames[1].mean(axis=0)
    pooled = np.sqrt((frames[0].var(axis=0) + frames[1].var(axis=0)) / 2.0) + 1e-12
    separation = np.abs(mean_a - mean_b) / pooled
    assert separation.max() >= 0.5
