"""Seeded parametric generator of per-user mouse traces.

Two intensity modes with distinct movement geometry:

* low ("poly" sessions): methodical point-to-point work alternating between
  a handful of per-session anchor sites (menus, build area) and free
  wandering, frequent pauses, sparse clicks;
* high ("tf2" sessions): fast alternating radial sweeps pulled toward a
  per-user focal point, rare pauses, dense clicks.

Short reaches interpolate position with the quintic minimum-jerk ease curve
(bell-shaped speed); longer reaches ramp up, cruise at the drawn segment
speed, and ramp down, as aimed hand movements do. The curvature bias bows
each path sideways, and positions snap to the per-user device pixel grid
(sensor resolution times pointer scaling differs between setups).

Scale-like profile traits draw log-uniformly: people differ in pointing
speed and device sensitivity by multiples, and that between-user spread is
what the downstream classifiers authenticate against.

Pauses and reaction dwells freeze the integer position exactly, and a
moving sample is nudged a grid step if rounding would freeze it, so a row
has zero displacement precisely when the generator intended stillness. That
keeps the stop-duration feature aligned with the configured pause budget.

Everything is driven by one generator seeded from the GenSpec, so a
(profile, spec) pair maps to exactly one trace.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError
from .events import Button, MouseEvent, Trace

MODE_CODES = {"low": 0, "high": 1}
MODE_GAME_TAGS = {"low": "poly", "high": "tf2"}

# Effective mean segment length under the target-draw rules below, boundary
# clamping and per-segment speed noise included (measured over seeded runs).
# Keep in sync with _next_target; the pause-budget estimate divides by these.
MEAN_SEGMENT_DISTANCE = {"low": 580.0, "high": 535.0}

MIN_SEGMENT_SPEED = 40.0
CLICK_DURATION_RANGE = (0.05, 0.2)


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    mode: str
    base_speed: float  # px/s
    speed_variation: float  # coefficient of per-segment speed noise
    curvature_bias: float  # radians of heading drift per segment
    tremor_amplitude: float  # px
    pause_probability: float  # per segment
    pause_duration_scale: float  # s, exponential scale
    click_rate: float  # clicks per minute
    reaction_latency: float  # s of dwell after each segment
    focal_point: tuple[float, float]
    focal_pull: float  # in [0, 1]; 0 in low mode

    def __post_init__(self):
        if self.mode not in MODE_CODES:
            raise DataError(f"mode must be one of {sorted(MODE_CODES)}")
        numeric = (
            self.base_speed,
            self.speed_variation,
            self.curvature_bias,
            self.tremor_amplitude,
            self.pause_probability,
            self.pause_duration_scale,
            self.click_rate,
            self.reaction_latency,
            self.focal_point[0],
            self.focal_point[1],
            self.focal_pull,
        )
        if not all(math.isfinite(v) for v in numeric):
            raise DataError("profile fields must be finite")
        if self.base_speed <= 0 or self.pause_duration_scale <= 0:
            raise DataError("base speed and pause scale must be positive")
        if not (0.0 <= self.pause_probability <= 1.0 and 0.0 <= self.focal_pull <= 1.0):
            raise DataError("probabilities must lie in [0, 1]")
        if self.speed_variation < 0 or self.tremor_amplitude < 0 or self.click_rate < 0:
            raise DataError("variation, tremor, and click rate must be >= 0")
        if self.reaction_latency < 0:
            raise DataError("reaction latency must be >= 0")


@dataclass(frozen=True)
class GenSpec:
    mode: str = "low"
    duration: float = 900.0  # s
    sample_interval: float = 0.01  # s
    screen: tuple[int, int] = (1920, 1080)
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODE_CODES:
            raise DataError(f"mode must be one of {sorted(MODE_CODES)}")
        if self.duration <= 0 or self.sample_interval <= 0:
            raise DataError("duration and sample interval must be positive")
        if self.screen[0] <= 0 or self.screen[1] <= 0:
            raise DataError("screen bounds must be positive")


def sample_profile(seed: int, mode: str, user_id: str = "000") -> UserProfile:
    """Draw a profile from the documented per-mode ranges, deterministically."""
    if mode not in MODE_CODES:
        raise DataError(f"mode must be one of {sorted(MODE_CODES)}")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), MODE_CODES[mode])))
    # Scale-like traits (speed, tremor, pauses, clicks) are drawn
    # log-uniformly over wide ranges: pointing speed and device sensitivity
    # differ between people by multiples, not by percent, and ratio-uniform
    # draws keep two users' trait ratios large with high probability while
    # within-user noise stays small. That gap is what downstream per-window
    # classifiers rely on.
    def ratio_uniform(lo: float, hi: float) -> float:
        return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))

    if mode == "low":
        return UserProfile(
            user_id=user_id,
            mode=mode,
            base_speed=ratio_uniform(90.0, 700.0),
            speed_variation=float(rng.uniform(0.03, 0.10)),
            curvature_bias=float(rng.uniform(-0.5, 0.5)),
            tremor_amplitude=ratio_uniform(0.15, 2.2),
            pause_probability=float(rng.uniform(0.15, 0.60)),
            pause_duration_scale=ratio_uniform(0.3, 1.8),
            click_rate=ratio_uniform(3.0, 40.0),
            reaction_latency=float(rng.uniform(0.06, 0.30)),
            focal_point=(960.0, 540.0),
            focal_pull=0.0,
        )
    return UserProfile(
        user_id=user_id,
        mode=mode,
        base_speed=ratio_uniform(300.0, 1400.0),
        speed_variation=float(rng.uniform(0.03, 0.10)),
        curvature_bias=float(rng.uniform(-0.3, 0.3)),
        tremor_amplitude=ratio_uniform(0.25, 2.6),
        pause_probability=float(rng.uniform(0.02, 0.12)),
        pause_duration_scale=ratio_uniform(0.12, 0.5),
        click_rate=ratio_uniform(25.0, 200.0),
        reaction_latency=float(rng.uniform(0.03, 0.12)),
        focal_point=(float(rng.uniform(560.0, 1360.0)), float(rng.uniform(340.0, 740.0))),
        focal_pull=float(rng.uniform(0.65, 0.97)),
    )


def session_id(profile: UserProfile, spec: GenSpec) -> str:
    return f"{profile.user_id}-{MODE_GAME_TAGS[spec.mode]}-{spec.seed % 1000:03d}"


def user_of(user_session_id: str) -> str:
    """The user part of a '<user>-<game>-<nnn>' session identifier."""
    return user_session_id.split("-")[0]


def _minimum_jerk(tau: float) -> float:
    """Quintic ease: s(0)=0, s(1)=1, zero velocity and acceleration at ends."""
    return tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau)


# Reaches longer than twice this ramp distance cruise at the drawn segment
# speed between smooth ramps; shorter reaches use the pure quintic bell.
CRUISE_RAMP_DISTANCE = 100.0


def _arc_positions(distance: float, speed: float, dt: float) -> list[float]:
    """Arc lengths (px from segment start) at successive sample instants.

    Short reaches follow the single bell. Long reaches ramp up over
    CRUISE_RAMP_DISTANCE with a smoothstep velocity profile, hold the cruise
    speed, and ramp down symmetrically, so most samples advance by
    speed * dt and per-sample displacement concentrates at the mover's
    characteristic speed instead of sweeping the whole bell.
    """
    ramp = min(distance / 2.0, CRUISE_RAMP_DISTANCE)
    if distance <= 2.0 * ramp + 1e-9:
        steps = max(2, int(round(distance / speed / dt)))
        return [distance * _minimum_jerk(j / steps) for j in range(1, steps + 1)]
    ramp_time = 2.0 * ramp / speed
    cruise_time = (distance - 2.0 * ramp) / speed
    total = 2.0 * ramp_time + cruise_time
    steps = max(2, int(round(total / dt)))

    def arc_at(t: float) -> float:
        if t <= ramp_time:
            u = t / ramp_time
            # integral of the smoothstep velocity shape 3u^2 - 2u^3
            return speed * ramp_time * (u * u * u - 0.5 * u * u * u * u)
        if t <= ramp_time + cruise_time:
            return ramp + speed * (t - ramp_time)
        u = (total - t) / ramp_time
        return distance - speed * ramp_time * (u * u * u - 0.5 * u * u * u * u)

    scale = total / steps
    return [arc_at(j * scale) for j in range(1, steps + 1)]


LOW_ANCHOR_COUNT = 5
LOW_ANCHOR_PROBABILITY = 0.65
LOW_ANCHOR_SPREAD = 35.0


def _next_target(
    rng: np.random.Generator,
    pos: tuple[float, float],
    heading: float,
    sweep_inward: bool,
    profile: UserProfile,
    spec: GenSpec,
    anchors: Optional[list[tuple[float, float]]] = None,
) -> tuple[tuple[float, float], float]:
    """Next segment endpoint and updated heading, by mode geometry."""
    width, height = spec.screen
    if profile.mode == "low":
        if anchors and float(rng.random()) < LOW_ANCHOR_PROBABILITY:
            # workflow sites the player keeps returning to (build area, menus)
            ax, ay = anchors[int(rng.integers(0, len(anchors)))]
            tx = ax + float(rng.normal(0.0, LOW_ANCHOR_SPREAD))
            ty = ay + float(rng.normal(0.0, LOW_ANCHOR_SPREAD))
        else:
            heading = heading + profile.curvature_bias + float(rng.normal(0.0, 0.9))
            distance = float(rng.uniform(100.0, 500.0))
            tx = pos[0] + distance * math.cos(heading)
            ty = pos[1] + distance * math.sin(heading)
    else:
        fx, fy = profile.focal_point
        theta = float(rng.uniform(0.0, 2.0 * math.pi))
        if sweep_inward:
            radius = float(rng.uniform(0.0, 120.0))
        else:
            radius = float(rng.uniform(200.0, 600.0))
        ring = (fx + radius * math.cos(theta), fy + radius * math.sin(theta))
        free = (float(rng.uniform(0.0, width - 1.0)), float(rng.uniform(0.0, height - 1.0)))
        pull = profile.focal_pull
        tx = pull * ring[0] + (1.0 - pull) * free[0]
        ty = pull * ring[1] + (1.0 - pull) * free[1]
    tx = min(max(tx, 2.0), width - 3.0)
    ty = min(max(ty, 2.0), height - 3.0)
    if (tx, ty) != pos:
        heading = math.atan2(ty - pos[1], tx - pos[0])
    return (tx, ty), heading


def device_quantum(profile: UserProfile) -> int:
    """Effective pointer step in pixels for this user's device setup.

    Sensor DPI and OS pointer scaling make reported positions land on a
    per-setup pixel grid (a 400 dpi mouse at a 2x multiplier cannot produce
    odd deltas). The quantum is a stable function of the profile, so traces
    regenerate identically from (profile, spec).
    """
    packed = struct.pack(
        "<8d",
        profile.base_speed,
        profile.speed_variation,
        profile.curvature_bias,
        profile.tremor_amplitude,
        profile.pause_probability,
        profile.pause_duration_scale,
        profile.click_rate,
        profile.reaction_latency,
    )
    digest = hashlib.blake2b(packed, digest_size=2).digest()
    return 1 + int.from_bytes(digest, "little") % 3


def _round_clamp(x: float, y: float, spec: GenSpec, quantum: int = 1) -> tuple[int, int]:
    width, height = spec.screen
    xi = min(max(quantum * int(round(x / quantum)), 0), width - 1)
    yi = min(max(quantum * int(round(y / quantum)), 0), height - 1)
    return xi, yi


_NUDGE_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1))


def _nudge(
    prev: tuple[int, int], dx_sign: int, dy_sign: int, spec: GenSpec, quantum: int = 1
) -> tuple[int, int]:
    """A neighboring device-grid pixel in (roughly) the movement direction."""
    width, height = spec.screen
    candidates = [(dx_sign, dy_sign), (dx_sign, 0), (0, dy_sign), *_NUDGE_OFFSETS]
    for ox, oy in candidates:
        if ox == 0 and oy == 0:
            continue
        xi = min(max(prev[0] + ox * quantum, 0), width - 1)
        yi = min(max(prev[1] + oy * quantum, 0), height - 1)
        if (xi, yi) != prev:
            return xi, yi
    raise DataError("screen too small to move within")


def generate_trace(profile: UserProfile, spec: GenSpec) -> Trace:
    """One full session of Table-format events at the sample interval."""
    if profile.mode != spec.mode:
        raise DataError(f"profile mode {profile.mode!r} does not match spec mode {spec.mode!r}")
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, MODE_CODES[spec.mode])))
    width, height = spec.screen
    dt = spec.sample_interval
    n_samples = max(5, int(round(spec.duration / dt)))

    quantum = device_quantum(profile)
    anchors: Optional[list[tuple[float, float]]] = None
    if spec.mode == "low":
        # the session's recurring workflow sites; drawn once per trace
        anchors = [
            (float(rng.uniform(width * 0.08, width * 0.92)), float(rng.uniform(height * 0.08, height * 0.92)))
            for _ in range(LOW_ANCHOR_COUNT)
        ]
    pos = (float(rng.uniform(width * 0.2, width * 0.8)), float(rng.uniform(height * 0.2, height * 0.8)))
    heading = float(rng.uniform(0.0, 2.0 * math.pi))
    pixels: list[tuple[int, int]] = [_round_clamp(pos[0], pos[1], spec, quantum)]
    sweep_inward = True

    while len(pixels) < n_samples:
        target, heading = _next_target(rng, pos, heading, sweep_inward, profile, spec, anchors)
        sweep_inward = not sweep_inward
        distance = math.hypot(target[0] - pos[0], target[1] - pos[1])
        speed = profile.base_speed * max(0.25, 1.0 + profile.speed_variation * float(rng.normal()))
        speed = max(speed, MIN_SEGMENT_SPEED)
        # curvature bias bows the path sideways (sine arc vanishing at both
        # endpoints), so direction-change rows carry the mover's handedness
        nx, ny = 0.0, 0.0
        if distance > 0.0:
            nx = -(target[1] - pos[1]) / distance
            ny = (target[0] - pos[0]) / distance
        bow = profile.curvature_bias * 0.35 * distance
        for arc in _arc_positions(distance, speed, dt):
            s = arc / distance if distance > 0.0 else 1.0
            lateral = bow * math.sin(math.pi * s)
            bx = pos[0] + (target[0] - pos[0]) * s + nx * lateral
            by = pos[1] + (target[1] - pos[1]) * s + ny * lateral
            bx += float(rng.normal(0.0, profile.tremor_amplitude))
            by += float(rng.normal(0.0, profile.tremor_amplitude))
            pixel = _round_clamp(bx, by, spec, quantum)
            if pixel == pixels[-1]:
                pixel = _nudge(
                    pixels[-1],
                    int(math.copysign(1, target[0] - pos[0])) if target[0] != pos[0] else 1,
                    int(math.copysign(1, target[1] - pos[1])) if target[1] != pos[1] else 0,
                    spec,
                    quantum,
                )
            pixels.append(pixel)
        pos = target

        dwell_samples = int(round(profile.reaction_latency / dt))
        if float(rng.random()) < profile.pause_probability:
            dwell_samples += max(1, int(round(float(rng.exponential(profile.pause_duration_scale)) / dt)))
        for _ in range(dwell_samples):
            pixels.append(pixels[-1])

    pixels = pixels[:n_samples]

    click_p = profile.click_rate / 60.0 * dt
    click_hits = rng.random(n_samples) < click_p
    events = []
    sid = session_id(profile, spec)
    for k in range(n_samples):
        button = None
        press = None
        if click_hits[k]:
            button = Button.LEFT
            press = float(rng.uniform(*CLICK_DURATION_RANGE))
        events.append(
            MouseEvent(
                user_session_id=sid,
                timestamp=k * dt,
                x=pixels[k][0],
                y=pixels[k][1],
                button=button,
                press_duration=press,
            )
        )
    return Trace(sid, tuple(events), intensity_tag=spec.mode)


def expected_pause_fraction(profile: UserProfile) -> float:
    """Configured share of zero-displacement samples, as the generator aims.

    Per segment the expected stationary time is the reaction dwell plus
    pause_probability times the exponential scale; the expected moving time
    is the mode's mean segment length at base speed. Moving samples never
    freeze (rounding stalls are nudged), so the observed stop fraction
    should track this ratio.
    """
    stationary = profile.reaction_latency + profile.pause_probability * profile.pause_duration_scale
    moving = MEAN_SEGMENT_DISTANCE[profile.mode] / profile.base_speed
    return stationary / (moving + stationary)


def mean_focal_distance(trace: Trace, focal: tuple[float, float]) -> float:
    """Mean Euclidean distance of trace positions to a reference point."""
    if not trace.events:
        raise DataError("empty trace")
    total = 0.0
    for event in trace.events:
        total += math.hypot(event.x - focal[0], event.y - focal[1])
    return total / len(trace.events)
