"""Continuous direction/movement display driven by robot odometry.

The robot's heading, taken relative to a north calibrated at session start,
is quantized into 8 sectors of 45 degrees; each sector is shown by pulsing
the two band-ring motors whose azimuths straddle it. The pair pulses slowly
while the robot moves and rapidly while it is static, so stillness is the
attention-grabbing state.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum

from .compiler import BLANK_FRAME, FrameSequence, MotorFrame
from .vest import N_MOTORS, BandRing, MotorId, band_ring, motor_index

SECTOR_WIDTH_DEG = 45.0
DEFAULT_HYSTERESIS_DEG = 2.0
DEFAULT_SPEED_THRESHOLD = 0.05  # m/s
DEFAULT_HORIZON_MS = 500
DEFAULT_INTENSITY = 60

# pulse cadence: slow while moving, rapid while static
MOVING_PERIOD_MS = 1000
MOVING_ON_MS = 300
STATIC_PERIOD_MS = 250
STATIC_ON_MS = 125


class InsufficientSamples(ValueError):
    pass


class NonMonotonicTimestamp(ValueError):
    pass


class Motion(str, Enum):
    MOVING = "moving"
    STATIC = "static"


def normalize_deg(angle: float) -> float:
    """Wrap any angle into [0, 360)."""
    return angle % 360.0


@dataclass(frozen=True)
class OdometrySample:
    """Timestamped robot pose in the odometry frame (metres / degrees)."""

    t: int
    x: float
    y: float
    theta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", normalize_deg(float(self.theta)))


@dataclass(frozen=True)
class DirectionState:
    sector: int
    motion: Motion
    pair: tuple[MotorId, MotorId]


def calibrate_north(sample: OdometrySample) -> float:
    """Pin north to the robot's current heading; later headings are relative."""
    return sample.theta


def heading_from(theta: float, north_offset: float) -> float:
    return normalize_deg(theta - north_offset)


def quantize_heading(phi: float) -> int:
    """Sector 0..7 for a heading in [0, 360); exact boundaries round up."""
    if not 0.0 <= phi < 360.0:
        raise ValueError(f"phi must be in [0, 360), got {phi}")
    return int(math.floor((phi + SECTOR_WIDTH_DEG / 2) / SECTOR_WIDTH_DEG)) % 8


def sector_to_pair(sector: int, ring: BandRing | None = None) -> tuple[MotorId, MotorId]:
    """The two ring-adjacent motors at azimuth sector*45 -/+ 22.5 degrees."""
    if not 0 <= sector <= 7:
        raise ValueError(f"sector must be 0..7, got {sector}")
    ring = ring or band_ring()
    centre = sector * SECTOR_WIDTH_DEG
    want = {normalize_deg(centre - 22.5), normalize_deg(centre + 22.5)}
    pair = tuple(
        m for m, az in zip(ring.motors, ring.azimuths) if normalize_deg(az) in want
    )
    if len(pair) != 2:
        raise ValueError(f"band ring does not straddle sector {sector}")
    return pair  # type: ignore[return-value]


def classify_motion(
    window: list[OdometrySample],
    horizon_ms: int = DEFAULT_HORIZON_MS,
    speed_threshold: float = DEFAULT_SPEED_THRESHOLD,
) -> Motion:
    """Moving iff mean planar speed over the window exceeds the threshold."""
    if len(window) < 2:
        raise InsufficientSamples("need at least 2 samples")
    span_ms = window[-1].t - window[0].t
    if span_ms < horizon_ms:
        raise InsufficientSamples(f"window spans {span_ms} ms < horizon {horizon_ms} ms")
    dist = 0.0
    for a, b in zip(window, window[1:]):
        dist += math.hypot(b.x - a.x, b.y - a.y)
    speed = dist / (span_ms / 1000.0)
    return Motion.MOVING if speed > speed_threshold else Motion.STATIC


def pulse_on(motion: Motion, t_ms: int) -> bool:
    """Whether the direction pair is in its on-phase at time t."""
    if motion is Motion.MOVING:
        return (t_ms % MOVING_PERIOD_MS) < MOVING_ON_MS
    return (t_ms % STATIC_PERIOD_MS) < STATIC_ON_MS


def direction_frame(state: DirectionState, t_ms: int, intensity: int = DEFAULT_INTENSITY) -> MotorFrame:
    if not pulse_on(state.motion, t_ms):
        return BLANK_FRAME
    values = [0] * N_MOTORS
    for m in state.pair:
        values[motor_index(m)] = intensity
    return tuple(values)


def direction_frames(
    state: DirectionState,
    tick_ms: int,
    span_ms: int,
    intensity: int = DEFAULT_INTENSITY,
) -> FrameSequence:
    """A span of the pulsing-pair display, sampled at frame starts."""
    n = -(-span_ms // tick_ms)
    return FrameSequence(
        tick_ms, tuple(direction_frame(state, f * tick_ms, intensity) for f in range(n))
    )


def sample_from_json(obj) -> OdometrySample:
    """Validate one ingestion record; raises ValueError on any malformation."""
    if not isinstance(obj, dict):
        raise ValueError("odometry record must be a JSON object")
    try:
        return OdometrySample(
            t=int(obj["t"]), x=float(obj["x"]), y=float(obj["y"]), theta=float(obj["theta"])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad odometry record: {exc}") from exc


def load_odometry_jsonl(path) -> tuple[list[OdometrySample], int]:
    """Read a replay file (one JSON sample per line); returns (samples,
    rejected-line count). Malformed lines are skipped, not fatal."""
    import json
    from pathlib import Path

    samples: list[OdometrySample] = []
    rejected = 0
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            samples.append(sample_from_json(json.loads(line)))
        except (json.JSONDecodeError, ValueError):
            rejected += 1
    return samples, rejected


class DirectionTracker:
    """Stream processor: odometry samples in, snapshot DirectionState out.

    North auto-calibrates on the first sample (and can be re-pinned via
    :meth:`calibrate`). A hysteresis margin around sector boundaries stops
    the displayed pair from flickering when the heading jitters on a
    boundary. Readers always see a whole DirectionState, never a torn one.
    """

    def __init__(
        self,
        horizon_ms: int = DEFAULT_HORIZON_MS,
        speed_threshold: float = DEFAULT_SPEED_THRESHOLD,
        hysteresis_deg: float = DEFAULT_HYSTERESIS_DEG,
        ring: BandRing | None = None,
    ):
        self.horizon_ms = horizon_ms
        self.speed_threshold = speed_threshold
        self.hysteresis_deg = hysteresis_deg
        self.ring = ring or band_ring()
        self.north_offset: float | None = None
        self._window: deque[OdometrySample] = deque()
        self._last_t: int | None = None
        self._state: DirectionState | None = None

    def ingest(self, sample: OdometrySample) -> DirectionState:
        if self._last_t is not None and sample.t <= self._last_t:
            raise NonMonotonicTimestamp(
                f"sample t={sample.t} not after previous t={self._last_t}"
            )
        self._last_t = sample.t
        if self.north_offset is None:
            self.north_offset = calibrate_north(sample)

        self._window.append(sample)
        while len(self._window) > 2 and sample.t - self._window[1].t >= self.horizon_ms:
            self._window.popleft()

        phi = heading_from(sample.theta, self.north_offset)
        sector = self._sector_with_hysteresis(phi)
        motion = self._motion()
        self._state = DirectionState(sector, motion, sector_to_pair(sector, self.ring))
        return self._state

    def calibrate(self, sample: OdometrySample | None = None) -> float:
        """Re-pin north to the given or most recent sample's heading."""
        ref = sample or (self._window[-1] if self._window else None)
        if ref is None:
            raise InsufficientSamples("no odometry sample to calibrate from")
        self.north_offset = calibrate_north(ref)
        if self._state is not None:
            phi = heading_from(ref.theta, self.north_offset)
            sector = quantize_heading(phi)
            self._state = DirectionState(
                sector, self._state.motion, sector_to_pair(sector, self.ring)
            )
        return self.north_offset

    def state(self) -> DirectionState | None:
        return self._state

    def _sector_with_hysteresis(self, phi: float) -> int:
        raw = quantize_heading(phi)
        if self._state is None:
            return raw
        current = self._state.sector
        if raw == current:
            return current
        # stay in the displayed sector until phi leaves it by the margin
        offset = phi - current * SECTOR_WIDTH_DEG
        offset = (offset + 180.0) % 360.0 - 180.0
        if abs(offset) <= SECTOR_WIDTH_DEG / 2 + self.hysteresis_deg:
            return current
        return raw

    def _motion(self) -> Motion:
        window = list(self._window)
        try:
            return classify_motion(window, self.horizon_ms, self.speed_threshold)
        except InsufficientSamples:
            return Motion.STATIC
