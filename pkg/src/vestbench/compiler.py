"""Compiles declarative vibrotactile patterns into fixed-rate motor frames.

A pattern is an ordered list of primitives (pulse trains, sweeps, spirals,
expanding waves, static shapes, band wraps) played back-to-back and
optionally repeated. Compilation samples the pattern timeline at the frame
start of every tick, so identical inputs always produce byte-identical
frame sequences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .vest import (
    N_MOTORS,
    MotorId,
    Panel,
    Region,
    band_ring,
    motor_from_index,
    motor_index,
    region as lookup_region,
)

DEFAULT_TICK_MS = 20
MIN_TICK_MS = 5
MAX_TICK_MS = 100

# One tick's intensity command for all 40 motors, in motor_index order.
MotorFrame = tuple[int, ...]
BLANK_FRAME: MotorFrame = (0,) * N_MOTORS


class PatternError(ValueError):
    pass


class InvalidSpec(PatternError):
    """The spec violates a structural rule; see .violations."""

    def __init__(self, violations: Sequence[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class TickTooCoarse(PatternError):
    """A primitive is shorter than one tick and would never render."""


class PrimitiveKind(str, Enum):
    PULSE = "pulse"
    SWEEP = "sweep"
    SPIRAL = "spiral"
    EXPAND_CONTRACT = "expand_contract"
    STATIC_SHAPE = "static_shape"
    BAND_WRAP = "band_wrap"


@dataclass(frozen=True)
class Primitive:
    """One rendering step of a pattern.

    `target` is either a named Region or an explicit ordered motor path
    (order matters for sweeps). `count`/`gap_ms` shape pulse trains; a
    pulse's span includes the gap after every pulse, so trains tile evenly
    when repeated. `expand_only` limits EXPAND_CONTRACT to its outward
    phase (explosion-like).
    """

    kind: PrimitiveKind
    target: Region | tuple[MotorId, ...]
    duration_ms: int
    intensity: int
    count: int = 1
    gap_ms: int = 0
    expand_only: bool = False

    def motors(self) -> tuple[MotorId, ...]:
        """Target motors in rendering order."""
        if isinstance(self.target, Region):
            if self.kind is PrimitiveKind.BAND_WRAP and set(self.target.motors) == set(
                band_ring().motors
            ):
                return band_ring().motors
            if self.kind is PrimitiveKind.SPIRAL:
                return spiral_order(self.target)
            return self.target.sorted_motors()
        return self.target

    def span_ms(self) -> int:
        if self.kind is PrimitiveKind.PULSE:
            return self.count * (self.duration_ms + self.gap_ms)
        return self.duration_ms


@dataclass(frozen=True)
class PatternSpec:
    name: str
    primitives: tuple[Primitive, ...]
    repeat: int = 1

    def span_ms(self) -> int:
        return self.repeat * sum(p.span_ms() for p in self.primitives)


@dataclass(frozen=True)
class FrameSequence:
    tick_ms: int
    frames: tuple[MotorFrame, ...]

    @property
    def duration_ms(self) -> int:
        return len(self.frames) * self.tick_ms

    def __add__(self, other: "FrameSequence") -> "FrameSequence":
        if other.tick_ms != self.tick_ms:
            raise ValueError("cannot concatenate frame sequences with different ticks")
        return FrameSequence(self.tick_ms, self.frames + other.frames)


def validate(spec: PatternSpec, tick_ms: int = DEFAULT_TICK_MS) -> list[str]:
    """Rule violations as "Rule@where" strings; empty iff compile succeeds."""
    violations: list[str] = []
    if not spec.primitives:
        violations.append("NonEmptyPrimitives@spec")
    if spec.repeat < 1:
        violations.append("RepeatRange@spec")
    for i, p in enumerate(spec.primitives):
        if not isinstance(p.target, Region) and len(p.target) == 0:
            violations.append(f"PathNonEmpty@{i}")
        elif p.kind is PrimitiveKind.SPIRAL and isinstance(p.target, Region):
            motors = p.target.motors
            if len({m.panel for m in motors}) > 1:
                violations.append(f"SpiralSinglePanel@{i}")
        if not 1 <= p.intensity <= 100:
            violations.append(f"IntensityRange@{i}")
        if p.duration_ms <= 0:
            violations.append(f"DurationPositive@{i}")
        elif p.duration_ms < tick_ms:
            violations.append(f"TickTooCoarse@{i}")
        if p.count < 1:
            violations.append(f"CountRange@{i}")
        if p.gap_ms < 0:
            violations.append(f"GapRange@{i}")
    return violations


def compile(spec: PatternSpec, tick_ms: int = DEFAULT_TICK_MS) -> FrameSequence:
    """Render a spec to frames sampled at the start of each tick."""
    if not MIN_TICK_MS <= tick_ms <= MAX_TICK_MS:
        raise ValueError(f"tick_ms must be in [{MIN_TICK_MS},{MAX_TICK_MS}], got {tick_ms}")
    violations = validate(spec, tick_ms)
    if violations:
        coarse = [v for v in violations if v.startswith("TickTooCoarse")]
        if coarse and len(coarse) == len(violations):
            raise TickTooCoarse("; ".join(coarse))
        raise InvalidSpec(violations)

    spans = [p.span_ms() for p in spec.primitives]
    cycle_ms = sum(spans)
    total_ms = spec.repeat * cycle_ms
    starts: list[int] = []
    acc = 0
    for s in spans:
        starts.append(acc)
        acc += s

    renderers = [_Renderer(p, tick_ms) for p in spec.primitives]

    n_frames = -(-total_ms // tick_ms)  # ceil
    frames: list[MotorFrame] = []
    for f in range(n_frames):
        t = (f * tick_ms) % cycle_ms
        # locate the primitive whose [start, start+span) window holds t
        idx = len(spans) - 1
        for j, s0 in enumerate(starts):
            if t < s0 + spans[j]:
                idx = j
                break
        frames.append(renderers[idx].frame_at(t - starts[idx]))
    return FrameSequence(tick_ms, tuple(frames))


class _Renderer:
    """Per-primitive sampler: local time (ms) -> MotorFrame."""

    def __init__(self, p: Primitive, tick_ms: int):
        self.p = p
        self.tick_ms = tick_ms
        self.motors = p.motors()
        self.indices = [motor_index(m) for m in self.motors]
        if p.kind is PrimitiveKind.EXPAND_CONTRACT:
            self.shells = _shells(self.motors)

    def frame_at(self, t: int) -> MotorFrame:
        p = self.p
        if p.kind is PrimitiveKind.PULSE:
            on = (t % (p.duration_ms + p.gap_ms)) < p.duration_ms
            return _frame(self.indices, p.intensity) if on else BLANK_FRAME
        if p.kind is PrimitiveKind.STATIC_SHAPE:
            return _frame(self.indices, p.intensity)
        if p.kind in (PrimitiveKind.SWEEP, PrimitiveKind.SPIRAL, PrimitiveKind.BAND_WRAP):
            return self._sweep_at(t)
        return self._wave_at(t)

    def _sweep_at(self, t: int) -> MotorFrame:
        # each motor holds its step window plus one extra tick, overlapping
        # the next motor for continuous apparent motion
        n = len(self.indices)
        step = self.p.duration_ms / n
        active = [
            idx
            for i, idx in enumerate(self.indices)
            if i * step <= t < min((i + 1) * step + self.tick_ms, self.p.duration_ms)
        ]
        return _frame(active, self.p.intensity)

    def _wave_at(self, t: int) -> MotorFrame:
        shells = self.shells
        deepest = len(shells) - 1
        n_steps = deepest + 1 if self.p.expand_only else 2 * deepest + 1
        step = self.p.duration_ms / n_steps
        j = min(int(t // step), n_steps - 1)
        shell = j if j <= deepest else 2 * deepest - j
        return _frame(shells[shell], self.p.intensity)


def _frame(indices: Iterable[int], intensity: int) -> MotorFrame:
    values = [0] * N_MOTORS
    for i in indices:
        values[i] = intensity
    return tuple(values)


def _shells(motors: Sequence[MotorId]) -> list[list[int]]:
    """Concentric motor shells by Chebyshev grid distance from the centre.

    The centre is the set of target motors nearest the per-panel centroid;
    multi-panel targets expand around each panel's own centre.
    """
    by_panel: dict[Panel, list[MotorId]] = {}
    for m in motors:
        by_panel.setdefault(m.panel, []).append(m)

    dist: dict[MotorId, int] = {}
    for panel_motors in by_panel.values():
        cr = sum(m.row for m in panel_motors) / len(panel_motors)
        cc = sum(m.col for m in panel_motors) / len(panel_motors)
        closeness = {m: max(abs(m.row - cr), abs(m.col - cc)) for m in panel_motors}
        centre = [m for m in panel_motors if closeness[m] == min(closeness.values())]
        for m in panel_motors:
            dist[m] = min(max(abs(m.row - c.row), abs(m.col - c.col)) for c in centre)

    deepest = max(dist.values())
    shells: list[list[int]] = [[] for _ in range(deepest + 1)]
    for m, d in dist.items():
        shells[d].append(motor_index(m))
    return [sorted(s) for s in shells if s] or [[]]


def spiral_order(
    target: Region | Sequence[MotorId], start: MotorId | None = None
) -> tuple[MotorId, ...]:
    """Order a single-panel motor set as an outward square spiral.

    Starts at `start` (default: the motor nearest the set's centroid), then
    walks growing Chebyshev rings clockwise from each ring's top-left
    corner, skipping cells outside the set.
    """
    motors = list(target.motors) if isinstance(target, Region) else list(target)
    panels = {m.panel for m in motors}
    if len(panels) != 1:
        raise ValueError("spiral ordering is defined for single-panel targets")
    panel = panels.pop()
    cells = {(m.row, m.col) for m in motors}

    if start is not None:
        if (start.row, start.col) not in cells or start.panel is not panel:
            raise ValueError("spiral start must be one of the target motors")
        first = (start.row, start.col)
    else:
        cr = sum(r for r, _ in cells) / len(cells)
        cc = sum(c for _, c in cells) / len(cells)
        first = min(cells, key=lambda rc: (max(abs(rc[0] - cr), abs(rc[1] - cc)), rc))
    start_cell = first

    order = [start_cell]
    seen = {start_cell}
    d = 1
    while len(order) < len(cells):
        r0, c0 = start_cell[0] - d, start_cell[1] - d
        ring: list[tuple[int, int]] = []
        ring += [(r0, c0 + k) for k in range(2 * d)]  # top edge, left to right
        ring += [(r0 + k, c0 + 2 * d) for k in range(2 * d)]  # right edge, down
        ring += [(r0 + 2 * d, c0 + 2 * d - k) for k in range(2 * d)]  # bottom, right to left
        ring += [(r0 + 2 * d - k, c0) for k in range(2 * d)]  # left edge, up
        for rc in ring:
            if rc in cells and rc not in seen:
                order.append(rc)
                seen.add(rc)
        d += 1
    return tuple(MotorId(panel, r, c) for r, c in order)


# ---------------------------------------------------------------------------
# serialization: PatternSpec <-> JSON, FrameSequence <-> CSV
# ---------------------------------------------------------------------------


def primitive_to_dict(p: Primitive) -> dict:
    d: dict = {"kind": p.kind.value}
    if isinstance(p.target, Region):
        d["region"] = p.target.name
    else:
        d["motors"] = [[m.panel.value, m.row, m.col] for m in p.target]
    d["duration_ms"] = p.duration_ms
    d["intensity"] = p.intensity
    if p.count != 1:
        d["count"] = p.count
    if p.gap_ms != 0:
        d["gap_ms"] = p.gap_ms
    if p.expand_only:
        d["expand_only"] = True
    return d


def primitive_from_dict(d: dict) -> Primitive:
    if "region" in d:
        target: Region | tuple[MotorId, ...] = lookup_region(d["region"])
    else:
        target = tuple(MotorId(Panel(p), r, c) for p, r, c in d["motors"])
    return Primitive(
        kind=PrimitiveKind(d["kind"]),
        target=target,
        duration_ms=int(d["duration_ms"]),
        intensity=int(d["intensity"]),
        count=int(d.get("count", 1)),
        gap_ms=int(d.get("gap_ms", 0)),
        expand_only=bool(d.get("expand_only", False)),
    )


def spec_to_dict(spec: PatternSpec) -> dict:
    d: dict = {"name": spec.name, "primitives": [primitive_to_dict(p) for p in spec.primitives]}
    if spec.repeat != 1:
        d["repeat"] = spec.repeat
    return d


def spec_from_dict(d: dict) -> PatternSpec:
    return PatternSpec(
        name=d["name"],
        primitives=tuple(primitive_from_dict(p) for p in d["primitives"]),
        repeat=int(d.get("repeat", 1)),
    )


def spec_to_json(spec: PatternSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2) + "\n"


def spec_from_json(text: str) -> PatternSpec:
    return spec_from_dict(json.loads(text))


CSV_HEADER = "t_ms," + ",".join(f"m{i}" for i in range(N_MOTORS))


def frames_to_csv(seq: FrameSequence) -> str:
    """Bit-exact dump format shared by compiler goldens and mixer dumps."""
    lines = [CSV_HEADER]
    for f, frame in enumerate(seq.frames):
        lines.append(f"{f * seq.tick_ms}," + ",".join(str(v) for v in frame))
    return "\n".join(lines) + "\n"


def frames_from_csv(text: str) -> FrameSequence:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("bad frame CSV header")
    frames: list[MotorFrame] = []
    times: list[int] = []
    for ln in lines[1:]:
        parts = ln.split(",")
        times.append(int(parts[0]))
        frames.append(tuple(int(v) for v in parts[1:]))
    if len(times) >= 2:
        tick = times[1] - times[0]
    else:
        tick = DEFAULT_TICK_MS
    return FrameSequence(tick, tuple(frames))


def concat(sequences: Sequence[FrameSequence]) -> FrameSequence:
    if not sequences:
        raise ValueError("nothing to concatenate")
    out = sequences[0]
    for s in sequences[1:]:
        out = out + s
    return out
