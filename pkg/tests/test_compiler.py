import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vestbench import compiler, vest
from vestbench.compiler import (
    BLANK_FRAME,
    FrameSequence,
    InvalidSpec,
    PatternSpec,
    Primitive,
    PrimitiveKind,
    TickTooCoarse,
)
from vestbench.vest import MotorId, Panel, region


def pulse(duration=150, gap=100, count=3, intensity=80, target=None):
    return Primitive(
        PrimitiveKind.PULSE,
        target if target is not None else region("chest"),
        duration,
        intensity,
        count=count,
        gap_ms=gap,
    )


def active_indices(frame):
    return {i for i, v in enumerate(frame) if v}


def bursts(frames):
    """Maximal runs of consecutive frames with any non-zero intensity."""
    runs = []
    start = None
    for i, frame in enumerate(frames):
        if any(frame):
            if start is None:
                start = i
        elif start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(frames) - 1))
    return runs


def pulse_oracle_frames(count, duration, gap, tick):
    """Independent oracle: sample the analytic pulse on/off schedule at
    frame starts over the span count*(duration+gap)."""
    span = count * (duration + gap)
    n = math.ceil(span / tick)
    out = []
    for f in range(n):
        t = f * tick
        k = t // (duration + gap)
        out.append(t - k * (duration + gap) < duration)
    return out


class TestPulseArithmetic:
    # Pulse{count 3, 150 ms on, 100 ms gap} at tick 20: span 750 ms ->
    # 38 frames; the active span (last pulse ends at 650 ms) covers the
    # first ceil(650/20)=33 frames, the rest are trailing zeros.
    def test_frame_count(self):
        seq = compiler.compile(PatternSpec("p", (pulse(),)))
        assert len(seq.frames) == 38

    def test_matches_independent_oracle(self):
        seq = compiler.compile(PatternSpec("p", (pulse(),)))
        oracle = pulse_oracle_frames(3, 150, 100, 20)
        got = [any(f) for f in seq.frames]
        assert got == oracle

    def test_active_span_and_bursts(self):
        seq = compiler.compile(PatternSpec("p", (pulse(),)))
        assert bursts(seq.frames) == [(0, 7), (13, 19), (25, 32)]
        assert all(not any(f) for f in seq.frames[33:])

    def test_pulse_uses_region_motors_at_intensity(self):
        seq = compiler.compile(PatternSpec("p", (pulse(),)))
        chest = {vest.motor_index(m) for m in region("chest").motors}
        for frame in seq.frames:
            if any(frame):
                assert active_indices(frame) == chest
                assert {frame[i] for i in chest} == {80}


class TestStaticShape:
    def test_constant_primitive(self):
        square = tuple(MotorId(Panel.FRONT, r, c) for r in (0, 1) for c in (0, 1))
        prim = Primitive(PrimitiveKind.STATIC_SHAPE, square, 400, 100)
        seq = compiler.compile(PatternSpec("s", (prim,)))
        assert len(seq.frames) == 20
        expected = {vest.motor_index(m) for m in square}
        assert all(active_indices(f) == expected for f in seq.frames)
        assert all(set(f) <= {0, 100} for f in seq.frames)


class TestSweep:
    def test_one_tick_overlap(self):
        path = tuple(MotorId(Panel.FRONT, 0, c) for c in range(4))
        prim = Primitive(PrimitiveKind.SWEEP, path, 400, 70)
        seq = compiler.compile(PatternSpec("sweep", (prim,)))
        # step = 100 ms = 5 frames; motor i holds frames [5i, 5(i+1)+1)
        idx = [vest.motor_index(m) for m in path]
        assert active_indices(seq.frames[0]) == {idx[0]}
        assert active_indices(seq.frames[5]) == {idx[0], idx[1]}  # overlap tick
        assert active_indices(seq.frames[6]) == {idx[1]}
        assert active_indices(seq.frames[19]) == {idx[3]}

    def test_order_of_first_activation_follows_path(self):
        path = tuple(MotorId(Panel.BACK, 2, c) for c in (3, 1, 0, 2))
        prim = Primitive(PrimitiveKind.SWEEP, path, 800, 50)
        seq = compiler.compile(PatternSpec("sweep", (prim,)))
        first_seen = {}
        for i, frame in enumerate(seq.frames):
            for m in active_indices(frame):
                first_seen.setdefault(m, i)
        ordered = sorted(first_seen, key=first_seen.get)
        assert ordered == [vest.motor_index(m) for m in path]


class TestExpandContract:
    def test_expand_then_contract_shells(self):
        prim = Primitive(PrimitiveKind.EXPAND_CONTRACT, region("front_panel"), 1000, 60)
        seq = compiler.compile(PatternSpec("wave", (prim,)))
        centre = {vest.motor_index(m) for m in region("centre_front").motors}
        # starts and ends at the centre shell, reaches the outermost between
        assert active_indices(seq.frames[0]) == centre
        assert active_indices(seq.frames[-1]) == centre
        sizes = [len(active_indices(f)) for f in seq.frames]
        assert max(sizes) > len(centre)

    def test_expand_only_never_contracts(self):
        prim = Primitive(
            PrimitiveKind.EXPAND_CONTRACT, region("front_panel"), 600, 60, expand_only=True
        )
        seq = compiler.compile(PatternSpec("boom", (prim,)))
        centre = region("centre_front").motors

        def shell_distance(frame):
            motors = [vest.motor_from_index(i) for i in active_indices(frame)]
            return min(
                max(abs(m.row - c.row), abs(m.col - c.col)) for m in motors for c in centre
            )

        distances = [shell_distance(f) for f in seq.frames]
        assert distances == sorted(distances)  # wavefront only moves outward
        assert distances[0] == 0 and distances[-1] == 2
        assert active_indices(seq.frames[0]) == {vest.motor_index(m) for m in centre}


class TestDeterminismAndClosure:
    def test_compile_twice_identical(self):
        spec = PatternSpec("p", (pulse(), pulse(duration=120, gap=40, count=2)), repeat=2)
        assert compiler.compile(spec) == compiler.compile(spec)

    def test_intensity_closure_and_motor_closure(self):
        spec = PatternSpec(
            "mix",
            (
                pulse(intensity=100),
                Primitive(PrimitiveKind.SWEEP, region("stomach"), 500, 1),
            ),
        )
        seq = compiler.compile(spec)
        allowed = {vest.motor_index(m) for m in region("chest").motors} | {
            vest.motor_index(m) for m in region("stomach").motors
        }
        for frame in seq.frames:
            assert all(0 <= v <= 100 for v in frame)
            assert active_indices(frame) <= allowed
        assert any(any(f) for f in seq.frames)


@st.composite
def primitive_strategy(draw):
    kind = draw(st.sampled_from(list(PrimitiveKind)))
    names = ["chest", "neck_base", "lung_area", "centre_front", "stomach", "front_panel"]
    if kind is PrimitiveKind.SPIRAL:
        names = ["chest", "neck_base", "lung_area", "centre_front", "front_panel"]
    target = region(draw(st.sampled_from(names)))
    duration = draw(st.integers(min_value=20, max_value=1500))
    intensity = draw(st.integers(min_value=1, max_value=100))
    count = draw(st.integers(min_value=1, max_value=4)) if kind is PrimitiveKind.PULSE else 1
    gap = draw(st.integers(min_value=0, max_value=300)) if kind is PrimitiveKind.PULSE else 0
    return Primitive(kind, target, duration, intensity, count=count, gap_ms=gap)


@st.composite
def spec_strategy(draw):
    prims = tuple(draw(st.lists(primitive_strategy(), min_size=1, max_size=3)))
    return PatternSpec("gen", prims, repeat=draw(st.integers(min_value=1, max_value=3)))


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(spec_strategy())
    def test_duration_additivity(self, spec):
        seq = compiler.compile(spec)
        assert len(seq.frames) == math.ceil(spec.span_ms() / seq.tick_ms)

    @settings(max_examples=60, deadline=None)
    @given(spec_strategy())
    def test_intensity_closure(self, spec):
        seq = compiler.compile(spec)
        assert all(0 <= v <= 100 for f in seq.frames for v in f)

    @settings(max_examples=40, deadline=None)
    @given(spec_strategy())
    def test_time_scaling(self, spec):
        halved = PatternSpec(
            spec.name,
            tuple(
                Primitive(
                    p.kind,
                    p.target,
                    max(20, p.duration_ms // 2),
                    p.intensity,
                    count=p.count,
                    gap_ms=p.gap_ms // 2,
                )
                for p in spec.primitives
            ),
            repeat=spec.repeat,
        )
        if any(p.duration_ms // 2 < 20 for p in spec.primitives):
            return  # clamped below half; scaling claim does not apply
        full = len(compiler.compile(spec).frames)
        half = len(compiler.compile(halved).frames)
        per_primitive_slack = len(spec.primitives) * spec.repeat
        assert abs(half - full / 2) <= per_primitive_slack


class TestValidation:
    def test_empty_primitives(self):
        spec = PatternSpec("empty", ())
        assert compiler.validate(spec) == ["NonEmptyPrimitives@spec"]
        with pytest.raises(InvalidSpec):
            compiler.compile(spec)

    def test_intensity_zero(self):
        spec = PatternSpec("bad", (pulse(intensity=0),))
        assert compiler.validate(spec) == ["IntensityRange@0"]

    def test_violation_names_offending_primitive(self):
        spec = PatternSpec("bad", (pulse(), pulse(intensity=200), pulse(duration=-5)))
        violations = compiler.validate(spec)
        assert "IntensityRange@1" in violations
        assert "DurationPositive@2" in violations

    def test_tick_too_coarse(self):
        spec = PatternSpec("short", (pulse(duration=10),))
        assert compiler.validate(spec, tick_ms=20) == ["TickTooCoarse@0"]
        with pytest.raises(TickTooCoarse):
            compiler.compile(spec, 20)
        # fine at a 5 ms tick
        assert compiler.validate(spec, tick_ms=5) == []

    def test_tick_bounds(self):
        spec = PatternSpec("p", (pulse(),))
        with pytest.raises(ValueError):
            compiler.compile(spec, 4)
        with pytest.raises(ValueError):
            compiler.compile(spec, 101)

    def test_valid_spec_no_violations(self):
        assert compiler.validate(PatternSpec("ok", (pulse(),))) == []


class TestSerialization:
    def test_spec_json_round_trip(self):
        spec = PatternSpec(
            "rt",
            (
                pulse(),
                Primitive(
                    PrimitiveKind.SWEEP,
                    tuple(MotorId(Panel.FRONT, 0, c) for c in range(4)),
                    300,
                    55,
                ),
            ),
            repeat=2,
        )
        assert compiler.spec_from_json(compiler.spec_to_json(spec)) == spec

    def test_frames_csv_round_trip(self):
        seq = compiler.compile(PatternSpec("p", (pulse(),)))
        text = compiler.frames_to_csv(seq)
        assert compiler.frames_from_csv(text) == seq
        assert text.splitlines()[0].startswith("t_ms,m0,")

    def test_csv_rejects_bad_header(self):
        with pytest.raises(ValueError):
            compiler.frames_from_csv("nope\n1,2\n")


def test_concat_requires_matching_tick():
    a = FrameSequence(20, (BLANK_FRAME,))
    b = FrameSequence(10, (BLANK_FRAME,))
    with pytest.raises(ValueError):
        _ = a + b
