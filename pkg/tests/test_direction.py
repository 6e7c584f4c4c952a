import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vestbench import direction, vest
from vestbench.direction import (
    DirectionState,
    DirectionTracker,
    InsufficientSamples,
    Motion,
    NonMonotonicTimestamp,
    OdometrySample,
    calibrate_north,
    classify_motion,
    direction_frames,
    heading_from,
    quantize_heading,
    sector_to_pair,
)
from vestbench.vest import MotorId, Panel


def samples_moving(speed_m_s, n=7, dt_ms=100, theta=0.0):
    step = speed_m_s * dt_ms / 1000.0
    return [OdometrySample(t=i * dt_ms, x=i * step, y=0.0, theta=theta) for i in range(n)]


class TestCalibration:
    def test_self_calibration(self):
        offset = calibrate_north(OdometrySample(0, 0, 0, 90))
        assert offset == 90
        assert heading_from(90, offset) == 0

    def test_subtraction(self):
        offset = calibrate_north(OdometrySample(0, 0, 0, 90))
        assert heading_from(135, offset) == 45

    def test_wraparound(self):
        offset = calibrate_north(OdometrySample(0, 0, 0, 10))
        assert heading_from(350, offset) == 340


class TestQuantize:
    def test_identity(self):
        assert quantize_heading(0.0) == 0

    def test_ninety(self):
        assert quantize_heading(90.0) == 2

    def test_boundary_rounds_up(self):
        # hand check: (22.5 + 22.5) / 45 = 1.0 -> sector 1
        assert quantize_heading(22.5) == 1
        assert quantize_heading(67.5) == 2
        assert quantize_heading(337.5) == 0

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            quantize_heading(360.0)
        with pytest.raises(ValueError):
            quantize_heading(-0.1)

    def test_exhaustive_sweep_contiguous_sectors(self):
        # 0.1 deg grid over [0, 360): each sector is one contiguous arc
        # (mod wrap) spanning 45 +/- 0.1 deg
        step = 0.1
        n = int(360 / step)
        sectors = [quantize_heading((i * step) % 360.0) for i in range(n)]
        changes = sum(1 for a, b in zip(sectors, sectors[1:] + sectors[:1]) if a != b)
        assert changes == 8
        spans = {s: sectors.count(s) * step for s in range(8)}
        assert all(abs(spans[s] - 45.0) <= 0.1 + 1e-9 for s in spans)


class TestSectorPairs:
    def test_sector0_central_front(self):
        assert set(sector_to_pair(0)) == {MotorId(Panel.FRONT, 4, 1), MotorId(Panel.FRONT, 4, 2)}

    def test_sector4_central_back(self):
        assert set(sector_to_pair(4)) == {MotorId(Panel.BACK, 4, 1), MotorId(Panel.BACK, 4, 2)}

    def test_laterals_mix_panels(self):
        for lateral in (2, 6):
            panels = {m.panel for m in sector_to_pair(lateral)}
            assert panels == {Panel.FRONT, Panel.BACK}
        for sector in (0, 1, 3, 4, 5, 7):
            panels = {m.panel for m in sector_to_pair(sector)}
            assert len(panels) == 1

    def test_pairs_are_ring_adjacent(self):
        ring = vest.band_ring().motors
        for sector in range(8):
            a, b = sector_to_pair(sector)
            ia, ib = ring.index(a), ring.index(b)
            assert (ib - ia) % 8 in (1, 7)

    def test_pair_azimuths_straddle_sector_centre(self):
        ring = vest.band_ring()
        for sector in range(8):
            azimuths = sorted(
                direction.normalize_deg(ring.azimuth_of(m)) for m in sector_to_pair(sector)
            )
            centre = sector * 45.0
            want = sorted(
                direction.normalize_deg(a) for a in (centre - 22.5, centre + 22.5)
            )
            assert azimuths == want


class TestMotion:
    def test_stationary(self):
        window = [OdometrySample(t=i * 100, x=1.0, y=2.0, theta=0) for i in range(7)]
        # identical positions collapse to zero distance
        assert classify_motion(window) is Motion.STATIC

    def test_moving_half_metre_per_second(self):
        assert classify_motion(samples_moving(0.5)) is Motion.MOVING

    def test_below_threshold_is_static(self):
        # 0.04 m/s over 600 ms: distance 0.024 m / 0.6 s = 0.04 <= 0.05
        assert classify_motion(samples_moving(0.04)) is Motion.STATIC

    def test_insufficient_samples(self):
        with pytest.raises(InsufficientSamples):
            classify_motion([OdometrySample(0, 0, 0, 0)])
        with pytest.raises(InsufficientSamples):
            classify_motion(
                [OdometrySample(0, 0, 0, 0), OdometrySample(100, 0.1, 0, 0)], horizon_ms=500
            )


class TestDirectionFrames:
    def _state(self, motion):
        return DirectionState(0, motion, sector_to_pair(0))

    def test_static_four_bursts_per_second(self):
        seq = direction_frames(self._state(Motion.STATIC), tick_ms=20, span_ms=1000)
        active = [any(f) for f in seq.frames]
        bursts = sum(1 for a, b in zip([False] + active, active) if b and not a)
        assert bursts == 4

    def test_moving_one_burst_per_second(self):
        seq = direction_frames(self._state(Motion.MOVING), tick_ms=20, span_ms=1000)
        active = [any(f) for f in seq.frames]
        bursts = sum(1 for a, b in zip([False] + active, active) if b and not a)
        assert bursts == 1

    def test_pair_closure(self):
        seq = direction_frames(self._state(Motion.STATIC), tick_ms=20, span_ms=1000)
        pair_idx = {vest.motor_index(m) for m in sector_to_pair(0)}
        nonzero = set()
        for frame in seq.frames:
            nonzero |= {i for i, v in enumerate(frame) if v}
        assert nonzero <= pair_idx and len(nonzero) <= 2


class TestNorthInvariance:
    @settings(max_examples=50, deadline=None)
    @given(
        st.floats(min_value=0, max_value=359.9),
        st.floats(min_value=-720, max_value=720),
    )
    def test_constant_offset_cancels(self, theta, shift):
        north = 100.0
        base = quantize_heading(heading_from(theta, north))
        shifted = quantize_heading(heading_from(theta + shift, north + shift))
        assert base == shifted


class TestTracker:
    def test_auto_calibrates_on_first_sample(self):
        tracker = DirectionTracker()
        state = tracker.ingest(OdometrySample(0, 0, 0, 90))
        assert tracker.north_offset == 90
        assert state.sector == 0

    def test_recalibrate(self):
        tracker = DirectionTracker()
        tracker.ingest(OdometrySample(0, 0, 0, 90))
        tracker.ingest(OdometrySample(100, 0, 0, 135))
        assert tracker.state().sector == 1
        tracker.calibrate()
        assert tracker.north_offset == 135
        assert tracker.state().sector == 0

    def test_monotonic_timestamps_enforced(self):
        tracker = DirectionTracker()
        tracker.ingest(OdometrySample(100, 0, 0, 0))
        with pytest.raises(NonMonotonicTimestamp):
            tracker.ingest(OdometrySample(100, 0, 0, 0))
        with pytest.raises(NonMonotonicTimestamp):
            tracker.ingest(OdometrySample(50, 0, 0, 0))
        # rejected samples leave the stream usable
        tracker.ingest(OdometrySample(200, 0, 0, 0))

    def test_motion_static_until_window_fills(self):
        tracker = DirectionTracker()
        state = tracker.ingest(OdometrySample(0, 0, 0, 0))
        assert state.motion is Motion.STATIC
        for i in range(1, 8):
            state = tracker.ingest(OdometrySample(i * 100, i * 0.05, 0, 0))
        assert state.motion is Motion.MOVING

    def test_hysteresis_boundary_oscillation_toggles_at_most_once(self):
        # phi oscillates within +/-2 deg of the 22.5 deg boundary
        tracker = DirectionTracker()
        tracker.ingest(OdometrySample(0, 0, 0, 0))  # north = 0
        displayed = []
        phi_cycle = [20.5, 24.5, 20.5, 24.5, 20.5, 24.5, 21.0, 24.0]
        for i, phi in enumerate(phi_cycle):
            state = tracker.ingest(OdometrySample((i + 1) * 100, 0, 0, phi))
            displayed.append(state.sector)
        toggles = sum(1 for a, b in zip(displayed, displayed[1:]) if a != b)
        assert toggles <= 1

    def test_hysteresis_still_switches_on_real_turns(self):
        tracker = DirectionTracker()
        tracker.ingest(OdometrySample(0, 0, 0, 0))
        state = tracker.ingest(OdometrySample(100, 0, 0, 90))
        assert state.sector == 2
        state = tracker.ingest(OdometrySample(200, 0, 0, 180))
        assert state.sector == 4


def test_sample_parsing_and_replay_file(tmp_path):
    good = direction.sample_from_json({"t": 10, "x": 1.5, "y": -2, "theta": 365})
    assert good.theta == 5.0
    with pytest.raises(ValueError):
        direction.sample_from_json({"t": 10, "x": 1.5})
    with pytest.raises(ValueError):
        direction.sample_from_json([1, 2, 3])

    path = tmp_path / "odo.jsonl"
    path.write_text(
        '{"t": 0, "x": 0, "y": 0, "theta": 0}\n'
        "not json\n"
        '{"t": 100, "x": 1, "y": 0, "theta": 0}\n'
        '{"bad": true}\n'
    )
    samples, rejected = direction.load_odometry_jsonl(path)
    assert len(samples) == 2 and rejected == 2
