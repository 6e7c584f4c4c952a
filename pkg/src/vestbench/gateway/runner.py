"""Deterministic session execution and replay.

A session is reduced to a plan: which tick each odometry sample is consumed
at, which tick each event is enqueued at, and how many ticks run in total.
`execute_plan` is the single code path that turns a plan into frames, used
by headless trial runs, by replay, and (step-for-step) by the live gateway
loop — so a session archived from any of them replays bit-identically.
Frame timestamps are logical (tick_index * tick_ms); wall clock never
enters the frame stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .. import compiler
from ..compiler import FrameSequence, MotorFrame, frames_to_csv
from ..direction import DirectionTracker, NonMonotonicTimestamp, OdometrySample
from ..library import CodingStrategy, EventKind, PatternLibrary, load_library
from ..mixer import Mixer, MixerConfig, QueueFull
from ..trials import (
    DEFAULT_DURATION_MS,
    DEFAULT_MIN_GAP_MS,
    DEFAULT_STIMULI_PER_TRIAL,
    Load,
    TrialSession,
    make_schedule,
    playback_durations,
    session_from_jsonl,
)
from .store import SessionStore

FrameSink = Callable[[int, MotorFrame], None]


@dataclass
class RunConfig:
    strategy: CodingStrategy = CodingStrategy.SEMANTIC
    seed: int = 0
    mode: str = "trial"  # "trial" schedules stimuli from the seed; "training" plays triggers
    participant: str = "anonymous"
    load: Load = Load.NONE
    n_stimuli: int = DEFAULT_STIMULI_PER_TRIAL
    duration_ms: int = DEFAULT_DURATION_MS
    min_gap_ms: int = DEFAULT_MIN_GAP_MS
    tick_ms: int = compiler.DEFAULT_TICK_MS
    direction_enabled: bool = True
    duck_direction_during_event: bool = True
    patterns_dir: str | None = None

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "seed": self.seed,
            "mode": self.mode,
            "participant": self.participant,
            "load": self.load.value,
            "n_stimuli": self.n_stimuli,
            "duration_ms": self.duration_ms,
            "min_gap_ms": self.min_gap_ms,
            "tick_ms": self.tick_ms,
            "direction_enabled": self.direction_enabled,
            "duck_direction_during_event": self.duck_direction_during_event,
            "patterns_dir": self.patterns_dir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(
            strategy=CodingStrategy(d["strategy"]),
            seed=int(d["seed"]),
            mode=d.get("mode", "trial"),
            participant=d.get("participant", "anonymous"),
            load=Load(d.get("load", "none")),
            n_stimuli=int(d.get("n_stimuli", DEFAULT_STIMULI_PER_TRIAL)),
            duration_ms=int(d.get("duration_ms", DEFAULT_DURATION_MS)),
            min_gap_ms=int(d.get("min_gap_ms", DEFAULT_MIN_GAP_MS)),
            tick_ms=int(d.get("tick_ms", compiler.DEFAULT_TICK_MS)),
            direction_enabled=bool(d.get("direction_enabled", True)),
            duck_direction_during_event=bool(d.get("duck_direction_during_event", True)),
            patterns_dir=d.get("patterns_dir"),
        )


@dataclass
class SessionPlan:
    tick_ms: int
    n_ticks: int
    # (tick_index, event, strategy, source) in tick order
    enqueues: list[tuple[int, EventKind, CodingStrategy, str]] = field(default_factory=list)
    # (consume_tick_index, sample) in tick order
    odometry: list[tuple[int, OdometrySample]] = field(default_factory=list)
    # (tick_index, north_offset)
    calibrations: list[tuple[int, float]] = field(default_factory=list)
    direction_enabled: bool = True
    duck_direction_during_event: bool = True
    north_offset: float | None = None


@dataclass
class ExecResult:
    frames: FrameSequence
    events: list[dict]
    rejected: int


def execute_plan(
    plan: SessionPlan, library: PatternLibrary, frame_sink: FrameSink | None = None
) -> ExecResult:
    """Run a plan tick by tick. Per tick: odometry, calibrations, enqueues,
    then the mixer; this order is the replay contract."""
    events: list[dict] = []
    rejected = 0

    tracker = DirectionTracker()
    if plan.north_offset is not None:
        tracker.north_offset = plan.north_offset

    def log_start(job, start_ms: int) -> None:
        events.append(
            {
                "kind": "stimulus",
                "t": start_ms,
                "event": job.event.value,
                "strategy": job.strategy.value,
                "duration_ms": len(job.frames.frames) * plan.tick_ms,
            }
        )

    mixer = Mixer(
        MixerConfig(
            tick_ms=plan.tick_ms,
            direction_enabled=plan.direction_enabled,
            duck_direction_during_event=plan.duck_direction_during_event,
        ),
        library,
        direction_source=tracker.state,
        on_job_start=log_start,
    )

    odo_i = enq_i = cal_i = 0
    frames: list[MotorFrame] = []
    for k in range(plan.n_ticks):
        now = k * plan.tick_ms
        while odo_i < len(plan.odometry) and plan.odometry[odo_i][0] <= k:
            _, sample = plan.odometry[odo_i]
            odo_i += 1
            try:
                tracker.ingest(sample)
            except NonMonotonicTimestamp as exc:
                rejected += 1
                events.append({"kind": "protocol_error", "tick": k, "detail": str(exc)})
                continue
            events.append(
                {
                    "kind": "odometry",
                    "tick": k,
                    "t": sample.t,
                    "x": sample.x,
                    "y": sample.y,
                    "theta": sample.theta,
                }
            )
        while cal_i < len(plan.calibrations) and plan.calibrations[cal_i][0] <= k:
            _, offset = plan.calibrations[cal_i]
            cal_i += 1
            tracker.north_offset = offset
            events.append({"kind": "calibrate", "tick": k, "north_offset": offset})
        while enq_i < len(plan.enqueues) and plan.enqueues[enq_i][0] <= k:
            _, event, strategy, source = plan.enqueues[enq_i]
            enq_i += 1
            try:
                mixer.enqueue(event, strategy, now)
            except QueueFull:
                events.append({"kind": "queue_full", "tick": k, "event": event.value})
                continue
            if source == "trigger":
                events.append(
                    {
                        "kind": "trigger",
                        "tick": k,
                        "event": event.value,
                        "strategy": strategy.value,
                    }
                )
        frame = mixer.tick(now)
        frames.append(frame)
        if frame_sink is not None:
            frame_sink(k, frame)

    return ExecResult(FrameSequence(plan.tick_ms, tuple(frames)), events, rejected)


def ticks_for(duration_ms: int, tick_ms: int) -> int:
    return -(-duration_ms // tick_ms)


def tick_of(t_ms: int, tick_ms: int) -> int:
    """First tick whose logical time is >= t_ms (when a sample is consumed)."""
    return -(-t_ms // tick_ms)


def monotonic_odometry(
    samples: Sequence[OdometrySample],
) -> tuple[list[OdometrySample], int]:
    """Drop out-of-order samples the way the live gateway rejects them."""
    kept: list[OdometrySample] = []
    rejected = 0
    last: int | None = None
    for s in samples:
        if last is not None and s.t <= last:
            rejected += 1
            continue
        kept.append(s)
        last = s.t
    return kept, rejected


@dataclass
class RunResult:
    config: RunConfig
    frames_csv: str
    events_jsonl: str
    events: list[dict]
    session: TrialSession
    rejected: int
    session_id: str | None = None


def run_trial(
    config: RunConfig,
    odometry: Sequence[OdometrySample] = (),
    responder=None,
    store: SessionStore | None = None,
    frame_sink: FrameSink | None = None,
    library: PatternLibrary | None = None,
) -> RunResult:
    """Headless deterministic trial: (patterns, seed, odometry) -> artifacts."""
    lib = library or load_library(config.patterns_dir)
    plan = SessionPlan(
        tick_ms=config.tick_ms,
        n_ticks=ticks_for(config.duration_ms, config.tick_ms),
        direction_enabled=config.direction_enabled,
        duck_direction_during_event=config.duck_direction_during_event,
    )

    if config.mode == "trial":
        durations = playback_durations(config.strategy, lib, config.tick_ms)
        schedule = make_schedule(
            config.seed,
            config.n_stimuli,
            duration_ms=config.duration_ms,
            min_gap_ms=config.min_gap_ms,
            durations_ms=durations,
        )
        plan.enqueues = [
            (tick_of(onset, config.tick_ms), event, config.strategy, "schedule")
            for event, onset in schedule.stimuli
        ]

    clean, pre_rejected = monotonic_odometry(sorted(odometry, key=lambda s: s.t))
    plan.odometry = [(tick_of(s.t, config.tick_ms), s) for s in clean]

    result = execute_plan(plan, lib, frame_sink)

    events = [dict({"kind": "session", "t": 0}, **config.to_dict())]
    events += result.events
    if responder is not None:
        responses = []
        for rec in result.events:
            if rec["kind"] != "stimulus":
                continue
            answer = responder(EventKind(rec["event"]), rec["t"])
            if answer is not None:
                chosen, delay = answer
                responses.append(
                    {"kind": "response", "t": rec["t"] + delay, "chosen": chosen.value}
                )
        events += sorted(responses, key=lambda r: r["t"])
    events.append({"kind": "end", "t": config.duration_ms})

    events_jsonl = "".join(_dumps(rec) for rec in events)
    frames_csv = frames_to_csv(result.frames)

    session_id = None
    if store is not None:
        handle = store.create(config.to_dict(), prefix=config.mode)
        for rec in events:
            handle.append_event(rec)
        handle.write_frames(frames_csv)
        handle.finalize()
        session_id = handle.id

    return RunResult(
        config=config,
        frames_csv=frames_csv,
        events_jsonl=events_jsonl,
        events=events,
        session=session_from_jsonl(events_jsonl),
        rejected=pre_rejected + result.rejected,
        session_id=session_id,
    )


def _dumps(rec: dict) -> str:
    import json

    return json.dumps(rec) + "\n"


def plan_from_log(config: RunConfig, events: list[dict], library: PatternLibrary) -> SessionPlan:
    """Rebuild the execution plan of an archived session from its log."""
    plan = SessionPlan(
        tick_ms=config.tick_ms,
        n_ticks=ticks_for(config.duration_ms, config.tick_ms),
        direction_enabled=config.direction_enabled,
        duck_direction_during_event=config.duck_direction_during_event,
    )
    enqueues: list[tuple[int, EventKind, CodingStrategy, str]] = []
    if config.mode == "trial":
        durations = playback_durations(config.strategy, library, config.tick_ms)
        schedule = make_schedule(
            config.seed,
            config.n_stimuli,
            duration_ms=config.duration_ms,
            min_gap_ms=config.min_gap_ms,
            durations_ms=durations,
        )
        enqueues += [
            (tick_of(onset, config.tick_ms), event, config.strategy, "schedule")
            for event, onset in schedule.stimuli
        ]
    last_tick = 0
    for rec in events:
        kind = rec.get("kind")
        if kind == "trigger":
            enqueues.append(
                (
                    int(rec["tick"]),
                    EventKind(rec["event"]),
                    CodingStrategy(rec["strategy"]),
                    "trigger",
                )
            )
        elif kind == "odometry":
            sample = OdometrySample(
                t=int(rec["t"]), x=float(rec["x"]), y=float(rec["y"]), theta=float(rec["theta"])
            )
            plan.odometry.append((int(rec["tick"]), sample))
        elif kind == "calibrate":
            plan.calibrations.append((int(rec["tick"]), float(rec["north_offset"])))
        elif kind == "north_offset_at_start":
            plan.north_offset = float(rec["north_offset"])
        if "tick" in rec:
            last_tick = max(last_tick, int(rec["tick"]))
    plan.n_ticks = max(plan.n_ticks, last_tick + 1)
    plan.enqueues = sorted(enqueues, key=lambda e: e[0])
    return plan


def replay_session(
    store: SessionStore,
    session_id: str,
    frame_sink: FrameSink | None = None,
    library: PatternLibrary | None = None,
) -> str:
    """Re-execute an archived session; returns the frame CSV, which is
    byte-identical to the archived dump."""
    handle = store.get(session_id)
    config = RunConfig.from_dict(handle.config)
    lib = library or load_library(config.patterns_dir)
    plan = plan_from_log(config, handle.events(), lib)
    result = execute_plan(plan, lib, frame_sink)
    return frames_to_csv(result.frames)
