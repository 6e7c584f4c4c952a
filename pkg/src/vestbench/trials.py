"""Trial protocol and session analytics.

Builds seeded stimulus schedules (balanced event mix, random feasible
onsets), attributes participant responses to stimuli, and computes the
session metrics: identification accuracy, selection delay, and confusion
matrices, partitioned by coding strategy and mental-load condition.
Session logs are JSON-lines with millisecond timestamps; analytics run
offline on immutable logs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from random import Random
from typing import Iterable, Mapping, Sequence

from . import compiler
from .library import CodingStrategy, EventKind, PatternLibrary, default_library

DEFAULT_DURATION_MS = 60_000
DEFAULT_MIN_GAP_MS = 2_000
DEFAULT_STIMULI_PER_TRIAL = 8
TRAINING_CAP_MS = 10 * 60_000  # soft cap, recorded in the log


class InfeasibleSchedule(ValueError):
    pass


class EmptySession(ValueError):
    pass


class NoMatches(ValueError):
    pass


class MixedStrategies(ValueError):
    pass


class Load(str, Enum):
    NONE = "none"
    ARITHMETIC = "arithmetic"
    VISUAL_TRACKING = "visual_tracking"


def load_for_trial_index(index: int) -> Load:
    """Load condition by 1-based trial number: 4-5 arithmetic, 6 visual."""
    if index in (4, 5):
        return Load.ARITHMETIC
    if index == 6:
        return Load.VISUAL_TRACKING
    return Load.NONE


@dataclass(frozen=True)
class TrialSchedule:
    seed: int
    duration_ms: int
    stimuli: tuple[tuple[EventKind, int], ...]  # (event, onset_ms), onset-sorted
    min_gap_ms: int

    def __post_init__(self) -> None:
        onsets = [t for _, t in self.stimuli]
        if onsets != sorted(onsets):
            raise ValueError("stimulus onsets must be sorted")

    def check_feasible(self, durations_ms: Mapping[EventKind, int]) -> None:
        """Assert the generation invariants against known playback lengths."""
        for (e0, t0), (_, t1) in zip(self.stimuli, self.stimuli[1:]):
            if t1 - t0 < durations_ms[e0] + self.min_gap_ms:
                raise InfeasibleSchedule(f"onset gap {t1 - t0} too small after {e0.value}")
        if self.stimuli:
            last_e, last_t = self.stimuli[-1]
            if last_t + durations_ms[last_e] > self.duration_ms:
                raise InfeasibleSchedule("last stimulus does not fit in the session")


@dataclass(frozen=True)
class ResponseEvent:
    t: int
    chosen: EventKind
    client_t: int | None = None


@dataclass
class TrialSession:
    schedule: TrialSchedule
    responses: list[ResponseEvent]
    strategy: CodingStrategy
    load: Load = Load.NONE
    participant: str = "anonymous"


def playback_durations(
    strategy: CodingStrategy,
    library: PatternLibrary | None = None,
    tick_ms: int = compiler.DEFAULT_TICK_MS,
) -> dict[EventKind, int]:
    """Realized playback length per event: alert prefix + pattern, in ms."""
    lib = library or default_library()
    alert_frames = len(compiler.compile(lib.alert_prefix(), tick_ms).frames)
    out = {}
    for event in EventKind:
        n = len(compiler.compile(lib.pattern_for(event, strategy), tick_ms).frames)
        out[event] = (alert_frames + n) * tick_ms
    return out


def make_schedule(
    seed: int,
    n_stimuli: int = DEFAULT_STIMULI_PER_TRIAL,
    duration_ms: int = DEFAULT_DURATION_MS,
    min_gap_ms: int = DEFAULT_MIN_GAP_MS,
    durations_ms: Mapping[EventKind, int] | int | None = None,
) -> TrialSchedule:
    """Deterministic balanced schedule: each event appears floor(n/8) or
    ceil(n/8) times, onsets uniform over the feasible slack."""
    if n_stimuli < 1:
        raise InfeasibleSchedule("need at least one stimulus")
    if durations_ms is None:
        durations_ms = playback_durations(CodingStrategy.SEMANTIC)
    if isinstance(durations_ms, int):
        durations_ms = {e: durations_ms for e in EventKind}

    rng = Random(seed)
    events = list(EventKind)
    order: list[EventKind] = events * (n_stimuli // len(events))
    order += rng.sample(events, n_stimuli % len(events))
    rng.shuffle(order)

    durs = [durations_ms[e] for e in order]
    required = sum(durs) + (n_stimuli - 1) * min_gap_ms
    slack = duration_ms - required
    if slack < 0:
        raise InfeasibleSchedule(
            f"{n_stimuli} stimuli need {required} ms, only {duration_ms} ms available"
        )

    cuts = sorted(rng.randint(0, slack) for _ in range(n_stimuli))
    stimuli = []
    base = 0
    for i, event in enumerate(order):
        stimuli.append((event, cuts[i] + base))
        base += durs[i] + min_gap_ms
    return TrialSchedule(seed, duration_ms, tuple(stimuli), min_gap_ms)


# ---------------------------------------------------------------------------
# response attribution and metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MatchedStimulus:
    stimulus: EventKind
    onset_ms: int
    response: EventKind | None  # None = Miss
    response_t: int | None

    @property
    def is_miss(self) -> bool:
        return self.response is None

    @property
    def is_correct(self) -> bool:
        return self.response == self.stimulus

    @property
    def delay_ms(self) -> int | None:
        return None if self.response_t is None else self.response_t - self.onset_ms


@dataclass(frozen=True)
class MatchResult:
    matched: tuple[MatchedStimulus, ...]
    spurious: tuple[ResponseEvent, ...]


def match_responses(session: TrialSession) -> MatchResult:
    """Attribute each response to the most recent unanswered stimulus whose
    onset precedes it; leftovers are Spurious, unanswered stimuli are Miss."""
    stimuli = session.schedule.stimuli
    taken: dict[int, ResponseEvent] = {}
    spurious: list[ResponseEvent] = []
    for resp in sorted(session.responses, key=lambda r: r.t):
        candidates = [
            i for i, (_, onset) in enumerate(stimuli) if onset <= resp.t and i not in taken
        ]
        if candidates:
            taken[max(candidates)] = resp
        else:
            spurious.append(resp)
    matched = tuple(
        MatchedStimulus(
            stimulus=event,
            onset_ms=onset,
            response=taken[i].chosen if i in taken else None,
            response_t=taken[i].t if i in taken else None,
        )
        for i, (event, onset) in enumerate(stimuli)
    )
    return MatchResult(matched, tuple(spurious))


def identification_accuracy(result: MatchResult) -> float:
    """Correct matches over all stimuli (misses count in the denominator)."""
    if not result.matched:
        raise EmptySession("no stimuli to score")
    correct = sum(1 for m in result.matched if m.is_correct)
    return correct / len(result.matched)


@dataclass(frozen=True)
class DelayStats:
    delays_ms: tuple[int, ...]
    mean_ms: float


def selection_delay(result: MatchResult) -> DelayStats:
    """Stimulus-onset-to-response delays for answered stimuli (misses excluded)."""
    delays = tuple(m.delay_ms for m in result.matched if m.delay_ms is not None)
    if not delays:
        raise NoMatches("no answered stimuli")
    return DelayStats(delays, sum(delays) / len(delays))


EVENT_ORDER: tuple[EventKind, ...] = tuple(EventKind)


@dataclass
class ConfusionMatrix:
    """Row = stimulus, column = response, plus a per-row miss count."""

    counts: list[list[int]] = field(
        default_factory=lambda: [[0] * len(EVENT_ORDER) for _ in EVENT_ORDER]
    )
    misses: list[int] = field(default_factory=lambda: [0] * len(EVENT_ORDER))

    def add(self, m: MatchedStimulus) -> None:
        row = EVENT_ORDER.index(m.stimulus)
        if m.response is None:
            self.misses[row] += 1
        else:
            self.counts[row][EVENT_ORDER.index(m.response)] += 1

    def row_total(self, row: int) -> int:
        return sum(self.counts[row]) + self.misses[row]

    def to_dict(self) -> dict:
        return {
            "events": [e.value for e in EVENT_ORDER],
            "counts": [list(r) for r in self.counts],
            "misses": list(self.misses),
        }

    def to_text(self) -> str:
        width = max(len("stimulus"), *(len(e.value) for e in EVENT_ORDER)) + 1
        head = "stimulus".ljust(width) + " ".join(f"{i:>4d}" for i in range(len(EVENT_ORDER)))
        lines = [head + " miss"]
        for i, e in enumerate(EVENT_ORDER):
            row = " ".join(f"{c:>4d}" for c in self.counts[i])
            lines.append(e.value.ljust(width) + row + f" {self.misses[i]:>4d}")
        return "\n".join(lines)


def confusion(sessions: Sequence[TrialSession]) -> ConfusionMatrix:
    strategies = {s.strategy for s in sessions}
    if len(strategies) > 1:
        raise MixedStrategies(f"sessions mix strategies: {sorted(s.value for s in strategies)}")
    matrix = ConfusionMatrix()
    for session in sessions:
        for m in match_responses(session).matched:
            matrix.add(m)
    return matrix


# ---------------------------------------------------------------------------
# session logs (JSON-lines) and aggregate reports
# ---------------------------------------------------------------------------


def session_to_jsonl(session: TrialSession) -> str:
    lines = [
        json.dumps(
            {
                "kind": "session",
                "t": 0,
                "participant": session.participant,
                "strategy": session.strategy.value,
                "load": session.load.value,
                "seed": session.schedule.seed,
                "duration_ms": session.schedule.duration_ms,
                "min_gap_ms": session.schedule.min_gap_ms,
            }
        )
    ]
    records: list[tuple[int, dict]] = []
    for event, onset in session.schedule.stimuli:
        records.append((onset, {"kind": "stimulus", "t": onset, "event": event.value}))
    for r in session.responses:
        rec = {"kind": "response", "t": r.t, "chosen": r.chosen.value}
        if r.client_t is not None:
            rec["client_t"] = r.client_t
        records.append((r.t, rec))
    records.sort(key=lambda pair: pair[0])
    lines += [json.dumps(rec) for _, rec in records]
    return "\n".join(lines) + "\n"


def session_from_jsonl(text: str | Iterable[str]) -> TrialSession:
    """Rebuild a TrialSession from a log; unknown record kinds are skipped."""
    lines = text.splitlines() if isinstance(text, str) else list(text)
    header: dict = {}
    stimuli: list[tuple[EventKind, int]] = []
    responses: list[ResponseEvent] = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        kind = rec.get("kind")
        if kind == "session":
            header = rec
        elif kind == "stimulus":
            stimuli.append((EventKind(rec["event"]), int(rec["t"])))
        elif kind == "response":
            responses.append(
                ResponseEvent(int(rec["t"]), EventKind(rec["chosen"]), rec.get("client_t"))
            )
    if not header:
        raise EmptySession("log has no session record")
    stimuli.sort(key=lambda pair: pair[1])
    schedule = TrialSchedule(
        seed=int(header.get("seed", 0)),
        duration_ms=int(header.get("duration_ms", DEFAULT_DURATION_MS)),
        stimuli=tuple(stimuli),
        min_gap_ms=int(header.get("min_gap_ms", DEFAULT_MIN_GAP_MS)),
    )
    return TrialSession(
        schedule=schedule,
        responses=responses,
        strategy=CodingStrategy(header["strategy"]),
        load=Load(header.get("load", "none")),
        participant=header.get("participant", "anonymous"),
    )


def report_from_sessions(sessions: Sequence[TrialSession]) -> dict:
    """Aggregate accuracy/delay/confusion, partitioned by coding strategy."""
    by_strategy: dict = {}
    for strategy in CodingStrategy:
        group = [s for s in sessions if s.strategy is strategy]
        if not group:
            continue
        results = [match_responses(s) for s in group]
        accuracies = [identification_accuracy(r) for r in results if r.matched]
        delays = [d for r in results for d in (m.delay_ms for m in r.matched) if d is not None]
        matrix = confusion(group)
        by_strategy[strategy.value] = {
            "n_sessions": len(group),
            "n_stimuli": sum(len(r.matched) for r in results),
            "n_spurious": sum(len(r.spurious) for r in results),
            "accuracy_mean": sum(accuracies) / len(accuracies) if accuracies else None,
            "delay_mean_ms": sum(delays) / len(delays) if delays else None,
            "confusion": matrix.to_dict(),
            "by_load": _load_breakdown(group),
        }
    return {"by_strategy": by_strategy}


def _load_breakdown(sessions: Sequence[TrialSession]) -> dict:
    out = {}
    for load in Load:
        group = [s for s in sessions if s.load is load]
        if not group:
            continue
        results = [match_responses(s) for s in group]
        accuracies = [identification_accuracy(r) for r in results if r.matched]
        delays = [d for r in results for d in (m.delay_ms for m in r.matched) if d is not None]
        out[load.value] = {
            "n_sessions": len(group),
            "accuracy_mean": sum(accuracies) / len(accuracies) if accuracies else None,
            "delay_mean_ms": sum(delays) / len(delays) if delays else None,
        }
    return out


def format_report_text(report: dict) -> str:
    lines = []
    for strategy, stats in report.get("by_strategy", {}).items():
        lines.append(f"== {strategy} ==")
        lines.append(
            f"sessions: {stats['n_sessions']}  stimuli: {stats['n_stimuli']}"
            f"  spurious: {stats['n_spurious']}"
        )
        acc = stats["accuracy_mean"]
        delay = stats["delay_mean_ms"]
        lines.append(f"accuracy: {acc * 100:.2f}%" if acc is not None else "accuracy: n/a")
        lines.append(f"mean delay: {delay:.0f} ms" if delay is not None else "mean delay: n/a")
        for load, sub in stats.get("by_load", {}).items():
            sub_acc = sub["accuracy_mean"]
            sub_delay = sub["delay_mean_ms"]
            lines.append(
                f"  load={load}: sessions={sub['n_sessions']}"
                + (f" accuracy={sub_acc * 100:.2f}%" if sub_acc is not None else "")
                + (f" delay={sub_delay:.0f}ms" if sub_delay is not None else "")
            )
        matrix = ConfusionMatrix(
            counts=[list(r) for r in stats["confusion"]["counts"]],
            misses=list(stats["confusion"]["misses"]),
        )
        lines.append(matrix.to_text())
        lines.append("")
    if "path" in report:
        p = report["path"]
        lines.append("== path similarity ==")
        lines.append(
            f"records: {p['n_records']}  turn agreement: {p['turns_passed']}"
            f" ({p['turn_pass_rate'] * 100:.0f}%)  endpoint agreement: {p['endpoints_passed']}"
            f" ({p['endpoint_pass_rate'] * 100:.0f}%)"
        )
    return "\n".join(lines).rstrip() + "\n"
