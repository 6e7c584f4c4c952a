"""Synthetic responders and cohorts for validating the analytics pipeline.

These stand in for human participants so the metrics code can be checked
against engineered ground truth: a responder maps each stimulus to a
(choice, delay) or a miss, and cohort generators build whole session sets
with exactly known aggregate statistics.
"""

from __future__ import annotations

from random import Random
from typing import Callable, Mapping, Sequence

from .library import CodingStrategy, EventKind
from .trials import (
    Load,
    ResponseEvent,
    TrialSchedule,
    TrialSession,
    make_schedule,
    playback_durations,
)

# (stimulus, onset_ms) -> (chosen, delay_ms) or None for a miss
Responder = Callable[[EventKind, int], "tuple[EventKind, int] | None"]


def constant_latency_responder(latency_ms: int = 1500) -> Responder:
    """Always correct, always after exactly `latency_ms`."""

    def respond(stimulus: EventKind, onset_ms: int):
        return stimulus, latency_ms

    return respond


def scripted_confuser(
    mapping: Mapping[EventKind, EventKind], latency_ms: int = 1500
) -> Responder:
    """Answers mapping[stimulus] (identity for unmapped events)."""

    def respond(stimulus: EventKind, onset_ms: int):
        return mapping.get(stimulus, stimulus), latency_ms

    return respond


def distribution_responder(
    table: Mapping[EventKind, Mapping[EventKind, float]],
    seed: int,
    latency_ms: int = 1500,
) -> Responder:
    """Samples the answer from a per-event response distribution."""
    rng = Random(seed)

    def respond(stimulus: EventKind, onset_ms: int):
        dist = table[stimulus]
        choices = list(dist.keys())
        weights = [dist[c] for c in choices]
        return rng.choices(choices, weights=weights, k=1)[0], latency_ms

    return respond


def simulate_session(
    schedule: TrialSchedule,
    responder: Responder,
    strategy: CodingStrategy,
    load: Load = Load.NONE,
    participant: str = "sim",
) -> TrialSession:
    responses = []
    for event, onset in schedule.stimuli:
        answer = responder(event, onset)
        if answer is not None:
            chosen, delay = answer
            responses.append(ResponseEvent(onset + delay, chosen))
    return TrialSession(schedule, responses, strategy, load, participant)


def simulate_cohort(
    responder: Responder,
    n_sessions: int,
    stimuli_per_session: int,
    strategy: CodingStrategy,
    seed: int,
    duration_ms: int | None = None,
) -> list[TrialSession]:
    durations = playback_durations(strategy)
    if duration_ms is None:
        # generous budget so any stimulus count stays feasible
        duration_ms = stimuli_per_session * (max(durations.values()) + 4000)
    return [
        simulate_session(
            make_schedule(
                seed + i,
                stimuli_per_session,
                duration_ms=duration_ms,
                durations_ms=durations,
            ),
            responder,
            strategy,
            participant=f"sim-{i:03d}",
        )
        for i in range(n_sessions)
    ]


def exact_accuracy_cohort(
    rate: float,
    n_sessions: int,
    stimuli_per_session: int,
    strategy: CodingStrategy,
    seed: int,
    latency_ms: int = 1500,
) -> list[TrialSession]:
    """Cohort whose pooled accuracy is exactly round(rate * n) / n.

    Bernoulli sampling would leave ~0.4pp noise at n=10,000, so correctness
    flags are allocated exactly and only their placement is randomized; wrong
    answers pick a uniformly random other event.
    """
    rng = Random(seed)
    total = n_sessions * stimuli_per_session
    n_correct = round(rate * total)
    flags = [True] * n_correct + [False] * (total - n_correct)
    rng.shuffle(flags)

    durations = playback_durations(strategy)
    duration_ms = stimuli_per_session * (max(durations.values()) + 4000)
    sessions = []
    cursor = 0
    for i in range(n_sessions):
        schedule = make_schedule(
            seed + 1 + i, stimuli_per_session, duration_ms=duration_ms, durations_ms=durations
        )
        responses = []
        for event, onset in schedule.stimuli:
            if flags[cursor]:
                chosen = event
            else:
                others = [e for e in EventKind if e is not event]
                chosen = rng.choice(others)
            cursor += 1
            responses.append(ResponseEvent(onset + latency_ms, chosen))
        sessions.append(TrialSession(schedule, responses, strategy, participant=f"sim-{i:03d}"))
    return sessions


def empirical_row_distributions(
    sessions: Sequence[TrialSession],
) -> dict[EventKind, dict[EventKind, float]]:
    """Observed response distribution per stimulus event (misses excluded)."""
    from .trials import match_responses

    counts: dict[EventKind, dict[EventKind, int]] = {e: {} for e in EventKind}
    for session in sessions:
        for m in match_responses(session).matched:
            if m.response is not None:
                counts[m.stimulus][m.response] = counts[m.stimulus].get(m.response, 0) + 1
    out = {}
    for event, row in counts.items():
        total = sum(row.values())
        out[event] = {r: c / total for r, c in row.items()} if total else {}
    return out


def total_variation(
    p: Mapping[EventKind, float], q: Mapping[EventKind, float]
) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
