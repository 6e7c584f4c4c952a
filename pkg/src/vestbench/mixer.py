"""Merges the continuous direction channel with queued event patterns into
one frame stream at the global tick.

Queued events play serially (FIFO, to completion) and each is prefixed by
the attention alert. Direction and event frames combine by elementwise max;
by default the direction channel is ducked while an event plays so patterns
are never masked by the always-on channel.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable

from . import compiler
from .compiler import BLANK_FRAME, DEFAULT_TICK_MS, FrameSequence, MotorFrame
from .direction import DEFAULT_INTENSITY, DirectionState, direction_frame
from .library import CodingStrategy, EventKind, PatternLibrary, default_library


class QueueFull(RuntimeError):
    """The bounded event queue is full; the producer must drop or retry."""


@dataclass(frozen=True)
class MixerConfig:
    tick_ms: int = DEFAULT_TICK_MS
    direction_enabled: bool = True
    duck_direction_during_event: bool = True
    queue_capacity: int = 16
    direction_intensity: int = DEFAULT_INTENSITY


@dataclass
class EventJob:
    event: EventKind
    strategy: CodingStrategy
    enqueued_at: int
    frames: FrameSequence  # alert prefix frames first, then the pattern


@dataclass
class PlaybackInterval:
    job: EventJob
    start_ms: int
    end_ms: int | None  # None while still playing


DirectionSource = Callable[[], "DirectionState | None"]


class Mixer:
    """Single-consumer frame mixer; `tick` is driven by one real-time loop.

    Cross-thread producers only touch the bounded queue via `enqueue`;
    `tick` never blocks. Direction state arrives as whole snapshots from
    `direction_source`.
    """

    def __init__(
        self,
        config: MixerConfig = MixerConfig(),
        library: PatternLibrary | None = None,
        direction_source: DirectionSource | None = None,
        on_job_start: Callable[[EventJob, int], None] | None = None,
        on_job_end: Callable[[EventJob, int, int], None] | None = None,
    ):
        self.config = config
        self.library = library or default_library()
        self.direction_source = direction_source
        self.on_job_start = on_job_start
        self.on_job_end = on_job_end
        self._queue: deque[EventJob] = deque()
        self._active: EventJob | None = None
        self._cursor = 0
        self._active_start = 0
        self._timeline: list[PlaybackInterval] = []

    # -- producers ----------------------------------------------------------

    def enqueue(self, event: EventKind, strategy: CodingStrategy, now: int) -> EventJob:
        """Compile alert + pattern once and append the job FIFO."""
        if len(self._queue) >= self.config.queue_capacity:
            raise QueueFull(f"event queue at capacity {self.config.queue_capacity}")
        tick = self.config.tick_ms
        frames = compiler.compile(self.library.alert_prefix(), tick) + compiler.compile(
            self.library.pattern_for(event, strategy), tick
        )
        job = EventJob(event=event, strategy=strategy, enqueued_at=now, frames=frames)
        self._queue.append(job)
        return job

    # -- the real-time loop --------------------------------------------------

    def tick(self, now: int) -> MotorFrame:
        if self._active is None and self._queue:
            self._active = self._queue.popleft()
            self._cursor = 0
            self._active_start = now
            self._timeline.append(PlaybackInterval(self._active, now, None))
            if self.on_job_start:
                self.on_job_start(self._active, now)

        event_frame = BLANK_FRAME
        job_playing = self._active is not None
        if self._active is not None:
            event_frame = self._active.frames.frames[self._cursor]
            self._cursor += 1
            if self._cursor >= len(self._active.frames.frames):
                end = self._active_start + len(self._active.frames.frames) * self.config.tick_ms
                self._timeline[-1].end_ms = end
                if self.on_job_end:
                    self.on_job_end(self._active, self._active_start, end)
                self._active = None

        dir_frame = BLANK_FRAME
        if (
            self.config.direction_enabled
            and self.direction_source is not None
            and not (self.config.duck_direction_during_event and job_playing)
        ):
            state = self.direction_source()
            if state is not None:
                dir_frame = direction_frame(state, now, self.config.direction_intensity)

        if dir_frame is BLANK_FRAME:
            return tuple(min(v, 100) for v in event_frame)
        return tuple(min(max(e, d), 100) for e, d in zip(event_frame, dir_frame))

    # -- introspection -------------------------------------------------------

    @property
    def queue_depth(self) -> int:
        return len(self._queue)

    @property
    def busy(self) -> bool:
        return self._active is not None or bool(self._queue)

    def active_timeline(
        self, window: tuple[int, int] | None = None
    ) -> list[PlaybackInterval]:
        """Realized playback intervals (ground truth for trial metrics)."""
        if window is None:
            return list(self._timeline)
        lo, hi = window
        return [
            iv
            for iv in self._timeline
            if iv.start_ms < hi and (iv.end_ms is None or iv.end_ms > lo)
        ]
