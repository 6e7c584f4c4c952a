"""HTTP + WebSocket gateway: odometry ingestion, pattern triggering, trial
orchestration, frame streaming, and session persistence.

All state lives on one asyncio loop: request handlers only queue work or
mutate snapshots, and the tick task drains queues at tick boundaries in the
same order the deterministic runner uses, so live sessions archive logs
that replay bit-identically. Frame timestamps are logical tick time; the
wall clock only paces the loop.
"""

from __future__ import annotations

import asyncio
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, PlainTextResponse

from .. import compiler, path_eval
from ..compiler import BLANK_FRAME, MotorFrame, frames_to_csv, spec_to_dict
from ..direction import (
    DirectionTracker,
    OdometrySample,
    direction_frame,
    sample_from_json,
)
from ..library import CodingStrategy, EventKind, PatternLibrary, load_library
from ..mixer import Mixer, MixerConfig, QueueFull
from ..trials import TRAINING_CAP_MS, Load, report_from_sessions, session_from_jsonl
from ..vest import export_topology
from .runner import RunConfig, replay_session, ticks_for
from .store import SessionStore, UnknownSession


@dataclass
class GatewaySettings:
    tick_ms: int = compiler.DEFAULT_TICK_MS
    patterns_dir: str | None = None
    sessions_dir: str = "sessions"
    realtime: bool = True  # False: free-running ticks (benchmarks)
    manual_ticks: bool = False  # ticks only advance via POST /debug/step
    frame_record_cap: int = 500_000


class ActiveSession:
    """One recorded session (trial or training) riding the live loop."""

    def __init__(
        self,
        handle,
        config: RunConfig,
        library: PatternLibrary,
        north_offset: float | None,
        frame_record_cap: int,
    ):
        self.handle = handle
        self.config = config
        self.library = library
        self.frame_record_cap = frame_record_cap
        self.tracker = DirectionTracker()
        if north_offset is not None:
            self.tracker.north_offset = north_offset
            self.log({"kind": "north_offset_at_start", "north_offset": north_offset})
        self.mixer = Mixer(
            MixerConfig(
                tick_ms=config.tick_ms,
                direction_enabled=config.direction_enabled,
                duck_direction_during_event=config.duck_direction_during_event,
            ),
            library,
            direction_source=self.tracker.state,
            on_job_start=self._log_stimulus,
        )
        self.tick = 0
        self.frames: list[MotorFrame] = []
        self.pending_triggers: list[tuple[EventKind, CodingStrategy]] = []
        self.pending_schedule: list[tuple[int, EventKind]] = []
        self.done = False
        self._training_cap_logged = False

        if config.mode == "trial":
            from ..trials import make_schedule, playback_durations

            durations = playback_durations(config.strategy, library, config.tick_ms)
            schedule = make_schedule(
                config.seed,
                config.n_stimuli,
                duration_ms=config.duration_ms,
                min_gap_ms=config.min_gap_ms,
                durations_ms=durations,
            )
            self.pending_schedule = [(onset, event) for event, onset in schedule.stimuli]

    @property
    def now_ms(self) -> int:
        return self.tick * self.config.tick_ms

    def log(self, record: dict) -> None:
        self.handle.append_event(record)

    def _log_stimulus(self, job, start_ms: int) -> None:
        self.log(
            {
                "kind": "stimulus",
                "t": start_ms,
                "event": job.event.value,
                "strategy": job.strategy.value,
                "duration_ms": len(job.frames.frames) * self.config.tick_ms,
            }
        )

    def ingest(self, sample: OdometrySample) -> None:
        self.tracker.ingest(sample)
        self.log(
            {
                "kind": "odometry",
                "tick": self.tick,
                "t": sample.t,
                "x": sample.x,
                "y": sample.y,
                "theta": sample.theta,
            }
        )

    def calibrate(self) -> float:
        offset = self.tracker.calibrate()
        self.log({"kind": "calibrate", "tick": self.tick, "north_offset": offset})
        return offset

    def trigger(self, event: EventKind, strategy: CodingStrategy) -> None:
        self.pending_triggers.append((event, strategy))

    def respond(self, chosen: EventKind, client_t: int | None, rtt_ms: int | None) -> int:
        reconciled = max(0, self.now_ms - (rtt_ms or 0) // 2)
        record = {"kind": "response", "t": reconciled, "chosen": chosen.value}
        if client_t is not None:
            record["client_t"] = client_t
        if rtt_ms is not None:
            record["rtt_ms"] = rtt_ms
        self.log(record)
        return reconciled

    def step(self) -> MotorFrame:
        now = self.now_ms
        while self.pending_schedule and self.pending_schedule[0][0] <= now:
            onset, event = self.pending_schedule.pop(0)
            try:
                self.mixer.enqueue(event, self.config.strategy, now)
            except QueueFull:
                self.log({"kind": "queue_full", "tick": self.tick, "event": event.value})
        for event, strategy in self.pending_triggers:
            try:
                self.mixer.enqueue(event, strategy, now)
                self.log(
                    {
                        "kind": "trigger",
                        "tick": self.tick,
                        "event": event.value,
                        "strategy": strategy.value,
                    }
                )
            except QueueFull:
                self.log({"kind": "queue_full", "tick": self.tick, "event": event.value})
        self.pending_triggers.clear()

        frame = self.mixer.tick(now)
        if len(self.frames) < self.frame_record_cap:
            self.frames.append(frame)
        self.tick += 1

        if self.config.mode == "training" and not self._training_cap_logged and self.now_ms >= TRAINING_CAP_MS:
            self.log({"kind": "training_cap", "t": self.now_ms})
            self._training_cap_logged = True
        if self.config.mode == "trial" and self.tick >= ticks_for(
            self.config.duration_ms, self.config.tick_ms
        ):
            self.done = True
        return frame

    def finalize(self) -> None:
        self.log({"kind": "end", "t": self.now_ms})
        if self.config.mode == "training":
            config = self.config.to_dict()
            config["duration_ms"] = self.now_ms
            self.handle.write_config(config)
        self.handle.write_frames(frames_to_csv(compiler.FrameSequence(self.config.tick_ms, tuple(self.frames))))
        self.handle.finalize()


class LiveEngine:
    """The one real-time loop: idle direction display between sessions,
    session playback while one is active."""

    def __init__(self, settings: GatewaySettings, store: SessionStore, library: PatternLibrary):
        self.settings = settings
        self.store = store
        self.library = library
        self.idle_tracker = DirectionTracker()
        self.global_tick = 0
        self.session: ActiveSession | None = None
        self.pending_odometry: list[OdometrySample] = []
        self.subscribers: set[asyncio.Queue] = set()
        self.odometry_accepted = 0
        self.odometry_rejected = 0
        self._last_t: int | None = None

    # -- ingestion (handlers) -------------------------------------------------

    def submit_odometry(self, obj: Any) -> tuple[bool, str]:
        """Validate and queue one sample; rejects are counted immediately."""
        try:
            sample = sample_from_json(obj)
        except ValueError as exc:
            self.odometry_rejected += 1
            return False, str(exc)
        if self._last_t is not None and sample.t <= self._last_t:
            self.odometry_rejected += 1
            if self.session is not None:
                self.session.log(
                    {
                        "kind": "protocol_error",
                        "tick": self.session.tick,
                        "detail": f"sample t={sample.t} not after previous t={self._last_t}",
                    }
                )
            return False, "non-monotonic timestamp"
        self._last_t = sample.t
        self.odometry_accepted += 1
        self.pending_odometry.append(sample)
        return True, "queued"

    def submit_lines(self, text: str) -> dict:
        accepted = rejected = 0
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                self.odometry_rejected += 1
                rejected += 1
                continue
            ok, _ = self.submit_odometry(obj)
            if ok:
                accepted += 1
            else:
                rejected += 1
        return {"accepted": accepted, "rejected": rejected}

    # -- the loop --------------------------------------------------------------

    def step(self) -> dict:
        self._drain_odometry()
        if self.session is not None:
            frame = self.session.step()
            message = {"t": self.session.now_ms - self.session.config.tick_ms, "i": list(frame)}
            if self.session.done:
                finished = self.session
                self.session = None
                finished.finalize()
                self.broadcast({"kind": "trial_stopped", "session": finished.handle.id})
            self.global_tick += 1
            return message
        now = self.global_tick * self.settings.tick_ms
        state = self.idle_tracker.state()
        frame = direction_frame(state, now) if state is not None else BLANK_FRAME
        self.global_tick += 1
        return {"t": now, "i": list(frame)}

    def _drain_odometry(self) -> None:
        # monotonicity was already enforced at submit, so ingest cannot fail
        for sample in self.pending_odometry:
            self.idle_tracker.ingest(sample)
            if self.session is not None:
                self.session.ingest(sample)
        self.pending_odometry.clear()

    def broadcast(self, message: dict) -> None:
        dead = []
        for q in self.subscribers:
            try:
                q.put_nowait(message)
            except asyncio.QueueFull:
                try:
                    q.get_nowait()
                    q.put_nowait(message)
                except asyncio.QueueEmpty:
                    dead.append(q)
        for q in dead:
            self.subscribers.discard(q)

    # -- session control --------------------------------------------------------

    def start_session(self, config: RunConfig) -> ActiveSession:
        if self.session is not None:
            raise RuntimeError("a session is already active")
        handle = self.store.create(config.to_dict(), prefix=config.mode)
        self.session = ActiveSession(
            handle,
            config,
            self.library,
            north_offset=self.idle_tracker.north_offset,
            frame_record_cap=self.settings.frame_record_cap,
        )
        self.broadcast(
            {
                "kind": f"{config.mode}_started",
                "session": handle.id,
                "duration_ms": config.duration_ms if config.mode == "trial" else None,
                "strategy": config.strategy.value,
            }
        )
        return self.session

    def stop_session(self) -> str:
        if self.session is None:
            raise RuntimeError("no active session")
        finished = self.session
        self.session = None
        finished.finalize()
        self.broadcast({"kind": "trial_stopped", "session": finished.handle.id})
        return finished.handle.id

    def ensure_training_session(self) -> ActiveSession:
        if self.session is None:
            self.start_session(
                RunConfig(mode="training", participant="console", tick_ms=self.settings.tick_ms)
            )
        return self.session  # type: ignore[return-value]


def create_app(settings: GatewaySettings | None = None) -> FastAPI:
    settings = settings or GatewaySettings()
    store = SessionStore(Path(settings.sessions_dir))
    library = load_library(settings.patterns_dir)
    engine = LiveEngine(settings, store, library)

    async def tick_loop() -> None:
        pace = settings.tick_ms / 1000.0 if settings.realtime else 0.0
        while True:
            if settings.manual_ticks:
                await asyncio.sleep(0.05)
                continue
            message = engine.step()
            engine.broadcast(message)
            await asyncio.sleep(pace)

    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(tick_loop())
        try:
            yield
        finally:
            task.cancel()

    app = FastAPI(title="vestbench gateway", lifespan=lifespan)
    app.state.engine = engine
    app.state.store = store
    app.state.settings = settings

    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def error(status: int, message: str) -> JSONResponse:
        return JSONResponse({"error": message}, status_code=status)

    @app.get("/healthz")
    async def healthz() -> dict:
        return {"status": "ok", "tick_ms": settings.tick_ms}

    @app.get("/topology")
    async def topology() -> dict:
        return export_topology()

    @app.get("/patterns")
    async def patterns(full: bool = False) -> dict:
        names = engine.library.names()
        if not full:
            return {"patterns": list(names)}
        return {"patterns": {n: spec_to_dict(engine.library.get(n)) for n in names}}

    @app.post("/debug/step")
    async def debug_step(body: dict | None = None) -> Any:
        if not settings.manual_ticks:
            return error(409, "gateway is not in manual-tick mode")
        n = int((body or {}).get("ticks", 1))
        last = None
        for _ in range(n):
            last = engine.step()
            engine.broadcast(last)
        return {"stepped": n, "last": last}

    @app.get("/stats")
    async def stats() -> dict:
        return {
            "odometry_accepted": engine.odometry_accepted,
            "odometry_rejected": engine.odometry_rejected,
            "active_session": engine.session.handle.id if engine.session else None,
            "global_tick": engine.global_tick,
        }

    @app.post("/trigger")
    async def trigger(body: dict) -> Any:
        try:
            event = EventKind(body["event"])
            strategy = CodingStrategy(body.get("strategy", "semantic"))
        except (KeyError, ValueError) as exc:
            return error(400, f"bad trigger: {exc}")
        session = engine.ensure_training_session()
        session.trigger(event, strategy)
        return {"queued": True, "session": session.handle.id}

    @app.post("/trial/start")
    async def trial_start(body: dict) -> Any:
        if engine.session is not None and engine.session.config.mode == "trial":
            return error(409, "a trial is already active")
        if engine.session is not None:
            engine.stop_session()  # close a training session cleanly
        try:
            config = RunConfig(
                strategy=CodingStrategy(body.get("strategy", "semantic")),
                seed=int(body.get("seed", 0)),
                mode=body.get("mode", "trial"),
                participant=body.get("participant", "anonymous"),
                load=Load(body.get("load", "none")),
                n_stimuli=int(body.get("n_stimuli", 8)),
                duration_ms=int(body.get("duration_ms", 60_000)),
                min_gap_ms=int(body.get("min_gap_ms", 2_000)),
                tick_ms=settings.tick_ms,
            )
            session = engine.start_session(config)
        except (ValueError, RuntimeError) as exc:
            return error(400, str(exc))
        return {"session": session.handle.id, "mode": config.mode}

    @app.post("/trial/stop")
    async def trial_stop() -> Any:
        try:
            return {"session": engine.stop_session()}
        except RuntimeError as exc:
            return error(409, str(exc))

    @app.post("/trial/respond")
    async def trial_respond(body: dict) -> Any:
        if engine.session is None:
            return error(409, "no active session")
        try:
            chosen = EventKind(body["chosen"])
        except (KeyError, ValueError) as exc:
            return error(400, f"bad response: {exc}")
        client_t = body.get("client_t_ms")
        rtt = body.get("rtt_ms")
        t = engine.session.respond(
            chosen,
            int(client_t) if client_t is not None else None,
            int(rtt) if rtt is not None else None,
        )
        return {"t": t, "session": engine.session.handle.id}

    @app.post("/odometry")
    async def odometry(request: Request) -> dict:
        text = (await request.body()).decode("utf-8", errors="replace")
        return engine.submit_lines(text)

    @app.websocket("/ws/odometry")
    async def ws_odometry(ws: WebSocket) -> None:
        await ws.accept()
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    obj = json.loads(raw)
                except json.JSONDecodeError as exc:
                    engine.odometry_rejected += 1
                    await ws.send_json({"ok": False, "error": f"bad json: {exc}"})
                    continue
                ok, detail = engine.submit_odometry(obj)
                await ws.send_json({"ok": ok, "detail": detail})
        except WebSocketDisconnect:
            return

    @app.post("/calibrate-north")
    async def calibrate_north() -> Any:
        target = engine.session.tracker if engine.session else engine.idle_tracker
        try:
            if engine.session is not None:
                offset = engine.session.calibrate()
                engine.idle_tracker.north_offset = offset
            else:
                offset = target.calibrate()
        except Exception as exc:
            return error(409, f"cannot calibrate: {exc}")
        return {"north_offset": offset}

    @app.post("/path")
    async def submit_path(body: dict) -> Any:
        session_id = body.get("session")
        if session_id is None:
            if engine.session is None:
                return error(409, "no active session; pass an explicit session id")
            handle = engine.session.handle
        else:
            try:
                handle = store.get(session_id)
            except UnknownSession as exc:
                return error(404, str(exc))
        try:
            drawn = path_eval.Polyline.from_points(body["points"], body.get("frame", "tablet"))
        except (KeyError, ValueError) as exc:
            return error(400, f"bad polyline: {exc}")
        if len(drawn.points) < 2:
            return error(400, "drawn path needs at least 2 distinct points")
        truth_points = [
            [rec["x"], rec["y"]] for rec in handle.events() if rec.get("kind") == "odometry"
        ]
        drawn_record = {"frame": drawn.frame.value, "points": body["points"]}
        if "timestamps" in body:
            drawn_record["timestamps"] = body["timestamps"]
        record = {
            "truth": {"frame": "odometry", "points": truth_points},
            "drawn": drawn_record,
        }
        handle.write_path_record(record)
        return {"session": handle.id, "points": len(drawn.points)}

    @app.get("/session/{session_id}/path")
    async def get_path(session_id: str) -> Any:
        try:
            record = store.get(session_id).read_path_record()
        except UnknownSession as exc:
            return error(404, str(exc))
        if record is None:
            return error(404, f"session {session_id} has no path record")
        return record

    @app.get("/sessions")
    async def sessions() -> dict:
        return {"sessions": store.ids()}

    @app.get("/session/{session_id}/export")
    async def export(session_id: str) -> Any:
        try:
            handle = store.get(session_id)
        except UnknownSession as exc:
            return error(404, str(exc))
        return {
            "id": handle.id,
            "config": handle.config,
            "events": handle.events(),
            "frames_csv": handle.frames_csv(),
        }

    @app.get("/session/{session_id}/frames.csv")
    async def frames_csv_endpoint(session_id: str) -> Any:
        try:
            text = store.get(session_id).frames_csv()
        except UnknownSession as exc:
            return error(404, str(exc))
        if text is None:
            return error(404, "no frame dump archived")
        return PlainTextResponse(text)

    @app.post("/replay/{session_id}")
    async def replay(session_id: str, body: dict | None = None) -> Any:
        sink = (body or {}).get("sink", "csv")
        try:
            csv_text = replay_session(store, session_id, library=engine.library)
        except UnknownSession as exc:
            return error(404, str(exc))
        if sink == "null":
            return JSONResponse({"session": session_id, "sink": "null"}, status_code=200)
        return PlainTextResponse(csv_text)

    @app.get("/metrics")
    async def metrics(ids: str = "") -> Any:
        wanted = [s for s in ids.split(",") if s] or store.ids()
        sessions_list = []
        path_scores = []
        try:
            for session_id in wanted:
                handle = store.get(session_id)
                if any(rec.get("kind") == "stimulus" for rec in handle.events()):
                    sessions_list.append(session_from_jsonl(_with_header(handle)))
                record = handle.read_path_record()
                if record is not None:
                    truth = path_eval.Polyline.from_dict(record["truth"])
                    drawn = path_eval.Polyline.from_dict(record["drawn"])
                    path_scores.append(path_eval.score(drawn, truth))
        except UnknownSession as exc:
            return error(404, str(exc))
        report = report_from_sessions(sessions_list)
        if path_scores:
            report["path"] = path_eval.batch_report(path_scores)
        return report

    @app.websocket("/ws/frames")
    async def ws_frames(ws: WebSocket) -> None:
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue(maxsize=256)
        engine.subscribers.add(queue)
        try:
            while True:
                message = await queue.get()
                await ws.send_text(json.dumps(message))
        except WebSocketDisconnect:
            pass
        finally:
            engine.subscribers.discard(queue)

    return app


def _with_header(handle) -> str:
    """Session logs already start with a config snapshot line for the
    analytics reader; synthesize one from config.json if absent."""
    text = handle.events_text()
    if '"kind": "session"' in text or '"kind":"session"' in text:
        return text
    config = handle.config
    header = {
        "kind": "session",
        "t": 0,
        "participant": config.get("participant", "anonymous"),
        "strategy": config.get("strategy", "semantic"),
        "load": config.get("load", "none"),
        "seed": config.get("seed", 0),
        "duration_ms": config.get("duration_ms", 60_000),
        "min_gap_ms": config.get("min_gap_ms", 2_000),
    }
    return json.dumps(header) + "\n" + text
