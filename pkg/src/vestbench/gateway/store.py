"""Filesystem session store: one directory per session holding a config
snapshot, an append-only JSONL event log, and optional frame dumps.
Completed sessions are immutable."""

from __future__ import annotations

import json
from pathlib import Path


class UnknownSession(LookupError):
    pass


class SessionComplete(RuntimeError):
    pass


CONFIG_FILE = "config.json"
EVENTS_FILE = "events.jsonl"
FRAMES_FILE = "frames.csv"
PATH_FILE = "path.json"
META_FILE = "meta.json"


class SessionHandle:
    def __init__(self, root: Path, session_id: str):
        self.id = session_id
        self.dir = root / session_id

    @property
    def config(self) -> dict:
        return json.loads((self.dir / CONFIG_FILE).read_text())

    def write_config(self, config: dict) -> None:
        self._guard()
        (self.dir / CONFIG_FILE).write_text(json.dumps(config, indent=2) + "\n")

    def append_event(self, record: dict) -> None:
        self._guard()
        with (self.dir / EVENTS_FILE).open("a") as fh:
            fh.write(json.dumps(record) + "\n")

    def events(self) -> list[dict]:
        path = self.dir / EVENTS_FILE
        if not path.exists():
            return []
        return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]

    def events_text(self) -> str:
        path = self.dir / EVENTS_FILE
        return path.read_text() if path.exists() else ""

    def write_frames(self, csv_text: str) -> None:
        self._guard()
        (self.dir / FRAMES_FILE).write_text(csv_text)

    def frames_csv(self) -> str | None:
        path = self.dir / FRAMES_FILE
        return path.read_text() if path.exists() else None

    def write_path_record(self, record: dict) -> None:
        self._guard()
        (self.dir / PATH_FILE).write_text(json.dumps(record, indent=2) + "\n")

    def read_path_record(self) -> dict | None:
        path = self.dir / PATH_FILE
        return json.loads(path.read_text()) if path.exists() else None

    @property
    def complete(self) -> bool:
        meta = self.dir / META_FILE
        return meta.exists() and json.loads(meta.read_text()).get("complete", False)

    def finalize(self) -> None:
        (self.dir / META_FILE).write_text(json.dumps({"complete": True}) + "\n")

    def _guard(self) -> None:
        if self.complete:
            raise SessionComplete(f"session {self.id} is complete and immutable")


class SessionStore:
    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def create(self, config: dict, prefix: str = "session") -> SessionHandle:
        n = 1 + sum(1 for _ in self.root.iterdir() if _.is_dir())
        session_id = f"{prefix}-{n:04d}"
        while (self.root / session_id).exists():
            n += 1
            session_id = f"{prefix}-{n:04d}"
        handle = SessionHandle(self.root, session_id)
        handle.dir.mkdir(parents=True)
        handle.write_config(config)
        return handle

    def get(self, session_id: str) -> SessionHandle:
        handle = SessionHandle(self.root, session_id)
        if not handle.dir.is_dir():
            raise UnknownSession(f"no session {session_id!r} under {self.root}")
        return handle

    def ids(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if p.is_dir())
