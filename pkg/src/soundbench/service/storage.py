"""Durable storage for the rating service.

Two files in the data directory: an append-only JSONL ratings log whose
writes are flushed and fsynced before any acknowledgment, and a session
snapshot rewritten atomically (write-temp-then-rename) on every change.
The log is the source of truth for response progress; the snapshot only
remembers which sessions were created.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field


class StorageError(RuntimeError):
    pass


class RatingsLog:
    """Single-appender JSONL log; one fsynced line per acknowledged response."""

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        self._fh = open(path, "a", encoding="utf-8")

    def append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True, separators=(",", ":"))
        if "\n" in line:
            raise StorageError("record serialization produced a newline")
        with self._lock:
            self._fh.write(line + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        with self._lock:
            self._fh.close()

    @staticmethod
    def replay(path: str) -> list[dict]:
        if not os.path.exists(path):
            return []
        out = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(json.loads(line))
        return out


@dataclass
class SessionState:
    session_id: str
    cursor: int = 0
    answered: dict[str, dict] = field(default_factory=dict)  # trial_id -> payload

    def state(self, trial_count: int) -> str:
        return "complete" if self.cursor >= trial_count else "active"


class SessionStore:
    """Created sessions and their progress, recoverable after a crash."""

    def __init__(self, snapshot_path: str, log_path: str):
        self.snapshot_path = snapshot_path
        self.log_path = log_path
        self.sessions: dict[str, SessionState] = {}
        self._lock = threading.Lock()
        self._load()

    def _load(self) -> None:
        created: list[str] = []
        if os.path.exists(self.snapshot_path):
            with open(self.snapshot_path, "r", encoding="utf-8") as fh:
                created = json.load(fh).get("created", [])
        for session_id in created:
            self.sessions[session_id] = SessionState(session_id=session_id)
        # the log decides cursors: acknowledged responses survive a crash
        # even when the snapshot write never happened
        for record in RatingsLog.replay(self.log_path):
            session_id = record["session_id"]
            state = self.sessions.setdefault(session_id, SessionState(session_id))
            state.answered[record["trial_id"]] = {
                "quality": record.get("quality"),
                "fit": record.get("fit"),
                "diversity": record.get("diversity"),
            }
            state.cursor += 1

    def snapshot(self) -> None:
        payload = {"created": sorted(self.sessions)}
        tmp = self.snapshot_path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.snapshot_path)

    def get(self, session_id: str) -> SessionState | None:
        return self.sessions.get(session_id)

    def create(self, session_id: str) -> SessionState:
        with self._lock:
            if session_id not in self.sessions:
                self.sessions[session_id] = SessionState(session_id=session_id)
                self.snapshot()
            return self.sessions[session_id]

    def advance(self, session_id: str, trial_id: str, payload: dict) -> None:
        with self._lock:
            state = self.sessions[session_id]
            state.answered[trial_id] = payload
            state.cursor += 1
            self.snapshot()
