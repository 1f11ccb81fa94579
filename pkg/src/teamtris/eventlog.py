"""Append-only JSONL persistence for session events.

One canonical-JSON object per line, flushed in order, with sequence
continuity enforced across appends and across process restarts.
"""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Optional

from .errors import CorruptLog, IoFailure, SequenceGap
from .session import SessionEvent


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


class EventLogStore:
    """Appender for one session's log file ({sessionId}.jsonl)."""

    def __init__(self, path):
        self.path = Path(path)
        self.last_seq: Optional[int] = None
        try:
            if self.path.exists():
                with self.path.open("r", encoding="utf-8") as fh:
                    for line in fh:
                        line = line.strip()
                        if line:
                            self.last_seq = json.loads(line)["seq"]
            self._fh = self.path.open("a", encoding="utf-8")
        except (OSError, ValueError, KeyError) as exc:
            raise IoFailure(f"cannot open log {self.path}: {exc}") from exc

    def append(self, event: SessionEvent) -> None:
        if self.last_seq is not None and event.seq != self.last_seq + 1:
            raise SequenceGap(
                f"event seq {event.seq} after {self.last_seq}; expected {self.last_seq + 1}")
        try:
            self._fh.write(canonical_json(event.to_json()) + "\n")
            self._fh.flush()
        except OSError as exc:
            raise IoFailure(f"write failed on {self.path}: {exc}") from exc
        self.last_seq = event.seq

    def close(self) -> None:
        try:
            self._fh.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def open_log(log_dir, session_id: str) -> EventLogStore:
    directory = Path(log_dir)
    os.makedirs(directory, exist_ok=True)
    return EventLogStore(directory / f"{session_id}.jsonl")


def read_log(path) -> list[SessionEvent]:
    events = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for n, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    doc = json.loads(line)
                    events.append(SessionEvent.from_json(doc))
                except (ValueError, KeyError, TypeError) as exc:
                    raise CorruptLog(f"{path}:{n}: {exc}") from exc
    except OSError as exc:
        raise IoFailure(f"cannot read log {path}: {exc}") from exc
    return events
