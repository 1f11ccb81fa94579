"""Replay verification: rebuild a session from its logged config, re-feed the
recorded key inputs at their ticks, and demand a bit-identical event stream
(model digests and board hashes included)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .config import SessionConfig
from .errors import CorruptLog
from .eventlog import canonical_json, read_log
from .session import Session, SessionEvent, create_session


@dataclass(frozen=True)
class ReplayReport:
    ok: bool
    mismatch_seq: Optional[int] = None
    mismatch_field: Optional[str] = None
    detail: str = ""


def extract_inputs(events: Sequence[SessionEvent]) -> list[tuple[int, str, str]]:
    """Recover the (tick, playerId, key) script from the event kinds that a
    keypress produces directly."""
    inputs = []
    for ev in events:
        p = ev.payload
        if ev.kind == "BoardSelected":
            inputs.append((ev.tick, p["playerId"], str(p["boardIndex"])))
        elif ev.kind == "FeedbackKey":
            inputs.append((ev.tick, p["playerId"], "enter"))
        elif ev.kind in ("Freeze", "Unfreeze") and p.get("cause") == "key":
            inputs.append((ev.tick, p["playerId"], "space"))
    return inputs


def rerun(events: Sequence[SessionEvent]) -> list[SessionEvent]:
    """Build a fresh session from the logged ConfigSnapshot and re-drive it."""
    snapshot = next((e for e in events if e.kind == "ConfigSnapshot"), None)
    if snapshot is None:
        raise CorruptLog("log has no ConfigSnapshot")
    config = SessionConfig.from_json(snapshot.payload["config"])
    session = create_session(config)
    for tick, player_id, key in extract_inputs(events):
        if tick > session.tick:
            session.advance(tick - session.tick)
        session.handle_key(player_id, key)
    final_tick = events[-1].tick
    if final_tick > session.tick and not session.ended:
        session.advance(final_tick - session.tick)
    if events[-1].kind == "SessionEnd" and not session.ended:
        session.finish()
    return session.events


def compare_streams(recorded: Sequence[SessionEvent],
                    replayed: Sequence[SessionEvent]) -> ReplayReport:
    for i, rec in enumerate(recorded):
        if i >= len(replayed):
            return ReplayReport(False, rec.seq, "missing",
                                f"replay produced only {len(replayed)} events")
        rep = replayed[i]
        if canonical_json(rec.to_json()) != canonical_json(rep.to_json()):
            field = _first_differing_field(rec.to_json(), rep.to_json())
            return ReplayReport(False, rec.seq, field,
                                f"recorded={rec.to_json()} replayed={rep.to_json()}")
    if len(replayed) > len(recorded):
        return ReplayReport(False, replayed[len(recorded)].seq, "extra",
                            f"replay produced {len(replayed) - len(recorded)} extra events")
    return ReplayReport(True)


def _first_differing_field(a: dict, b: dict) -> str:
    for key in ("seq", "tick", "kind"):
        if a.get(key) != b.get(key):
            return key
    pa, pb = a.get("payload", {}), b.get("payload", {})
    for key in sorted(set(pa) | set(pb)):
        if canonical_json(pa.get(key)) != canonical_json(pb.get(key)):
            return f"payload.{key}"
    return "payload"


def replay_verify(log_path) -> ReplayReport:
    """ok iff replaying the log's inputs reproduces it bit for bit."""
    events = read_log(log_path)
    if not events:
        raise CorruptLog(f"{log_path} is empty")
    replayed = rerun(events)
    return compare_streams(events, replayed)
