"""Authoritative session service.

`SessionHub` owns one session and does everything transport-independent:
player binding, key dispatch, per-player visibility filtering, snapshot
cadence, and JSONL logging. The FastAPI layer in `create_app` only moves
frames between WebSockets and the hub under a single lock, so every
mutation stays serialized on one logical event loop.

Clients never send game state; only Join, Key, and Ready are accepted.
"""
from __future__ import annotations

import asyncio
import itertools
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .config import SessionConfig
from .errors import (
    FreezeBudgetExhausted,
    FreezeUnsupported,
    InvalidBoardIndex,
    MalformedMessage,
    SessionEnded,
    TeamtrisError,
)
from .eventlog import open_log
from .protocol import (
    CLIENT_SCHEMAS,
    ProtocolMessage,
    decode,
    encode,
    encode_grid_rle,
    message,
)
from .session import Session, SessionEvent, create_session

# event kinds every player may see; the rest are internal or disclosure-gated
PUBLIC_EVENT_KINDS = frozenset({
    "SessionStart", "DecisionPoint", "PlacementChosen", "LinesCleared",
    "ScoreChanged", "RegimeChanged", "GameOver", "SessionEnd",
    "BoardSelected", "FeedbackKey", "Freeze", "Unfreeze",
})
INTERNAL_EVENT_KINDS = frozenset({"ConfigSnapshot", "CreditedBatch", "ModelCheckpoint"})


class SessionHub:
    """One live session plus its connections; all methods are synchronous
    and must be called from a single logical loop."""

    def __init__(self, config: SessionConfig, log_dir=None):
        self.config = config
        self.session = create_session(config)
        self.log = None
        if log_dir is not None:
            self.log = open_log(log_dir, config.session_id)
            for ev in self.session.events:  # events emitted before the sink attached
                self.log.append(ev)
            self.session.sinks.append(self.log.append)
        self.rules_by_id = {r.rule_id: r for r in config.rules}
        self.conn_players: dict[str, str] = {}
        self.player_conns: dict[str, str] = {}
        self._snapshot_period = max(1, config.tick_hz // 5)
        self._ticks_since_snapshot = 0

    # -- connection lifecycle --

    def drop(self, conn_id: str) -> None:
        player = self.conn_players.pop(conn_id, None)
        if player is not None and self.player_conns.get(player) == conn_id:
            del self.player_conns[player]

    def handle_frame(self, conn_id: str, raw) -> list[tuple[str, ProtocolMessage]]:
        """Process one inbound frame; returns (conn_id, message) fan-out."""
        try:
            msg = decode(raw)
        except MalformedMessage as exc:
            return [(conn_id, message("Error", code="malformed", message=str(exc)))]
        if msg.type not in CLIENT_SCHEMAS:
            # the server is authoritative: state-bearing types are rejected
            return [(conn_id, message("Error", code="notAllowed",
                                      message=f"clients may not send {msg.type}"))]
        if msg.type == "Join":
            return self._join(conn_id, msg.payload)
        if conn_id not in self.conn_players:
            return [(conn_id, message("Error", code="notJoined",
                                      message="send Join first"))]
        if msg.type == "Ready":
            return [(conn_id, self._snapshot_for(self.conn_players[conn_id]))]
        return self._key(conn_id, msg.payload["key"])

    def _join(self, conn_id: str, payload: dict) -> list[tuple[str, ProtocolMessage]]:
        if payload["sessionId"] != self.config.session_id:
            return [(conn_id, message("Error", code="unknownSession",
                                      message=f"no session {payload['sessionId']!r}"))]
        name = payload["playerName"]
        player = None
        for p in self.config.topology.players:
            if name in (p.player_id, p.name):
                player = p.player_id
                break
        if player is None:
            return [(conn_id, message("Error", code="unknownPlayer",
                                      message=f"no player named {name!r}"))]
        old_conn = self.player_conns.get(player)
        if old_conn is not None:
            self.conn_players.pop(old_conn, None)
        self.conn_players[conn_id] = player
        self.player_conns[player] = conn_id
        welcome = message("Welcome", playerId=player,
                          config=self._client_config(player))
        return [(conn_id, welcome), (conn_id, self._snapshot_for(player))]

    def _key(self, conn_id: str, key: str) -> list[tuple[str, ProtocolMessage]]:
        player = self.conn_players[conn_id]
        try:
            events = self.session.handle_key(player, key)
        except InvalidBoardIndex as exc:
            return [(conn_id, message("Error", code="InvalidBoardIndex", message=str(exc)))]
        except FreezeBudgetExhausted as exc:
            return [(conn_id, message("Error", code="FreezeBudgetExhausted", message=str(exc)))]
        except FreezeUnsupported as exc:
            return [(conn_id, message("Error", code="FreezeUnsupported", message=str(exc)))]
        except SessionEnded as exc:
            return [(conn_id, message("Error", code="SessionEnded", message=str(exc)))]
        except TeamtrisError as exc:
            return [(conn_id, message("Error", code="rejected", message=str(exc)))]
        return self._fan_out(events)

    # -- clock --

    def run_ticks(self, ticks: int = 1) -> list[tuple[str, ProtocolMessage]]:
        if self.session.ended:
            return []
        events = self.session.advance(ticks)
        out = self._fan_out(events)
        self._ticks_since_snapshot += ticks
        if self._ticks_since_snapshot >= self._snapshot_period:
            self._ticks_since_snapshot = 0
            for conn_id, player in self.conn_players.items():
                out.append((conn_id, self._snapshot_for(player)))
        return out

    # -- visibility --

    def _fan_out(self, events: list[SessionEvent]) -> list[tuple[str, ProtocolMessage]]:
        out = []
        for conn_id, player in self.conn_players.items():
            visible = [ev.to_json() for ev in events if self._visible(ev, player)]
            if visible:
                out.append((conn_id, message("EventFrame", events=visible)))
        for ev in events:
            if ev.kind == "Notice":
                for player in ev.payload["playerIds"]:
                    conn_id = self.player_conns.get(player)
                    if conn_id is not None:
                        out.append((conn_id, message(
                            "RuleNotice", ruleId=ev.payload["ruleId"],
                            text=ev.payload["text"])))
        return out

    def _visible(self, ev: SessionEvent, player_id: str) -> bool:
        if ev.kind in INTERNAL_EVENT_KINDS:
            return False
        if ev.kind == "RuleFired":
            rule = self.rules_by_id.get(ev.payload["ruleId"])
            return rule is not None and player_id in rule.disclosed_to_players
        if ev.kind == "Notice":
            return player_id in ev.payload["playerIds"]
        return ev.kind in PUBLIC_EVENT_KINDS

    def _client_config(self, player_id: str) -> dict:
        config = self.config
        lib = {p.id: p for p in config.piece_library()}
        pieces = [{
            "id": p.id, "displayName": p.display_name, "color": p.color,
            "rotations": [[[r, c] for r, c in rot] for rot in p.rotations],
        } for p in lib.values()]
        return {
            "sessionId": config.session_id,
            "protocolVersion": 1,
            "boardsPerPlayer": config.boards_per_player,
            "tickHz": config.tick_hz,
            "board": {"width": config.board_width, "height": config.board_height},
            "mode": {"superhuman": config.superhuman, "integrated": config.integrated},
            "freezeBudgetTicks": config.freeze_budget_ticks,
            "games": [{"gameId": g.game_id, "agentId": g.agent_id,
                       "playerId": g.player_id}
                      for g in self.session.games.values()],
            "ownGames": list(self.session.player_games[player_id]),
            "pieces": pieces,
            "disclosedRules": [r.to_json() for r in config.rules
                               if player_id in r.disclosed_to_players],
        }

    def _snapshot_for(self, player_id: str) -> ProtocolMessage:
        session = self.session
        console = session.consoles[player_id]
        own = session.player_games[player_id]
        selected_game = own[console.selected_board]
        boards = []
        for g in session.games.values():
            st = g.state
            boards.append({
                "gameId": g.game_id,
                "agentId": g.agent_id,
                "playerId": g.player_id,
                "grid": encode_grid_rle(st.board.grid),
                "score": st.score,
                "level": st.level,
                "totalLines": st.total_lines,
                "nextPieceId": st.next_piece.id,
                "currentPieceId": st.current_piece.id,
                "status": st.status,
                "own": g.game_id in own,
                "selected": g.game_id == selected_game,
                "frozen": st.status == "frozen",
            })
        return message("StateSnapshot", tick=session.tick, boards=boards)

    def close(self):
        if self.log is not None:
            self.log.close()


# -- asyncio / WebSocket layer ---------------------------------------------------

def create_app(config: SessionConfig, log_dir=None, auto_tick: bool = True):
    """FastAPI app exposing the session at /ws. With auto_tick the session
    clock runs at config.tickHz in a background task."""
    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(app_):
        task = asyncio.create_task(ticker()) if auto_tick else None
        yield
        if task is not None:
            task.cancel()
        hub.close()

    app = FastAPI(title="teamtris server", lifespan=lifespan)
    hub = SessionHub(config, log_dir)
    app.state.hub = hub
    sockets: dict[str, WebSocket] = {}
    counter = itertools.count(1)

    def lock() -> asyncio.Lock:
        # created lazily so it binds the running loop, not the import-time one
        if not hasattr(app.state, "lock"):
            app.state.lock = asyncio.Lock()
        return app.state.lock

    async def deliver(outbound):
        for conn_id, msg in outbound:
            ws = sockets.get(conn_id)
            if ws is None:
                continue
            try:
                await ws.send_text(encode(msg).decode("utf-8"))
            except Exception:
                sockets.pop(conn_id, None)
                hub.drop(conn_id)

    async def ticker():
        interval = 1.0 / config.tick_hz
        while True:
            await asyncio.sleep(interval)
            async with lock():
                if hub.session.ended:
                    break
                outbound = hub.run_ticks(1)
                await deliver(outbound)

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        conn_id = f"conn-{next(counter)}"
        sockets[conn_id] = websocket
        try:
            while True:
                raw = await websocket.receive_text()
                async with lock():
                    outbound = hub.handle_frame(conn_id, raw)
                    await deliver(outbound)
        except WebSocketDisconnect:
            pass
        finally:
            sockets.pop(conn_id, None)
            hub.drop(conn_id)

    return app


def serve(config: SessionConfig, port: int, log_dir) -> None:
    import uvicorn

    app = create_app(config, log_dir=log_dir, auto_tick=True)
    uvicorn.run(app, host="0.0.0.0", port=port, log_level="info")
