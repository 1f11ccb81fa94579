"""Lockstep session: multiple boards per player on one tick clock.

All mutation flows through two entry points, `handle_key` and `advance`,
which append to a single ordered event stream. Feeding the same config and
the same keys-at-ticks back through a fresh session reproduces the stream
bit for bit; that property is the platform's ground truth (see
`replay.py`).

Per decision transaction: regime schedule, action selection, placement,
rule effects (whose synthetic rewards enter feedback routing), then any
queued model updates for the game's agent.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import engine
from .config import SessionConfig
from .determinism import derive_seed
from .engine import GameState, board_hash, new_game
from .errors import (
    FreezeBudgetExhausted,
    FreezeUnsupported,
    InvalidBoardIndex,
    InvalidConfig,
    NoEligibleDecisions,
    SessionEnded,
    UnknownGame,
)
from .heuristics import default_oracle_weights, heuristic_evaluator
from .learner import (
    CreditedSample,
    DecisionRecord,
    FeedbackEvent,
    FeedbackWindow,
    RewardModel,
    evaluate_placements,
    feature_dim,
    predict,
    update,
    weight_digest,
)
from .rules import GameRuleContext, advance_regime, apply_effects, evaluate_rules
from .team import AGG_PARAMETER_CONSENSUS, KIND_DEPENDENT, consensus_step, route_feedback

EVENT_KINDS = frozenset({
    "SessionStart", "ConfigSnapshot", "DecisionPoint", "PlacementChosen",
    "FeedbackKey", "CreditedBatch", "RuleFired", "Notice", "RegimeChanged",
    "LinesCleared", "ScoreChanged", "Freeze", "Unfreeze", "BoardSelected",
    "GameOver", "ModelCheckpoint", "SessionEnd",
})

KEY_ENTER = "enter"
KEY_SPACE = "space"

CHECKPOINT_EVERY_DECISIONS = 100


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    tick: int
    kind: str
    payload: dict

    def to_json(self) -> dict:
        return {"seq": self.seq, "tick": self.tick, "kind": self.kind,
                "payload": self.payload}

    @classmethod
    def from_json(cls, doc: dict) -> "SessionEvent":
        return cls(doc["seq"], doc["tick"], doc["kind"], doc["payload"])


@dataclass
class PlayerConsole:
    player_id: str
    selected_board: int = 0
    frozen_game_id: Optional[str] = None
    freeze_ticks_used: int = 0


@dataclass
class GameRecord:
    game_id: str
    agent_id: str
    player_id: Optional[str]  # guiding player; None for dependent agents
    index: int
    state: GameState
    next_decision_tick: int
    bonus_ledger: int = 0
    decisions: int = 0
    history: list = field(default_factory=list)
    last_pre_state: Optional[GameState] = None
    last_placement: Optional[engine.Placement] = None


class Session:
    """Use `create_session`; the constructor wires but emits nothing."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.topology = config.topology
        self.tick = 0
        self.seq = 0
        self.events: list[SessionEvent] = []
        self.sinks = []  # callables fed each event as it is emitted
        self.ended = False
        self.feedback_counts: dict[str, int] = {}

        pieces = config.active_pieces()
        dim = feature_dim(config.board_width, config.board_height)
        hyper = config.learner.hyperparams()
        self.games: dict[str, GameRecord] = {}
        self.models: dict[str, RewardModel] = {}
        self.pending: dict[str, list[list[CreditedSample]]] = {}
        self._evaluator = heuristic_evaluator(
            np.array(config.harness.oracle.weights)
            if config.harness.oracle.weights
            else default_oracle_weights(config.board_width, config.board_height))

        period0 = config.decision_period.period(0)
        for index, agent in enumerate(self.topology.agents):
            game_id = f"game-{agent.agent_id}"
            state = new_game(pieces, config.master_seed ^ index,
                             width=config.board_width, height=config.board_height)
            model = RewardModel(
                config.learner.architecture, dim, hyper,
                seed=derive_seed(config.master_seed, 0x4D4F44, index),
                hidden_width=config.learner.hidden_width)
            if config.learner.initial_weights is not None:
                w = np.array(config.learner.initial_weights, dtype=float)
                if w.shape != model.weights.shape:
                    raise InvalidConfig(
                        [f"initialWeights has {w.shape[0]} entries, "
                         f"model needs {model.weights.shape[0]}"])
                model.weights = w.copy()
            self.games[game_id] = GameRecord(
                game_id=game_id, agent_id=agent.agent_id,
                player_id=self.topology.guiding_player(agent.agent_id),
                index=index, state=state, next_decision_tick=period0)
            self.models[agent.agent_id] = model
            self.pending[agent.agent_id] = []
            self.feedback_counts[agent.agent_id] = 0

        self.consoles = {p.player_id: PlayerConsole(p.player_id)
                         for p in self.topology.players}
        self.player_games: dict[str, list[str]] = {
            p.player_id: [f"game-{aid}" for aid in
                          self.topology.guided_agents(p.player_id)]
            for p in self.topology.players}
        self.game_agents = {g.game_id: g.agent_id for g in self.games.values()}

    # -- event plumbing --

    def _emit(self, kind: str, payload: dict) -> SessionEvent:
        assert kind in EVENT_KINDS
        ev = SessionEvent(self.seq, self.tick, kind, payload)
        self.seq += 1
        self.events.append(ev)
        for sink in self.sinks:
            sink(ev)
        return ev

    def _since(self, mark: int) -> list[SessionEvent]:
        return self.events[mark:]

    # -- key handling --

    def handle_key(self, player_id: str, key: str) -> list[SessionEvent]:
        if self.ended:
            raise SessionEnded("session has ended")
        if player_id not in self.consoles:
            raise UnknownGame(f"unknown player {player_id!r}")
        mark = len(self.events)
        console = self.consoles[player_id]
        if key.isdigit() and len(key) == 1:
            idx = int(key)
            if idx >= self.config.boards_per_player:
                raise InvalidBoardIndex(
                    f"board {idx} out of range (boardsPerPlayer="
                    f"{self.config.boards_per_player})")
            console.selected_board = idx
            self._emit("BoardSelected", {
                "playerId": player_id, "boardIndex": idx,
                "gameId": self.player_games[player_id][idx]})
        elif key == KEY_ENTER:
            game_id = self.player_games[player_id][console.selected_board]
            self._emit("FeedbackKey", {"playerId": player_id, "gameId": game_id})
            fb = FeedbackEvent(game_id=game_id, wall_tick=self.tick,
                               polarity=1.0, source="human", player_id=player_id)
            self.feedback_counts[self.game_agents[game_id]] += 1
            self._route(fb)
        elif key == KEY_SPACE:
            self._handle_space(console)
        else:
            raise InvalidBoardIndex(f"unknown key {key!r}")
        return self._since(mark)

    def _handle_space(self, console: PlayerConsole):
        if not self.config.superhuman:
            raise FreezeUnsupported("freeze is only available in superhuman mode")
        game_id = self.player_games[console.player_id][console.selected_board]
        game = self.games[game_id]
        if console.frozen_game_id == game_id:
            self._unfreeze(console, cause="key")
            return
        budget = self.config.freeze_budget_ticks
        if budget is not None and console.freeze_ticks_used >= budget:
            raise FreezeBudgetExhausted(f"freeze budget of {budget} ticks exhausted")
        if game.state.status != engine.STATUS_ACTIVE:
            return  # freezing a finished board is a no-op
        if console.frozen_game_id is not None:
            # one frozen board per player: switching releases the old one
            self._unfreeze(console, cause="cascade")
        console.frozen_game_id = game_id
        game.state = dataclasses.replace(game.state, status=engine.STATUS_FROZEN)
        self._emit("Freeze", {"playerId": console.player_id,
                              "gameId": game_id, "cause": "key"})

    def _unfreeze(self, console: PlayerConsole, cause: str):
        game_id = console.frozen_game_id
        console.frozen_game_id = None
        game = self.games[game_id]
        if game.state.status == engine.STATUS_FROZEN:
            game.state = dataclasses.replace(game.state, status=engine.STATUS_ACTIVE)
        self._emit("Unfreeze", {"playerId": console.player_id,
                                "gameId": game_id, "cause": cause})

    # -- feedback routing --

    def _route(self, fb: FeedbackEvent):
        window = (self.config.feedback_window if fb.source == "human"
                  else FeedbackWindow(0, 0))  # rule rewards bind to their decision
        histories = {gid: g.history for gid, g in self.games.items()}
        try:
            routed = route_feedback(self.topology, fb, histories,
                                    self.game_agents, window)
        except NoEligibleDecisions:
            return
        for agent_id, samples in routed:
            self._emit("CreditedBatch", {
                "agentId": agent_id, "gameId": fb.game_id, "source": fb.source,
                "count": len(samples),
                "weightSum": round(sum(s.weight for s in samples), 9),
                "ruleId": fb.rule_id})
            self.pending[agent_id].append(samples)

    # -- clock --

    def advance(self, ticks: int) -> list[SessionEvent]:
        if self.ended:
            raise SessionEnded("session has ended")
        if ticks < 1:
            raise ValueError("ticks must be >= 1")
        mark = len(self.events)
        for _ in range(ticks):
            if self.ended:
                break
            self.tick += 1
            self._account_freeze()
            for game in self.games.values():
                if game.state.status != engine.STATUS_ACTIVE:
                    continue
                if self.tick >= game.next_decision_tick:
                    self._decision(game)
            if not self.config.auto_restart and not self.ended:
                if all(g.state.status == engine.STATUS_OVER
                       for g in self.games.values()):
                    self._finish()
        return self._since(mark)

    def finish(self) -> list[SessionEvent]:
        if self.ended:
            raise SessionEnded("session has ended")
        mark = len(self.events)
        self._finish()
        return self._since(mark)

    def _finish(self):
        scores = {}
        for g in self.games.values():
            scores[g.game_id] = {
                "score": g.state.score,
                "endBonus": g.bonus_ledger,
                "finalScore": g.state.score + g.bonus_ledger,
                "totalLines": g.state.total_lines,
            }
        self._emit("SessionEnd", {"finalScores": scores})
        self.ended = True

    def _account_freeze(self):
        for console in self.consoles.values():
            if console.frozen_game_id is None:
                continue
            console.freeze_ticks_used += 1
            budget = self.config.freeze_budget_ticks
            if budget is not None and console.freeze_ticks_used >= budget:
                self._unfreeze(console, cause="budget")

    # -- the decision transaction --

    def _decision(self, game: GameRecord):
        config = self.config
        state = self._apply_regime(game)

        agent = self.topology.agent(game.agent_id)
        model = self.models[game.agent_id]
        if (agent.kind == KIND_DEPENDENT
                and self.topology.aggregation_mode == AGG_PARAMETER_CONSENSUS):
            consensus_step(self.topology, self.models, game.agent_id)

        scored = evaluate_placements(state)
        if not scored:  # piece-set change can in principle strand a piece
            game.state = dataclasses.replace(state, status=engine.STATUS_OVER)
            self._game_over(game)
            return
        best = None
        best_feats = None
        best_v = -np.inf
        for pl, feats in scored:
            v = predict(model, feats)
            if v > best_v:
                best, best_feats, best_v = pl, feats, v

        game.last_pre_state = state
        game.last_placement = best
        self._emit("DecisionPoint", {"gameId": game.game_id, "turn": state.turn})
        game.history.append(DecisionRecord(
            game.game_id, turn=state.turn, features=best_feats,
            wall_tick=self.tick))
        self._emit("PlacementChosen", {
            "gameId": game.game_id, "pieceId": best.piece_id,
            "rotationIndex": best.rotation_index, "column": best.column,
            "landingRow": best.landing_row, "turn": state.turn})

        state, clear = engine.apply_placement(state, best)
        if clear.lines_cleared:
            self._emit("LinesCleared", {
                "gameId": game.game_id, "count": clear.lines_cleared,
                "rows": [[idx, list(colors)] for idx, colors in clear.cleared_rows]})
        if clear.points_awarded:
            self._emit("ScoreChanged", {
                "gameId": game.game_id, "delta": clear.points_awarded,
                "score": state.score, "cause": "clear"})

        fired = evaluate_rules(config.rules, clear)
        if fired:
            ctx = GameRuleContext(
                game_id=game.game_id, agent_id=game.agent_id,
                guiding_player_id=game.player_id, tick=self.tick,
                clear=clear, evaluator=self._evaluator)
            outcome = apply_effects(state, fired, ctx)
            state = outcome.state
            for rule in fired:
                self._emit("RuleFired", {"ruleId": rule.rule_id,
                                         "gameId": game.game_id})
            if outcome.immediate_bonus:
                self._emit("ScoreChanged", {
                    "gameId": game.game_id, "delta": outcome.immediate_bonus,
                    "score": state.score, "cause": "ruleBonus"})
            game.bonus_ledger += outcome.end_of_game_bonus
            for notice in outcome.notices:
                self._emit("Notice", {
                    "ruleId": notice.rule_id, "text": notice.text,
                    "playerIds": list(notice.player_ids)})
            game.state = state
            for fb in outcome.feedback_events:
                self._route(fb)
        game.state = state

        game.decisions += 1
        if game.decisions % CHECKPOINT_EVERY_DECISIONS == 0:
            self._emit("ModelCheckpoint", {
                "gameId": game.game_id, "agentId": game.agent_id,
                "decisionIndex": game.decisions,
                "boardHash": f"{board_hash(state):016x}",
                "modelDigest": f"{weight_digest(model.weights):016x}"})

        self._expire_silent_decisions(game)
        self._apply_updates(game.agent_id)

        game.next_decision_tick = self.tick + config.decision_period.period(
            game.state.level)

        if game.state.status == engine.STATUS_OVER:
            self._game_over(game)

    def _apply_regime(self, game: GameRecord) -> GameState:
        state = game.state
        before = state.regime_index
        state = advance_regime(self.config.regime, self.tick, state)
        for idx in range(before, state.regime_index):
            ev = self.config.regime.events[idx]
            self._emit("RegimeChanged", {
                "gameId": game.game_id, "atTick": ev.at_tick,
                "added": [p.id for p in ev.add_pieces],
                "removed": list(ev.remove_pieces),
                "scoringChanged": ev.new_scoring is not None})
        game.state = state
        return state

    def _game_over(self, game: GameRecord):
        self._emit("GameOver", {
            "gameId": game.game_id, "score": game.state.score,
            "endBonus": game.bonus_ledger,
            "finalScore": game.state.score + game.bonus_ledger,
            "totalLines": game.state.total_lines, "turn": game.state.turn})
        if self.config.auto_restart:
            self._restart(game)

    def _restart(self, game: GameRecord):
        # fresh board and counters; the piece generator, active set, scoring
        # table, and regime pointer carry across games
        old = game.state
        cur, rng = engine.draw_next_piece(old.rng, old.active_pieces)
        nxt, rng = engine.draw_next_piece(rng, old.active_pieces)
        game.state = GameState(
            board=engine.Board.empty(old.board.width, old.board.height),
            score=0, total_lines=0, level=0,
            current_piece=cur, next_piece=nxt, rng=rng, turn=0,
            status=engine.STATUS_ACTIVE,
            active_pieces=old.active_pieces, scoring=old.scoring,
            regime_index=old.regime_index)
        game.bonus_ledger = 0

    def _expire_silent_decisions(self, game: GameRecord):
        """Emit zero-label samples for decisions whose feedback window has
        fully passed without a keypress (guided games only), then prune."""
        horizon = self.tick - self.config.feedback_window.max_delay_ticks
        if self.config.learner.implicit_zero_on_silence and game.player_id is not None:
            weight = self.config.learner.implicit_zero_weight
            expired = [d for d in game.history
                       if not d.credited and d.wall_tick < horizon]
            if expired:
                samples = [CreditedSample(d.features, 0.0, weight) for d in expired]
                for d in expired:
                    d.credited = True
                targets = [game.agent_id]
                if self.topology.aggregation_mode != AGG_PARAMETER_CONSENSUS:
                    targets.extend(self.topology.descendants(game.agent_id))
                for agent_id in targets:
                    self.pending[agent_id].append(samples)
        game.history = [d for d in game.history if d.wall_tick >= horizon]

    def _apply_updates(self, agent_id: str):
        # one update pass per decision point, over everything queued since
        # the last one; keeps training intensity uniform across agents no
        # matter how many games feed them
        batches = self.pending[agent_id]
        if not batches:
            return
        self.pending[agent_id] = []
        update(self.models[agent_id], [s for batch in batches for s in batch])


def create_session(config: SessionConfig) -> Session:
    violations = config.validate()
    if violations:
        raise InvalidConfig(violations)
    session = Session(config)
    session._emit("SessionStart", {
        "sessionId": config.session_id,
        "players": [p.player_id for p in config.topology.players],
        "games": [{"gameId": g.game_id, "agentId": g.agent_id,
                   "playerId": g.player_id}
                  for g in session.games.values()]})
    session._emit("ConfigSnapshot", {"config": config.to_json()})
    return session
