"""Hidden rules and the regime-change schedule.

A hidden rule is a trigger predicate over cleared rows plus a list of
effects, disclosed only to a subset of players and agents. Undisclosed
rules still fire their game-internal effects (next-piece bias) but emit
no notices and no synthetic rewards.

The regime schedule mutates the active piece set and scoring table at
fixed ticks, forcing mid-session strategy changes.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .engine import (
    Board,
    ClearResult,
    GameState,
    PieceDef,
    ScoringTable,
    column_masks,
    drop_on_masks,
    enumerate_placements,
    rebuild_bag,
)
from .errors import EmptyPieceSet, RemovalWouldEmptyPieceSet, UnknownPieceForBias
from .learner import FeedbackEvent, features_from_masks

TRIGGER_CLEARED_ROW_COLOR_COUNT = "clearedRowColorCount"

EFFECT_NEXT_PIECE_BIAS = "nextPieceBias"
EFFECT_SYNTHETIC_REWARD = "syntheticReward"
EFFECT_SCORE_BONUS = "scoreBonus"

TIMING_IMMEDIATE = "immediate"
TIMING_END_OF_GAME = "endOfGame"


@dataclass(frozen=True)
class Trigger:
    kind: str
    color: str
    min_count_exclusive: int  # fires on strictly more than this many cells

    def __post_init__(self):
        if self.kind != TRIGGER_CLEARED_ROW_COLOR_COUNT:
            raise ValueError(f"unknown trigger kind {self.kind!r}")
        if self.min_count_exclusive < 0:
            raise ValueError("minCountExclusive must be >= 0")


@dataclass(frozen=True)
class RuleEffect:
    kind: str
    selection: str = "favorable"          # nextPieceBias
    polarity: float = 1.0                 # syntheticReward
    multiplier: float = 10.0              # scoreBonus
    timing: str = TIMING_IMMEDIATE        # scoreBonus config default; actual
                                          # timing follows disclosure

    def __post_init__(self):
        if self.kind not in (EFFECT_NEXT_PIECE_BIAS, EFFECT_SYNTHETIC_REWARD,
                             EFFECT_SCORE_BONUS):
            raise ValueError(f"unknown effect kind {self.kind!r}")
        if self.multiplier <= 0:
            raise ValueError("multiplier must be > 0")


@dataclass(frozen=True)
class HiddenRule:
    rule_id: str
    trigger: Trigger
    effects: tuple[RuleEffect, ...]
    disclosed_to_players: frozenset[str] = frozenset()
    disclosed_to_agents: frozenset[str] = frozenset()

    def __post_init__(self):
        if not self.effects:
            raise ValueError(f"rule {self.rule_id!r} has no effects")

    def to_json(self):
        effects = []
        for e in self.effects:
            if e.kind == EFFECT_NEXT_PIECE_BIAS:
                effects.append({"kind": e.kind, "selection": e.selection})
            elif e.kind == EFFECT_SYNTHETIC_REWARD:
                effects.append({"kind": e.kind, "polarity": e.polarity})
            else:
                effects.append({"kind": e.kind, "multiplier": e.multiplier,
                                "timing": e.timing})
        return {
            "ruleId": self.rule_id,
            "trigger": {"kind": self.trigger.kind, "color": self.trigger.color,
                        "minCountExclusive": self.trigger.min_count_exclusive},
            "effects": effects,
            "disclosedToPlayers": sorted(self.disclosed_to_players),
            "disclosedToAgents": sorted(self.disclosed_to_agents),
        }

    @classmethod
    def from_json(cls, doc) -> "HiddenRule":
        trig = doc["trigger"]
        effects = []
        for e in doc["effects"]:
            effects.append(RuleEffect(
                kind=e["kind"],
                selection=e.get("selection", "favorable"),
                polarity=e.get("polarity", 1.0),
                multiplier=e.get("multiplier", 10.0),
                timing=e.get("timing", TIMING_IMMEDIATE),
            ))
        return cls(
            rule_id=doc["ruleId"],
            trigger=Trigger(trig["kind"], trig["color"], int(trig["minCountExclusive"])),
            effects=tuple(effects),
            disclosed_to_players=frozenset(doc.get("disclosedToPlayers", [])),
            disclosed_to_agents=frozenset(doc.get("disclosedToAgents", [])),
        )


@dataclass(frozen=True)
class Notice:
    rule_id: str
    text: str
    player_ids: tuple[str, ...]  # recipients: exactly the disclosed players


@dataclass(frozen=True)
class GameRuleContext:
    """Per-game facts apply_effects needs: who plays it, who guides it,
    the clear that fired the rules, and the evaluator for piece bias."""

    game_id: str
    agent_id: str
    guiding_player_id: Optional[str]
    tick: int
    clear: ClearResult
    evaluator: Callable[[np.ndarray], float]


@dataclass(frozen=True)
class EffectOutcome:
    state: GameState
    notices: tuple[Notice, ...]
    feedback_events: tuple[FeedbackEvent, ...]
    immediate_bonus: int
    end_of_game_bonus: int


def evaluate_rules(rules: Sequence[HiddenRule], clear: ClearResult) -> list[HiddenRule]:
    """Rules triggered by this placement's clears, in config order. A rule
    fires at most once per placement even if several rows satisfy it."""
    fired = []
    for rule in rules:
        t = rule.trigger
        for _idx, colors in clear.cleared_rows:
            count = sum(1 for c in colors if c == t.color)
            if count > t.min_count_exclusive:
                fired.append(rule)
                break
    return fired


def apply_effects(state: GameState, fired: Sequence[HiddenRule],
                  ctx: GameRuleContext) -> EffectOutcome:
    """Apply fired rules' effects.

    nextPieceBias always replaces the upcoming piece. syntheticReward emits
    a rule-sourced feedback event only when the game's agent is disclosed.
    scoreBonus pays multiplier x the clear's base points: immediately (with
    a notice to the disclosed players) when the guiding player is disclosed,
    otherwise into the end-of-game ledger when the agent is disclosed.
    """
    notices: list[Notice] = []
    feedback: list[FeedbackEvent] = []
    immediate = 0
    deferred = 0
    for rule in fired:
        for effect in rule.effects:
            if effect.kind == EFFECT_NEXT_PIECE_BIAS:
                piece = _biased_piece(state, effect.selection, ctx.evaluator)
                state = replace(state, next_piece=piece)
            elif effect.kind == EFFECT_SYNTHETIC_REWARD:
                if ctx.agent_id in rule.disclosed_to_agents:
                    feedback.append(FeedbackEvent(
                        game_id=ctx.game_id, wall_tick=ctx.tick,
                        polarity=effect.polarity, source="rule",
                        rule_id=rule.rule_id))
            elif effect.kind == EFFECT_SCORE_BONUS:
                bonus = int(round(effect.multiplier * ctx.clear.points_awarded))
                if (ctx.guiding_player_id is not None
                        and ctx.guiding_player_id in rule.disclosed_to_players):
                    immediate += bonus
                    state = replace(state, score=state.score + bonus)
                    notices.append(Notice(
                        rule.rule_id,
                        f"Rule {rule.rule_id}: +{bonus} bonus on {ctx.game_id}",
                        tuple(sorted(rule.disclosed_to_players))))
                elif ctx.agent_id in rule.disclosed_to_agents:
                    deferred += bonus
    return EffectOutcome(state, tuple(notices), tuple(feedback), immediate, deferred)


def _biased_piece(state: GameState, selection: str, evaluator) -> PieceDef:
    if selection.startswith("fixed:"):
        pid = selection.split(":", 1)[1]
        for p in state.active_pieces:
            if p.id == pid:
                return p
        raise UnknownPieceForBias(f"piece {pid!r} is not in the active set")
    return favorable_piece(state.board, state.active_pieces, evaluator)


def favorable_piece(board: Board, piece_set: Sequence[PieceDef],
                    evaluator: Callable[[np.ndarray], float]) -> PieceDef:
    """The piece whose best placement scores highest under the evaluator;
    ties break by piece id order."""
    if not piece_set:
        raise EmptyPieceSet("favorable piece needs a non-empty piece set")
    masks = column_masks(board)
    heights = board.column_heights()
    best_piece = None
    best_v = -np.inf
    for piece in sorted(piece_set, key=lambda p: p.id):
        for pl in enumerate_placements(board, piece):
            res = drop_on_masks(masks, heights, board.height, piece,
                                pl.rotation_index, pl.column)
            new_masks, _ = res
            v = evaluator(features_from_masks(new_masks, board.width, board.height))
            if v > best_v:
                best_v = v
                best_piece = piece
    if best_piece is None:
        # no piece has a legal placement; fall back to id order
        return sorted(piece_set, key=lambda p: p.id)[0]
    return best_piece


@dataclass(frozen=True)
class RegimeEvent:
    at_tick: int
    add_pieces: tuple[PieceDef, ...] = ()
    remove_pieces: tuple[str, ...] = ()
    new_scoring: Optional[ScoringTable] = None


@dataclass(frozen=True)
class RegimeSchedule:
    events: tuple[RegimeEvent, ...] = ()

    def __post_init__(self):
        ticks = [e.at_tick for e in self.events]
        if ticks != sorted(ticks) or len(set(ticks)) != len(ticks):
            raise ValueError("regime event ticks must be strictly increasing")


def advance_regime(schedule: RegimeSchedule, tick: int, state: GameState) -> GameState:
    """Apply every not-yet-applied schedule event with atTick <= tick.
    Idempotent: the state's regime pointer tracks applied events."""
    idx = state.regime_index
    events = schedule.events
    while idx < len(events) and events[idx].at_tick <= tick:
        ev = events[idx]
        active = list(state.active_pieces)
        present = {p.id for p in active}
        for piece in ev.add_pieces:
            if piece.id not in present:
                active.append(piece)
                present.add(piece.id)
        active = [p for p in active if p.id not in set(ev.remove_pieces)]
        if not active:
            raise RemovalWouldEmptyPieceSet(
                f"regime event at tick {ev.at_tick} empties the piece set")
        rng = rebuild_bag(state.rng, active)
        state = replace(
            state,
            active_pieces=tuple(active),
            rng=rng,
            scoring=ev.new_scoring if ev.new_scoring is not None else state.scoring,
            regime_index=idx + 1,
        )
        idx += 1
    return state
