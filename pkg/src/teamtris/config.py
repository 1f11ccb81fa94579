"""Session configuration: one JSON document wires boards, topology, learner
hyperparameters, hidden rules, regime schedule, seeds, and mode flags.

Shipped presets live in `teamtris/presets/`: base (the default two-player
team shape), advanced_intelligence (hidden rule), superhuman (ten boards,
speed ramp, freeze budget), rapid_change (piece/scoring schedule), and
integrated (everything at once).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional

from .engine import PieceDef, ScoringTable, load_piece_library
from .errors import InvalidConfig
from .learner import FeedbackWindow, ModelHyperparams
from .rules import HiddenRule, RegimeEvent, RegimeSchedule
from .team import TeamTopology, validate_topology

PRESET_NAMES = ("base", "advanced_intelligence", "superhuman", "rapid_change", "integrated")


@dataclass(frozen=True)
class DecisionPeriodCurve:
    initial_ticks: int = 50
    min_ticks: int = 10
    decay_factor_per_level: float = 1.0

    def period(self, level: int) -> int:
        raw = int(self.initial_ticks * self.decay_factor_per_level ** level)
        return max(self.min_ticks, raw, 1)


@dataclass(frozen=True)
class LearnerConfig:
    architecture: str = "linear"
    hidden_width: int = 32
    learning_rate: float = 0.05
    buffer_capacity: int = 20000
    minibatch_size: int = 64
    updates_per_feedback: int = 32
    # An unrewarded decision contributes one zero-label sample once its
    # feedback window expires. Without this contrast, press-only labels are
    # constant and the regressor cannot rank afterstates.
    implicit_zero_on_silence: bool = True
    implicit_zero_weight: float = 1.0
    initial_weights: Optional[tuple[float, ...]] = None

    def hyperparams(self) -> ModelHyperparams:
        return ModelHyperparams(self.learning_rate, self.buffer_capacity,
                                self.minibatch_size, self.updates_per_feedback)


@dataclass(frozen=True)
class OracleConfig:
    weights: Optional[tuple[float, ...]] = None  # None -> default heuristic
    top_m: int = 1
    press_probability: float = 1.0


@dataclass(frozen=True)
class HarnessConfig:
    oracle: OracleConfig = OracleConfig()
    feedback_target_per_agent: int = 300
    checkpoint_feedback_counts: tuple[int, ...] = (0, 50, 100, 200, 300)
    eval_games: int = 50
    eval_max_turns: int = 250
    press_delay_ticks: Optional[int] = None  # None -> window min delay


@dataclass(frozen=True)
class SessionConfig:
    session_id: str = "session"
    boards_per_player: int = 2
    topology: TeamTopology = None
    learner: LearnerConfig = LearnerConfig()
    rules: tuple[HiddenRule, ...] = ()
    regime: RegimeSchedule = RegimeSchedule()
    master_seed: int = 1
    tick_hz: int = 50
    decision_period: DecisionPeriodCurve = DecisionPeriodCurve()
    feedback_window: FeedbackWindow = FeedbackWindow(10, 200)
    freeze_budget_ticks: Optional[int] = None
    superhuman: bool = False
    integrated: bool = False
    auto_restart: bool = False
    board_width: int = 10
    board_height: int = 20
    active_piece_ids: tuple[str, ...] = ("I", "O", "T", "S", "Z", "J", "L")
    pieces_file: Optional[str] = None
    harness: HarnessConfig = HarnessConfig()

    def piece_library(self) -> list[PieceDef]:
        return load_piece_library(self.pieces_file)

    def active_pieces(self) -> list[PieceDef]:
        lib = {p.id: p for p in self.piece_library()}
        return [lib[pid] for pid in self.active_piece_ids]

    def validate(self) -> list[str]:
        v = []
        if not 1 <= self.boards_per_player <= 10:
            v.append(f"boardsPerPlayer must be 1..10, got {self.boards_per_player}")
        if self.topology is None:
            v.append("topology is required")
            return v
        v.extend(validate_topology(self.topology))
        for p in self.topology.players:
            n = len(self.topology.guided_agents(p.player_id))
            if n != self.boards_per_player:
                v.append(f"player {p.player_id!r} guides {n} agents, "
                         f"expected boardsPerPlayer={self.boards_per_player}")
        if self.decision_period.initial_ticks < 1 or self.decision_period.min_ticks < 1:
            v.append("decision period must be at least 1 tick")
        if not 0 < self.decision_period.decay_factor_per_level <= 1:
            v.append("decayFactorPerLevel must be in (0, 1]")
        if self.feedback_window.min_delay_ticks < 0 or \
                self.feedback_window.min_delay_ticks > self.feedback_window.max_delay_ticks:
            v.append("feedback window must satisfy 0 <= min <= max")
        if self.tick_hz < 1:
            v.append("tickHz must be >= 1")
        if self.board_width < 4 or self.board_height < 4:
            v.append("board too small")
        try:
            lib = {p.id for p in self.piece_library()}
            missing = [pid for pid in self.active_piece_ids if pid not in lib]
            if missing:
                v.append(f"active pieces not in library: {missing}")
            if not self.active_piece_ids:
                v.append("active piece set is empty")
        except (OSError, KeyError, ValueError) as exc:
            v.append(f"piece library unusable: {exc}")
        if self.freeze_budget_ticks is not None and self.freeze_budget_ticks < 1:
            v.append("freezeBudgetTicks must be >= 1 when set")
        return v

    def to_json(self) -> dict:
        return {
            "sessionId": self.session_id,
            "boardsPerPlayer": self.boards_per_player,
            "topology": self.topology.to_json(),
            "learner": {
                "architecture": self.learner.architecture,
                "hiddenWidth": self.learner.hidden_width,
                "learningRate": self.learner.learning_rate,
                "bufferCapacity": self.learner.buffer_capacity,
                "minibatchSize": self.learner.minibatch_size,
                "updatesPerFeedback": self.learner.updates_per_feedback,
                "implicitZeroOnSilence": self.learner.implicit_zero_on_silence,
                "implicitZeroWeight": self.learner.implicit_zero_weight,
                "initialWeights": (list(self.learner.initial_weights)
                                   if self.learner.initial_weights else None),
            },
            "rules": [r.to_json() for r in self.rules],
            "regime": {"events": [_regime_event_to_json(e) for e in self.regime.events]},
            "seeds": {"masterSeed": self.master_seed},
            "tickHz": self.tick_hz,
            "decisionPeriodCurve": {
                "initialTicks": self.decision_period.initial_ticks,
                "minTicks": self.decision_period.min_ticks,
                "decayFactorPerLevel": self.decision_period.decay_factor_per_level,
            },
            "feedbackWindow": {
                "minDelayTicks": self.feedback_window.min_delay_ticks,
                "maxDelayTicks": self.feedback_window.max_delay_ticks,
            },
            "freezeBudgetTicks": self.freeze_budget_ticks,
            "mode": {"superhuman": self.superhuman, "integrated": self.integrated},
            "autoRestart": self.auto_restart,
            "board": {"width": self.board_width, "height": self.board_height},
            "pieces": {"active": list(self.active_piece_ids), "file": self.pieces_file},
            "harness": {
                "oracle": {
                    "weights": (list(self.harness.oracle.weights)
                                if self.harness.oracle.weights else None),
                    "topM": self.harness.oracle.top_m,
                    "pressProbability": self.harness.oracle.press_probability,
                },
                "feedbackTargetPerAgent": self.harness.feedback_target_per_agent,
                "checkpointFeedbackCounts": list(self.harness.checkpoint_feedback_counts),
                "evalGames": self.harness.eval_games,
                "evalMaxTurns": self.harness.eval_max_turns,
                "pressDelayTicks": self.harness.press_delay_ticks,
            },
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SessionConfig":
        lrn = doc.get("learner", {})
        curve = doc.get("decisionPeriodCurve", {})
        window = doc.get("feedbackWindow", {})
        mode = doc.get("mode", {})
        board = doc.get("board", {})
        pieces = doc.get("pieces", {})
        harness = doc.get("harness", {})
        oracle = harness.get("oracle", {})
        lib = load_piece_library(pieces.get("file"))
        by_id = {p.id: p for p in lib}
        events = []
        for e in doc.get("regime", {}).get("events", []):
            events.append(RegimeEvent(
                at_tick=int(e["atTick"]),
                add_pieces=tuple(by_id[pid] for pid in e.get("addPieces", [])),
                remove_pieces=tuple(e.get("removePieces", [])),
                new_scoring=(ScoringTable.from_json(e["newScoringTable"])
                             if e.get("newScoringTable") else None),
            ))
        return cls(
            session_id=doc.get("sessionId", "session"),
            boards_per_player=int(doc["boardsPerPlayer"]),
            topology=TeamTopology.from_json(doc["topology"]),
            learner=LearnerConfig(
                architecture=lrn.get("architecture", "linear"),
                hidden_width=int(lrn.get("hiddenWidth", 32)),
                learning_rate=float(lrn.get("learningRate", 0.05)),
                buffer_capacity=int(lrn.get("bufferCapacity", 20000)),
                minibatch_size=int(lrn.get("minibatchSize", 64)),
                updates_per_feedback=int(lrn.get("updatesPerFeedback", 32)),
                implicit_zero_on_silence=bool(lrn.get("implicitZeroOnSilence", True)),
                implicit_zero_weight=float(lrn.get("implicitZeroWeight", 1.0)),
                initial_weights=(tuple(lrn["initialWeights"])
                                 if lrn.get("initialWeights") else None),
            ),
            rules=tuple(HiddenRule.from_json(r) for r in doc.get("rules", [])),
            regime=RegimeSchedule(tuple(events)),
            master_seed=int(doc.get("seeds", {}).get("masterSeed", 1)),
            tick_hz=int(doc.get("tickHz", 50)),
            decision_period=DecisionPeriodCurve(
                initial_ticks=int(curve.get("initialTicks", 50)),
                min_ticks=int(curve.get("minTicks", 10)),
                decay_factor_per_level=float(curve.get("decayFactorPerLevel", 1.0)),
            ),
            feedback_window=FeedbackWindow(
                min_delay_ticks=int(window.get("minDelayTicks", 10)),
                max_delay_ticks=int(window.get("maxDelayTicks", 200)),
            ),
            freeze_budget_ticks=doc.get("freezeBudgetTicks"),
            superhuman=bool(mode.get("superhuman", False)),
            integrated=bool(mode.get("integrated", False)),
            auto_restart=bool(doc.get("autoRestart", False)),
            board_width=int(board.get("width", 10)),
            board_height=int(board.get("height", 20)),
            active_piece_ids=tuple(pieces.get("active", ("I", "O", "T", "S", "Z", "J", "L"))),
            pieces_file=pieces.get("file"),
            harness=HarnessConfig(
                oracle=OracleConfig(
                    weights=(tuple(oracle["weights"]) if oracle.get("weights") else None),
                    top_m=int(oracle.get("topM", 1)),
                    press_probability=float(oracle.get("pressProbability", 1.0)),
                ),
                feedback_target_per_agent=int(harness.get("feedbackTargetPerAgent", 300)),
                checkpoint_feedback_counts=tuple(
                    harness.get("checkpointFeedbackCounts", (0, 50, 100, 200, 300))),
                eval_games=int(harness.get("evalGames", 50)),
                eval_max_turns=int(harness.get("evalMaxTurns", 250)),
                press_delay_ticks=harness.get("pressDelayTicks"),
            ),
        )


def _regime_event_to_json(e: RegimeEvent) -> dict:
    out = {"atTick": e.at_tick,
           "addPieces": [p.id for p in e.add_pieces],
           "removePieces": list(e.remove_pieces)}
    if e.new_scoring is not None:
        out["newScoringTable"] = e.new_scoring.to_json()
    return out


def load_config(path) -> SessionConfig:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    config = SessionConfig.from_json(doc)
    violations = config.validate()
    if violations:
        raise InvalidConfig(violations)
    return config


def load_preset(name: str) -> SessionConfig:
    if name not in PRESET_NAMES:
        raise InvalidConfig([f"unknown preset {name!r}; choose from {PRESET_NAMES}"])
    text = resources.files("teamtris").joinpath(f"presets/{name}.json").read_text()
    config = SessionConfig.from_json(json.loads(text))
    violations = config.validate()
    if violations:
        raise InvalidConfig(violations)
    return config
