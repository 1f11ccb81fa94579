"""Headless experimentation: synthetic oracle trainers stand in for humans,
sessions run at unbounded speed, and metrics land in a CSV plus the JSONL
event log.

The oracle watches each guided board, ranks the legal placements with a
fixed heuristic, and presses the reward key (through the ordinary key
path, at a configured delay) whenever the agent's choice ranks in its
top M. Evaluation always runs on frozen weight snapshots with seeds
disjoint from training.
"""
from __future__ import annotations

import dataclasses
import hashlib
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import SessionConfig
from .determinism import derive_seed
from .engine import GameState, apply_placement, enumerate_placements, new_game
from .errors import InvalidConfig
from .eventlog import canonical_json, open_log
from .heuristics import default_oracle_weights
from .learner import (
    RewardModel,
    evaluate_placements,
    feature_dim,
    predict,
    select_action,
)
from .session import Session, create_session
from .team import KIND_GUIDED

_EVAL_TAG = 0xE7A1
_RANDOM_TAG = 0xBA5E
_BANK_TAG = 0xBA9C
_ORACLE_TAG = 0x0AC1E


@dataclass
class OracleTrainer:
    """Mechanized trainer: press iff the agent's placement ranks in the
    oracle's top M, optionally gated by a press probability."""

    weights: np.ndarray
    top_m: int = 1
    press_probability: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.top_m < 1:
            raise ValueError("topM must be >= 1")
        self.rng = np.random.default_rng(self.seed)


def oracle_decide(oracle: OracleTrainer, state: GameState, chosen) -> bool:
    """True means press. Ranking ties break exactly like action selection:
    lower column, then lower rotation index."""
    scored = evaluate_placements(state)
    values = [float(oracle.weights @ feats) for _, feats in scored]
    order = sorted(range(len(scored)), key=lambda i: -values[i])
    chosen_key = (chosen.column, chosen.rotation_index)
    rank = None
    for pos, i in enumerate(order):
        pl = scored[i][0]
        if (pl.column, pl.rotation_index) == chosen_key:
            rank = pos
            break
    if rank is None or rank >= oracle.top_m:
        return False
    if oracle.press_probability >= 1.0:
        return True
    return bool(oracle.rng.random() < oracle.press_probability)


@dataclass(frozen=True)
class EvalStats:
    lines: tuple[int, ...]

    @property
    def median(self) -> float:
        return float(np.median(self.lines))

    @property
    def mean(self) -> float:
        return float(np.mean(self.lines))


def _play_game(policy, pieces, seed: int, width: int, height: int,
               max_turns: int) -> int:
    state = new_game(pieces, seed, width=width, height=height)
    lines = 0
    for _ in range(max_turns):
        if state.status != "active":
            break
        placement = policy(state)
        state, clear = apply_placement(state, placement)
        lines += clear.lines_cleared
    return lines


def evaluate_model(model: RewardModel, config: SessionConfig, games: int,
                   seed: int) -> EvalStats:
    """Median/mean lines over fresh games played greedily on frozen weights."""
    pieces = config.active_pieces()
    results = []
    for i in range(games):
        game_seed = derive_seed(seed, _EVAL_TAG, i)
        results.append(_play_game(lambda st: select_action(model, st), pieces,
                                  game_seed, config.board_width,
                                  config.board_height,
                                  config.harness.eval_max_turns))
    return EvalStats(tuple(results))


def evaluate_with_oracle(model: RewardModel, oracle_weights: np.ndarray,
                         config: SessionConfig, games: int,
                         seed: int) -> tuple[EvalStats, float]:
    """One evaluation pass returning both line statistics and the on-policy
    oracle-agreement rate (fraction of visited states where the model's
    argmax equals the oracle's)."""
    pieces = config.active_pieces()
    lines_all = []
    agree = 0
    states = 0
    for i in range(games):
        state = new_game(pieces, derive_seed(seed, _EVAL_TAG, i),
                         width=config.board_width, height=config.board_height)
        lines = 0
        for _ in range(config.harness.eval_max_turns):
            if state.status != "active":
                break
            scored = evaluate_placements(state)
            best_m = best_o = None
            vm = vo = -np.inf
            for pl, feats in scored:
                m = predict(model, feats)
                o = float(oracle_weights @ feats)
                if m > vm:
                    vm, best_m = m, pl
                if o > vo:
                    vo, best_o = o, pl
            agree += best_m == best_o
            states += 1
            state, clear = apply_placement(state, best_m)
            lines += clear.lines_cleared
        lines_all.append(lines)
    return EvalStats(tuple(lines_all)), agree / max(states, 1)


def baseline_random(config: SessionConfig, games: int, seed: int) -> EvalStats:
    """Uniform-random legal placements on the same engine and the same
    evaluation game seeds."""
    pieces = config.active_pieces()
    results = []
    for i in range(games):
        game_seed = derive_seed(seed, _EVAL_TAG, i)
        rng = np.random.default_rng(derive_seed(seed, _RANDOM_TAG, i))

        def policy(state):
            pls = enumerate_placements(state.board, state.current_piece)
            return pls[int(rng.integers(len(pls)))]

        results.append(_play_game(policy, pieces, game_seed, config.board_width,
                                  config.board_height,
                                  config.harness.eval_max_turns))
    return EvalStats(tuple(results))


def state_bank(config: SessionConfig, n: int, seed: int) -> list[GameState]:
    """Reachable mid-game states sampled from random play, for agreement
    metrics."""
    pieces = config.active_pieces()
    bank = []
    game_index = 0
    rng = np.random.default_rng(derive_seed(seed, _BANK_TAG))
    while len(bank) < n:
        state = new_game(pieces, derive_seed(seed, _BANK_TAG, game_index),
                         width=config.board_width, height=config.board_height)
        game_index += 1
        while state.status == "active" and len(bank) < n:
            bank.append(state)
            pls = enumerate_placements(state.board, state.current_piece)
            state, _ = apply_placement(state, pls[int(rng.integers(len(pls)))])
    return bank


def oracle_agreement(model: RewardModel, oracle_weights: np.ndarray,
                     bank: Sequence[GameState]) -> float:
    """Fraction of bank states where the model's argmax placement equals the
    oracle's."""
    if not bank:
        return 0.0
    agree = 0
    for state in bank:
        scored = evaluate_placements(state)
        best_m = best_o = None
        vm = vo = -np.inf
        for pl, feats in scored:
            m = predict(model, feats)
            o = float(oracle_weights @ feats)
            if m > vm:
                vm, best_m = m, pl
            if o > vo:
                vo, best_o = o, pl
        agree += best_m == best_o
    return agree / len(bank)


@dataclass
class TrainingResult:
    session: Session
    # agent id -> feedback checkpoint -> frozen weights
    snapshots: dict[str, dict[int, np.ndarray]]
    ticks: int


def train_session(config: SessionConfig, log_store=None,
                  max_ticks: int = 3_000_000) -> TrainingResult:
    """Run the live loop headless: oracle trainers press the reward key for
    each guided board until every guided agent reaches the feedback target."""
    config = dataclasses.replace(config, auto_restart=True)
    session = create_session(config)
    if log_store is not None:
        for ev in session.events:
            log_store.append(ev)
        session.sinks.append(log_store.append)

    hc = config.harness
    oracle = OracleTrainer(
        weights=(np.array(hc.oracle.weights) if hc.oracle.weights
                 else default_oracle_weights(config.board_width, config.board_height)),
        top_m=hc.oracle.top_m,
        press_probability=hc.oracle.press_probability,
        seed=derive_seed(config.master_seed, _ORACLE_TAG))
    target = hc.feedback_target_per_agent
    checkpoints = set(hc.checkpoint_feedback_counts)
    press_delay = (hc.press_delay_ticks if hc.press_delay_ticks is not None
                   else config.feedback_window.min_delay_ticks)

    guided = [a.agent_id for a in config.topology.agents if a.kind == KIND_GUIDED]
    dependents = [a.agent_id for a in config.topology.agents
                  if a.kind != KIND_GUIDED]
    board_of = {}
    player_of = {}
    for player_id, game_ids in session.player_games.items():
        for idx, gid in enumerate(game_ids):
            board_of[gid] = idx
            player_of[gid] = player_id

    snapshots: dict[str, dict[int, np.ndarray]] = {
        aid: {} for aid in guided + dependents}
    for aid in snapshots:
        if 0 in checkpoints:
            snapshots[aid][0] = session.models[aid].weights.copy()
    dependents_marked = {0} if 0 in checkpoints else set()

    due: dict[int, list[tuple[str, int, str]]] = {}
    while any(session.feedback_counts[a] < target for a in guided):
        if session.tick >= max_ticks:
            raise RuntimeError(
                f"training did not reach {target} feedback events per agent "
                f"within {max_ticks} ticks")
        events = session.advance(1)
        tick = session.tick
        for ev in events:
            if ev.kind != "DecisionPoint":
                continue
            game = session.games[ev.payload["gameId"]]
            if game.player_id is None:
                continue  # dependents generate no feedback
            if session.feedback_counts[game.agent_id] >= target:
                continue
            if oracle_decide(oracle, game.last_pre_state, game.last_placement):
                due.setdefault(tick + press_delay, []).append(
                    (player_of[game.game_id], board_of[game.game_id],
                     game.agent_id))
        for player_id, board_idx, agent_id in due.pop(tick, []):
            if session.feedback_counts[agent_id] >= target:
                continue
            console = session.consoles[player_id]
            if console.selected_board != board_idx:
                session.handle_key(player_id, str(board_idx))
            session.handle_key(player_id, "enter")
            count = session.feedback_counts[agent_id]
            if count in checkpoints:
                snapshots[agent_id][count] = session.models[agent_id].weights.copy()
            low_water = min(session.feedback_counts[a] for a in guided)
            for cp in sorted(checkpoints - dependents_marked):
                if low_water >= cp:
                    dependents_marked.add(cp)
                    for dep in dependents:
                        snapshots[dep][cp] = session.models[dep].weights.copy()
    for aid in guided + dependents:
        snapshots[aid]["final"] = session.models[aid].weights.copy()
    session.finish()
    return TrainingResult(session, snapshots, session.tick)


@dataclass(frozen=True)
class CheckpointRow:
    agent_id: str
    kind: str
    checkpoint: object  # feedback count or "final"
    feedback_count: int
    median_lines: float
    mean_lines: float
    agreement: float


@dataclass
class ExperimentReport:
    config_digest: str
    rows: list[CheckpointRow]
    baseline: EvalStats
    csv_path: Optional[Path]
    log_path: Optional[Path]
    wall_time_sec: float


def config_digest(config: SessionConfig) -> str:
    h = hashlib.blake2b(canonical_json(config.to_json()).encode(), digest_size=8)
    return h.hexdigest()


def _model_from_weights(config: SessionConfig, weights: np.ndarray) -> RewardModel:
    dim = feature_dim(config.board_width, config.board_height)
    model = RewardModel(config.learner.architecture, dim,
                        config.learner.hyperparams(), seed=0,
                        hidden_width=config.learner.hidden_width)
    model.weights = weights.copy()
    return model


def run_experiment(config: SessionConfig, episodes: Optional[int], seed: int,
                   out_path=None) -> ExperimentReport:
    """Full headless run: train with oracle trainers, evaluate every weight
    snapshot, write one CSV row per (agent, checkpoint), and keep the JSONL
    event log beside it. Deterministic given (config, seed).

    `episodes` overrides the per-agent feedback-event target.
    """
    started = time.monotonic()
    run_config = dataclasses.replace(
        config,
        master_seed=seed,
        session_id=f"{config.session_id}-seed{seed}",
        auto_restart=True)
    if episodes is not None:
        run_config = dataclasses.replace(
            run_config, harness=dataclasses.replace(
                run_config.harness,
                feedback_target_per_agent=episodes,
                checkpoint_feedback_counts=tuple(
                    c for c in run_config.harness.checkpoint_feedback_counts
                    if c <= episodes)))
    violations = run_config.validate()
    if violations:
        raise InvalidConfig(violations)

    log_store = None
    log_path = None
    csv_path = None
    if out_path is not None:
        csv_path = Path(out_path)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        stale = csv_path.parent / f"{run_config.session_id}.jsonl"
        if stale.exists():
            stale.unlink()  # each experiment run records a fresh session
        log_store = open_log(csv_path.parent, run_config.session_id)
        log_path = log_store.path

    result = train_session(run_config, log_store=log_store)
    if log_store is not None:
        log_store.close()

    hc = run_config.harness
    oracle_weights = (np.array(hc.oracle.weights) if hc.oracle.weights
                      else default_oracle_weights(run_config.board_width,
                                                  run_config.board_height))
    kind_of = {a.agent_id: a.kind for a in run_config.topology.agents}

    rows = []
    for agent_id in sorted(result.snapshots):
        for checkpoint in _ordered_checkpoints(result.snapshots[agent_id]):
            weights = result.snapshots[agent_id][checkpoint]
            model = _model_from_weights(run_config, weights)
            stats, agreement = evaluate_with_oracle(
                model, oracle_weights, run_config, hc.eval_games, seed)
            feedback = (result.session.feedback_counts[agent_id]
                        if checkpoint == "final" else checkpoint)
            rows.append(CheckpointRow(
                agent_id, kind_of[agent_id], checkpoint, feedback,
                stats.median, stats.mean, agreement))

    baseline = baseline_random(run_config, hc.eval_games, seed)
    report = ExperimentReport(
        config_digest=config_digest(run_config), rows=rows, baseline=baseline,
        csv_path=csv_path, log_path=log_path,
        wall_time_sec=time.monotonic() - started)
    if csv_path is not None:
        _write_csv(csv_path, report)
    return report


def _ordered_checkpoints(snapshots: dict) -> list:
    counts = sorted(k for k in snapshots if k != "final")
    return counts + (["final"] if "final" in snapshots else [])


def _write_csv(path: Path, report: ExperimentReport) -> None:
    lines = ["agentId,kind,checkpoint,feedbackCount,medianLines,meanLines,agreementRate"]
    for r in report.rows:
        lines.append(
            f"{r.agent_id},{r.kind},{r.checkpoint},{r.feedback_count},"
            f"{r.median_lines:.6f},{r.mean_lines:.6f},{r.agreement:.6f}")
    lines.append(
        f"baseline,random,final,0,{report.baseline.median:.6f},"
        f"{report.baseline.mean:.6f},0.000000")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
