"""Human-reward modeling over afterstates.

The model regresses evaluative keystrokes onto board features of the
afterstates an agent chose, and the agent acts greedily on its predictions.
Features are the classical Tetris shape descriptors: per-column heights,
adjacent height differences, maximum height, and hole count, all scaled
to [0, 1].

Delayed feedback is credited uniformly over the decisions inside a tick
window; the per-event weights always sum to 1.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .engine import Board, GameState, Placement, column_masks, drop_on_masks, enumerate_placements
from .errors import (
    DimensionMismatch,
    EmptySampleList,
    NoEligibleDecisions,
    NoLegalPlacement,
)

ARCH_LINEAR = "linear"
ARCH_MLP = "mlp"


def feature_dim(width: int, height: int) -> int:
    # heights + adjacent diffs + max height + holes
    return width + (width - 1) + 2


def extract_features(board: Board) -> np.ndarray:
    """Reference feature extraction from the color grid."""
    return features_from_heights(board.column_heights(),
                                 _grid_hole_count(board), board.width, board.height)


def _grid_hole_count(board: Board) -> int:
    holes = 0
    for c in range(board.width):
        covered = False
        for r in range(board.height):
            if board.grid[r][c] is not None:
                covered = True
            elif covered:
                holes += 1
    return holes


def features_from_heights(heights: Sequence[int], holes: int,
                          width: int, height: int) -> np.ndarray:
    f = np.empty(feature_dim(width, height))
    for i in range(width):
        f[i] = heights[i]
    for i in range(width - 1):
        f[width + i] = abs(heights[i + 1] - heights[i])
    f[2 * width - 1] = max(heights)
    f[: 2 * width] /= height
    f[2 * width] = holes / (width * height)
    return f


def features_from_masks(masks: Sequence[int], width: int, height: int) -> np.ndarray:
    """Fast-path features from column bitmasks; bitwise-equal to
    `extract_features` on the corresponding grid."""
    heights = [m.bit_length() for m in masks]
    holes = sum(heights[i] - masks[i].bit_count() for i in range(width))
    return features_from_heights(heights, holes, width, height)


@dataclass(frozen=True)
class FeedbackEvent:
    """One evaluative signal bound to a game: a human keypress or a
    rule-synthesized reward."""

    game_id: str
    wall_tick: int
    polarity: float = 1.0
    source: str = "human"  # "human" | "rule"
    player_id: Optional[str] = None
    rule_id: Optional[str] = None


@dataclass
class DecisionRecord:
    game_id: str
    turn: int
    features: np.ndarray  # afterstate the agent chose
    wall_tick: int
    credited: bool = False


@dataclass(frozen=True)
class CreditedSample:
    features: np.ndarray
    label: float
    weight: float


@dataclass(frozen=True)
class FeedbackWindow:
    min_delay_ticks: int
    max_delay_ticks: int


@dataclass(frozen=True)
class ModelHyperparams:
    learning_rate: float = 0.05
    buffer_capacity: int = 20000
    minibatch_size: int = 64
    updates_per_feedback: int = 32


class _RingBuffer:
    """Fixed-capacity sample store backed by numpy arrays."""

    def __init__(self, capacity: int, dim: int):
        self.capacity = capacity
        self.X = np.zeros((capacity, dim))
        self.y = np.zeros(capacity)
        self.w = np.zeros(capacity)
        self.size = 0
        self.head = 0

    def push(self, x: np.ndarray, label: float, weight: float):
        self.X[self.head] = x
        self.y[self.head] = label
        self.w[self.head] = weight
        self.head = (self.head + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)


class RewardModel:
    """Learned predictor of human reward over afterstate features.

    `architecture` is either a plain linear map (weights = [w, bias]) or a
    one-hidden-layer tanh network. Prediction is a pure function of
    (weights, features); training state (buffer, sampler) lives alongside.
    """

    def __init__(self, architecture: str, dim: int, hyper: ModelHyperparams,
                 seed: int = 0, hidden_width: int = 32):
        if architecture not in (ARCH_LINEAR, ARCH_MLP):
            raise ValueError(f"unknown architecture {architecture!r}")
        self.architecture = architecture
        self.dim = dim
        self.hidden_width = hidden_width if architecture == ARCH_MLP else 0
        self.hyper = hyper
        self.rng = np.random.default_rng(seed)
        self.seed = seed
        if architecture == ARCH_LINEAR:
            self.weights = np.zeros(dim + 1)
        else:
            h = hidden_width
            w1 = self.rng.normal(0.0, 1.0 / np.sqrt(dim), size=h * dim)
            b1 = np.zeros(h)
            w2 = self.rng.normal(0.0, 1.0 / np.sqrt(h), size=h)
            b2 = np.zeros(1)
            self.weights = np.concatenate([w1, b1, w2, b2])
        self.buffer = _RingBuffer(hyper.buffer_capacity, dim)
        self.samples_seen = 0

    def clone_weights(self) -> np.ndarray:
        return self.weights.copy()

    def _unpack(self, weights):
        h, d = self.hidden_width, self.dim
        w1 = weights[: h * d].reshape(h, d)
        b1 = weights[h * d: h * d + h]
        w2 = weights[h * d + h: h * d + 2 * h]
        b2 = weights[-1]
        return w1, b1, w2, b2


def predict(model: RewardModel, features: np.ndarray) -> float:
    if features.shape != (model.dim,):
        raise DimensionMismatch(f"expected {model.dim} features, got {features.shape}")
    return float(_forward(model, features.reshape(1, -1))[0])


def _forward(model: RewardModel, X: np.ndarray) -> np.ndarray:
    if model.architecture == ARCH_LINEAR:
        return X @ model.weights[:-1] + model.weights[-1]
    w1, b1, w2, b2 = model._unpack(model.weights)
    return np.tanh(X @ w1.T + b1) @ w2 + b2


def loss_and_grad(model: RewardModel, weights: np.ndarray, X: np.ndarray,
                  y: np.ndarray, wt: np.ndarray) -> tuple[float, np.ndarray]:
    """Weighted squared error, averaged over the batch, and its gradient."""
    n = len(X)
    if model.architecture == ARCH_LINEAR:
        pred = X @ weights[:-1] + weights[-1]
        resid = pred - y
        loss = float(np.mean(wt * resid ** 2))
        err = 2.0 * wt * resid / n
        grad = np.concatenate([X.T @ err, [err.sum()]])
        return loss, grad
    w1, b1, w2, _b2 = model._unpack(weights)
    Z = X @ w1.T + b1
    A = np.tanh(Z)
    pred = A @ w2 + weights[-1]
    resid = pred - y
    loss = float(np.mean(wt * resid ** 2))
    err = 2.0 * wt * resid / n
    g_w2 = A.T @ err
    g_b2 = err.sum()
    dZ = np.outer(err, w2) * (1.0 - A ** 2)
    g_w1 = dZ.T @ X
    g_b1 = dZ.sum(axis=0)
    return loss, np.concatenate([g_w1.ravel(), g_b1, g_w2, [g_b2]])


def update(model: RewardModel, samples: Sequence[CreditedSample]) -> RewardModel:
    """Insert samples and take seeded SGD steps on minibatches drawn
    uniformly from the replay buffer."""
    if not samples:
        raise EmptySampleList("update requires at least one sample")
    for s in samples:
        if s.features.shape != (model.dim,):
            raise DimensionMismatch(
                f"sample has {s.features.shape} features, model expects {model.dim}")
        model.buffer.push(s.features, s.label, s.weight)
    model.samples_seen += len(samples)
    lr = model.hyper.learning_rate
    if lr == 0.0:
        return model
    size = model.buffer.size
    k = min(model.hyper.minibatch_size, size)
    for _ in range(model.hyper.updates_per_feedback):
        idx = model.rng.integers(size, size=k)
        X = model.buffer.X[idx]
        y = model.buffer.y[idx]
        wt = model.buffer.w[idx]
        _, grad = loss_and_grad(model, model.weights, X, y, wt)
        model.weights = model.weights - lr * grad
    return model


def credit_assign(history: Sequence[DecisionRecord], feedback: FeedbackEvent,
                  window: FeedbackWindow) -> list[CreditedSample]:
    """Spread one feedback event uniformly over the decisions whose age at
    the keypress falls inside the window."""
    eligible = [d for d in history
                if window.min_delay_ticks <= feedback.wall_tick - d.wall_tick
                <= window.max_delay_ticks]
    if not eligible:
        raise NoEligibleDecisions(
            f"no decisions within [{window.min_delay_ticks}, {window.max_delay_ticks}] "
            f"ticks before tick {feedback.wall_tick}")
    w = 1.0 / len(eligible)
    out = []
    for d in eligible:
        d.credited = True
        out.append(CreditedSample(d.features, float(feedback.polarity), w))
    return out


def evaluate_placements(state: GameState) -> list[tuple[Placement, np.ndarray]]:
    """Each legal placement paired with its afterstate features, in
    (column, rotationIndex) order."""
    placements = enumerate_placements(state.board, state.current_piece)
    board = state.board
    masks = column_masks(board)
    heights = board.column_heights()
    out = []
    for pl in placements:
        res = drop_on_masks(masks, heights, board.height, state.current_piece,
                            pl.rotation_index, pl.column)
        new_masks, _lines = res
        out.append((pl, features_from_masks(new_masks, board.width, board.height)))
    return out


def select_action(model: RewardModel, state: GameState) -> Placement:
    """Greedy argmax over afterstate predictions; ties break to the lowest
    column, then lowest rotation index."""
    scored = evaluate_placements(state)
    if not scored:
        raise NoLegalPlacement("no legal placement for the current piece")
    best = None
    best_v = -np.inf
    for pl, feats in scored:  # iteration order realizes the tie-break
        v = predict(model, feats)
        if v > best_v:
            best, best_v = pl, v
    return best


# -- checkpoints ---------------------------------------------------------------

def weight_digest(weights: np.ndarray) -> int:
    h = hashlib.blake2b(np.asarray(weights, dtype="<f8").tobytes(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


def save_checkpoint(model: RewardModel, path) -> None:
    doc = {
        "architecture": model.architecture,
        "hiddenWidth": model.hidden_width,
        "dim": model.dim,
        "hyperparams": {
            "learningRate": model.hyper.learning_rate,
            "bufferCapacity": model.hyper.buffer_capacity,
            "minibatchSize": model.hyper.minibatch_size,
            "updatesPerFeedback": model.hyper.updates_per_feedback,
        },
        "weights": [float(w) for w in model.weights],
        "sampleCount": model.samples_seen,
        "digest": f"{weight_digest(model.weights):016x}",
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_checkpoint(path, seed: int = 0) -> RewardModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    hp = doc["hyperparams"]
    hyper = ModelHyperparams(
        learning_rate=hp["learningRate"],
        buffer_capacity=hp["bufferCapacity"],
        minibatch_size=hp["minibatchSize"],
        updates_per_feedback=hp["updatesPerFeedback"],
    )
    model = RewardModel(doc["architecture"], doc["dim"], hyper, seed=seed,
                        hidden_width=doc.get("hiddenWidth") or 32)
    weights = np.array(doc["weights"], dtype=float)
    if f"{weight_digest(weights):016x}" != doc["digest"]:
        raise ValueError("checkpoint digest mismatch")
    model.weights = weights
    model.samples_seen = doc["sampleCount"]
    return model
