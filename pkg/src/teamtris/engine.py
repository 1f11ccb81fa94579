"""Deterministic, turn-based Tetris core.

Boards are color grids (row 0 at the top). The action space is hard drops:
an agent picks a (rotation, column) pair and the piece falls straight down
from above the stack; there is no steering, soft drop, or wall kicking.
All operations are pure: they take state and return new state.

A bitboard fast path (`column_masks` / `drop_on_masks`) mirrors the grid
semantics for afterstate evaluation; equivalence with the grid path is
property-tested.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, replace
from functools import cached_property
from importlib import resources
from typing import Optional, Sequence

from .determinism import shuffled
from .errors import EmptyPieceSet, GameNotActive, IllegalPlacement

STANDARD_COLORS = ("yellow", "cyan", "purple", "green", "red", "blue", "orange")
_COLOR_RE = re.compile(r"^(yellow|cyan|purple|green|red|blue|orange|custom\d*)$")

STATUS_ACTIVE = "active"
STATUS_FROZEN = "frozen"
STATUS_OVER = "over"


def _normalize(cells) -> tuple[tuple[int, int], ...]:
    r0 = min(r for r, _ in cells)
    c0 = min(c for _, c in cells)
    return tuple(sorted((r - r0, c - c0) for r, c in cells))


def _rotate_cw(cells):
    # (r, c) -> (c, -r), then renormalized to the top-left origin
    return _normalize([(c, -r) for r, c in cells])


@dataclass(frozen=True)
class RotationProfile:
    """Precomputed drop geometry for one rotation."""

    cells: tuple[tuple[int, int], ...]
    width: int
    height: int
    # per local column: (lowest cell's row-from-bottom, bitmask of rows-from-bottom)
    columns: tuple[tuple[Optional[int], int], ...]


@dataclass(frozen=True)
class PieceDef:
    id: str
    display_name: str
    color: str
    rotations: tuple[tuple[tuple[int, int], ...], ...]
    provenance: str  # "standard" | "novel"

    def __post_init__(self):
        if not _COLOR_RE.match(self.color):
            raise ValueError(f"piece {self.id}: unknown color {self.color!r}")
        if self.provenance not in ("standard", "novel"):
            raise ValueError(f"piece {self.id}: bad provenance {self.provenance!r}")
        if not self.rotations:
            raise ValueError(f"piece {self.id}: no rotations")
        seen = set()
        for rot in self.rotations:
            if not rot:
                raise ValueError(f"piece {self.id}: empty rotation")
            if len(set(rot)) != len(rot):
                raise ValueError(f"piece {self.id}: duplicate cells in rotation")
            norm = _normalize(rot)
            if norm in seen:
                raise ValueError(f"piece {self.id}: duplicate rotations")
            seen.add(norm)
            if self.provenance == "standard" and len(rot) != 4:
                raise ValueError(f"piece {self.id}: standard pieces have 4 cells")

    @cached_property
    def profiles(self) -> tuple[RotationProfile, ...]:
        out = []
        for rot in self.rotations:
            norm = _normalize(rot)
            h = max(r for r, _ in norm) + 1
            w = max(c for _, c in norm) + 1
            cols: list[tuple[Optional[int], int]] = []
            for j in range(w):
                frs = [h - 1 - r for r, c in norm if c == j]
                mask = 0
                for fr in frs:
                    mask |= 1 << fr
                cols.append((min(frs) if frs else None, mask))
            out.append(RotationProfile(norm, w, h, tuple(cols)))
        return tuple(out)

    @property
    def cell_count(self) -> int:
        return len(self.rotations[0])


def piece_from_base_cells(piece_id, display_name, color, cells, provenance) -> PieceDef:
    """Build a PieceDef by rotating a base shape 90 degrees at a time,
    keeping only distinct normalized rotations."""
    rots = []
    cur = _normalize(cells)
    for _ in range(4):
        if cur not in rots:
            rots.append(cur)
        cur = _rotate_cw(cur)
    return PieceDef(piece_id, display_name, color, tuple(rots), provenance)


def load_piece_library(path=None) -> list[PieceDef]:
    """Load piece definitions from a JSON document (default: the shipped set
    of 7 standard pieces plus 2 novel pieces)."""
    if path is None:
        text = resources.files("teamtris").joinpath("data/pieces.json").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    doc = json.loads(text)
    pieces = []
    for entry in doc["pieces"]:
        rots = []
        seen = set()
        for rot in entry["rotations"]:
            norm = _normalize([(int(r), int(c)) for r, c in rot])
            if norm not in seen:  # duplicates collapse to one rotation
                seen.add(norm)
                rots.append(norm)
        pieces.append(
            PieceDef(
                id=entry["id"],
                display_name=entry["displayName"],
                color=entry["color"],
                rotations=tuple(rots),
                provenance=entry["provenance"],
            )
        )
    return pieces


def standard_pieces(library=None) -> list[PieceDef]:
    lib = library if library is not None else load_piece_library()
    return [p for p in lib if p.provenance == "standard"]


@dataclass(frozen=True)
class Board:
    width: int
    height: int
    grid: tuple[tuple[Optional[str], ...], ...]  # grid[row][col], row 0 = top

    @classmethod
    def empty(cls, width: int = 10, height: int = 20) -> "Board":
        row = (None,) * width
        return cls(width, height, (row,) * height)

    def column_heights(self) -> list[int]:
        hs = []
        for c in range(self.width):
            h = 0
            for r in range(self.height):
                if self.grid[r][c] is not None:
                    h = self.height - r
                    break
            hs.append(h)
        return hs

    def filled_cells(self) -> int:
        return sum(1 for row in self.grid for cell in row if cell is not None)


@dataclass(frozen=True)
class Placement:
    piece_id: str
    rotation_index: int
    column: int
    landing_row: int  # board row of the rotated shape's top row after the drop


@dataclass(frozen=True)
class ClearResult:
    cleared_rows: tuple[tuple[int, tuple[str, ...]], ...]  # (rowIndex, pre-clear colors)
    points_awarded: int
    lines_cleared: int


@dataclass(frozen=True)
class ScoringTable:
    """Base points per simultaneous line count; total = base * (level + 1)."""

    points_by_lines: tuple[int, int, int, int]  # 1, 2, 3, 4+

    def __post_init__(self):
        pts = self.points_by_lines
        if any(p < 0 for p in pts) or list(pts) != sorted(pts):
            raise ValueError("scoring table must be non-negative and non-decreasing")

    @classmethod
    def classic(cls) -> "ScoringTable":
        return cls((40, 100, 300, 1200))

    def points_for(self, lines: int, level: int) -> int:
        if lines <= 0:
            return 0
        return self.points_by_lines[min(lines, 4) - 1] * (level + 1)

    def to_json(self):
        return {"1": self.points_by_lines[0], "2": self.points_by_lines[1],
                "3": self.points_by_lines[2], "4": self.points_by_lines[3]}

    @classmethod
    def from_json(cls, doc) -> "ScoringTable":
        return cls((int(doc["1"]), int(doc["2"]), int(doc["3"]), int(doc["4"])))


@dataclass(frozen=True)
class BagRng:
    """Shuffled-bag piece generator state: a splitmix64 state plus the
    remaining ids of the current bag."""

    state: int
    bag: tuple[str, ...] = ()


@dataclass(frozen=True)
class GameState:
    board: Board
    score: int
    total_lines: int
    level: int
    current_piece: PieceDef
    next_piece: PieceDef
    rng: BagRng
    turn: int
    status: str
    active_pieces: tuple[PieceDef, ...]
    scoring: ScoringTable
    regime_index: int = 0  # schedule events already applied


def draw_next_piece(rng: BagRng, active_pieces: Sequence[PieceDef]) -> tuple[PieceDef, BagRng]:
    """Draw from the shuffled bag, reshuffling over the active set when the
    bag is exhausted (or stale after a piece-set change)."""
    by_id = {p.id: p for p in active_pieces}
    if not by_id:
        raise EmptyPieceSet("active piece set is empty")
    bag = rng.bag
    state = rng.state
    if not bag or any(pid not in by_id for pid in bag):
        new_bag, state = shuffled(sorted(by_id), state)
        bag = tuple(new_bag)
    piece = by_id[bag[0]]
    return piece, BagRng(state, bag[1:])


def rebuild_bag(rng: BagRng, active_pieces: Sequence[PieceDef]) -> BagRng:
    """Immediately reshuffle the bag over a (possibly changed) piece set."""
    ids = sorted(p.id for p in active_pieces)
    if not ids:
        raise EmptyPieceSet("active piece set is empty")
    new_bag, state = shuffled(ids, rng.state)
    return BagRng(state, tuple(new_bag))


def new_game(pieces: Sequence[PieceDef], seed: int, scoring: Optional[ScoringTable] = None,
             width: int = 10, height: int = 20) -> GameState:
    scoring = scoring or ScoringTable.classic()
    cur, rng = draw_next_piece(BagRng(seed), pieces)
    nxt, rng = draw_next_piece(rng, pieces)
    state = GameState(
        board=Board.empty(width, height),
        score=0,
        total_lines=0,
        level=0,
        current_piece=cur,
        next_piece=nxt,
        rng=rng,
        turn=0,
        status=STATUS_ACTIVE,
        active_pieces=tuple(pieces),
        scoring=scoring,
    )
    if not enumerate_placements(state.board, cur):
        state = replace(state, status=STATUS_OVER)
    return state


def _drop_base(heights: list[int], profile: RotationProfile, column: int) -> int:
    """Rows-from-bottom offset at which the shape comes to rest."""
    base = 0
    for j, (min_fr, _mask) in enumerate(profile.columns):
        if min_fr is None:
            continue
        b = heights[column + j] - min_fr
        if b > base:
            base = b
    return base


def enumerate_placements(board: Board, piece: PieceDef) -> list[Placement]:
    """All legal hard-drop placements, ordered by (column, rotationIndex).

    An empty result means the piece cannot be placed anywhere: game over.
    """
    heights = board.column_heights()
    out = []
    for ri, profile in enumerate(piece.profiles):
        for col in range(board.width - profile.width + 1):
            base = _drop_base(heights, profile, col)
            if base + profile.height <= board.height:
                landing = board.height - base - profile.height
                out.append(Placement(piece.id, ri, col, landing))
    out.sort(key=lambda p: (p.column, p.rotation_index))
    return out


def apply_placement(state: GameState, placement: Placement) -> tuple[GameState, ClearResult]:
    """Lock the current piece at the placement, resolve clears, score, and
    advance the piece queue."""
    if state.status != STATUS_ACTIVE:
        raise GameNotActive(f"game status is {state.status}")
    piece = state.current_piece
    board = state.board
    if placement.piece_id != piece.id:
        raise IllegalPlacement("placement is for a different piece")
    if not 0 <= placement.rotation_index < len(piece.profiles):
        raise IllegalPlacement("rotation index out of range")
    profile = piece.profiles[placement.rotation_index]
    if not 0 <= placement.column <= board.width - profile.width:
        raise IllegalPlacement("column out of range")
    heights = board.column_heights()
    base = _drop_base(heights, profile, placement.column)
    if base + profile.height > board.height:
        raise IllegalPlacement("no room to drop at this column")
    landing = board.height - base - profile.height
    if landing != placement.landing_row:
        raise IllegalPlacement(
            f"landing row {placement.landing_row} does not match hard drop ({landing})")

    grid = [list(row) for row in board.grid]
    for r, c in profile.cells:
        grid[landing + r][placement.column + c] = piece.color

    cleared = []
    for idx in range(board.height):
        if all(cell is not None for cell in grid[idx]):
            cleared.append((idx, tuple(grid[idx])))
    if cleared:
        for idx, _colors in reversed(cleared):
            del grid[idx]
        empty = [None] * board.width
        for _ in cleared:
            grid.insert(0, list(empty))

    lines = len(cleared)
    points = state.scoring.points_for(lines, state.level)
    total_lines = state.total_lines + lines
    new_board = Board(board.width, board.height, tuple(tuple(row) for row in grid))

    nxt, rng = draw_next_piece(state.rng, state.active_pieces)
    new_state = replace(
        state,
        board=new_board,
        score=state.score + points,
        total_lines=total_lines,
        level=total_lines // 10,
        current_piece=state.next_piece,
        next_piece=nxt,
        rng=rng,
        turn=state.turn + 1,
    )
    if not enumerate_placements(new_board, new_state.current_piece):
        new_state = replace(new_state, status=STATUS_OVER)
    return new_state, ClearResult(tuple(cleared), points, lines)


def board_hash(state: GameState) -> int:
    """Stable 64-bit digest over grid, score, turn, and generator state."""
    h = hashlib.blake2b(digest_size=8)
    h.update(f"{state.board.width}x{state.board.height};".encode())
    for row in state.board.grid:
        h.update(";".join(c or "." for c in row).encode())
        h.update(b"|")
    h.update(f"s={state.score};t={state.turn};r={state.rng.state};".encode())
    h.update(",".join(state.rng.bag).encode())
    return int.from_bytes(h.digest(), "big")


# -- bitboard fast path (afterstate evaluation) --

def column_masks(board: Board) -> list[int]:
    """Per-column bitmask of filled cells; bit b set means the cell b rows
    above the floor is filled."""
    masks = [0] * board.width
    h = board.height
    for r, row in enumerate(board.grid):
        bit = 1 << (h - 1 - r)
        for c, cell in enumerate(row):
            if cell is not None:
                masks[c] |= bit
    return masks


def drop_on_masks(masks: Sequence[int], heights: Sequence[int], board_height: int,
                  piece: PieceDef, rotation_index: int, column: int):
    """Hard-drop on the bitboard. Returns (new_masks, lines_cleared), or None
    when the drop would not fit."""
    profile = piece.profiles[rotation_index]
    base = 0
    for j, (min_fr, _mask) in enumerate(profile.columns):
        if min_fr is None:
            continue
        b = heights[column + j] - min_fr
        if b > base:
            base = b
    if base + profile.height > board_height:
        return None
    new = list(masks)
    for j, (_min_fr, mask) in enumerate(profile.columns):
        if mask:
            new[column + j] |= mask << base
    full = (1 << board_height) - 1
    for m in new:
        full &= m
        if not full:
            break
    lines = 0
    if full:
        lines = full.bit_count()
        for i, m in enumerate(new):
            packed = 0
            k = 0
            for row in range(board_height):
                if full >> row & 1:
                    continue
                if m >> row & 1:
                    packed |= 1 << k
                k += 1
            new[i] = packed
    return new, lines
