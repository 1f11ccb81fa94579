"""Shared test helpers: a naive reference simulator (independent of the
engine's drop math) and random board builders."""
from __future__ import annotations

import numpy as np
import pytest

from teamtris.engine import Board, load_piece_library

LIBRARY = load_piece_library()
PIECES = {p.id: p for p in LIBRARY}
STANDARD = [p for p in LIBRARY if p.provenance == "standard"]


# -- naive reference simulator ------------------------------------------------
# Deliberately written the dumb way: explicit cell scans, drop by descending
# one row at a time with a full collision check at every step.

def naive_collides(grid, cells, top_row, left_col):
    h = len(grid)
    w = len(grid[0])
    for r, c in cells:
        rr, cc = top_row + r, left_col + c
        if rr < 0 or rr >= h or cc < 0 or cc >= w:
            return True
        if grid[rr][cc] is not None:
            return True
    return False


def naive_drop_row(grid, cells, left_col):
    """Landing row for a shape dropped from above, or None if it cannot enter."""
    if naive_collides(grid, cells, 0, left_col):
        return None
    row = 0
    while not naive_collides(grid, cells, row + 1, left_col):
        row += 1
    return row


def naive_enumerate(grid, piece):
    """All (rotation_index, column, landing_row) triples by brute force."""
    out = []
    w = len(grid[0])
    for ri, profile in enumerate(piece.profiles):
        for col in range(w):
            if col + profile.width > w:
                continue
            row = naive_drop_row(grid, profile.cells, col)
            if row is not None:
                out.append((ri, col, row))
    return out


def naive_apply(grid, piece, ri, col):
    """Lock + clear on a list-of-lists grid. Returns (grid', cleared_rows)."""
    profile = piece.profiles[ri]
    row = naive_drop_row(grid, profile.cells, col)
    assert row is not None
    g = [list(r) for r in grid]
    for r, c in profile.cells:
        g[row + r][col + c] = piece.color
    cleared = [(i, tuple(g[i])) for i in range(len(g)) if all(x is not None for x in g[i])]
    for i, _ in reversed(cleared):
        del g[i]
    for _ in cleared:
        g.insert(0, [None] * len(grid[0]))
    return g, cleared


def naive_hole_count(grid):
    holes = 0
    h, w = len(grid), len(grid[0])
    for c in range(w):
        seen_filled = False
        for r in range(h):
            if grid[r][c] is not None:
                seen_filled = True
            elif seen_filled:
                holes += 1
    return holes


# -- random boards ------------------------------------------------------------

def random_board(rng: np.random.Generator, width=10, height=20, max_height=None) -> Board:
    """Random board with ragged columns and holes; guaranteed no full rows."""
    if max_height is None:
        max_height = height - 4
    colors = ["yellow", "cyan", "purple", "green", "red", "blue", "orange"]
    grid = [[None] * width for _ in range(height)]
    for c in range(width):
        h = int(rng.integers(0, max_height + 1))
        for r in range(height - h, height):
            if rng.random() < 0.85:
                grid[r][c] = colors[int(rng.integers(len(colors)))]
    for r in range(height):
        if all(cell is not None for cell in grid[r]):
            grid[r][int(rng.integers(width))] = None
    return Board(width, height, tuple(tuple(row) for row in grid))


def grid_of(board: Board):
    return [list(row) for row in board.grid]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
