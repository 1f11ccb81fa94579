"""Property-based checks for the core invariants."""
import dataclasses

import numpy as np
from hypothesis import given, settings, strategies as st

from teamtris.determinism import derive_seed, shuffled, splitmix64
from teamtris.engine import (
    BagRng,
    Board,
    apply_placement,
    column_masks,
    draw_next_piece,
    enumerate_placements,
    new_game,
)
from teamtris.learner import (
    DecisionRecord,
    FeedbackEvent,
    FeedbackWindow,
    credit_assign,
    extract_features,
    features_from_masks,
)
from teamtris.errors import NoEligibleDecisions
from teamtris.protocol import decode_grid_rle, encode_grid_rle

from conftest import PIECES, STANDARD

COLORS = [None, "yellow", "cyan", "purple", "green", "red", "blue", "orange"]


@st.composite
def boards(draw, width=10, height=20):
    heights = draw(st.lists(st.integers(0, height - 4),
                            min_size=width, max_size=width))
    punch = draw(st.lists(st.floats(0, 1), min_size=width, max_size=width))
    grid = [[None] * width for _ in range(height)]
    for c in range(width):
        for r in range(height - heights[c], height):
            grid[r][c] = COLORS[1 + (r * 7 + c) % 7]
        if heights[c] > 1 and punch[c] < 0.5:
            hole_row = height - 1 - int(punch[c] * 2 * (heights[c] - 1))
            grid[hole_row][c] = None
    for r in range(height):
        if all(cell is not None for cell in grid[r]):
            grid[r][r % width] = None
    return Board(width, height, tuple(tuple(row) for row in grid))


piece_ids = st.sampled_from([p.id for p in STANDARD])


@settings(max_examples=80, derandomize=True)
@given(boards(), piece_ids)
def test_placements_are_legal_and_ordered(board, pid):
    piece = PIECES[pid]
    pls = enumerate_placements(board, piece)
    assert pls == sorted(pls, key=lambda p: (p.column, p.rotation_index))
    for pl in pls:
        profile = piece.profiles[pl.rotation_index]
        assert 0 <= pl.column <= board.width - profile.width
        assert 0 <= pl.landing_row <= board.height - profile.height
        for r, c in profile.cells:
            assert board.grid[pl.landing_row + r][pl.column + c] is None


@settings(max_examples=80, derandomize=True)
@given(boards(), piece_ids, st.integers(0, 10**9))
def test_cell_conservation(board, pid, pick):
    piece = PIECES[pid]
    pls = enumerate_placements(board, piece)
    if not pls:
        return
    pl = pls[pick % len(pls)]
    st_ = dataclasses.replace(new_game(STANDARD, 1), board=board,
                              current_piece=piece)
    after, clear = apply_placement(st_, pl)
    assert after.board.filled_cells() == (
        board.filled_cells() + piece.cell_count - board.width * clear.lines_cleared)
    for row in after.board.grid:
        assert any(cell is None for cell in row)


@settings(max_examples=80, derandomize=True)
@given(boards())
def test_feature_paths_agree_and_stay_in_unit_interval(board):
    grid_feats = extract_features(board)
    mask_feats = features_from_masks(column_masks(board), board.width, board.height)
    assert np.array_equal(grid_feats, mask_feats)
    assert np.all(grid_feats >= 0) and np.all(grid_feats <= 1)


@settings(max_examples=150, derandomize=True)
@given(st.lists(st.integers(0, 300), min_size=1, max_size=30),
       st.integers(0, 320), st.integers(0, 20), st.integers(0, 60))
def test_credit_weights_sum_to_one(ticks, fb_tick, lo, span):
    history = [DecisionRecord("g", turn=i, features=np.zeros(21), wall_tick=t)
               for i, t in enumerate(sorted(ticks))]
    window = FeedbackWindow(lo, lo + span)
    try:
        samples = credit_assign(history, FeedbackEvent("g", wall_tick=fb_tick), window)
    except NoEligibleDecisions:
        assert not [d for d in history
                    if lo <= fb_tick - d.wall_tick <= lo + span]
        return
    assert abs(sum(s.weight for s in samples) - 1.0) <= 1e-9
    assert all(lo <= fb_tick - d.wall_tick <= lo + span
               for d in history if d.credited)


@settings(max_examples=100, derandomize=True)
@given(st.integers(0, 2**64 - 1))
def test_bag_draws_are_permutations(seed):
    rng = BagRng(seed)
    draws = []
    for _ in range(14):
        piece, rng = draw_next_piece(rng, STANDARD)
        draws.append(piece.id)
    expected = sorted(p.id for p in STANDARD)
    assert sorted(draws[:7]) == expected
    assert sorted(draws[7:]) == expected


@settings(max_examples=100, derandomize=True)
@given(st.integers(0, 2**64 - 1), st.lists(st.integers(), min_size=0, max_size=40))
def test_shuffle_is_a_permutation(state, items):
    out, _ = shuffled(items, state)
    assert sorted(out) == sorted(items)
    out2, _ = shuffled(items, state)
    assert out == out2


@settings(max_examples=100, derandomize=True)
@given(st.integers(0, 2**64 - 1))
def test_splitmix_is_deterministic(state):
    assert splitmix64(state) == splitmix64(state)
    v, s2 = splitmix64(state)
    assert 0 <= v < 2**64 and 0 <= s2 < 2**64


@settings(max_examples=60, derandomize=True)
@given(st.lists(st.sampled_from(COLORS), min_size=200, max_size=200))
def test_grid_rle_round_trip(cells):
    grid = [cells[r * 10:(r + 1) * 10] for r in range(20)]
    assert decode_grid_rle(encode_grid_rle(grid), 10, 20) == grid


@settings(max_examples=50, derandomize=True)
@given(st.integers(0, 2**32), st.integers(0, 64), st.integers(0, 64))
def test_derived_seeds_differ_by_tag(master, a, b):
    if a == b:
        assert derive_seed(master, a) == derive_seed(master, b)
    else:
        assert derive_seed(master, a) != derive_seed(master, b)
