import dataclasses

import numpy as np
import pytest

from teamtris.engine import Board, column_masks, new_game
from teamtris.errors import (
    DimensionMismatch,
    EmptySampleList,
    NoEligibleDecisions,
)
from teamtris.learner import (
    CreditedSample,
    DecisionRecord,
    FeedbackEvent,
    FeedbackWindow,
    ModelHyperparams,
    RewardModel,
    credit_assign,
    evaluate_placements,
    extract_features,
    features_from_masks,
    load_checkpoint,
    loss_and_grad,
    predict,
    save_checkpoint,
    select_action,
    update,
    weight_digest,
)

from conftest import PIECES, STANDARD, grid_of, naive_hole_count, random_board

DIM = 21
HOLES_IDX = 20


def linear_model(weights=None, bias=0.0, hyper=None) -> RewardModel:
    m = RewardModel("linear", DIM, hyper or ModelHyperparams(), seed=0)
    if weights is not None:
        m.weights[:DIM] = weights
    m.weights[DIM] = bias
    return m


def set_board(state, board):
    return dataclasses.replace(state, board=board)


class TestFeatures:
    def test_empty_board_all_zeros(self):
        f = extract_features(Board.empty())
        assert f.shape == (21,)
        assert np.all(f == 0.0)

    def test_single_cell_in_column_three(self):
        grid = [[None] * 10 for _ in range(20)]
        grid[19][3] = "red"
        f = extract_features(Board(10, 20, tuple(tuple(r) for r in grid)))
        assert f[3] == pytest.approx(1 / 20)
        assert f[10 + 2] == pytest.approx(1 / 20)  # |h3 - h2|
        assert f[10 + 3] == pytest.approx(1 / 20)  # |h4 - h3|
        assert f[19] == pytest.approx(1 / 20)      # max height
        assert f[HOLES_IDX] == 0.0

    def test_two_holes_under_an_overhang(self):
        grid = [[None] * 10 for _ in range(20)]
        grid[17][3] = "red"
        f = extract_features(Board(10, 20, tuple(tuple(r) for r in grid)))
        assert f[HOLES_IDX] == pytest.approx(2 / 200)

    def test_all_entries_in_unit_interval(self, rng):
        for _ in range(100):
            f = extract_features(random_board(rng))
            assert np.all(f >= 0.0) and np.all(f <= 1.0)

    def test_mask_path_is_bitwise_equal(self, rng):
        for _ in range(200):
            board = random_board(rng)
            a = extract_features(board)
            b = features_from_masks(column_masks(board), board.width, board.height)
            assert np.array_equal(a, b)

    def test_hole_count_matches_naive(self, rng):
        for _ in range(100):
            board = random_board(rng)
            f = extract_features(board)
            assert f[HOLES_IDX] == pytest.approx(naive_hole_count(grid_of(board)) / 200)


class TestPredict:
    def test_zero_weights_predict_zero(self):
        m = linear_model()
        assert predict(m, np.ones(DIM) * 0.3) == 0.0

    def test_hole_weight_dot_product(self):
        w = np.zeros(DIM)
        w[HOLES_IDX] = -1.0
        m = linear_model(w)
        f = np.zeros(DIM)
        f[HOLES_IDX] = 0.1
        assert predict(m, f) == pytest.approx(-0.1)

    def test_mlp_is_bit_stable(self):
        m = RewardModel("mlp", DIM, ModelHyperparams(), seed=3, hidden_width=32)
        f = np.linspace(0, 1, DIM)
        assert predict(m, f) == predict(m, f)

    def test_dimension_mismatch(self):
        m = linear_model()
        with pytest.raises(DimensionMismatch):
            predict(m, np.zeros(5))


class TestSelectAction:
    def test_zero_model_tie_breaks_to_first(self):
        st = new_game(STANDARD, 1)
        st = dataclasses.replace(st, current_piece=PIECES["O"])
        pl = select_action(linear_model(), st)
        assert (pl.column, pl.rotation_index) == (0, 0)

    def test_hole_penalty_avoids_hole_creating_placement(self):
        # A notch at column 0: dropping O at column 0 buries a hole.
        grid = [[None] * 10 for _ in range(20)]
        grid[19][1] = "red"
        board = Board(10, 20, tuple(tuple(r) for r in grid))
        st = dataclasses.replace(new_game(STANDARD, 1),
                                 board=board, current_piece=PIECES["O"])
        w = np.zeros(DIM)
        w[HOLES_IDX] = -1.0
        pl = select_action(linear_model(w), st)
        feats = dict((p, f) for p, f in evaluate_placements(st))
        assert feats[pl][HOLES_IDX] == 0.0

    def test_matches_brute_force_argmax(self, rng):
        w = rng.normal(size=DIM)
        m = linear_model(w, bias=0.25)
        for _ in range(100):
            board = random_board(rng)
            piece = STANDARD[int(rng.integers(len(STANDARD)))]
            st = dataclasses.replace(new_game(STANDARD, 1),
                                     board=board, current_piece=piece)
            scored = evaluate_placements(st)
            if not scored:
                continue
            want = None
            best = -np.inf
            for pl, f in scored:
                v = float(w @ f) + 0.25
                if v > best:
                    want, best = pl, v
            assert select_action(m, st) == want

    def test_affine_invariance(self, rng):
        w = rng.normal(size=DIM)
        base = linear_model(w, bias=0.1)
        scaled = linear_model(w * 7.5, bias=0.1 * 7.5 - 3.0)
        for _ in range(60):
            board = random_board(rng)
            piece = STANDARD[int(rng.integers(len(STANDARD)))]
            st = dataclasses.replace(new_game(STANDARD, 1),
                                     board=board, current_piece=piece)
            if not evaluate_placements(st):
                continue
            assert select_action(base, st) == select_action(scaled, st)

    def test_purity(self, rng):
        w = rng.normal(size=DIM)
        m = linear_model(w)
        st = new_game(STANDARD, 5)
        a = select_action(m, st)
        b = select_action(m, st)
        assert a == b
        f = extract_features(st.board)
        assert np.array_equal(f, extract_features(st.board))
        assert predict(m, f) == predict(m, f)


def record(tick, value=0.0):
    f = np.zeros(DIM)
    f[0] = value
    return DecisionRecord("g", turn=tick, features=f, wall_tick=tick)


class TestCreditAssign:
    WINDOW = FeedbackWindow(1, 10)

    def test_three_in_window(self):
        history = [record(1), record(4), record(7), record(20)]
        fb = FeedbackEvent("g", wall_tick=8)
        samples = credit_assign(history, fb, self.WINDOW)
        assert len(samples) == 3
        assert all(s.weight == pytest.approx(1 / 3) for s in samples)
        assert all(s.label == 1.0 for s in samples)

    def test_one_in_window_weight_one(self):
        samples = credit_assign([record(5)], FeedbackEvent("g", wall_tick=6), self.WINDOW)
        assert len(samples) == 1 and samples[0].weight == 1.0

    def test_feedback_before_decisions_is_an_error(self):
        history = [record(5), record(9)]
        with pytest.raises(NoEligibleDecisions):
            credit_assign(history, FeedbackEvent("g", wall_tick=5), self.WINDOW)

    def test_window_bounds_inclusive(self):
        history = [record(0), record(9), record(10)]
        fb = FeedbackEvent("g", wall_tick=10)
        samples = credit_assign(history, fb, self.WINDOW)
        # delays: 10, 1, 0 -> first two eligible
        assert len(samples) == 2

    def test_random_triples_weights_sum_to_one(self, rng):
        for _ in range(500):
            n = int(rng.integers(1, 30))
            history = [record(int(t)) for t in np.sort(rng.integers(0, 100, size=n))]
            lo = int(rng.integers(0, 10))
            hi = lo + int(rng.integers(0, 30))
            window = FeedbackWindow(lo, hi)
            fb = FeedbackEvent("g", wall_tick=int(rng.integers(0, 120)))
            try:
                samples = credit_assign(history, fb, window)
            except NoEligibleDecisions:
                eligible = [d for d in history
                            if lo <= fb.wall_tick - d.wall_tick <= hi]
                assert not eligible
                continue
            assert sum(s.weight for s in samples) == pytest.approx(1.0, abs=1e-9)
            assert len(samples) == len(
                [d for d in history if lo <= fb.wall_tick - d.wall_tick <= hi])

    def test_marks_decisions_credited(self):
        history = [record(5)]
        credit_assign(history, FeedbackEvent("g", wall_tick=6), self.WINDOW)
        assert history[0].credited


class TestUpdate:
    def test_single_sample_converges(self):
        hyper = ModelHyperparams(learning_rate=0.05, minibatch_size=1,
                                 updates_per_feedback=1)
        m = linear_model(hyper=hyper)
        f = np.zeros(DIM)
        f[HOLES_IDX] = 0.5
        sample = CreditedSample(f, label=1.0, weight=1.0)
        for _ in range(100):
            update(m, [sample])
        assert abs(predict(m, f) - 1.0) < 0.05

    def test_zero_learning_rate_is_a_no_op(self):
        hyper = ModelHyperparams(learning_rate=0.0)
        m = linear_model(hyper=hyper)
        before = m.weights.copy()
        update(m, [CreditedSample(np.ones(DIM), 1.0, 1.0)])
        assert np.array_equal(m.weights, before)

    def test_empty_sample_list(self):
        with pytest.raises(EmptySampleList):
            update(linear_model(), [])

    def test_buffer_wraps_at_capacity(self):
        hyper = ModelHyperparams(learning_rate=0.0, buffer_capacity=4)
        m = linear_model(hyper=hyper)
        for i in range(6):
            f = np.full(DIM, float(i))
            update(m, [CreditedSample(f, 1.0, 1.0)])
        assert m.buffer.size == 4
        assert m.samples_seen == 6

    @pytest.mark.parametrize("arch,hidden", [("linear", 0), ("mlp", 16)])
    def test_gradient_matches_central_differences(self, arch, hidden, rng):
        for _case in range(50):
            m = RewardModel(arch, DIM, ModelHyperparams(), seed=int(rng.integers(1 << 30)),
                            hidden_width=hidden or 32)
            w = m.weights + rng.normal(0, 0.3, size=m.weights.shape)
            X = rng.random((4, DIM))
            y = rng.normal(size=4)
            wt = rng.random(4) * 0.9 + 0.1
            _, grad = loss_and_grad(m, w, X, y, wt)
            h = 1e-6
            fd = np.empty_like(grad)
            for i in range(len(w)):
                wp = w.copy(); wp[i] += h
                wm = w.copy(); wm[i] -= h
                lp, _ = loss_and_grad(m, wp, X, y, wt)
                lm, _ = loss_and_grad(m, wm, X, y, wt)
                fd[i] = (lp - lm) / (2 * h)
            denom = max(np.linalg.norm(grad), np.linalg.norm(fd), 1e-12)
            assert np.linalg.norm(grad - fd) / denom < 1e-4


class TestCheckpoints:
    def test_round_trip(self, tmp_path):
        m = RewardModel("mlp", DIM, ModelHyperparams(), seed=9, hidden_width=8)
        m.weights = m.weights + 0.25
        m.samples_seen = 17
        path = tmp_path / "model.json"
        save_checkpoint(m, path)
        loaded = load_checkpoint(path)
        assert np.array_equal(loaded.weights, m.weights)
        assert loaded.samples_seen == 17
        assert loaded.architecture == "mlp"

    def test_digest_detects_tampering(self, tmp_path):
        import json

        m = linear_model()
        path = tmp_path / "model.json"
        save_checkpoint(m, path)
        doc = json.loads(path.read_text())
        doc["weights"][0] = 0.5
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError):
            load_checkpoint(path)

    def test_digest_is_64_bit(self):
        d = weight_digest(np.zeros(5))
        assert 0 <= d < (1 << 64)
