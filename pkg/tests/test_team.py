import numpy as np
import pytest

from teamtris.errors import ArchitectureMismatch, FeedbackOnDependentGame, UnknownGame
from teamtris.learner import (
    DecisionRecord,
    FeedbackEvent,
    FeedbackWindow,
    ModelHyperparams,
    RewardModel,
)
from teamtris.team import (
    Agent,
    Player,
    TeamTopology,
    consensus_step,
    figure_one_topology,
    route_feedback,
    validate_topology,
)

DIM = 21
WINDOW = FeedbackWindow(1, 10)


def topology(agents, guidance=(), dependency=(), mode="sampleUnion"):
    return TeamTopology(
        players=(Player("pA", "A"), Player("pB", "B")),
        agents=tuple(Agent(a, k) for a, k in agents),
        guidance=tuple(guidance),
        dependency=tuple(dependency),
        aggregation_mode=mode,
    )


def history(game_id, ticks):
    out = []
    for t in ticks:
        f = np.zeros(DIM)
        f[0] = t
        out.append(DecisionRecord(game_id, turn=t, features=f, wall_tick=t))
    return out


class TestValidate:
    def test_figure_one_is_valid(self):
        assert validate_topology(figure_one_topology()) == []

    def test_dependency_cycle(self):
        t = topology(
            [("a1", "guided"), ("a5", "dependent"), ("a6", "dependent")],
            guidance=[("pA", "a1")],
            dependency=[("a5", "a6"), ("a6", "a5")],
        )
        assert any("cycle" in v for v in validate_topology(t))

    def test_multi_guided_agent(self):
        t = topology([("a1", "guided")], guidance=[("pA", "a1"), ("pB", "a1")])
        assert any("2 guiding players" in v for v in validate_topology(t))

    def test_orphan_dependent(self):
        t = topology([("a1", "guided"), ("a5", "dependent")], guidance=[("pA", "a1")])
        assert any("no parents" in v for v in validate_topology(t))

    def test_player_guiding_dependent(self):
        t = topology(
            [("a1", "guided"), ("a5", "dependent")],
            guidance=[("pA", "a1"), ("pB", "a5")],
            dependency=[("a5", "a1")],
        )
        assert any("guides dependent" in v for v in validate_topology(t))

    def test_unguided_guided_agent(self):
        t = topology([("a1", "guided")])
        assert any("no guiding player" in v for v in validate_topology(t))

    def test_random_topologies_never_accept_dependent_guidance(self, rng):
        for _ in range(200):
            n_guided = int(rng.integers(1, 4))
            n_dep = int(rng.integers(0, 3))
            agents = [(f"g{i}", "guided") for i in range(n_guided)]
            agents += [(f"d{i}", "dependent") for i in range(n_dep)]
            guidance = [(("pA", "pB")[int(rng.integers(2))], a) for a, _ in agents
                        if rng.random() < 0.9]
            dependency = []
            for i in range(n_dep):
                for a, _ in agents:
                    if a != f"d{i}" and rng.random() < 0.4:
                        dependency.append((f"d{i}", a))
            t = topology(agents, guidance, dependency)
            violations = validate_topology(t)
            guided_deps = [a for (p, a) in guidance
                           if any(x == (a, "dependent") for x in agents)]
            if guided_deps:
                assert any("guides dependent" in v for v in violations)


class TestRouting:
    def make(self, mode="sampleUnion"):
        t = figure_one_topology()
        t = TeamTopology(t.players, t.agents, t.guidance, t.dependency, mode)
        games = {f"game-agent{i}": f"agent{i}" for i in range(1, 6)}
        histories = {g: history(g, [5]) for g in games}
        return t, games, histories

    def test_sample_union_reaches_dependent(self):
        t, games, histories = self.make()
        fb = FeedbackEvent("game-agent1", wall_tick=6)
        routed = route_feedback(t, fb, histories, games, WINDOW)
        assert [aid for aid, _ in routed] == ["agent1", "agent5"]
        for _, samples in routed:
            assert sum(s.weight for s in samples) == pytest.approx(1.0)

    def test_routing_from_agent3(self):
        t, games, histories = self.make()
        fb = FeedbackEvent("game-agent3", wall_tick=6)
        routed = route_feedback(t, fb, histories, games, WINDOW)
        assert [aid for aid, _ in routed] == ["agent3", "agent5"]

    def test_parameter_consensus_routes_to_guided_only(self):
        t, games, histories = self.make("parameterConsensus")
        fb = FeedbackEvent("game-agent1", wall_tick=6)
        routed = route_feedback(t, fb, histories, games, WINDOW)
        assert [aid for aid, _ in routed] == ["agent1"]

    def test_human_feedback_on_dependent_game_rejected(self):
        t, games, histories = self.make()
        fb = FeedbackEvent("game-agent5", wall_tick=6, source="human")
        with pytest.raises(FeedbackOnDependentGame):
            route_feedback(t, fb, histories, games, WINDOW)

    def test_rule_feedback_on_dependent_game_allowed(self):
        t, games, histories = self.make()
        fb = FeedbackEvent("game-agent5", wall_tick=6, source="rule")
        routed = route_feedback(t, fb, histories, games, WINDOW)
        assert [aid for aid, _ in routed] == ["agent5"]

    def test_unknown_game(self):
        t, games, histories = self.make()
        with pytest.raises(UnknownGame):
            route_feedback(t, FeedbackEvent("nope", wall_tick=6), histories, games, WINDOW)

    def test_transitive_descendants(self):
        t = topology(
            [("a1", "guided"), ("d1", "dependent"), ("d2", "dependent")],
            guidance=[("pA", "a1")],
            dependency=[("d1", "a1"), ("d2", "d1")],
        )
        games = {"g1": "a1", "gd1": "d1", "gd2": "d2"}
        histories = {g: history(g, [5]) for g in games}
        routed = route_feedback(t, FeedbackEvent("g1", wall_tick=6), histories, games, WINDOW)
        assert [aid for aid, _ in routed] == ["a1", "d1", "d2"]


class TestConsensus:
    def models_with(self, weights_by_id):
        out = {}
        for aid, w in weights_by_id.items():
            m = RewardModel("linear", DIM, ModelHyperparams(), seed=0)
            m.weights = np.array(w, dtype=float)
            out[aid] = m
        return out

    def test_opposite_parents_cancel(self):
        t = topology(
            [("a1", "guided"), ("a2", "guided"), ("d", "dependent")],
            guidance=[("pA", "a1"), ("pB", "a2")],
            dependency=[("d", "a1"), ("d", "a2")],
            mode="parameterConsensus",
        )
        w = np.arange(DIM + 1, dtype=float)
        models = self.models_with({"a1": w, "a2": -w, "d": np.ones(DIM + 1)})
        dep = consensus_step(t, models, "d")
        assert np.array_equal(dep.weights, np.zeros(DIM + 1))

    def test_single_parent_copies(self):
        t = topology(
            [("a1", "guided"), ("d", "dependent")],
            guidance=[("pA", "a1")],
            dependency=[("d", "a1")],
            mode="parameterConsensus",
        )
        w = np.linspace(0, 1, DIM + 1)
        models = self.models_with({"a1": w, "d": np.zeros(DIM + 1)})
        assert np.array_equal(consensus_step(t, models, "d").weights, w)

    def test_four_unit_basis_parents(self):
        t = figure_one_topology()
        basis = {}
        for i in range(1, 5):
            e = np.zeros(DIM + 1)
            e[i - 1] = 1.0
            basis[f"agent{i}"] = e
        basis["agent5"] = np.zeros(DIM + 1)
        models = self.models_with(basis)
        dep = consensus_step(t, models, "agent5")
        assert np.allclose(dep.weights[:4], 0.25)
        assert np.allclose(dep.weights[4:], 0.0)

    def test_permutation_invariance(self, rng):
        t = figure_one_topology()
        ws = {f"agent{i}": rng.normal(size=DIM + 1) for i in range(1, 5)}
        ws["agent5"] = np.zeros(DIM + 1)
        a = consensus_step(t, self.models_with(ws), "agent5").weights
        # same weights assigned to permuted parents
        perm = {"agent1": ws["agent3"], "agent3": ws["agent1"],
                "agent2": ws["agent4"], "agent4": ws["agent2"],
                "agent5": np.zeros(DIM + 1)}
        b = consensus_step(t, self.models_with(perm), "agent5").weights
        assert np.allclose(a, b)

    def test_architecture_mismatch(self):
        t = topology(
            [("a1", "guided"), ("d", "dependent")],
            guidance=[("pA", "a1")],
            dependency=[("d", "a1")],
            mode="parameterConsensus",
        )
        models = {
            "a1": RewardModel("mlp", DIM, ModelHyperparams(), seed=0, hidden_width=8),
            "d": RewardModel("linear", DIM, ModelHyperparams(), seed=0),
        }
        with pytest.raises(ArchitectureMismatch):
            consensus_step(t, models, "d")

    def test_buffer_untouched(self):
        t = topology(
            [("a1", "guided"), ("d", "dependent")],
            guidance=[("pA", "a1")],
            dependency=[("d", "a1")],
            mode="parameterConsensus",
        )
        models = self.models_with({"a1": np.ones(DIM + 1), "d": np.zeros(DIM + 1)})
        buf = models["d"].buffer
        consensus_step(t, models, "d")
        assert models["d"].buffer is buf


class TestJson:
    def test_round_trip(self):
        t = figure_one_topology()
        assert TeamTopology.from_json(t.to_json()) == t
