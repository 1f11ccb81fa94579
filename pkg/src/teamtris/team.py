"""Team topology: players, guided agents, dependent agents, and how
feedback flows between them.

Guided agents have exactly one guiding player. Dependent agents have no
player; they learn from their parent agents' games, either by consuming
the same credited samples (sampleUnion) or by periodically averaging
parent weights (parameterConsensus).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .errors import ArchitectureMismatch, FeedbackOnDependentGame, UnknownGame
from .learner import (
    CreditedSample,
    DecisionRecord,
    FeedbackEvent,
    FeedbackWindow,
    RewardModel,
    credit_assign,
)

KIND_GUIDED = "guided"
KIND_DEPENDENT = "dependent"

AGG_SAMPLE_UNION = "sampleUnion"
AGG_PARAMETER_CONSENSUS = "parameterConsensus"


@dataclass(frozen=True)
class Player:
    player_id: str
    name: str


@dataclass(frozen=True)
class Agent:
    agent_id: str
    kind: str  # "guided" | "dependent"


@dataclass(frozen=True)
class TeamTopology:
    players: tuple[Player, ...]
    agents: tuple[Agent, ...]
    guidance: tuple[tuple[str, str], ...]   # (playerId, agentId)
    dependency: tuple[tuple[str, str], ...]  # (dependentId, parentId)
    aggregation_mode: str = AGG_SAMPLE_UNION

    def agent(self, agent_id: str) -> Optional[Agent]:
        for a in self.agents:
            if a.agent_id == agent_id:
                return a
        return None

    def guiding_player(self, agent_id: str) -> Optional[str]:
        for p, a in self.guidance:
            if a == agent_id:
                return p
        return None

    def guided_agents(self, player_id: str) -> list[str]:
        return [a for p, a in self.guidance if p == player_id]

    def parents(self, agent_id: str) -> list[str]:
        return [parent for dep, parent in self.dependency if dep == agent_id]

    def descendants(self, agent_id: str) -> list[str]:
        """Dependent agents that learn from agent_id, directly or transitively,
        in topology order."""
        out = []
        frontier = {agent_id}
        changed = True
        while changed:
            changed = False
            for dep, parent in self.dependency:
                if parent in frontier and dep not in frontier:
                    frontier.add(dep)
                    out.append(dep)
                    changed = True
        order = {a.agent_id: i for i, a in enumerate(self.agents)}
        out.sort(key=lambda aid: order.get(aid, len(order)))
        return out

    def to_json(self):
        return {
            "players": [{"playerId": p.player_id, "name": p.name} for p in self.players],
            "agents": [{"agentId": a.agent_id, "kind": a.kind} for a in self.agents],
            "guidance": [[p, a] for p, a in self.guidance],
            "dependency": [[d, p] for d, p in self.dependency],
            "aggregationMode": self.aggregation_mode,
        }

    @classmethod
    def from_json(cls, doc) -> "TeamTopology":
        return cls(
            players=tuple(Player(p["playerId"], p.get("name", p["playerId"]))
                          for p in doc["players"]),
            agents=tuple(Agent(a["agentId"], a["kind"]) for a in doc["agents"]),
            guidance=tuple((p, a) for p, a in doc.get("guidance", [])),
            dependency=tuple((d, p) for d, p in doc.get("dependency", [])),
            aggregation_mode=doc.get("aggregationMode", AGG_SAMPLE_UNION),
        )


def validate_topology(t: TeamTopology) -> list[str]:
    """All invariant violations; an empty list means the topology is valid."""
    violations = []
    player_ids = {p.player_id for p in t.players}
    agent_ids = {a.agent_id for a in t.agents}
    if len(player_ids) != len(t.players):
        violations.append("duplicate player ids")
    if len(agent_ids) != len(t.agents):
        violations.append("duplicate agent ids")
    kinds = {a.agent_id: a.kind for a in t.agents}

    for p, a in t.guidance:
        if p not in player_ids:
            violations.append(f"guidance edge references unknown player {p!r}")
        if a not in agent_ids:
            violations.append(f"guidance edge references unknown agent {a!r}")
        elif kinds[a] == KIND_DEPENDENT:
            violations.append(f"player {p!r} guides dependent agent {a!r}")

    guides_per_agent = {}
    for p, a in t.guidance:
        guides_per_agent.setdefault(a, []).append(p)
    for a in t.agents:
        if a.kind == KIND_GUIDED:
            n = len(guides_per_agent.get(a.agent_id, []))
            if n == 0:
                violations.append(f"guided agent {a.agent_id!r} has no guiding player")
            elif n > 1:
                violations.append(f"guided agent {a.agent_id!r} has {n} guiding players")

    for d, p in t.dependency:
        if d not in agent_ids or p not in agent_ids:
            violations.append(f"dependency edge ({d!r}, {p!r}) references unknown agent")
        elif kinds[d] != KIND_DEPENDENT:
            violations.append(f"dependency edge from non-dependent agent {d!r}")
    for a in t.agents:
        if a.kind == KIND_DEPENDENT and not t.parents(a.agent_id):
            violations.append(f"dependent agent {a.agent_id!r} has no parents")

    # cycle detection over dependency edges
    adj = {}
    for d, p in t.dependency:
        adj.setdefault(d, []).append(p)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {aid: WHITE for aid in agent_ids}

    def visit(node) -> bool:
        color[node] = GRAY
        for nxt in adj.get(node, []):
            if nxt not in color:
                continue
            if color[nxt] == GRAY:
                return True
            if color[nxt] == WHITE and visit(nxt):
                return True
        color[node] = BLACK
        return False

    for aid in sorted(agent_ids):
        if color[aid] == WHITE and visit(aid):
            violations.append("dependency edges contain a cycle")
            break

    return violations


def route_feedback(t: TeamTopology, feedback: FeedbackEvent,
                   histories: Mapping[str, Sequence[DecisionRecord]],
                   game_agents: Mapping[str, str],
                   window: FeedbackWindow) -> list[tuple[str, list[CreditedSample]]]:
    """Credit a feedback event against its game's history and deliver the
    samples to every agent that learns from that game.

    Human feedback may only target guided agents' games. Rule-synthesized
    feedback may also land on a dependent agent's own game, in which case
    only that agent (plus its own dependents under sampleUnion) learns.
    """
    if feedback.game_id not in game_agents:
        raise UnknownGame(feedback.game_id)
    agent_id = game_agents[feedback.game_id]
    agent = t.agent(agent_id)
    if agent is None:
        raise UnknownGame(f"game {feedback.game_id} is not bound to a known agent")
    if agent.kind == KIND_DEPENDENT and feedback.source == "human":
        raise FeedbackOnDependentGame(
            f"players cannot reward dependent agent {agent_id!r}")
    samples = credit_assign(histories[feedback.game_id], feedback, window)
    targets = [agent_id]
    if t.aggregation_mode == AGG_SAMPLE_UNION:
        targets.extend(t.descendants(agent_id))
    return [(aid, list(samples)) for aid in targets]


def consensus_step(t: TeamTopology, models: Mapping[str, RewardModel],
                   dependent_id: str) -> RewardModel:
    """Average the parents' weight vectors into the dependent's model
    (replay buffer untouched)."""
    parents = t.parents(dependent_id)
    dep = models[dependent_id]
    vecs = []
    for pid in parents:
        m = models[pid]
        if (m.architecture != dep.architecture or m.dim != dep.dim
                or m.hidden_width != dep.hidden_width):
            raise ArchitectureMismatch(
                f"parent {pid!r} architecture differs from dependent {dependent_id!r}")
        vecs.append(m.weights)
    dep.weights = sum(vecs) / len(vecs)
    return dep


def figure_one_topology() -> TeamTopology:
    """The default team shape: two players each guiding two agents, one
    dependent agent learning from all four."""
    return TeamTopology(
        players=(Player("playerA", "Player A"), Player("playerB", "Player B")),
        agents=(Agent("agent1", KIND_GUIDED), Agent("agent2", KIND_GUIDED),
                Agent("agent3", KIND_GUIDED), Agent("agent4", KIND_GUIDED),
                Agent("agent5", KIND_DEPENDENT)),
        guidance=(("playerA", "agent1"), ("playerA", "agent2"),
                  ("playerB", "agent3"), ("playerB", "agent4")),
        dependency=(("agent5", "agent1"), ("agent5", "agent2"),
                    ("agent5", "agent3"), ("agent5", "agent4")),
        aggregation_mode=AGG_SAMPLE_UNION,
    )
