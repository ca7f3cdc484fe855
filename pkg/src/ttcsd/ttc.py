"""Top Trading Cycles on the canonical endowment (agent i owns object i)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .core import AgentId, AssignmentMatrix, ObjectId, Profile

Cycle = tuple[AgentId, ...]


@dataclass(frozen=True)
class TradingGraph:
    """Each active agent points at the owner of their favourite remaining object."""

    active: frozenset[AgentId]
    successor: Mapping[AgentId, AgentId]

    def __post_init__(self) -> None:
        if set(self.successor) != set(self.active):
            raise ValueError("successor must be defined exactly on the active agents")
        if not set(self.successor.values()) <= set(self.active):
            raise ValueError("successor points outside the active set")


def top_among(ranking: Sequence[ObjectId], available: frozenset[ObjectId] | set[ObjectId]) -> ObjectId:
    for x in ranking:
        if x in available:
            return x
    raise ValueError("no available object")


def build_graph(rankings: Profile | Sequence[Sequence[ObjectId]], active: Iterable[AgentId]) -> TradingGraph:
    """Trading graph of ``active`` agents over their own endowments.

    ``rankings`` is a profile or any sequence of rankings indexed by agent - 1;
    objects outside the active endowments are skipped.
    """
    if isinstance(rankings, Profile):
        rankings = rankings.rankings()
    active = frozenset(active)
    if not active:
        raise ValueError("active set is empty")
    # canonical endowment: the owner of object j is agent j
    successor = {i: top_among(rankings[i - 1], active) for i in sorted(active)}
    return TradingGraph(active, successor)


def _rotate(cycle: list[AgentId]) -> Cycle:
    k = cycle.index(min(cycle))
    return tuple(cycle[k:] + cycle[:k])


def find_cycles(graph: TradingGraph) -> list[Cycle]:
    """All cycles of a functional graph.

    Each cycle starts at its smallest agent and follows successor pointers;
    cycles are listed by their smallest agent.
    """
    state: dict[AgentId, int] = {}  # 1 = on current walk, 2 = finished
    cycles = []
    for start in sorted(graph.active):
        if start in state:
            continue
        walk = []
        node = start
        while node not in state:
            state[node] = 1
            walk.append(node)
            node = graph.successor[node]
        if state[node] == 1:
            cycles.append(_rotate(walk[walk.index(node):]))
        for v in walk:
            state[v] = 2
    return sorted(cycles, key=lambda c: c[0])


def smallest_cycle(cycles: Sequence[Cycle]) -> Cycle:
    """Shortest cycle; ties go to the cycle holding the smallest agent."""
    return min(cycles, key=lambda c: (len(c), c[0]))


@dataclass(frozen=True)
class TtcRound:
    number: int
    active: frozenset[AgentId]
    cycles: tuple[Cycle, ...]
    # agent -> object received in this round
    assigned: Mapping[AgentId, ObjectId] = field(default_factory=dict)


@dataclass(frozen=True)
class TtcTrace:
    rounds: tuple[TtcRound, ...]

    def assignment(self) -> dict[AgentId, ObjectId]:
        out: dict[AgentId, ObjectId] = {}
        for r in self.rounds:
            out.update(r.assigned)
        return out


def ttc_trace(
    rankings: Profile | Sequence[Sequence[ObjectId]],
    active: Iterable[AgentId] | None = None,
    literal: bool = False,
) -> TtcTrace:
    """Run TTC on ``active`` agents (default: all) and record every round.

    With ``literal`` only the smallest cycle leaves per round; otherwise all
    current cycles leave together. Both give the same assignment.
    """
    if isinstance(rankings, Profile):
        rankings = rankings.rankings()
    remaining = set(range(1, len(rankings) + 1) if active is None else active)
    rounds = []
    while remaining:
        graph = build_graph(rankings, remaining)
        cycles = find_cycles(graph)
        if literal:
            cycles = [smallest_cycle(cycles)]
        assigned = {}
        for cycle in cycles:
            for i in cycle:
                # receives the endowment of the agent it points at
                assigned[i] = graph.successor[i]
        rounds.append(TtcRound(len(rounds) + 1, frozenset(remaining), tuple(cycles), assigned))
        remaining -= set(assigned)
    return TtcTrace(tuple(rounds))


def ttc_assignment(profile: Profile, literal: bool = False) -> tuple[ObjectId, ...]:
    """Object received by each agent, as a tuple indexed by agent - 1."""
    got = ttc_trace(profile, literal=literal).assignment()
    return tuple(got[i] for i in range(1, profile.n + 1))


def ttc(profile: Profile, literal: bool = False) -> AssignmentMatrix:
    return AssignmentMatrix.from_permutation(ttc_assignment(profile, literal))
