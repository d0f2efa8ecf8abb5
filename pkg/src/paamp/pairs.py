"""Relevant-pair pruning: which agent pairs need collision constraints when.

A pair (i, j) is relevant at state t when some region assigned to a segment
incident to state t for agent i equals, or is adjacent to, one assigned to
agent j. Only relevant pairs receive collision-avoidance constraints.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from .errors import InvalidInputError
from .region_graph import RegionGraph, SequencePlan


@dataclass(frozen=True)
class RelevantPairs:
    """Per-state relevant pair sets P^(t) for t = 0..T."""

    per_step: tuple  # length T+1, each a tuple of (i, j) pairs with i < j
    t_steps: int

    @property
    def total(self) -> int:
        return sum(len(s) for s in self.per_step)

    @property
    def average_per_step(self) -> float:
        return self.total / len(self.per_step)

    def agent_total(self, i: int) -> int:
        """Number of (t, pair) incidences involving agent i."""
        return sum(1 for step in self.per_step for p in step if i in p)

    def agent_average(self, i: int) -> float:
        """Per-step contact average for agent i, over the T segments."""
        return self.agent_total(i) / self.t_steps


def relevant_pairs(plans: list[SequencePlan],
                   graph: RegionGraph) -> RelevantPairs:
    if not plans:
        raise InvalidInputError("need at least one sequence plan")
    T = plans[0].t_steps
    if any(p.t_steps != T for p in plans):
        raise InvalidInputError("all plans must share the same horizon T")
    ids = [p.agent_id for p in plans]
    if len(set(ids)) != len(ids):
        raise InvalidInputError("agent ids must be distinct")
    n = len(plans)
    per_step = []
    for t in range(T + 1):
        regions = [p.region_at_state(t) for p in plans]
        step = []
        for i in range(n):
            for j in range(i + 1, n):
                if any(r == s or graph.adjacent(r, s)
                       for r in regions[i] for s in regions[j]):
                    step.append((i, j))
        per_step.append(tuple(step))
    return RelevantPairs(tuple(per_step), T)


def pair_ratio(pairs: RelevantPairs, n_agents: int) -> float:
    """Mean over t of |P^(t)| / C(n_agents, 2)."""
    if n_agents < 2:
        raise InvalidInputError("pair ratio needs at least two agents")
    denom = comb(n_agents, 2)
    return pairs.total / (len(pairs.per_step) * denom)
