"""Planning loop: success, refine-on-conflict, exhaustion, timeouts."""

import numpy as np
import pytest

from paamp.errors import InvalidInputError
from paamp.milp import branch_and_bound
from paamp.pairs import relevant_pairs
from paamp.planner import (
    PlanResult,
    _extend_blacklist,
    _free_space_conflict,
    _interval_conflict,
    _midpoint_fallback,
    _next_joint,
    _signature,
    _transition_into,
    localize_conflict,
    plan,
)
from paamp.geometry import sample_directions
from paamp.region_graph import Blacklist, SequencePlan, build_graph, \
    generate_sequences
from paamp.transcription import build_paamp_model


@pytest.fixture(scope="module")
def result(crossing):
    return plan(crossing)


class TestPlanSuccess:
    def test_status(self, result, crossing):
        assert result.status == "success"
        assert result.iterations >= 1
        assert len(result.trajectories) == crossing.n_agents

    def test_diagnostics(self, result):
        d = result.diagnostics
        assert d["solves"] >= 1
        assert d["binaries"] > 0
        assert 0.0 < d["rho"] < 1.0
        assert d["objective"] is not None

    def test_plans_match_trajectories(self, result, crossing):
        for tr, p in zip(result.trajectories, result.plans):
            assert tr.agent_id == p.agent_id
            assert tr.t_steps == p.t_steps

    def test_deterministic(self, result, crossing):
        again = plan(crossing)
        assert again.status == "success"
        for a, b in zip(result.trajectories, again.trajectories):
            assert np.array_equal(a.states, b.states)

    def test_single_agent(self, single_agent):
        res = plan(single_agent)
        assert res.status == "success"
        assert res.diagnostics["rho"] is None
        assert res.diagnostics["binaries"] == 0


class TestInfeasibility:
    def test_free_space_conflict_detected(self, crossing):
        probe = crossing.with_params(d_min=6.0, d_sep=6.0)
        dirs = sample_directions(8, 6.0)
        conflict = _free_space_conflict(probe, dirs)
        assert conflict is not None
        t, (i, j) = conflict
        assert 0 <= t <= probe.params.t_steps and i < j

    def test_exhausted_without_solving(self, crossing):
        probe = crossing.with_params(d_min=6.0, d_sep=6.0)
        res = plan(probe)
        assert res.status == "exhausted"
        assert res.diagnostics["solves"] == 0

    def test_feasible_case_has_no_conflict(self, crossing):
        dirs = sample_directions(8, crossing.params.d_sep)
        assert _free_space_conflict(crossing, dirs) is None

    def test_corridor_exhausts_via_milp(self, corridor):
        """Interval reasoning cannot refute the corridor swap, so the MILP
        must prove each candidate infeasible and the loop must terminate."""
        res = plan(corridor)
        assert res.status == "exhausted"
        assert res.diagnostics["solves"] >= 1
        assert len(res.blacklist) >= 1

    def test_corridor_interval_check_is_blind(self, corridor):
        graph = build_graph(corridor)
        plans = [generate_sequences(graph, corridor, a, Blacklist(), 1)[0]
                 for a in corridor.agents]
        dirs = sample_directions(corridor.params.n_directions,
                                 corridor.params.d_sep)
        assert _interval_conflict(corridor, plans, dirs) is None


class TestLocalizeConflict:
    def test_feasible_model_rejected(self, single_agent):
        graph = build_graph(single_agent)
        plans = [generate_sequences(graph, single_agent, a, Blacklist(), 1)[0]
                 for a in single_agent.agents]
        pairs = relevant_pairs(plans, graph)
        model, index = build_paamp_model(single_agent, plans, pairs)
        with pytest.raises(InvalidInputError, match="feasible"):
            localize_conflict(model, index, plans)

    def test_returns_valid_entry(self, corridor):
        graph = build_graph(corridor)
        plans = [generate_sequences(graph, corridor, a, Blacklist(), 1)[0]
                 for a in corridor.agents]
        pairs = relevant_pairs(plans, graph)
        model, index = build_paamp_model(corridor, plans, pairs)
        assert branch_and_bound(model, gap=corridor.params.gap,
                                time_limit=60.0).status == "infeasible"
        agent_id, t, r_from, r_to = localize_conflict(model, index, plans)
        assert agent_id in {p.agent_id for p in plans}
        p = next(p for p in plans if p.agent_id == agent_id)
        assert 1 <= t < p.t_steps
        assert (p.segments[t - 1], p.segments[t]) == (r_from, r_to)


class TestHelpers:
    def _plan(self, segs, agent_id="a"):
        path = [segs[0]]
        for r in segs[1:]:
            if r != path[-1]:
                path.append(r)
        return SequencePlan(agent_id, tuple(segs), tuple(path), 1.0)

    def test_transition_into_middle(self):
        p = self._plan([0, 0, 1, 1, 2, 2])
        assert _transition_into(p, 3) == ("a", 2, 0, 1)
        assert _transition_into(p, 5) == ("a", 4, 1, 2)

    def test_transition_into_first_block_uses_exit(self):
        p = self._plan([0, 0, 1, 1])
        assert _transition_into(p, 0) == ("a", 2, 0, 1)

    def test_transition_single_region(self):
        p = self._plan([0, 0, 0])
        assert _transition_into(p, 1) is None

    def test_midpoint_fallback(self):
        long = self._plan([0, 1, 2, 2], "long")
        short = self._plan([0, 0, 0, 0], "short")
        assert _midpoint_fallback([short, long]) == ("long", 2, 1, 2)
        assert _midpoint_fallback([short]) is None

    def test_extend_blacklist_strictly_grows(self):
        p = self._plan([0, 0, 1, 1])
        bl = Blacklist()
        entry = ("a", 2, 0, 1)
        grown = _extend_blacklist(bl, [p], entry)
        assert len(grown) == 1
        # Preferred entry already banned: fall back over other transitions,
        # and report exhaustion once nothing new remains.
        assert _extend_blacklist(grown, [p], entry) is None

    def test_next_joint_ordering(self):
        a1 = self._plan([0, 0], "a")
        a2 = SequencePlan("a", (1, 1), (1,), 5.0)
        b1 = self._plan([2, 2], "b")
        joint = _next_joint([[a1, a2], [b1]], set())
        assert joint == (a1, b1)
        tried = {_signature((a1, b1))}
        joint = _next_joint([[a1, a2], [b1]], tried)
        assert joint == (a2, b1)
        tried.add(_signature((a2, b1)))
        assert _next_joint([[a1, a2], [b1]], tried) is None


class TestTimeout:
    def test_immediate_timeout(self, crossing):
        res = plan(crossing.with_params(timeout=1e-9))
        assert res.status == "timeout"
        assert res.trajectories is None


class TestResultShape:
    def test_frozen(self, single_agent):
        res = plan(single_agent)
        assert isinstance(res, PlanResult)
        with pytest.raises(AttributeError):
            res.status = "other"
