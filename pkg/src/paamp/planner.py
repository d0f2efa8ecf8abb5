"""Sequence-then-solve planning loop with refine-on-conflict.

Candidate region sequences are generated per agent, combined into a joint
candidate by increasing total cost, transcribed to a MILP, and solved. On
infeasibility a conflict is localized to one region transition, that
transition is blacklisted, and the loop retries with fresh sequences.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .analysis import validate
from .errors import InternalConsistencyError, InvalidInputError
from .geometry import DirectionSet, sample_directions
from .milp import (
    MilpModel,
    STATUS_GAP,
    STATUS_OPTIMAL,
    branch_and_bound,
    solve_lp,
)
from .pairs import pair_ratio, relevant_pairs
from .region_graph import (
    Blacklist,
    SequencePlan,
    build_graph,
    generate_sequences,
    state_intervals,
)
from .scenario import Scenario
from .transcription import VariableIndex, build_paamp_model, decode

INT_TOL = 1e-6


@dataclass(frozen=True)
class PlanResult:
    """Outcome of one plan() call."""

    status: str  # success | exhausted | timeout
    trajectories: tuple | None
    plans: tuple | None
    iterations: int
    blacklist: Blacklist
    diagnostics: dict


def plan(scenario: Scenario) -> PlanResult:
    """Run the full planning loop on a validated scenario."""
    params = scenario.params
    start = time.perf_counter()
    graph = build_graph(scenario)
    blacklist = Blacklist()
    tried: set = set()
    diag = {"nodes": 0, "binaries": 0, "rho": None, "objective": None,
            "solves": 0, "wall_time": 0.0}
    dirs = sample_directions(params.n_directions, params.d_sep)

    def elapsed() -> float:
        return time.perf_counter() - start

    def finish(status, trajectories=None, plans=None, iterations=0):
        diag["wall_time"] = elapsed()
        return PlanResult(status, trajectories, plans, iterations,
                          blacklist, diag)

    # Boundary conditions, the velocity limit, and the workspace box alone
    # can rule out the required separation for some pair at some step; that
    # verdict is sequence-independent, so no candidate needs solving.
    if _free_space_conflict(scenario, dirs) is not None:
        return finish("exhausted")

    iterations = 0
    for _ in range(params.k_max):
        if elapsed() > params.timeout:
            return finish("timeout", iterations=iterations)
        per_agent = [generate_sequences(graph, scenario, agent, blacklist,
                                        params.k_candidates)
                     for agent in scenario.agents]
        if any(not cands for cands in per_agent):
            return finish("exhausted", iterations=iterations)
        joint = _next_joint(per_agent, tried)
        if joint is None:
            return finish("exhausted", iterations=iterations)
        iterations += 1
        tried.add(_signature(joint))
        plans = list(joint)

        # Interval pre-check: if some pair provably cannot reach the
        # required separation under this candidate, skip the MILP.
        conflict = _interval_conflict(scenario, plans, dirs)
        if conflict is None:
            pairs = relevant_pairs(plans, graph)
            model, index = build_paamp_model(scenario, plans, pairs)
            remaining = params.timeout - elapsed()
            if remaining <= 0:
                return finish("timeout", iterations=iterations)
            outcome = branch_and_bound(model, gap=params.gap,
                                       time_limit=remaining)
            diag["solves"] += 1
            diag["nodes"] += outcome.node_count
            diag["binaries"] = index.total_binaries
            if scenario.n_agents >= 2:
                diag["rho"] = pair_ratio(pairs, scenario.n_agents)
            if outcome.status in (STATUS_OPTIMAL, STATUS_GAP):
                trajectories = tuple(decode(outcome, index))
                report = validate(scenario, plans, list(trajectories))
                if not report.passed:
                    raise InternalConsistencyError(
                        "solver solution fails the safety audit: "
                        f"{report.violations[0]}")
                diag["objective"] = outcome.objective
                return finish("success", trajectories, tuple(plans),
                              iterations)
            if outcome.status == "node-limit":
                return finish("timeout", iterations=iterations)
            conflict_entry = localize_conflict(model, index, plans)
        else:
            t_star, (i, j) = conflict
            conflict_entry = _transition_into(plans[i], t_star)

        new_blacklist = _extend_blacklist(blacklist, plans, conflict_entry)
        if new_blacklist is None:
            return finish("exhausted", iterations=iterations)
        blacklist = new_blacklist
    return finish("exhausted", iterations=iterations)


def localize_conflict(model: MilpModel, index: VariableIndex,
                      plans: list[SequencePlan]):
    """Deterministic deletion probe for an infeasible model.

    Re-solves the LP relaxation with the collision cover rows of one state
    removed at a time (ascending t); the first t that restores feasibility
    is the conflict step. Among the pairs constrained there, the
    lexicographically smallest one names the conflict, and the banned edge
    is that agent's transition into its region at the conflict step. When
    no single-step removal helps, falls back to the midpoint transition of
    the agent with the longest region path.
    """
    full = solve_lp(model)
    if full.status == STATUS_OPTIMAL and all(
            min(full.x[j], 1.0 - full.x[j]) < INT_TOL
            for j in model.binary_indices):
        raise InvalidInputError(
            "localize_conflict called on a feasible model")
    chosen_t = None
    for t in range(index.t_steps + 1):
        if solve_lp(_without_covers(model, t)).status == STATUS_OPTIMAL:
            chosen_t = t
            break
    if chosen_t is not None:
        pairs_t = sorted({(i, j) for (i, j, tt, _l) in index.delta
                          if tt == chosen_t})
        if pairs_t:
            i, _j = pairs_t[0]
            entry = _transition_into(plans[i], chosen_t)
            if entry is not None:
                return entry
    return _midpoint_fallback(plans)


def _without_covers(model: MilpModel, t: int) -> MilpModel:
    """Copy of the model minus the collision cover rows of state t."""
    sub = MilpModel()
    sub.variables = list(model.variables)
    sub.objective = dict(model.objective)
    suffix = str(t)
    for con in model.constraints:
        if con.name and con.name.startswith("cov_"):
            parts = con.name.split("_")
            if len(parts) == 4 and parts[3] == suffix:
                continue
        sub.constraints.append(con)
    return sub


def _transition_into(plan: SequencePlan, t_star: int):
    """Blacklist entry for the transition into the region active at t_star.

    When t_star falls in the first block (nothing leads into it), the
    transition out of that block is used instead; single-region plans have
    no transition and yield None.
    """
    segs = plan.segments
    T = len(segs)
    k = min(t_star, T - 1)
    r = segs[k]
    b = k
    while b > 0 and segs[b - 1] == r:
        b -= 1
    if b > 0:
        return (plan.agent_id, b, segs[b - 1], segs[b])
    e = k
    while e < T and segs[e] == r:
        e += 1
    if e < T:
        return (plan.agent_id, e, segs[e - 1], segs[e])
    return None


def _midpoint_fallback(plans: list[SequencePlan]):
    """Midpoint transition of the agent with the longest region path."""
    for p in sorted(plans, key=lambda p: (-len(p.path), p.agent_id)):
        trans = [t for t in range(1, p.t_steps)
                 if p.segments[t - 1] != p.segments[t]]
        if trans:
            t = trans[len(trans) // 2]
            return (p.agent_id, t, p.segments[t - 1], p.segments[t])
    return None


def _extend_blacklist(blacklist: Blacklist, plans: list[SequencePlan],
                      preferred):
    """Grow the blacklist strictly, falling back over all transitions."""
    candidates = []
    if preferred is not None:
        candidates.append(preferred)
    for p in sorted(plans, key=lambda p: (-len(p.path), p.agent_id)):
        trans = [t for t in range(1, p.t_steps)
                 if p.segments[t - 1] != p.segments[t]]
        mid = len(trans) // 2
        for k in sorted(range(len(trans)), key=lambda k: (abs(k - mid), k)):
            t = trans[k]
            candidates.append((p.agent_id, t, p.segments[t - 1],
                               p.segments[t]))
    for entry in candidates:
        if not blacklist.bans(*entry):
            return blacklist.extended(*entry)
    return None


def _signature(plans) -> tuple:
    return tuple((p.agent_id, p.segments) for p in plans)


def _next_joint(per_agent, tried):
    """Cheapest untried combination of per-agent candidates.

    Ordered by total cost, ties broken lexicographically on region paths.
    """
    sizes = [len(c) for c in per_agent]
    if float(np.prod(sizes)) > 1e5:
        per_agent = [c[:2] for c in per_agent]
    best = None
    for combo in itertools.product(*per_agent):
        if _signature(combo) in tried:
            continue
        key = (sum(p.cost for p in combo), tuple(p.path for p in combo))
        if best is None or key < best[0]:
            best = (key, combo)
    return None if best is None else best[1]


# ---------------------------------------------------------------------------
# Interval-arithmetic separation pre-checks
# ---------------------------------------------------------------------------

def _free_space_boxes(scenario: Scenario, agent):
    """Reachable interval per state from boundary, velocity, and workspace."""
    params = scenario.params
    T = params.t_steps
    bb = scenario.workspace.bbox
    out = []
    for t in range(T + 1):
        lo = np.maximum(np.maximum(agent.start - params.v_max * t,
                                   agent.goal - params.v_max * (T - t)),
                        bb[:, 0])
        hi = np.minimum(np.minimum(agent.start + params.v_max * t,
                                   agent.goal + params.v_max * (T - t)),
                        bb[:, 1])
        out.append((lo, hi))
    return out


def _separable(box_i, box_j, dirs: DirectionSet) -> bool:
    """Can some direction certify the required separation on these boxes?"""
    lo_i, hi_i = box_i
    lo_j, hi_j = box_j
    for l in range(len(dirs)):
        c = dirs.directions[l]
        best = float(np.sum(np.where(c > 0, c * (hi_j - lo_i),
                                     c * (lo_j - hi_i))))
        if best >= dirs.thresholds[l] - 1e-9:
            return True
    return False


def _pairwise_conflict(boxes, t_steps, dirs):
    n = len(boxes)
    for t in range(t_steps + 1):
        for i in range(n):
            for j in range(i + 1, n):
                if not _separable(boxes[i][t], boxes[j][t], dirs):
                    return t, (i, j)
    return None


def _free_space_conflict(scenario: Scenario, dirs):
    """Sequence-independent separation conflict, or None."""
    if scenario.n_agents < 2:
        return None
    boxes = [_free_space_boxes(scenario, a) for a in scenario.agents]
    return _pairwise_conflict(boxes, scenario.params.t_steps, dirs)


def _interval_conflict(scenario: Scenario, plans, dirs):
    """Per-candidate conflict from region-restricted reachable intervals."""
    if scenario.n_agents < 2:
        return None
    boxes = []
    for agent, p in zip(scenario.agents, plans):
        iv = state_intervals(scenario, agent, list(p.segments))
        if iv is None:
            # The split passed generation-time filters; treat as conflict
            # at the midpoint of the horizon.
            return scenario.params.t_steps // 2, (0, 1)
        boxes.append(iv)
    return _pairwise_conflict(boxes, scenario.params.t_steps, dirs)
