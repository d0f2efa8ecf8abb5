"""Region-adjacency graph, candidate sequence generation, time expansion.

A sequence plan assigns one region to each of the T trajectory segments.
Segment k covers states x_k and x_{k+1}, so both endpoints of a segment are
constrained to its region. Blacklist entries ban a specific region transition
at a specific segment boundary t (between segments t-1 and t).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .errors import InvalidInputError, SequenceTooLongError
from .geometry import chebyshev_center, intersects
from .milp import MilpModel, solve_lp
from .scenario import AgentSpec, Scenario


@dataclass(frozen=True)
class RegionGraph:
    """Adjacency graph over scenario regions."""

    n_vertices: int
    edges: frozenset  # unordered pairs frozenset({j, k})
    edge_cost: dict  # (min, max) index pair -> positive float
    centers: tuple  # Chebyshev center per region

    def adjacent(self, j: int, k: int) -> bool:
        return frozenset((j, k)) in self.edges

    def neighbors(self, j: int) -> list[int]:
        out = [k for k in range(self.n_vertices)
               if k != j and self.adjacent(j, k)]
        return sorted(out)

    def cost(self, j: int, k: int) -> float:
        return self.edge_cost[(min(j, k), max(j, k))]


@dataclass(frozen=True)
class SequencePlan:
    """Per-agent region assignment, one region index per segment."""

    agent_id: str
    segments: tuple  # length T, region index per segment
    path: tuple  # distinct-block region path the segments expand
    cost: float

    @property
    def t_steps(self) -> int:
        return len(self.segments)

    def region_at_state(self, t: int) -> tuple:
        """Region indices of the segments incident to state t."""
        T = len(self.segments)
        if t == 0:
            return (self.segments[0],)
        if t == T:
            return (self.segments[T - 1],)
        if self.segments[t - 1] == self.segments[t]:
            return (self.segments[t],)
        return (self.segments[t - 1], self.segments[t])


class Blacklist:
    """Immutable set of banned (agent id, boundary t, from-region, to-region)."""

    def __init__(self, entries=()):
        self._entries = frozenset(entries)

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(sorted(self._entries))

    def bans(self, agent_id: str, t: int, r_from: int, r_to: int) -> bool:
        return (agent_id, t, r_from, r_to) in self._entries

    def extended(self, agent_id: str, t: int, r_from: int, r_to: int) -> "Blacklist":
        return Blacklist(self._entries | {(agent_id, t, r_from, r_to)})


def build_graph(scenario: Scenario) -> RegionGraph:
    """Edge (j,k) iff regions j and k intersect as closed sets."""
    regions = scenario.regions
    m = len(regions)
    centers = tuple(chebyshev_center(r) for r in regions)
    edges = set()
    cost = {}
    for j in range(m):
        for k in range(j + 1, m):
            if intersects(regions[j], regions[k]):
                edges.add(frozenset((j, k)))
                cost[(j, k)] = float(np.linalg.norm(centers[j] - centers[k]))
    return RegionGraph(m, frozenset(edges), cost, centers)


def time_expand(path, T: int, weights=None):
    """Expand a region path to T segments with contiguous blocks.

    Block lengths are proportional to `weights` (uniform when omitted),
    rounded by largest remainder so they sum to T with every block >= 1.
    """
    path = list(path)
    p = len(path)
    if p == 0:
        raise InvalidInputError("path may not be empty")
    if p > T:
        raise SequenceTooLongError(
            f"path has {p} regions but only {T} segments are available")
    if weights is None:
        weights = np.ones(p)
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (p,) or np.any(weights < 0):
            raise InvalidInputError("need one nonnegative weight per region")
    counts = _largest_remainder(weights, T)
    out = []
    for r, c in zip(path, counts):
        out.extend([r] * c)
    return out


def _largest_remainder(weights, T):
    """Integer block sizes >= 1 summing to T, proportional to weights."""
    p = len(weights)
    total = float(weights.sum())
    if total <= 0:
        weights = np.ones(p)
        total = float(p)
    spare = T - p
    quota = weights / total * spare
    counts = np.floor(quota).astype(int)
    rem = quota - counts
    short = spare - int(counts.sum())
    # Break remainder ties toward earlier blocks.
    order = sorted(range(p), key=lambda i: (-rem[i], i))
    for i in order[:short]:
        counts[i] += 1
    return counts + 1


def is_admissible(plan: SequencePlan, graph: RegionGraph,
                  scenario: Scenario) -> bool:
    """Start/goal containment plus adjacency of consecutive segments."""
    agent = next((a for a in scenario.agents if a.agent_id == plan.agent_id), None)
    if agent is None:
        return False
    segs = plan.segments
    if len(segs) != scenario.params.t_steps:
        return False
    tol = 1e-9
    if not scenario.regions[segs[0]].contains(agent.start, tol=tol):
        return False
    if not scenario.regions[segs[-1]].contains(agent.goal, tol=tol):
        return False
    for a, b in zip(segs, segs[1:]):
        if a != b and not graph.adjacent(a, b):
            return False
    return True


def generate_sequences(graph: RegionGraph, scenario: Scenario,
                       agent: AgentSpec, blacklist: Blacklist,
                       k: int) -> list[SequencePlan]:
    """Up to k admissible candidate plans, cheapest region path first.

    Region paths come from Yen-style k-shortest enumeration between every
    (start region, goal region) pair; each path is time-expanded with block
    boundaries adjusted, if needed, to dodge blacklisted transitions.
    """
    if k < 1:
        raise InvalidInputError("k must be positive")
    T = scenario.params.t_steps
    tol = 1e-9
    starts = [j for j, r in enumerate(scenario.regions)
              if r.contains(agent.start, tol=tol)]
    goals = [j for j, r in enumerate(scenario.regions)
             if r.contains(agent.goal, tol=tol)]
    if not starts or not goals:
        raise InvalidInputError(
            f"agent {agent.agent_id} start or goal lies in no region")
    candidates = {}
    for s in starts:
        for g in goals:
            for cost, path in _k_shortest_paths(graph, s, g, k):
                key = tuple(path)
                if key not in candidates or cost < candidates[key]:
                    candidates[key] = cost
    plans = []
    for path, cost in sorted(candidates.items(), key=lambda kv: (kv[1], kv[0])):
        if len(path) > T:
            continue
        segments = _find_split(path, T, graph, scenario, agent, blacklist)
        if segments is None:
            continue
        plans.append(SequencePlan(agent.agent_id, tuple(segments),
                                  tuple(path), cost))
        if len(plans) == k:
            break
    return plans


def _k_shortest_paths(graph: RegionGraph, src: int, dst: int, k: int):
    """Yen's algorithm for k loopless shortest paths; returns (cost, path)."""
    first = _dijkstra(graph, src, dst)
    if first is None:
        return []
    found = [first]
    candidates = []
    seen = {tuple(first[1])}
    while len(found) < k:
        _, prev_path = found[-1]
        for i in range(len(prev_path) - 1):
            spur = prev_path[i]
            root = prev_path[: i + 1]
            banned_edges = set()
            for _, p in found:
                if list(p[: i + 1]) == list(root):
                    banned_edges.add(frozenset((p[i], p[i + 1])))
            banned_nodes = set(root[:-1])
            res = _dijkstra(graph, spur, dst, banned_edges, banned_nodes)
            if res is None:
                continue
            spur_cost, spur_path = res
            total = sum(graph.cost(a, b) for a, b in zip(root, root[1:]))
            path = list(root[:-1]) + list(spur_path)
            key = tuple(path)
            if key not in seen:
                seen.add(key)
                heapq.heappush(candidates, (total + spur_cost, path))
        if not candidates:
            break
        found.append(heapq.heappop(candidates))
    return found


def _dijkstra(graph: RegionGraph, src: int, dst: int,
              banned_edges=frozenset(), banned_nodes=frozenset()):
    if src in banned_nodes or dst in banned_nodes:
        return None
    dist = {src: 0.0}
    prev = {}
    heap = [(0.0, src)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == dst:
            break
        for v in graph.neighbors(u):
            if v in banned_nodes or frozenset((u, v)) in banned_edges:
                continue
            nd = d + graph.cost(u, v)
            if nd < dist.get(v, np.inf) - 1e-15:
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    if dst not in done:
        return None
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return dist[dst], path[::-1]


def _path_weights(path, graph: RegionGraph, agent: AgentSpec):
    """Within-region travel estimate per block, from waypoint leg lengths."""
    p = len(path)
    if p == 1:
        return np.ones(1)
    reps = [np.asarray(agent.start, dtype=float)]
    for r in path[1:-1]:
        reps.append(graph.centers[r])
    reps.append(np.asarray(agent.goal, dtype=float))
    legs = [float(np.linalg.norm(reps[i + 1] - reps[i])) for i in range(p - 1)]
    w = np.zeros(p)
    for i in range(p):
        if i > 0:
            w[i] += 0.5 * legs[i - 1]
        if i < p - 1:
            w[i] += 0.5 * legs[i]
    return w + 1e-9


def _find_split(path, T, graph, scenario: Scenario, agent: AgentSpec,
                blacklist: Blacklist, lp_budget: int = 20):
    """Pick block sizes for a region path, or None if no admissible split.

    Candidate splits are visited in order of deviation from the proportional
    target. A split must dodge blacklisted transitions and admit a dynamically
    feasible trajectory: a cheap per-coordinate reachability check prunes
    hopeless splits, and a small single-agent LP confirms the survivors.
    """
    p = len(path)
    target = _largest_remainder(_path_weights(path, graph, agent), T)
    lp_calls = 0
    for counts in _splits_by_deviation(target, T, p):
        segs = []
        for r, c in zip(path, counts):
            segs.extend([r] * int(c))
        if _split_banned(segs, agent.agent_id, blacklist):
            continue
        if not _box_reachable(scenario, agent, segs):
            continue
        if lp_calls >= lp_budget:
            return None
        lp_calls += 1
        if _split_feasible_lp(scenario, agent, segs):
            return segs
    return None


def _splits_by_deviation(target, T, p, cap: int = 5000):
    """Compositions of T into p positive parts, nearest the target first."""
    if p == 1:
        yield (T,)
        return
    if comb(T - 1, p - 1) > cap:
        # Too many splits to enumerate; offer only the target itself.
        yield tuple(int(c) for c in target)
        return
    splits = []
    for cuts in combinations(range(1, T), p - 1):
        prev = 0
        counts = []
        for c in cuts:
            counts.append(c - prev)
            prev = c
        counts.append(T - prev)
        dev = sum(abs(a - b) for a, b in zip(counts, target))
        splits.append((dev, tuple(counts)))
    splits.sort()
    for _, counts in splits:
        yield counts


def _split_banned(segs, agent_id, blacklist: Blacklist):
    if len(blacklist) == 0:
        return False
    return any(blacklist.bans(agent_id, t, segs[t - 1], segs[t])
               for t in range(1, len(segs)))


def _state_bboxes(scenario: Scenario, segs):
    """Bounding box of the region(s) each state is confined to."""
    T = len(segs)
    boxes = []
    for t in range(T + 1):
        incident = {segs[t - 1]} if t > 0 else set()
        if t < T:
            incident.add(segs[t])
        lo = np.full(scenario.dim, -np.inf)
        hi = np.full(scenario.dim, np.inf)
        for r in incident:
            bb = scenario.regions[r].bbox
            lo = np.maximum(lo, bb[:, 0])
            hi = np.minimum(hi, bb[:, 1])
        boxes.append((lo, hi))
    return boxes


def state_intervals(scenario: Scenario, agent: AgentSpec, segs):
    """Per-state reachable coordinate intervals, or None when empty.

    Intersects the per-state region bounding boxes with forward (from start)
    and backward (from goal) velocity cones; a sound outer approximation of
    where the agent can be at each state under the given split.
    """
    v = scenario.params.v_max
    boxes = _state_bboxes(scenario, segs)
    T = len(segs)
    lo, hi = agent.start.copy(), agent.start.copy()
    fwd = []
    for t in range(T + 1):
        if t > 0:
            lo, hi = lo - v, hi + v
        blo, bhi = boxes[t]
        lo, hi = np.maximum(lo, blo), np.minimum(hi, bhi)
        if np.any(lo > hi + 1e-9):
            return None
        fwd.append((lo.copy(), hi.copy()))
    out = []
    lo, hi = agent.goal.copy(), agent.goal.copy()
    for t in range(T, -1, -1):
        if t < T:
            lo, hi = lo - v, hi + v
        flo, fhi = fwd[t]
        clo, chi = np.maximum(lo, flo), np.minimum(hi, fhi)
        if np.any(clo > chi + 1e-9):
            return None
        out.append((clo, chi))
    return out[::-1]


def _box_reachable(scenario: Scenario, agent: AgentSpec, segs):
    """Necessary interval-propagation test for a dynamically feasible split."""
    return state_intervals(scenario, agent, segs) is not None


def _split_feasible_lp(scenario: Scenario, agent: AgentSpec, segs):
    """Exact single-agent feasibility: boundary, velocity, membership rows."""
    params = scenario.params
    T = len(segs)
    dim = scenario.dim
    bbox = scenario.workspace.bbox
    model = MilpModel()
    col = {}
    for t in range(T + 1):
        for c in range(dim):
            col[(t, c)] = model.add_continuous(f"x_{t}_{c}",
                                               bbox[c, 0], bbox[c, 1])
    for c in range(dim):
        model.add_constraint({col[(0, c)]: 1.0}, "=", float(agent.start[c]))
        model.add_constraint({col[(T, c)]: 1.0}, "=", float(agent.goal[c]))
    for t in range(T):
        for c in range(dim):
            step = {col[(t + 1, c)]: 1.0, col[(t, c)]: -1.0}
            model.add_constraint(step, "<=", params.v_max)
            model.add_constraint({k: -v for k, v in step.items()}, "<=",
                                 params.v_max)
    for t in range(T + 1):
        incident = {segs[t - 1]} if t > 0 else set()
        if t < T:
            incident.add(segs[t])
        for r in incident:
            reg = scenario.regions[r]
            for q in range(reg.n_facets):
                coeffs = {col[(t, c)]: float(reg.a[q, c])
                          for c in range(dim) if reg.a[q, c] != 0.0}
                model.add_constraint(coeffs, "<=", float(reg.b[q]))
    return solve_lp(model).status == "optimal"
