"""MILP transcription of the multi-agent trajectory problem.

Two builders share the same boundary, velocity, and objective rows. The
sequence-guided model adds region-membership rows and restricts collision
binaries to relevant pairs; the naive baseline instead emits collision rows
for every pair at every step plus obstacle facet disjunctions everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import InternalConsistencyError, InvalidInputError
from .geometry import DirectionSet, interior_overlaps, sample_directions
from .milp import GREATER, LESS, MilpModel, SolveOutcome
from .pairs import RelevantPairs
from .region_graph import SequencePlan
from .scenario import Scenario


@dataclass
class VariableIndex:
    """Maps structured variable identities to flat model column indices."""

    n_agents: int
    t_steps: int
    dim: int
    state: dict = field(default_factory=dict)  # (i, k, c) -> col
    step_aux: dict = field(default_factory=dict)  # (i, k, c) -> col
    accel_aux: dict = field(default_factory=dict)  # (i, k, c) -> col
    delta: dict = field(default_factory=dict)  # (i, j, t, l) -> col
    gamma: dict = field(default_factory=dict)  # (i, p, t, q) -> col
    agents: tuple = ()
    v_max: float = 0.0
    directions: DirectionSet | None = None

    @property
    def collision_binaries(self) -> int:
        return len(self.delta)

    @property
    def obstacle_binaries(self) -> int:
        return len(self.gamma)

    @property
    def total_binaries(self) -> int:
        return self.collision_binaries + self.obstacle_binaries


@dataclass(frozen=True)
class Trajectory:
    """T+1 states for one agent."""

    agent_id: str
    states: np.ndarray  # (T+1, dim)

    def __post_init__(self):
        object.__setattr__(self, "states",
                           np.asarray(self.states, dtype=float))

    @property
    def t_steps(self) -> int:
        return self.states.shape[0] - 1


def build_paamp_model(scenario: Scenario, plans: list[SequencePlan],
                      pairs: RelevantPairs, all_pairs: bool = False):
    """Sequence-guided MILP: membership rows plus relevant-pair collisions.

    Obstacle disjunctions are emitted only where an incident region actually
    reaches into an epsilon-inflated obstacle; elsewhere membership rows
    already keep the state clear.
    """
    params = scenario.params
    T = params.t_steps
    if len(plans) != scenario.n_agents:
        raise InvalidInputError("need exactly one sequence plan per agent")
    for plan, agent in zip(plans, scenario.agents):
        if plan.agent_id != agent.agent_id:
            raise InvalidInputError("plans must follow scenario agent order")
        if plan.t_steps != T:
            raise InvalidInputError("plan horizon differs from params.t_steps")
    if pairs.t_steps != T:
        raise InvalidInputError("relevant pairs computed for a different T")

    model = MilpModel()
    index = _base_model(model, scenario)
    for i, plan in enumerate(plans):
        for t in range(T + 1):
            for r in sorted(set(plan.region_at_state(t))):
                _region_rows(model, index, scenario.regions[r], i, t,
                             f"reg_{i}_{t}_r{r}")
    if all_pairs:
        n = scenario.n_agents
        step_pairs = [tuple((i, j) for i in range(n) for j in range(i + 1, n))
                      for _ in range(T + 1)]
    else:
        step_pairs = pairs.per_step
    _collision_rows(model, index, scenario, step_pairs)
    # Obstacle clearance where a region touches an inflated obstacle. When
    # the incident regions sit entirely on one side of an obstacle facet, a
    # fixed row enforces the clearance; the facet disjunction (with its
    # binaries) is emitted only when no single facet dominates.
    reach = {}
    for p, obs in enumerate(scenario.obstacles):
        grown = obs.inflated(params.epsilon)
        reach[p] = {r for r in range(len(scenario.regions))
                    if interior_overlaps(grown, scenario.regions[r],
                                         tol=params.adjacency_tol)}
    dominating: dict = {}
    for i, plan in enumerate(plans):
        for t in range(T + 1):
            incident = tuple(sorted(set(plan.region_at_state(t))))
            for p in range(len(scenario.obstacles)):
                if not set(incident) & reach[p]:
                    continue
                key = (incident, p)
                if key not in dominating:
                    dominating[key] = _dominating_facet(
                        [scenario.regions[r] for r in incident],
                        scenario.obstacles[p])
                q = dominating[key]
                if q is None:
                    _obstacle_rows(model, index, scenario, i, p, t)
                else:
                    _clearance_row(model, index, scenario, i, p, t, q)
    model.validate()
    return model, index


def build_naive_model(scenario: Scenario):
    """Baseline MILP: all pairs, all steps, obstacle disjunctions everywhere."""
    T = scenario.params.t_steps
    n = scenario.n_agents
    model = MilpModel()
    index = _base_model(model, scenario)
    step_pairs = [tuple((i, j) for i in range(n) for j in range(i + 1, n))
                  for _ in range(T + 1)]
    _collision_rows(model, index, scenario, step_pairs)
    for i in range(n):
        for t in range(T + 1):
            for p in range(len(scenario.obstacles)):
                _obstacle_rows(model, index, scenario, i, p, t)
    model.validate()
    return model, index


def _base_model(model: MilpModel, scenario: Scenario) -> VariableIndex:
    """States, boundary rows, velocity/accel auxiliaries, and the objective."""
    params = scenario.params
    T = params.t_steps
    dim = scenario.dim
    bbox = scenario.workspace.bbox
    index = VariableIndex(scenario.n_agents, T, dim,
                          agents=scenario.agents, v_max=params.v_max,
                          directions=sample_directions(params.n_directions,
                                                       params.d_sep))
    for i, agent in enumerate(scenario.agents):
        for k in range(T + 1):
            for c in range(dim):
                col = model.add_continuous(f"x_{i}_{k}_{c}",
                                           bbox[c, 0], bbox[c, 1])
                index.state[(i, k, c)] = col
        for c in range(dim):
            model.add_constraint({index.state[(i, 0, c)]: 1.0}, "=",
                                 float(agent.start[c]), name=f"start_{i}_{c}")
            model.add_constraint({index.state[(i, T, c)]: 1.0}, "=",
                                 float(agent.goal[c]), name=f"goal_{i}_{c}")
        # Step-length auxiliaries double as the infinity-norm speed bound.
        for k in range(T):
            for c in range(dim):
                u = model.add_continuous(f"u_{i}_{k}_{c}", 0.0, params.v_max)
                index.step_aux[(i, k, c)] = u
                model.add_objective_coeff(u, 1.0)
                nxt = index.state[(i, k + 1, c)]
                cur = index.state[(i, k, c)]
                model.add_constraint({nxt: 1.0, cur: -1.0, u: -1.0}, LESS,
                                     0.0, name=f"vel_p_{i}_{k}_{c}")
                model.add_constraint({nxt: -1.0, cur: 1.0, u: -1.0}, LESS,
                                     0.0, name=f"vel_m_{i}_{k}_{c}")
        for k in range(1, T - 1):
            for c in range(dim):
                a = model.add_continuous(f"a_{i}_{k}_{c}", 0.0, np.inf)
                index.accel_aux[(i, k, c)] = a
                model.add_objective_coeff(a, params.alpha)
                prv = index.state[(i, k - 1, c)]
                cur = index.state[(i, k, c)]
                nxt = index.state[(i, k + 1, c)]
                model.add_constraint(
                    {nxt: 1.0, cur: -2.0, prv: 1.0, a: -1.0}, LESS, 0.0,
                    name=f"acc_p_{i}_{k}_{c}")
                model.add_constraint(
                    {nxt: -1.0, cur: 2.0, prv: -1.0, a: -1.0}, LESS, 0.0,
                    name=f"acc_m_{i}_{k}_{c}")
    return index


def _region_rows(model, index, region, i, t, tag):
    for q in range(region.n_facets):
        coeffs = {index.state[(i, t, c)]: float(region.a[q, c])
                  for c in range(region.dim) if region.a[q, c] != 0.0}
        model.add_constraint(coeffs, LESS, float(region.b[q]),
                             name=f"{tag}_f{q}")


def _collision_rows(model, index, scenario, step_pairs):
    """Big-M separating-hyperplane disjunction per relevant pair and step."""
    params = scenario.params
    dirs = index.directions
    M = params.big_m
    for t, pairs_t in enumerate(step_pairs):
        for (i, j) in pairs_t:
            cover = {}
            for l in range(len(dirs)):
                d = model.add_binary(f"d_{i}_{j}_{t}_{l}")
                index.delta[(i, j, t, l)] = d
                cover[d] = 1.0
                coeffs = {d: -M}
                for c in range(scenario.dim):
                    cl = float(dirs.directions[l, c])
                    if cl == 0.0:
                        continue
                    coeffs[index.state[(j, t, c)]] = cl
                    coeffs[index.state[(i, t, c)]] = -cl
                model.add_constraint(coeffs, GREATER,
                                     float(dirs.thresholds[l]) - M,
                                     name=f"sep_{i}_{j}_{t}_{l}")
            model.add_constraint(cover, GREATER, 1.0,
                                 name=f"cov_{i}_{j}_{t}")


def _dominating_facet(regions, obs):
    """Facet of obs whose exterior side contains the regions' intersection.

    Returns the lowest such facet index, or None when the intersection
    wraps around a corner of the obstacle.
    """
    a = np.vstack([r.a for r in regions])
    b = np.concatenate([r.b for r in regions])
    norms = np.linalg.norm(obs.a, axis=1)
    for q in range(obs.n_facets):
        res = linprog(obs.a[q] / norms[q], A_ub=a, b_ub=b,
                      bounds=[(None, None)] * obs.dim, method="highs")
        if res.status == 0 and res.fun >= obs.b[q] / norms[q] - 1e-9:
            return q
    return None


def _clearance_row(model, index, scenario, i, p, t, q):
    """Hard clearance row along one dominating obstacle facet."""
    obs = scenario.obstacles[p]
    norm = np.linalg.norm(obs.a[q])
    coeffs = {index.state[(i, t, c)]: float(obs.a[q, c] / norm)
              for c in range(scenario.dim) if obs.a[q, c] != 0.0}
    model.add_constraint(coeffs, GREATER,
                         float(obs.b[q] / norm) + scenario.params.epsilon,
                         name=f"obsclr_{i}_{p}_{t}")


def _obstacle_rows(model, index, scenario, i, p, t):
    """Stay outside obstacle p at state t: one facet must push the state out."""
    params = scenario.params
    obs = scenario.obstacles[p]
    M = params.big_m
    norms = np.linalg.norm(obs.a, axis=1)
    cover = {}
    for q in range(obs.n_facets):
        g = model.add_binary(f"g_{i}_{p}_{t}_{q}")
        index.gamma[(i, p, t, q)] = g
        cover[g] = 1.0
        # Row normalized so epsilon is a Euclidean clearance.
        a_row = obs.a[q] / norms[q]
        rhs = obs.b[q] / norms[q]
        coeffs = {g: -M}
        for c in range(scenario.dim):
            if a_row[c] != 0.0:
                coeffs[index.state[(i, t, c)]] = float(a_row[c])
        model.add_constraint(coeffs, GREATER,
                             float(rhs) + params.epsilon - M,
                             name=f"obs_{i}_{p}_{t}_{q}")
    model.add_constraint(cover, GREATER, 1.0, name=f"obscov_{i}_{p}_{t}")


def decode(outcome: SolveOutcome, index: VariableIndex) -> list[Trajectory]:
    """Extract per-agent state sequences and enforce trajectory invariants."""
    if outcome.x is None:
        raise InternalConsistencyError("cannot decode an unsolved outcome")
    x = outcome.x
    out = []
    for i, agent in enumerate(index.agents):
        states = np.empty((index.t_steps + 1, index.dim))
        for k in range(index.t_steps + 1):
            for c in range(index.dim):
                key = (i, k, c)
                if key not in index.state:
                    raise InternalConsistencyError(
                        f"assignment missing state variable {key}")
                states[k, c] = x[index.state[key]]
        if np.max(np.abs(states[0] - agent.start)) > 1e-6:
            raise InternalConsistencyError(
                f"agent {agent.agent_id} start mismatch after decode")
        if np.max(np.abs(states[-1] - agent.goal)) > 1e-6:
            raise InternalConsistencyError(
                f"agent {agent.agent_id} goal mismatch after decode")
        steps = np.abs(np.diff(states, axis=0)).max()
        if steps > index.v_max + 1e-6:
            raise InternalConsistencyError(
                f"agent {agent.agent_id} exceeds v_max after decode")
        out.append(Trajectory(agent.agent_id, states))
    return out


def objective_from_trajectories(trajectories: list[Trajectory],
                                alpha: float) -> float:
    """Recompute the model objective directly from decoded states."""
    total = 0.0
    for traj in trajectories:
        d = np.diff(traj.states, axis=0)
        total += float(np.abs(d).sum())
        T = traj.t_steps
        for k in range(1, T - 1):
            sec = traj.states[k + 1] - 2.0 * traj.states[k] + traj.states[k - 1]
            total += alpha * float(np.abs(sec).sum())
    return total
