"""Scenario data model: workspace, regions, obstacles, agents, parameters.

Scenario files are JSON with top-level keys `workspace`, `regions`,
`obstacles`, `agents`, `params`. Polytopes are written either as
{"box": [x1min, x1max, x2min, x2max]} or {"halfspaces": [[a1, a2, b], ...]}
with an optional "name".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ScenarioFormatError, ScenarioValidationError
from .geometry import Polytope, box, contains_polytope, interior_overlaps


@dataclass(frozen=True)
class AgentSpec:
    """One agent: identifier plus start and goal positions."""

    agent_id: str
    start: np.ndarray
    goal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float).ravel())
        object.__setattr__(self, "goal", np.asarray(self.goal, dtype=float).ravel())


@dataclass(frozen=True)
class PlanningParams:
    """Numeric knobs of the planner with their default values."""

    t_steps: int = 12
    v_max: float = 1.0
    d_min: float = 1.0
    n_directions: int = 8
    d_sep: float = 1.0
    big_m: float = 100.0
    alpha: float = 0.5
    epsilon: float = 0.02
    gap: float = 5.0
    k_max: int = 20
    k_candidates: int = 5
    timeout: float = 300.0
    adjacency_tol: float = 1e-9

    def validate(self) -> None:
        if self.t_steps < 2:
            raise ScenarioValidationError("t_steps must be at least 2")
        for nm in ("v_max", "d_min", "d_sep", "big_m", "epsilon", "timeout"):
            if getattr(self, nm) <= 0:
                raise ScenarioValidationError(f"{nm} must be positive")
        if self.n_directions < 3:
            raise ScenarioValidationError("n_directions must be at least 3")
        if self.d_sep > self.d_min + 1e-12:
            raise ScenarioValidationError("d_sep must not exceed d_min")
        if self.alpha < 0:
            raise ScenarioValidationError("alpha must be nonnegative")
        if self.gap < 0:
            raise ScenarioValidationError("gap must be nonnegative")
        if self.k_max < 1 or self.k_candidates < 1:
            raise ScenarioValidationError("k_max and k_candidates must be positive")
        if self.adjacency_tol < 0:
            raise ScenarioValidationError("adjacency_tol must be nonnegative")


@dataclass(frozen=True)
class Scenario:
    """Validated planning instance."""

    workspace: Polytope
    regions: tuple[Polytope, ...]
    obstacles: tuple[Polytope, ...]
    agents: tuple[AgentSpec, ...]
    params: PlanningParams = field(default_factory=PlanningParams)

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "agents", tuple(self.agents))
        self._validate()

    def _validate(self) -> None:
        self.params.validate()
        if not self.regions:
            raise ScenarioValidationError("at least one region is required")
        if not self.agents:
            raise ScenarioValidationError("at least one agent is required")
        dim = self.workspace.dim
        for p in list(self.regions) + list(self.obstacles):
            if p.dim != dim:
                raise ScenarioValidationError(
                    "regions and obstacles must match the workspace dimension")
        for idx, reg in enumerate(self.regions):
            if not contains_polytope(self.workspace, reg):
                raise ScenarioValidationError(
                    f"region {reg.name or idx} is not contained in the workspace")
        for idx, obs in enumerate(self.obstacles):
            if not contains_polytope(self.workspace, obs):
                raise ScenarioValidationError(
                    f"obstacle {obs.name or idx} is not contained in the workspace")
            for ridx, reg in enumerate(self.regions):
                if interior_overlaps(obs, reg, tol=self.params.adjacency_tol):
                    raise ScenarioValidationError(
                        f"obstacle {obs.name or idx} overlaps the interior of "
                        f"region {reg.name or ridx}")
        seen = set()
        for ag in self.agents:
            if ag.agent_id in seen:
                raise ScenarioValidationError(f"duplicate agent id {ag.agent_id!r}")
            seen.add(ag.agent_id)
            for label, x in (("start", ag.start), ("goal", ag.goal)):
                if x.shape[0] != dim:
                    raise ScenarioValidationError(
                        f"agent {ag.agent_id} {label} has wrong dimension")
                if not any(reg.contains(x, tol=1e-9) for reg in self.regions):
                    raise ScenarioValidationError(
                        f"agent {ag.agent_id} {label} lies in no region")

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def dim(self) -> int:
        return self.workspace.dim

    def workspace_diameter(self) -> float:
        """Diagonal of the workspace bounding box."""
        spans = self.workspace.bbox[:, 1] - self.workspace.bbox[:, 0]
        return float(np.linalg.norm(spans))

    def with_params(self, **kwargs) -> "Scenario":
        return replace(self, params=replace(self.params, **kwargs))

    def to_dict(self) -> dict:
        return {
            "workspace": _polytope_to_dict(self.workspace),
            "regions": [_polytope_to_dict(p) for p in self.regions],
            "obstacles": [_polytope_to_dict(p) for p in self.obstacles],
            "agents": [
                {"id": ag.agent_id,
                 "start": [float(v) for v in ag.start],
                 "goal": [float(v) for v in ag.goal]}
                for ag in self.agents
            ],
            "params": {f.name: getattr(self.params, f.name)
                       for f in fields(PlanningParams)},
        }


def _polytope_to_dict(p: Polytope) -> dict:
    d: dict = {}
    if p.name is not None:
        d["name"] = p.name
    b = _as_box(p)
    if b is not None:
        d["box"] = b
    else:
        d["halfspaces"] = [
            [float(v) for v in row] + [float(rhs)]
            for row, rhs in zip(p.a, p.b)
        ]
    return d


def _as_box(p: Polytope):
    """Return [x1min, x1max, x2min, x2max] if p is written as a 2-D box."""
    if p.dim != 2 or p.n_facets != 4:
        return None
    want = {(1.0, 0.0): None, (-1.0, 0.0): None,
            (0.0, 1.0): None, (0.0, -1.0): None}
    for row, rhs in zip(p.a, p.b):
        key = (row[0], row[1])
        if key not in want or want[key] is not None:
            return None
        want[key] = float(rhs)
    return [-want[(-1.0, 0.0)], want[(1.0, 0.0)],
            -want[(0.0, -1.0)], want[(0.0, 1.0)]]


def _polytope_from_dict(d, what: str) -> Polytope:
    if not isinstance(d, dict):
        raise ScenarioFormatError(f"{what}: expected an object")
    name = d.get("name")
    if "box" in d:
        vals = d["box"]
        if not (isinstance(vals, list) and len(vals) == 4):
            raise ScenarioFormatError(f"{what}: box needs 4 numbers")
        return box(*[float(v) for v in vals], name=name)
    if "halfspaces" in d:
        rows = d["halfspaces"]
        if not rows:
            raise ScenarioFormatError(f"{what}: halfspaces may not be empty")
        arr = np.asarray(rows, dtype=float)
        if arr.ndim != 2 or arr.shape[1] < 2:
            raise ScenarioFormatError(f"{what}: each halfspace is [a..., b]")
        return Polytope(arr[:, :-1], arr[:, -1], name=name)
    raise ScenarioFormatError(f"{what}: need either 'box' or 'halfspaces'")


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioFormatError("scenario root must be an object")
    for key in ("workspace", "regions", "agents"):
        if key not in data:
            raise ScenarioFormatError(f"missing required key {key!r}")
    workspace = _polytope_from_dict(data["workspace"], "workspace")
    regions = tuple(_polytope_from_dict(d, f"regions[{i}]")
                    for i, d in enumerate(data["regions"]))
    obstacles = tuple(_polytope_from_dict(d, f"obstacles[{i}]")
                      for i, d in enumerate(data.get("obstacles", [])))
    agents = []
    for i, d in enumerate(data["agents"]):
        try:
            agents.append(AgentSpec(str(d["id"]),
                                    np.asarray(d["start"], dtype=float),
                                    np.asarray(d["goal"], dtype=float)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioFormatError(f"agents[{i}]: {exc}") from exc
    raw_params = data.get("params", {})
    known = {f.name for f in fields(PlanningParams)}
    unknown = set(raw_params) - known
    if unknown:
        raise ScenarioFormatError(f"unknown params keys: {sorted(unknown)}")
    params = PlanningParams(**raw_params)
    return Scenario(workspace, regions, obstacles, tuple(agents), params)


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc
    return scenario_from_dict(data)


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def builtin_crossing_scenario() -> Scenario:
    """Four agents crossing a 10 x 10 workspace split into six band regions.

    The bands leave four unit gap squares uncovered; those squares are the
    obstacles, so trajectories have to thread the corridors between them.
    """
    lo, mid_lo, mid_hi, hi = 2.66, 3.66, 6.33, 7.33
    workspace = box(0.0, 10.0, 0.0, 10.0, name="workspace")
    regions = (
        box(0.0, lo, 0.0, 10.0, name="v_left"),
        box(mid_lo, mid_hi, 0.0, 10.0, name="v_mid"),
        box(hi, 10.0, 0.0, 10.0, name="v_right"),
        box(0.0, 10.0, 0.0, lo, name="h_bottom"),
        box(0.0, 10.0, mid_lo, mid_hi, name="h_mid"),
        box(0.0, 10.0, hi, 10.0, name="h_top"),
    )
    obstacles = (
        box(lo, mid_lo, lo, mid_lo, name="gap_sw"),
        box(mid_hi, hi, lo, mid_lo, name="gap_se"),
        box(lo, mid_lo, mid_hi, hi, name="gap_nw"),
        box(mid_hi, hi, mid_hi, hi, name="gap_ne"),
    )
    agents = (
        AgentSpec("a0", [1.0, 1.0], [9.0, 9.0]),
        AgentSpec("a1", [9.0, 1.0], [1.0, 9.0]),
        AgentSpec("a2", [1.0, 9.0], [9.0, 1.0]),
        AgentSpec("a3", [9.0, 9.0], [1.0, 1.0]),
    )
    return Scenario(workspace, regions, obstacles, agents, PlanningParams())
