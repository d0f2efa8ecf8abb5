"""Solution validation, trajectory metrics, SVG rendering, benchmarking.

The validator is deliberately solver-independent: it checks the decoded
geometry only (never binary assignments), so it can serve as an external
safety audit of whatever produced the trajectories.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .milp import branch_and_bound
from .region_graph import SequencePlan
from .scenario import Scenario
from .transcription import (
    Trajectory,
    build_naive_model,
    objective_from_trajectories,
)

_TOL = 1e-6


@dataclass(frozen=True)
class Violation:
    """One failed safety check."""

    check: str
    agents: tuple
    step: int
    margin: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def passed(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class TrajectoryMetrics:
    """Per-agent path metrics plus the recomputed total objective."""

    manhattan: dict  # agent id -> L1 path length
    max_acceleration: dict  # agent id -> max Euclidean second difference
    total_objective: float
    acceleration_defined: bool = True


def validate(scenario: Scenario, plans: list[SequencePlan] | None,
             trajectories: list[Trajectory]) -> ValidationReport:
    """Geometry-only safety audit of a set of trajectories.

    Separation is checked for ALL agent pairs at every step, not only the
    relevant ones; pass `plans=None` to skip the region-membership check
    (e.g. for the naive baseline, which has no sequence assignment).
    """
    params = scenario.params
    T = params.t_steps
    out = []
    by_id = {a.agent_id: a for a in scenario.agents}
    for traj in trajectories:
        agent = by_id.get(traj.agent_id)
        if agent is None or traj.t_steps != T:
            raise InvalidInputError(
                f"trajectory for {traj.agent_id!r} does not match the scenario")
        for label, t, x in (("boundary-start", 0, agent.start),
                            ("boundary-goal", T, agent.goal)):
            err = float(np.max(np.abs(traj.states[t] - x)))
            if err > _TOL:
                out.append(Violation(label, (traj.agent_id,), t, err))
        steps = np.abs(np.diff(traj.states, axis=0)).max(axis=1)
        for k in range(T):
            if steps[k] > params.v_max + _TOL:
                out.append(Violation("velocity", (traj.agent_id,), k,
                                     float(steps[k])))
        for t in range(T + 1):
            for p, obs in enumerate(scenario.obstacles):
                margin = obs.facet_margin(traj.states[t])
                if margin < params.epsilon - _TOL:
                    out.append(Violation("obstacle-clearance",
                                         (traj.agent_id, obs.name or str(p)),
                                         t, margin))
    for i in range(len(trajectories)):
        for j in range(i + 1, len(trajectories)):
            a, b = trajectories[i], trajectories[j]
            dist = np.linalg.norm(a.states - b.states, axis=1)
            for t in range(T + 1):
                if dist[t] < params.d_sep - _TOL:
                    out.append(Violation("separation",
                                         (a.agent_id, b.agent_id), t,
                                         float(dist[t])))
    if plans is not None:
        by_plan = {p.agent_id: p for p in plans}
        for traj in trajectories:
            plan = by_plan.get(traj.agent_id)
            if plan is None:
                raise InvalidInputError(
                    f"no sequence plan for agent {traj.agent_id!r}")
            for k, r in enumerate(plan.segments):
                reg = scenario.regions[r]
                for t in (k, k + 1):
                    x = traj.states[t]
                    if not reg.contains(x, tol=_TOL):
                        out.append(Violation("region-membership",
                                             (traj.agent_id, reg.name or str(r)),
                                             t, reg.facet_margin(x)))
    return ValidationReport(tuple(out))


def metrics(trajectories: list[Trajectory], alpha: float) -> TrajectoryMetrics:
    """Manhattan length and peak acceleration per agent, plus the objective."""
    manhattan = {}
    max_acc = {}
    accel_defined = True
    for traj in trajectories:
        d = np.diff(traj.states, axis=0)
        manhattan[traj.agent_id] = float(np.abs(d).sum())
        if traj.t_steps < 2:
            max_acc[traj.agent_id] = 0.0
            accel_defined = False
        else:
            sec = np.diff(traj.states, n=2, axis=0)
            max_acc[traj.agent_id] = float(np.linalg.norm(sec, axis=1).max())
    total = objective_from_trajectories(trajectories, alpha)
    return TrajectoryMetrics(manhattan, max_acc, total, accel_defined)


# ---------------------------------------------------------------------------
# SVG rendering
# ---------------------------------------------------------------------------

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd",
            "#ff7f0e", "#8c564b", "#17becf", "#e377c2")


def _fmt(v: float) -> str:
    return f"{v:.4f}".rstrip("0").rstrip(".")


def _polygon_points(poly, flip) -> str:
    from .geometry import vertices_2d

    verts = vertices_2d(poly)
    return " ".join(f"{_fmt(x)},{_fmt(flip(y))}" for x, y in verts)


def _star_points(cx: float, cy: float, r: float) -> str:
    pts = []
    for i in range(10):
        rad = r if i % 2 == 0 else 0.4 * r
        ang = np.pi / 2 + i * np.pi / 5
        pts.append((cx + rad * np.cos(ang), cy + rad * np.sin(ang)))
    return " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)


def render_svg(scenario: Scenario, trajectories: list[Trajectory],
               path) -> None:
    """Write a deterministic SVG plot of the scenario and trajectories.

    Regions are light gray, obstacles black; each agent gets a polyline in
    a fixed palette color, a square at its start and a star at its goal.
    """
    if scenario.dim != 2:
        raise InvalidInputError("SVG rendering requires a 2-D scenario")
    bb = scenario.workspace.bbox
    x0, x1 = bb[0]
    y0, y1 = bb[1]

    def flip(y):
        # SVG y grows downward; mirror within the workspace band.
        return y0 + y1 - y

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{_fmt(x0)} {_fmt(y0)} {_fmt(x1 - x0)} {_fmt(y1 - y0)}" '
        f'width="640" height="640">',
        f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(x1 - x0)}" '
        f'height="{_fmt(y1 - y0)}" fill="#ffffff"/>',
    ]
    for reg in scenario.regions:
        lines.append(f'<polygon points="{_polygon_points(reg, flip)}" '
                     'fill="#d9d9d9" fill-opacity="0.6" stroke="#bbbbbb" '
                     'stroke-width="0.02"/>')
    for obs in scenario.obstacles:
        lines.append(f'<polygon points="{_polygon_points(obs, flip)}" '
                     'fill="#000000"/>')
    by_id = {a.agent_id: a for a in scenario.agents}
    for n, traj in enumerate(trajectories):
        color = _PALETTE[n % len(_PALETTE)]
        pts = " ".join(f"{_fmt(x)},{_fmt(flip(y))}" for x, y in traj.states)
        lines.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="0.08"/>')
        agent = by_id.get(traj.agent_id)
        if agent is None:
            continue
        sx, sy = float(agent.start[0]), float(agent.start[1])
        gx, gy = float(agent.goal[0]), float(agent.goal[1])
        lines.append(f'<rect x="{_fmt(sx - 0.18)}" y="{_fmt(flip(sy) - 0.18)}" '
                     f'width="0.36" height="0.36" fill="{color}"/>')
        lines.append(f'<polygon points="{_star_points(gx, flip(gy), 0.3)}" '
                     f'fill="{color}"/>')
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Benchmark harness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkRow:
    t_steps: int
    method: str  # paamp | naive | infeasibility-probe
    status: str
    objective: float | None
    binaries: int
    nodes: int
    wall_ms: str  # formatted; ">limit" on per-cell timeout
    rho: float | None


@dataclass
class BenchmarkTable:
    rows: list = field(default_factory=list)

    CSV_HEADER = "T,method,status,objective,binaries,nodes,wall_ms,rho"

    def to_csv(self) -> str:
        out = [self.CSV_HEADER]
        for r in self.rows:
            obj = "" if r.objective is None else f"{r.objective:.6f}"
            rho = "" if r.rho is None else f"{r.rho:.6f}"
            out.append(f"{r.t_steps},{r.method},{r.status},{obj},"
                       f"{r.binaries},{r.nodes},{r.wall_ms},{rho}")
        return "\n".join(out) + "\n"

    def to_text(self) -> str:
        header = f"{'T':>4} {'method':<20} {'status':<22} {'objective':>12} " \
                 f"{'binaries':>9} {'nodes':>7} {'wall_ms':>10} {'rho':>7}"
        out = [header, "-" * len(header)]
        for r in self.rows:
            obj = "-" if r.objective is None else f"{r.objective:.3f}"
            rho = "-" if r.rho is None else f"{r.rho:.3f}"
            out.append(f"{r.t_steps:>4} {r.method:<20} {r.status:<22} "
                       f"{obj:>12} {r.binaries:>9} {r.nodes:>7} "
                       f"{r.wall_ms:>10} {rho:>7}")
        return "\n".join(out) + "\n"


def _wall_ms(seconds: float) -> str:
    return f"{seconds * 1000.0:.1f}"


def benchmark(scenario: Scenario, t_values: list[int],
              cell_limit: float = 300.0) -> BenchmarkTable:
    """PAAMP vs naive solves per horizon, plus an infeasibility probe.

    Each cell is capped at `cell_limit` seconds of wall time; cells that
    hit the cap record `>limit` and the run continues.
    """
    from .planner import plan  # local import to avoid a module cycle

    table = BenchmarkTable()
    for T in t_values:
        scn = scenario.with_params(t_steps=int(T), timeout=cell_limit)
        t0 = time.perf_counter()
        result = plan(scn)
        wall = time.perf_counter() - t0
        diag = result.diagnostics
        timed_out = result.status == "timeout" or wall > cell_limit
        table.rows.append(BenchmarkRow(
            T, "paamp",
            result.status if result.status != "timeout" else "timeout",
            diag.get("objective"),
            diag.get("binaries", 0), diag.get("nodes", 0),
            f">{cell_limit * 1000.0:.0f}" if timed_out else _wall_ms(wall),
            diag.get("rho")))

        t0 = time.perf_counter()
        naive_model, naive_index = build_naive_model(scn)
        outcome = branch_and_bound(naive_model, gap=scn.params.gap,
                                   time_limit=cell_limit)
        wall = time.perf_counter() - t0
        timed_out = outcome.status == "node-limit" or wall > cell_limit
        table.rows.append(BenchmarkRow(
            T, "naive", outcome.status, outcome.objective,
            naive_index.total_binaries, outcome.node_count,
            f">{cell_limit * 1000.0:.0f}" if timed_out else _wall_ms(wall),
            None))

        probe = scn.with_params(d_min=6.0 * scn.params.d_min,
                                d_sep=6.0 * scn.params.d_min)
        t0 = time.perf_counter()
        probe_result = plan(probe)
        wall = time.perf_counter() - t0
        diag = probe_result.diagnostics
        timed_out = probe_result.status == "timeout" or wall > cell_limit
        table.rows.append(BenchmarkRow(
            T, "infeasibility-probe", probe_result.status,
            diag.get("objective"),
            diag.get("binaries", 0), diag.get("nodes", 0),
            f">{cell_limit * 1000.0:.0f}" if timed_out else _wall_ms(wall),
            diag.get("rho")))
    return table
