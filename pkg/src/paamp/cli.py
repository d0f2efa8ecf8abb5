"""Command-line entry point: plan, benchmark, validate, export-lp, render.

All artifacts (plan JSON, CSV, SVG, LP text) are byte-deterministic for
identical inputs; wall-clock timings go to stderr only.
"""

from __future__ import annotations

import json
import sys
import time

import click
import numpy as np

from .analysis import benchmark, metrics, render_svg, validate
from .errors import PlannerError
from .milp import STATUS_GAP, STATUS_OPTIMAL, branch_and_bound, export_lp
from .pairs import relevant_pairs
from .region_graph import Blacklist, build_graph, generate_sequences
from .scenario import (
    PlanningParams,
    Scenario,
    builtin_crossing_scenario,
    load_scenario,
)
from .transcription import Trajectory, build_naive_model, build_paamp_model, decode

_PARAM_FLAGS = (
    ("t_steps", int), ("v_max", float), ("d_min", float), ("d_sep", float),
    ("n_directions", int), ("big_m", float), ("alpha", float),
    ("epsilon", float), ("gap", float), ("k_max", int),
    ("k_candidates", int), ("timeout", float), ("adjacency_tol", float),
)


def _scenario_options(f):
    """Attach --scenario/--builtin plus one override flag per parameter."""
    for name, typ in reversed(_PARAM_FLAGS):
        flag = "--" + name.replace("_", "-")
        f = click.option(flag, name, type=typ, default=None,
                         help=f"Override params.{name}.")(f)
    f = click.option("--builtin", type=click.Choice(["crossing"]),
                     default=None, help="Use a built-in scenario.")(f)
    f = click.option("--scenario", "scenario_path",
                     type=click.Path(exists=True, dir_okay=False),
                     default=None, help="Scenario JSON file.")(f)
    return f


def _load(scenario_path, builtin, overrides) -> Scenario:
    if (scenario_path is None) == (builtin is None):
        raise click.UsageError(
            "provide exactly one of --scenario and --builtin")
    try:
        scn = (load_scenario(scenario_path) if scenario_path
               else builtin_crossing_scenario())
        ov = {k: v for k, v in overrides.items() if v is not None}
        # d_sep defaults to d_min, so an explicit d_min carries it along
        # unless the caller pins d_sep separately.
        if "d_min" in ov and "d_sep" not in ov:
            ov["d_sep"] = ov["d_min"]
        if ov:
            scn = scn.with_params(**ov)
    except PlannerError as exc:
        raise click.UsageError(str(exc)) from exc
    return scn


def _pop_overrides(kwargs) -> dict:
    return {name: kwargs.pop(name) for name, _ in _PARAM_FLAGS}


def _plan_payload(scenario, trajectories, diagnostics) -> dict:
    m = metrics(list(trajectories), scenario.params.alpha)
    return {
        "agents": [{"id": tr.agent_id,
                    "states": [[float(v) for v in row] for row in tr.states]}
                   for tr in trajectories],
        "metrics": {
            "manhattan": m.manhattan,
            "max_acceleration": m.max_acceleration,
            "total_objective": m.total_objective,
            "acceleration_defined": m.acceleration_defined,
        },
        "diagnostics": diagnostics,
    }


def _write_json(payload, path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_plan(path) -> list[Trajectory]:
    try:
        with open(path) as fh:
            data = json.load(fh)
        return [Trajectory(a["id"], np.asarray(a["states"], dtype=float))
                for a in data["agents"]]
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise click.UsageError(f"cannot read plan file {path}: {exc}") from exc


def _paamp_model(scenario: Scenario):
    """Transcribe the cheapest joint sequence candidate without solving."""
    from .planner import _next_joint

    graph = build_graph(scenario)
    per_agent = [generate_sequences(graph, scenario, agent, Blacklist(),
                                    scenario.params.k_candidates)
                 for agent in scenario.agents]
    if any(not cands for cands in per_agent):
        raise click.UsageError("no admissible region sequence for some agent")
    joint = _next_joint(per_agent, set())
    pairs = relevant_pairs(list(joint), graph)
    return build_paamp_model(scenario, list(joint), pairs)


@click.group()
def cli():
    """Multi-agent trajectory planning over polytopic region sequences."""


@cli.command("plan")
@_scenario_options
@click.option("--mode", type=click.Choice(["paamp", "naive"]),
              default="paamp", show_default=True,
              help="Sequence-guided planner or the all-pairs baseline.")
@click.option("--out", type=click.Path(dir_okay=False), default="plan.json",
              show_default=True, help="Output plan file.")
@click.option("--svg", type=click.Path(dir_okay=False), default=None,
              help="Also write an SVG trajectory plot.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for randomized auxiliary checks.")
@click.pass_context
def plan_cmd(ctx, scenario_path, builtin, mode, out, svg, seed, **kwargs):
    """Solve a scenario and write trajectories, metrics, and diagnostics."""
    scn = _load(scenario_path, builtin, _pop_overrides(kwargs))
    np.random.seed(seed)
    t0 = time.perf_counter()
    if mode == "paamp":
        from .planner import plan

        result = plan(scn)
        if result.status != "success":
            click.echo(f"planning failed: {result.status} after "
                       f"{result.iterations} iteration(s)", err=True)
            ctx.exit(1)
        trajectories = result.trajectories
        diagnostics = dict(result.diagnostics,
                           status=result.status, mode=mode,
                           iterations=result.iterations)
    else:
        model, index = build_naive_model(scn)
        outcome = branch_and_bound(model, gap=scn.params.gap,
                                   time_limit=scn.params.timeout)
        if outcome.status not in (STATUS_OPTIMAL, STATUS_GAP):
            click.echo(f"planning failed: {outcome.status}", err=True)
            ctx.exit(1)
        trajectories = decode(outcome, index)
        report = validate(scn, None, list(trajectories))
        if not report.passed:
            click.echo(f"safety audit failed: {report.violations[0]}",
                       err=True)
            ctx.exit(1)
        diagnostics = {"status": outcome.status, "mode": mode,
                       "objective": outcome.objective,
                       "nodes": outcome.node_count,
                       "binaries": index.total_binaries}
    diagnostics.pop("wall_time", None)  # keep artifacts byte-deterministic
    _write_json(_plan_payload(scn, trajectories, diagnostics), out)
    if svg:
        render_svg(scn, list(trajectories), svg)
    click.echo(f"solved in {time.perf_counter() - t0:.2f}s", err=True)
    click.echo(f"wrote {out}")


@cli.command("benchmark")
@_scenario_options
@click.option("--t-values", default="12,20", show_default=True,
              help="Comma-separated horizons to benchmark.")
@click.option("--cell-limit", type=float, default=300.0, show_default=True,
              help="Wall-time cap per benchmark cell, seconds.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False),
              default=None, help="Also write the table as CSV.")
def benchmark_cmd(scenario_path, builtin, t_values, cell_limit, csv_path,
                  **kwargs):
    """Compare PAAMP against the naive baseline over several horizons."""
    scn = _load(scenario_path, builtin, _pop_overrides(kwargs))
    try:
        horizons = [int(v) for v in t_values.split(",") if v.strip()]
    except ValueError as exc:
        raise click.UsageError(f"bad --t-values: {t_values!r}") from exc
    if not horizons:
        raise click.UsageError("--t-values is empty")
    table = benchmark(scn, horizons, cell_limit=cell_limit)
    if csv_path:
        with open(csv_path, "w") as fh:
            fh.write(table.to_csv())
    click.echo(table.to_text(), nl=False)


@cli.command("validate")
@_scenario_options
@click.option("--plan", "plan_path", type=click.Path(exists=True,
                                                     dir_okay=False),
              required=True, help="Plan file produced by the plan command.")
@click.pass_context
def validate_cmd(ctx, scenario_path, builtin, plan_path, **kwargs):
    """Re-run the safety audit on a saved plan file."""
    scn = _load(scenario_path, builtin, _pop_overrides(kwargs))
    trajectories = _read_plan(plan_path)
    try:
        report = validate(scn, None, trajectories)
    except PlannerError as exc:
        raise click.UsageError(str(exc)) from exc
    if report.passed:
        click.echo("all checks passed")
        return
    for v in report.violations:
        click.echo(f"violation: {v.check} agents={v.agents} step={v.step} "
                   f"margin={v.margin:.6g}")
    ctx.exit(1)


@cli.command("export-lp")
@_scenario_options
@click.option("--mode", type=click.Choice(["paamp", "naive"]),
              default="paamp", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default="model.lp",
              show_default=True, help="Output LP file.")
def export_cmd(scenario_path, builtin, mode, out, **kwargs):
    """Write the transcribed model in CPLEX-LP format without solving."""
    scn = _load(scenario_path, builtin, _pop_overrides(kwargs))
    if mode == "paamp":
        model, _ = _paamp_model(scn)
    else:
        model, _ = build_naive_model(scn)
    export_lp(model, out)
    click.echo(f"wrote {out}")


@cli.command("render")
@_scenario_options
@click.option("--plan", "plan_path", type=click.Path(exists=True,
                                                     dir_okay=False),
              required=True, help="Plan file produced by the plan command.")
@click.option("--out", type=click.Path(dir_okay=False), default="plan.svg",
              show_default=True, help="Output SVG file.")
def render_cmd(scenario_path, builtin, plan_path, out, **kwargs):
    """Render a saved plan file as an SVG plot."""
    scn = _load(scenario_path, builtin, _pop_overrides(kwargs))
    trajectories = _read_plan(plan_path)
    try:
        render_svg(scn, trajectories, out)
    except PlannerError as exc:
        raise click.UsageError(str(exc)) from exc
    click.echo(f"wrote {out}")


def main(argv=None) -> int:
    try:
        return cli.main(args=argv, standalone_mode=False) or 0
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 2
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.Abort:
        return 2


if __name__ == "__main__":
    sys.exit(main())
