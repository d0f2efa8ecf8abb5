"""Solve the built-in four-agent crossing scenario and write artifacts.

Usage: python3 scripts/run_crossing.py [outdir]
Writes plan.json, plan.svg and prints per-agent metrics.
"""
import json
import pathlib
import sys
import time

from paamp.analysis import metrics, render_svg, validate
from paamp.planner import plan
from paamp.scenario import builtin_crossing_scenario


def main():
    outdir = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "out")
    outdir.mkdir(parents=True, exist_ok=True)

    scenario = builtin_crossing_scenario()
    t0 = time.perf_counter()
    result = plan(scenario)
    wall = time.perf_counter() - t0
    print(f"status={result.status}  wall={wall:.2f}s  "
          f"iterations={result.iterations}")
    if result.status != "success":
        return 1

    trajs = list(result.trajectories)
    report = validate(scenario, list(result.plans), trajs)
    m = metrics(trajs, scenario.params.alpha)
    print(f"audit passed={report.passed}  objective={m.total_objective:.4f}")
    for agent_id in sorted(m.manhattan):
        print(f"  {agent_id}: manhattan={m.manhattan[agent_id]:.4f}  "
              f"max_accel={m.max_acceleration[agent_id]:.4f}")
    d = dict(result.diagnostics)
    print(f"binaries={d['binaries']}  rho={d['rho']:.4f}  nodes={d['nodes']}")

    payload = {
        "agents": [{"id": t.agent_id, "states": t.states.tolist()}
                   for t in trajs],
        "diagnostics": d,
    }
    (outdir / "plan.json").write_text(json.dumps(payload, indent=2,
                                                 sort_keys=True) + "\n")
    render_svg(scenario, trajs, outdir / "plan.svg")
    print(f"wrote {outdir / 'plan.json'} and {outdir / 'plan.svg'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
