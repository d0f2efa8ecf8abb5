"""Safety audit, metrics, rendering, benchmark table formatting."""

import numpy as np
import pytest

from paamp.analysis import (
    BenchmarkRow,
    BenchmarkTable,
    TrajectoryMetrics,
    metrics,
    render_svg,
    validate,
)
from paamp.errors import InvalidInputError
from paamp.scenario import AgentSpec, PlanningParams, Scenario
from paamp.geometry import box
from paamp.transcription import Trajectory


@pytest.fixture
def tiny():
    """One region, one obstacle in a corner, two agents far apart."""
    workspace = box(0.0, 10.0, 0.0, 10.0)
    regions = (box(0.0, 10.0, 0.0, 6.0, name="r"),)
    obstacles = (box(0.0, 10.0, 8.0, 10.0, name="wall"),)
    agents = (AgentSpec("a", [1.0, 1.0], [5.0, 1.0]),
              AgentSpec("b", [1.0, 5.0], [5.0, 5.0]))
    params = PlanningParams(t_steps=4)
    return Scenario(workspace, regions, obstacles, agents, params)


def straight(start, goal, T):
    return np.linspace(np.asarray(start, float), np.asarray(goal, float),
                       T + 1)


@pytest.fixture
def good_trajectories(tiny):
    T = tiny.params.t_steps
    return [Trajectory(a.agent_id, straight(a.start, a.goal, T))
            for a in tiny.agents]


class TestValidate:
    def test_clean_pass(self, tiny, good_trajectories):
        report = validate(tiny, None, good_trajectories)
        assert report.passed and report.violations == ()

    def test_boundary_violation(self, tiny, good_trajectories):
        bad = good_trajectories[0].states.copy()
        bad[0] += 0.5
        trajs = [Trajectory("a", bad), good_trajectories[1]]
        report = validate(tiny, None, trajs)
        assert any(v.check == "boundary-start" for v in report.violations)

    def test_velocity_violation(self, tiny, good_trajectories):
        bad = good_trajectories[0].states.copy()
        bad[2, 0] += 2.0  # a 2-unit jump between consecutive states
        trajs = [Trajectory("a", bad), good_trajectories[1]]
        report = validate(tiny, None, trajs)
        assert any(v.check == "velocity" for v in report.violations)

    def test_separation_violation(self, tiny):
        T = tiny.params.t_steps
        trajs = [Trajectory("a", straight([1, 1], [5, 1], T)),
                 Trajectory("b", straight([1, 1.5], [5, 1.5], T))]
        report = validate(tiny, None, trajs)
        sep = [v for v in report.violations if v.check == "separation"]
        assert len(sep) == T + 1
        assert sep[0].margin == pytest.approx(0.5)

    def test_obstacle_violation(self, tiny):
        T = tiny.params.t_steps
        trajs = [Trajectory("a", straight([1, 1], [5, 1], T)),
                 Trajectory("b", straight([1, 5], [5, 5], T))]
        grazing = trajs[1].states.copy()
        grazing[2, 1] = 8.01  # inside the wall
        report = validate(tiny, None,
                          [trajs[0], Trajectory("b", grazing)])
        assert any(v.check == "obstacle-clearance" and v.step == 2
                   for v in report.violations)

    def test_unknown_agent_rejected(self, tiny, good_trajectories):
        trajs = [Trajectory("ghost", good_trajectories[0].states)]
        with pytest.raises(InvalidInputError):
            validate(tiny, None, trajs)

    def test_wrong_horizon_rejected(self, tiny):
        with pytest.raises(InvalidInputError):
            validate(tiny, None, [Trajectory("a", np.zeros((3, 2)))])


class TestMetrics:
    def test_manhattan_and_accel(self):
        states = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
        m = metrics([Trajectory("a", states)], alpha=0.5)
        assert m.manhattan["a"] == pytest.approx(3.0)
        assert m.max_acceleration["a"] == pytest.approx(0.0)
        assert m.acceleration_defined
        assert m.total_objective == pytest.approx(3.0)

    def test_accel_peak(self):
        states = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [1.0, 2.0]])
        m = metrics([Trajectory("a", states)], alpha=0.0)
        # Second difference at the corner is (-1, 1).
        assert m.max_acceleration["a"] == pytest.approx(np.sqrt(2.0))

    def test_short_horizon_flag(self):
        m = metrics([Trajectory("a", np.array([[0.0, 0.0], [1.0, 0.0]]))],
                    alpha=0.5)
        assert not m.acceleration_defined
        assert m.max_acceleration["a"] == 0.0
        assert isinstance(m, TrajectoryMetrics)


class TestRenderSvg:
    def test_structure_and_determinism(self, tiny, good_trajectories,
                                       tmp_path):
        p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
        render_svg(tiny, good_trajectories, p1)
        render_svg(tiny, good_trajectories, p2)
        text = p1.read_text()
        assert p1.read_bytes() == p2.read_bytes()
        assert text.count("<polyline") == len(good_trajectories)
        assert text.count("<polygon") >= len(tiny.regions) + \
            len(tiny.obstacles) + len(good_trajectories)  # goals are stars
        assert text.startswith('<?xml version="1.0"')
        assert text.rstrip().endswith("</svg>")

    def test_requires_2d(self, tmp_path):
        from paamp.geometry import Polytope
        line = Polytope([[1.0], [-1.0]], [1.0, 0.0])
        with pytest.raises(InvalidInputError):
            render_svg(
                Scenario(line, (line,), (),
                         (AgentSpec("a", [0.2], [0.8]),),
                         PlanningParams(t_steps=2)),
                [], tmp_path / "x.svg")


class TestBenchmarkTable:
    def _table(self):
        table = BenchmarkTable()
        table.rows.append(BenchmarkRow(12, "paamp", "success", 68.5,
                                       432, 29, "650.1", 0.6923))
        table.rows.append(BenchmarkRow(12, "naive", "feasible-within-gap",
                                       None, 1456, 20, ">300000", None))
        return table

    def test_csv_schema(self):
        csv = self._table().to_csv()
        lines = csv.strip().split("\n")
        assert lines[0] == "T,method,status,objective,binaries,nodes,wall_ms,rho"
        assert lines[1] == "12,paamp,success,68.500000,432,29,650.1,0.692300"
        assert lines[2] == "12,naive,feasible-within-gap,,1456,20,>300000,"

    def test_text_render(self):
        text = self._table().to_text()
        assert "paamp" in text and ">300000" in text
        assert text.count("\n") == 4  # header, rule, two rows
