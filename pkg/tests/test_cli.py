"""CLI surface: exit codes, artifacts, flag coverage."""

import json
import re

import pytest
from click.testing import CliRunner

from paamp.cli import _PARAM_FLAGS, cli, main
from paamp.scenario import builtin_crossing_scenario, save_scenario


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def plan_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("plan") / "plan.json"
    code = main(["plan", "--builtin", "crossing", "--out", str(out)])
    assert code == 0
    return out


class TestUsageErrors:
    def test_no_scenario(self):
        assert main(["plan"]) == 2

    def test_both_scenario_sources(self, tmp_path, crossing):
        path = tmp_path / "scn.json"
        save_scenario(crossing, path)
        assert main(["plan", "--scenario", str(path),
                     "--builtin", "crossing"]) == 2

    def test_unknown_flag(self):
        assert main(["plan", "--builtin", "crossing", "--warp", "9"]) == 2

    def test_unknown_subcommand(self):
        assert main(["fly"]) == 2

    def test_invalid_override(self):
        # t_steps = 1 violates a params invariant.
        assert main(["export-lp", "--builtin", "crossing",
                     "--t-steps", "1"]) == 2

    def test_bad_t_values(self):
        assert main(["benchmark", "--builtin", "crossing",
                     "--t-values", "abc"]) == 2

    def test_help_exits_zero(self):
        assert main(["--help"]) == 0


class TestHelpCoversFlags:
    @pytest.mark.parametrize("command", ["plan", "benchmark", "validate",
                                         "export-lp", "render"])
    def test_every_param_flag_documented(self, runner, command):
        res = runner.invoke(cli, [command, "--help"])
        assert res.exit_code == 0
        for name, _ in _PARAM_FLAGS:
            assert "--" + name.replace("_", "-") in res.output

    def test_documented_flags_are_parsed(self, runner):
        """Round trip: every --flag shown in help must be accepted."""
        res = runner.invoke(cli, ["plan", "--help"])
        flags = set(re.findall(r"--[a-z][a-z0-9-]*", res.output))
        flags.discard("--help")
        known = {"--" + n.replace("_", "-") for n, _ in _PARAM_FLAGS}
        known |= {"--scenario", "--builtin", "--mode", "--out", "--svg",
                  "--seed"}
        assert flags <= known


class TestPlanArtifacts:
    def test_plan_file_shape(self, plan_file, crossing):
        data = json.loads(plan_file.read_text())
        assert set(data) == {"agents", "metrics", "diagnostics"}
        assert len(data["agents"]) == crossing.n_agents
        for entry in data["agents"]:
            assert len(entry["states"]) == crossing.params.t_steps + 1
        assert data["metrics"]["total_objective"] <= 70.0
        assert data["diagnostics"]["mode"] == "paamp"

    def test_infeasible_exit_code(self, tmp_path):
        out = tmp_path / "plan.json"
        code = main(["plan", "--builtin", "crossing", "--d-min", "6",
                     "--out", str(out)])
        assert code == 1
        assert not out.exists()

    def test_validate_accepts_own_plan(self, plan_file):
        assert main(["validate", "--builtin", "crossing",
                     "--plan", str(plan_file)]) == 0

    def test_validate_rejects_tampered_plan(self, plan_file, tmp_path):
        data = json.loads(plan_file.read_text())
        data["agents"][0]["states"][3][0] += 3.0
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(data))
        assert main(["validate", "--builtin", "crossing",
                     "--plan", str(bad)]) == 1

    def test_validate_garbage_plan(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("[1, 2, 3]")
        assert main(["validate", "--builtin", "crossing",
                     "--plan", str(bad)]) == 2

    def test_render_from_plan(self, plan_file, tmp_path):
        svg = tmp_path / "out.svg"
        assert main(["render", "--builtin", "crossing",
                     "--plan", str(plan_file), "--out", str(svg)]) == 0
        assert svg.read_text().startswith('<?xml')


class TestExportLp:
    @staticmethod
    def _binaries(path):
        text = path.read_text()
        section = text.split("Binaries\n", 1)[1].split("End", 1)[0]
        return [ln.strip() for ln in section.strip().splitlines()]

    def test_naive_larger_than_paamp(self, tmp_path):
        pa, na = tmp_path / "p.lp", tmp_path / "n.lp"
        assert main(["export-lp", "--builtin", "crossing",
                     "--out", str(pa)]) == 0
        assert main(["export-lp", "--builtin", "crossing", "--mode", "naive",
                     "--out", str(na)]) == 0
        assert len(self._binaries(pa)) < len(self._binaries(na))

    def test_deterministic(self, tmp_path):
        p1, p2 = tmp_path / "1.lp", tmp_path / "2.lp"
        main(["export-lp", "--builtin", "crossing", "--out", str(p1)])
        main(["export-lp", "--builtin", "crossing", "--out", str(p2)])
        assert p1.read_bytes() == p2.read_bytes()


class TestScenarioFile:
    def test_plan_from_file_with_overrides(self, tmp_path, crossing):
        path = tmp_path / "scn.json"
        save_scenario(crossing, path)
        out = tmp_path / "plan.json"
        code = main(["plan", "--scenario", str(path), "--gap", "10",
                     "--out", str(out)])
        assert code == 0
        assert json.loads(out.read_text())["metrics"]["total_objective"] > 0
