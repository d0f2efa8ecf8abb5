"""CPLEX-LP text export."""

import numpy as np
import pytest

from paamp.errors import InvalidInputError
from paamp.milp import MilpModel, export_lp


def small_model():
    model = MilpModel()
    x = model.add_continuous("x", 0.0, 4.0)
    y = model.add_continuous("y", -np.inf, np.inf)
    b = model.add_binary("flip")
    model.add_constraint({x: 1.0, y: -2.0}, "<=", 3.0, name="cap")
    model.add_constraint({y: 1.0, b: 100.0}, ">=", 1.0, name="gate")
    model.add_constraint({x: 1.0, y: 1.0, b: 1.0}, "=", 2.0)
    model.set_objective_coeff(x, 1.5)
    model.set_objective_coeff(y, -1.0)
    return model


EXPECTED = """\
Minimize
 obj: 1.5 x - y
Subject To
 cap: x - 2 y <= 3
 gate: y + 100 flip >= 1
 c2: x + y + flip = 2
Bounds
 0 <= x <= 4
 y free
Binaries
 flip
End
"""


class TestExport:
    def test_golden_text(self, tmp_path):
        path = tmp_path / "model.lp"
        export_lp(small_model(), path)
        assert path.read_text() == EXPECTED

    def test_deterministic(self, tmp_path):
        p1, p2 = tmp_path / "a.lp", tmp_path / "b.lp"
        export_lp(small_model(), p1)
        export_lp(small_model(), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_empty_objective(self, tmp_path):
        model = MilpModel()
        model.add_continuous("x", 0.0, 1.0)
        path = tmp_path / "m.lp"
        export_lp(model, path)
        text = path.read_text()
        assert " obj: 0 x" in text

    def test_unbounded_below_bound_line(self, tmp_path):
        model = MilpModel()
        model.add_continuous("x", -np.inf, 2.0)
        path = tmp_path / "m.lp"
        export_lp(model, path)
        assert " -inf <= x <= 2" in path.read_text()

    def test_duplicate_names_rejected(self, tmp_path):
        model = MilpModel()
        model.add_continuous("x", 0.0, 1.0)
        model.add_continuous("x", 0.0, 1.0)
        with pytest.raises(InvalidInputError, match="unique"):
            export_lp(model, tmp_path / "m.lp")

    def test_unsafe_name_rejected(self, tmp_path):
        model = MilpModel()
        model.add_continuous("2bad", 0.0, 1.0)
        with pytest.raises(InvalidInputError, match="LP-safe"):
            export_lp(model, tmp_path / "m.lp")
