"""LP engine against scipy's HiGHS and hand-checked instances."""

import numpy as np
import pytest
from scipy.optimize import linprog

from paamp.errors import InvalidInputError
from paamp.milp import (
    MilpModel,
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    _Simplex,
    _standardize,
    solve_lp,
)


def random_model(rng, n=10, m=15):
    model = MilpModel()
    for j in range(n):
        kind = rng.integers(0, 4)
        if kind == 0:
            lb, ub = sorted(rng.uniform(-5, 5, 2))
        elif kind == 1:
            lb, ub = rng.uniform(-5, 0), np.inf
        elif kind == 2:
            lb, ub = -np.inf, rng.uniform(0, 5)
        else:
            lb, ub = -np.inf, np.inf
        model.add_continuous(f"x{j}", lb, ub)
    for _ in range(m):
        nzc = rng.integers(1, min(5, n) + 1)
        cols = rng.choice(n, nzc, replace=False)
        coeffs = {int(j): float(rng.normal()) for j in cols}
        sense = str(rng.choice(["<=", ">=", "="], p=[0.45, 0.45, 0.1]))
        model.add_constraint(coeffs, sense, float(rng.normal() * 3))
    for j in range(n):
        if rng.random() < 0.7:
            model.set_objective_coeff(j, float(rng.normal()))
    return model


def scipy_solve(model):
    n = model.num_vars
    c = np.zeros(n)
    for j, v in model.objective.items():
        c[j] = v
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for con in model.constraints:
        row = np.zeros(n)
        for j, coef in con.coeffs:
            row[j] = coef
        if con.sense == "<=":
            A_ub.append(row)
            b_ub.append(con.rhs)
        elif con.sense == ">=":
            A_ub.append(-row)
            b_ub.append(-con.rhs)
        else:
            A_eq.append(row)
            b_eq.append(con.rhs)
    bounds = [(v.lb if np.isfinite(v.lb) else None,
               v.ub if np.isfinite(v.ub) else None) for v in model.variables]
    res = linprog(c, A_ub=np.array(A_ub) if A_ub else None,
                  b_ub=np.array(b_ub) if b_ub else None,
                  A_eq=np.array(A_eq) if A_eq else None,
                  b_eq=np.array(b_eq) if b_eq else None,
                  bounds=bounds, method="highs")
    status = {0: "optimal", 2: "infeasible", 3: "unbounded"}.get(
        res.status, "other")
    return status, res.fun if res.status == 0 else None


@pytest.mark.parametrize("seed", range(200))
def test_against_scipy(seed):
    rng = np.random.default_rng(seed)
    model = random_model(rng)
    ref_status, ref_obj = scipy_solve(model)
    mine = solve_lp(model)
    assert mine.status == ref_status
    if ref_status == STATUS_OPTIMAL:
        assert mine.objective == pytest.approx(ref_obj, abs=1e-6, rel=1e-6)
        assert model.row_violation(mine.x) <= 1e-6


class TestHandInstances:
    def test_trivial_box(self):
        model = MilpModel()
        x = model.add_continuous("x", 1.0, 3.0)
        model.set_objective_coeff(x, 2.0)
        res = solve_lp(model)
        assert res.status == STATUS_OPTIMAL
        assert res.objective == pytest.approx(2.0)
        assert res.x[x] == pytest.approx(1.0)

    def test_infeasible_rows(self):
        model = MilpModel()
        x = model.add_continuous("x", 0.0, 10.0)
        model.add_constraint({x: 1.0}, ">=", 5.0)
        model.add_constraint({x: 1.0}, "<=", 4.0)
        assert solve_lp(model).status == STATUS_INFEASIBLE

    def test_unbounded(self):
        model = MilpModel()
        x = model.add_continuous("x", 0.0, np.inf)
        model.set_objective_coeff(x, -1.0)
        assert solve_lp(model).status == STATUS_UNBOUNDED

    def test_degenerate_vertex(self):
        # Three constraints meet at the optimum; cycling guard must cope.
        model = MilpModel()
        x = model.add_continuous("x", 0.0, np.inf)
        y = model.add_continuous("y", 0.0, np.inf)
        model.add_constraint({x: 1.0, y: 1.0}, "<=", 1.0)
        model.add_constraint({x: 1.0}, "<=", 1.0)
        model.add_constraint({y: 1.0}, "<=", 1.0)
        model.set_objective_coeff(x, -1.0)
        model.set_objective_coeff(y, -1.0)
        res = solve_lp(model)
        assert res.status == STATUS_OPTIMAL
        assert res.objective == pytest.approx(-1.0)

    def test_equality_chain(self):
        model = MilpModel()
        x = model.add_continuous("x", -np.inf, np.inf)
        y = model.add_continuous("y", -np.inf, np.inf)
        model.add_constraint({x: 1.0, y: 1.0}, "=", 4.0)
        model.add_constraint({x: 1.0, y: -1.0}, "=", 2.0)
        model.set_objective_coeff(x, 1.0)
        res = solve_lp(model)
        assert res.status == STATUS_OPTIMAL
        assert res.x[x] == pytest.approx(3.0)
        assert res.x[y] == pytest.approx(1.0)

    def test_bad_sense_rejected(self):
        model = MilpModel()
        x = model.add_continuous("x", 0.0, 1.0)
        with pytest.raises(InvalidInputError):
            model.add_constraint({x: 1.0}, "<", 1.0)


class TestDualResolve:
    @pytest.mark.parametrize("seed", range(40))
    def test_matches_scratch_after_bound_change(self, seed):
        """Warm dual restart must agree with a cold solve on the new bounds."""
        rng = np.random.default_rng(7_000 + seed)
        model = random_model(rng, n=8, m=10)
        std = _standardize(model)
        if not std.feasible:
            return
        sx = _Simplex(std)
        if sx.solve_from_scratch() != STATUS_OPTIMAL:
            return
        j = int(rng.integers(0, model.num_vars))
        v = model.variables[j]
        lo = v.lb if np.isfinite(v.lb) else -5.0
        hi = v.ub if np.isfinite(v.ub) else 5.0
        pin = float(rng.uniform(lo, hi))
        sx.set_var_bounds(j, pin, pin)
        warm_status = sx.dual_resolve()

        pinned = MilpModel()
        pinned.variables = list(model.variables)
        from paamp.milp import Variable
        pinned.variables[j] = Variable(v.name, pin, pin, False)
        pinned.constraints = list(model.constraints)
        pinned.objective = dict(model.objective)
        ref = solve_lp(pinned)
        assert warm_status == ref.status
        if ref.status == STATUS_OPTIMAL:
            assert sx.objective() == pytest.approx(ref.objective,
                                                   abs=1e-6, rel=1e-6)

    def test_residual_stays_small(self):
        rng = np.random.default_rng(142)  # known-feasible instance
        model = random_model(rng, n=12, m=18)
        std = _standardize(model)
        assert std.feasible
        sx = _Simplex(std)
        sx.solve_from_scratch()
        for j in range(0, model.num_vars, 3):
            v = model.variables[j]
            if np.isfinite(v.lb) and np.isfinite(v.ub):
                sx.set_var_bounds(j, v.lb, v.lb)
                sx.dual_resolve()
        assert sx._residual_norm() <= 1e-6
