"""Branch-and-bound against independent oracles."""

import itertools

import numpy as np
import pytest

from paamp.errors import OracleScaleError
from paamp.milp import (
    MilpModel,
    STATUS_GAP,
    STATUS_INFEASIBLE,
    STATUS_NODE_LIMIT,
    STATUS_OPTIMAL,
    branch_and_bound,
    brute_force_solve,
)


def random_milp(rng, n_cont=6, n_bin=6, m=12):
    model = MilpModel()
    for j in range(n_cont):
        lb, ub = sorted(rng.uniform(-4, 4, 2))
        model.add_continuous(f"x{j}", lb, ub)
    for j in range(n_bin):
        model.add_binary(f"b{j}")
    n = model.num_vars
    for _ in range(m):
        nzc = rng.integers(1, min(4, n) + 1)
        cols = rng.choice(n, nzc, replace=False)
        coeffs = {int(j): float(rng.normal()) for j in cols}
        sense = str(rng.choice(["<=", ">=", "="], p=[0.5, 0.4, 0.1]))
        model.add_constraint(coeffs, sense, float(rng.normal() * 2))
    for j in range(n):
        if rng.random() < 0.8:
            model.set_objective_coeff(j, float(rng.normal()))
    return model


def knapsack_model(values, weights, capacity):
    model = MilpModel()
    cols = [model.add_binary(f"item{i}") for i in range(len(values))]
    model.add_constraint({c: float(w) for c, w in zip(cols, weights)},
                         "<=", float(capacity))
    for c, v in zip(cols, values):
        model.set_objective_coeff(c, -float(v))  # maximize value
    return model, cols


class TestKnapsackOracle:
    def test_eight_items_exhaustive(self):
        """Compare against direct 2^8 enumeration of the knapsack data."""
        rng = np.random.default_rng(7)
        values = rng.integers(1, 20, 8)
        weights = rng.integers(1, 10, 8)
        capacity = 18
        best = 0
        for bits in itertools.product((0, 1), repeat=8):
            w = sum(b * wt for b, wt in zip(bits, weights))
            if w <= capacity:
                best = max(best, sum(b * v for b, v in zip(bits, values)))
        model, _ = knapsack_model(values, weights, capacity)
        out = branch_and_bound(model, gap=0.0)
        assert out.status == STATUS_OPTIMAL
        assert -out.objective == pytest.approx(best, abs=1e-6)

    def test_solution_is_binary(self):
        model, cols = knapsack_model([5, 4, 3], [4, 3, 2], 5)
        out = branch_and_bound(model, gap=0.0)
        for c in cols:
            assert min(out.x[c], 1.0 - out.x[c]) <= 1e-6


class TestRandomAgainstBruteForce:
    @pytest.mark.parametrize("seed", range(30))
    def test_exact_agreement(self, seed):
        rng = np.random.default_rng(50_000 + seed)
        model = random_milp(rng, n_bin=int(rng.integers(2, 9)),
                            m=int(rng.integers(5, 20)))
        ref = brute_force_solve(model)
        got = branch_and_bound(model, gap=0.0)
        if ref.status == STATUS_INFEASIBLE:
            assert got.status == STATUS_INFEASIBLE
        else:
            assert got.status in (STATUS_OPTIMAL, STATUS_GAP)
            assert got.objective == pytest.approx(ref.objective, abs=1e-6,
                                                  rel=1e-6)
            assert model.row_violation(got.x) <= 1e-6


class TestGapAndLimits:
    def test_gap_bracket(self):
        rng = np.random.default_rng(99)
        values = rng.integers(1, 20, 14)
        weights = rng.integers(1, 10, 14)
        model, _ = knapsack_model(values, weights, 30)
        exact = branch_and_bound(model, gap=0.0)
        assert exact.status == STATUS_OPTIMAL
        loose = branch_and_bound(model, gap=2.0)
        assert loose.status in (STATUS_OPTIMAL, STATUS_GAP)
        assert exact.objective - 1e-9 <= loose.objective \
            <= exact.objective + 2.0 + 1e-6

    def test_node_limit(self):
        rng = np.random.default_rng(3)
        values = rng.integers(1, 20, 12)
        weights = rng.integers(1, 10, 12)
        model, _ = knapsack_model(values, weights, 25)
        out = branch_and_bound(model, node_limit=1)
        assert out.status in (STATUS_NODE_LIMIT, STATUS_OPTIMAL, STATUS_GAP)
        assert out.node_count >= 1

    def test_infeasible_binary_cover(self):
        # Cover forces a binary to 1 while another row forbids it.
        model = MilpModel()
        b0 = model.add_binary("b0")
        b1 = model.add_binary("b1")
        model.add_constraint({b0: 1.0, b1: 1.0}, ">=", 1.0)
        model.add_constraint({b0: 1.0}, "<=", 0.2)
        model.add_constraint({b1: 1.0}, "<=", 0.2)
        out = branch_and_bound(model, gap=0.0)
        assert out.status == STATUS_INFEASIBLE
        assert brute_force_solve(model).status == STATUS_INFEASIBLE

    def test_big_m_disjunction(self):
        # x >= 3 or x <= 1, minimize x with x in [0, 10]: optimum 0.
        model = MilpModel()
        x = model.add_continuous("x", 0.0, 10.0)
        d0 = model.add_binary("d0")
        d1 = model.add_binary("d1")
        M = 100.0
        model.add_constraint({x: 1.0, d0: -M}, ">=", 3.0 - M)
        model.add_constraint({x: -1.0, d1: -M}, ">=", -1.0 - M)
        model.add_constraint({d0: 1.0, d1: 1.0}, ">=", 1.0)
        model.set_objective_coeff(x, 1.0)
        out = branch_and_bound(model, gap=0.0)
        assert out.status == STATUS_OPTIMAL
        assert out.objective == pytest.approx(0.0, abs=1e-6)

    def test_brute_force_scale_guard(self):
        model = MilpModel()
        for i in range(21):
            model.add_binary(f"b{i}")
        with pytest.raises(OracleScaleError):
            brute_force_solve(model)

    def test_wall_time_reported(self):
        model, _ = knapsack_model([1, 2], [1, 1], 1)
        out = branch_and_bound(model, gap=0.0)
        assert out.wall_time >= 0.0
        assert out.node_count >= 1
