"""Dev fuzz harness: branch_and_bound(gap=0) vs brute-force enumeration."""
import sys

import numpy as np

from paamp.milp import MilpModel, branch_and_bound, brute_force_solve


def random_milp(rng, n_cont=6, n_bin=6, m=12):
    model = MilpModel()
    for j in range(n_cont):
        lb, ub = sorted(rng.uniform(-4, 4, 2))
        model.add_continuous(f"x{j}", lb, ub)
    for j in range(n_bin):
        model.add_binary(f"b{j}")
    n = model.num_vars
    for i in range(m):
        nzc = rng.integers(1, min(4, n) + 1)
        cols = rng.choice(n, nzc, replace=False)
        coeffs = {int(j): float(rng.normal()) for j in cols}
        sense = str(rng.choice(["<=", ">=", "="], p=[0.5, 0.4, 0.1]))
        model.add_constraint(coeffs, sense, float(rng.normal() * 2))
    for j in range(n):
        if rng.random() < 0.8:
            model.set_objective_coeff(j, float(rng.normal()))
    return model


def main(n_seeds=100):
    bad = 0
    for seed in range(n_seeds):
        rng = np.random.default_rng(10_000 + seed)
        n_bin = int(rng.integers(2, 9))
        model = random_milp(rng, n_bin=n_bin, m=int(rng.integers(5, 20)))
        ref = brute_force_solve(model)
        try:
            got = branch_and_bound(model, gap=0.0)
        except Exception as exc:
            print(f"seed {seed}: EXCEPTION {exc!r} (ref {ref.status})")
            bad += 1
            continue
        ref_feasible = ref.status == "optimal"
        got_feasible = got.status in ("optimal", "feasible-within-gap")
        if ref_feasible != got_feasible:
            print(f"seed {seed}: status {got.status} vs ref {ref.status}")
            bad += 1
        elif ref_feasible and abs(got.objective - ref.objective) > 1e-6 * max(1, abs(ref.objective)):
            print(f"seed {seed}: obj {got.objective} vs ref {ref.objective}")
            bad += 1
        elif got_feasible and model.row_violation(got.x) > 1e-6:
            print(f"seed {seed}: violation {model.row_violation(got.x)}")
            bad += 1
    print(f"{n_seeds - bad}/{n_seeds} agree")
    return bad


if __name__ == "__main__":
    sys.exit(1 if main(int(sys.argv[1]) if len(sys.argv) > 1 else 100) else 0)
