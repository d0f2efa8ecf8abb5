"""Dev fuzz harness: compare the in-house simplex against scipy on random LPs."""
import sys

import numpy as np
from scipy.optimize import linprog

from paamp.milp import MilpModel, solve_lp


def random_model(rng, n=10, m=15, frac_eq=0.1, allow_free=True):
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
            lb, ub = (-np.inf, np.inf) if allow_free else sorted(rng.uniform(-5, 5, 2))
        model.add_continuous(f"x{j}", lb, ub)
    for i in range(m):
        nzc = rng.integers(1, min(5, n) + 1)
        cols = rng.choice(n, nzc, replace=False)
        coeffs = {int(j): float(rng.normal()) for j in cols}
        sense = rng.choice(["<=", ">=", "="], p=[0.45, 0.45, frac_eq and 0.1])
        model.add_constraint(coeffs, str(sense), float(rng.normal() * 3))
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
            A_ub.append(row); b_ub.append(con.rhs)
        elif con.sense == ">=":
            A_ub.append(-row); b_ub.append(-con.rhs)
        else:
            A_eq.append(row); b_eq.append(con.rhs)
    bounds = [(v.lb if np.isfinite(v.lb) else None,
               v.ub if np.isfinite(v.ub) else None) for v in model.variables]
    res = linprog(c, A_ub=np.array(A_ub) if A_ub else None,
                  b_ub=np.array(b_ub) if b_ub else None,
                  A_eq=np.array(A_eq) if A_eq else None,
                  b_eq=np.array(b_eq) if b_eq else None,
                  bounds=bounds, method="highs")
    status = {0: "optimal", 2: "infeasible", 3: "unbounded"}.get(res.status, "other")
    return status, res.fun if res.status == 0 else None


def main(n_seeds=300):
    bad = 0
    for seed in range(n_seeds):
        rng = np.random.default_rng(seed)
        model = random_model(rng)
        ref_status, ref_obj = scipy_solve(model)
        try:
            mine = solve_lp(model)
        except Exception as exc:
            print(f"seed {seed}: EXCEPTION {exc!r} (ref {ref_status})")
            bad += 1
            continue
        if mine.status != ref_status:
            print(f"seed {seed}: status {mine.status} vs ref {ref_status} obj {ref_obj}")
            bad += 1
        elif ref_status == "optimal" and abs(mine.objective - ref_obj) > 1e-6 * max(1, abs(ref_obj)):
            print(f"seed {seed}: obj {mine.objective} vs ref {ref_obj}")
            bad += 1
        if mine.status == "optimal":
            viol = model.row_violation(mine.x)
            if viol > 1e-6:
                print(f"seed {seed}: violation {viol}")
                bad += 1
    print(f"{n_seeds - bad}/{n_seeds} agree")
    return bad


if __name__ == "__main__":
    sys.exit(1 if main(int(sys.argv[1]) if len(sys.argv) > 1 else 300) else 0)
