"""Generic MILP model, bounded-variable simplex, and branch-and-bound.

The LP engine is a dense-tableau primal simplex in bounded-variable form
(phase 1 via artificials, Dantzig pricing with a Bland fallback when
degenerate pivots stall) plus a dual simplex used to warm-start child
nodes after bound changes during branch-and-bound.
"""

from __future__ import annotations

import itertools
import re
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    InternalConsistencyError,
    InvalidInputError,
    NumericFailureError,
    OracleScaleError,
)

FEAS_TOL = 1e-7
OPT_TOL = 1e-9
INT_TOL = 1e-6
# Ratio-test entries below this are treated as zero; pivoting on noise-scale
# elements amplifies accumulated tableau drift into outright wrong bases.
PIVOT_TOL = 1e-7

LESS, GREATER, EQUAL = "<=", ">=", "="

STATUS_OPTIMAL = "optimal"
STATUS_GAP = "feasible-within-gap"
STATUS_INFEASIBLE = "infeasible"
STATUS_NODE_LIMIT = "node-limit"
STATUS_UNBOUNDED = "unbounded"

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class Variable:
    name: str
    lb: float
    ub: float
    is_binary: bool = False


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple  # ((var_index, coefficient), ...)
    sense: str
    rhs: float
    name: str | None = None


class MilpModel:
    """Sparse-row MILP in minimize form. Treat as immutable once built."""

    def __init__(self):
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[int, float] = {}

    def add_continuous(self, name: str, lb: float = 0.0, ub: float = np.inf) -> int:
        self.variables.append(Variable(name, float(lb), float(ub)))
        return len(self.variables) - 1

    def add_binary(self, name: str) -> int:
        self.variables.append(Variable(name, 0.0, 1.0, is_binary=True))
        return len(self.variables) - 1

    def add_constraint(self, coeffs: dict[int, float], sense: str, rhs: float,
                       name: str | None = None) -> int:
        if sense not in (LESS, GREATER, EQUAL):
            raise InvalidInputError(f"unknown constraint sense {sense!r}")
        items = tuple(sorted((int(j), float(v)) for j, v in coeffs.items() if v != 0.0))
        self.constraints.append(Constraint(items, sense, float(rhs), name))
        return len(self.constraints) - 1

    def set_objective_coeff(self, var: int, coeff: float):
        if coeff == 0.0:
            self.objective.pop(var, None)
        else:
            self.objective[var] = self.objective.get(var, 0.0) + 0.0
            self.objective[var] = float(coeff)

    def add_objective_coeff(self, var: int, coeff: float):
        self.objective[var] = self.objective.get(var, 0.0) + float(coeff)

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def binary_indices(self) -> list[int]:
        return [j for j, v in enumerate(self.variables) if v.is_binary]

    def validate(self):
        n = self.num_vars
        for j, v in enumerate(self.variables):
            if v.is_binary and (v.lb, v.ub) != (0.0, 1.0):
                raise InvalidInputError(f"binary {v.name} must have bounds [0, 1]")
            if v.lb > v.ub:
                raise InvalidInputError(f"variable {v.name} has lb > ub")
        for i, con in enumerate(self.constraints):
            for j, coef in con.coeffs:
                if not 0 <= j < n:
                    raise InvalidInputError(f"constraint {i} references variable {j}")
                if not np.isfinite(coef):
                    raise InvalidInputError(f"constraint {i} has non-finite coefficient")
            if not np.isfinite(con.rhs):
                raise InvalidInputError(f"constraint {i} has non-finite rhs")
        for j, coef in self.objective.items():
            if not 0 <= j < n or not np.isfinite(coef):
                raise InvalidInputError("objective references invalid variable or value")

    def objective_value(self, x: np.ndarray) -> float:
        return float(sum(coef * x[j] for j, coef in self.objective.items()))

    def row_violation(self, x: np.ndarray) -> float:
        """Largest constraint violation of x, for independent re-checks."""
        worst = 0.0
        for con in self.constraints:
            lhs = sum(coef * x[j] for j, coef in con.coeffs)
            if con.sense == LESS:
                worst = max(worst, lhs - con.rhs)
            elif con.sense == GREATER:
                worst = max(worst, con.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - con.rhs))
        return worst


@dataclass
class LpResult:
    status: str  # optimal | infeasible | unbounded
    objective: float | None
    x: np.ndarray | None


@dataclass
class SolveOutcome:
    status: str
    objective: float | None
    x: np.ndarray | None
    node_count: int = 0
    wall_time: float = 0.0


# ---------------------------------------------------------------------------
# Standardization / presolve
# ---------------------------------------------------------------------------

@dataclass
class _Std:
    A: np.ndarray
    sense: list[str]
    rhs: np.ndarray
    c: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    feasible: bool = True


def _standardize(model: MilpModel, relax_binaries: bool = True,
                 presolve: bool = True) -> _Std:
    """Dense rows plus variable bounds; singleton rows become bounds."""
    n = model.num_vars
    lo = np.array([v.lb for v in model.variables], dtype=float)
    hi = np.array([v.ub for v in model.variables], dtype=float)
    c = np.zeros(n)
    for j, coef in model.objective.items():
        c[j] = coef

    rows, senses, rhs = [], [], []
    feasible = True
    for con in model.constraints:
        if presolve and len(con.coeffs) == 1:
            j, a = con.coeffs[0]
            val = con.rhs / a
            if con.sense == EQUAL:
                new_lo, new_hi = val, val
            elif (con.sense == LESS) == (a > 0):
                new_lo, new_hi = -np.inf, val
            else:
                new_lo, new_hi = val, np.inf
            lo[j] = max(lo[j], new_lo)
            hi[j] = min(hi[j], new_hi)
            continue
        if not con.coeffs:
            lhs = 0.0
            ok = (lhs <= con.rhs + FEAS_TOL if con.sense == LESS
                  else lhs >= con.rhs - FEAS_TOL if con.sense == GREATER
                  else abs(lhs - con.rhs) <= FEAS_TOL)
            if not ok:
                feasible = False
            continue
        row = np.zeros(n)
        for j, coef in con.coeffs:
            row[j] = coef
        rows.append(row)
        senses.append(con.sense)
        rhs.append(con.rhs)

    if np.any(lo > hi + FEAS_TOL):
        feasible = False
    A = np.array(rows) if rows else np.zeros((0, n))
    return _Std(A, senses, np.array(rhs), c, lo, hi, feasible)


# ---------------------------------------------------------------------------
# Bounded-variable simplex
# ---------------------------------------------------------------------------

_LOWER, _UPPER, _BASIC, _FREE = 0, 1, 2, 3


class _Simplex:
    """Dense tableau simplex over variables with general bounds.

    Columns are [structural | slack | artificial]; rows satisfy
    A x + s = rhs with slack bounds encoding the row sense.
    """

    def __init__(self, std: _Std):
        m, n = std.A.shape
        self.m, self.n = m, n
        self.ncol = n + 2 * m
        self.lo = np.full(self.ncol, -np.inf)
        self.hi = np.full(self.ncol, np.inf)
        self.lo[:n] = std.lo
        self.hi[:n] = std.hi
        for i, sense in enumerate(std.sense):
            if sense == LESS:
                self.lo[n + i], self.hi[n + i] = 0.0, np.inf
            elif sense == GREATER:
                self.lo[n + i], self.hi[n + i] = -np.inf, 0.0
            else:
                self.lo[n + i], self.hi[n + i] = 0.0, 0.0
        # Artificial columns start pinned; phase 1 activates the ones it needs.
        self.lo[n + m:] = 0.0
        self.hi[n + m:] = 0.0

        self.A_full = np.zeros((m, self.ncol))
        self.A_full[:, :n] = std.A
        self.A_full[:, n:n + m] = np.eye(m)
        self.rhs = std.rhs.copy()
        self.c = np.zeros(self.ncol)
        self.c[:n] = std.c

        self.Tab = self.A_full.copy()
        self.basis = np.arange(n, n + m)
        self.stat = np.empty(self.ncol, dtype=np.int8)
        self.xB = np.zeros(m)
        self.z = np.zeros(self.ncol)
        self.pivot_count = 0
        self._pivots_at_refactor = 0
        self._art_used = np.zeros(m, dtype=bool)

    # -- helpers ----------------------------------------------------------

    def _nb_value(self, j: int) -> float:
        s = self.stat[j]
        if s == _LOWER:
            return self.lo[j]
        if s == _UPPER:
            return self.hi[j]
        return 0.0

    def _nb_values(self) -> np.ndarray:
        vals = np.zeros(self.ncol)
        at_lo = self.stat == _LOWER
        at_hi = self.stat == _UPPER
        vals[at_lo] = self.lo[at_lo]
        vals[at_hi] = self.hi[at_hi]
        return vals

    def extract_x(self) -> np.ndarray:
        x = self._nb_values()[:self.n]
        for i, j in enumerate(self.basis):
            if j < self.n:
                x[j] = self.xB[i]
        return x

    def _recompute_xB(self):
        vals = self._nb_values()
        vals[self.basis] = 0.0
        nz = np.flatnonzero(vals)
        self.xB = self.rhs - self.Tab[:, nz] @ vals[nz] if nz.size else self.rhs.copy()

    def _recompute_z(self):
        cb = self.c[self.basis]
        if np.any(cb):
            self.z = self.c - cb @ self.Tab
        else:
            self.z = self.c.copy()
        self.z[self.basis] = 0.0

    def _pivot(self, r: int, q: int, enter_val: float, leave_stat: int,
               phase1_cost: np.ndarray | None = None):
        Tab = self.Tab
        piv = Tab[r, q]
        Tab[r] /= piv
        self.rhs[r] /= piv
        col = Tab[:, q].copy()
        col[r] = 0.0
        nz = np.flatnonzero(np.abs(col) > 1e-13)
        if nz.size:
            Tab[nz] -= np.outer(col[nz], Tab[r])
            self.rhs[nz] -= col[nz] * self.rhs[r]
        zq = self.z[q]
        if zq != 0.0:
            self.z -= zq * Tab[r]
        Tab[:, q] = 0.0
        Tab[r, q] = 1.0
        self.z[q] = 0.0
        leaving = self.basis[r]
        self.stat[leaving] = leave_stat
        self.stat[q] = _BASIC
        self.basis[r] = q
        self.xB[r] = enter_val
        self.pivot_count += 1

    def refactorize(self):
        """Rebuild the tableau from the recorded basis (drift control)."""
        B = self.A_full[:, self.basis]
        try:
            lu, piv = scipy.linalg.lu_factor(B)
        except (ValueError, scipy.linalg.LinAlgError) as exc:
            raise NumericFailureError("singular basis during refactorization") from exc
        self.Tab = scipy.linalg.lu_solve((lu, piv), self.A_full)
        orig_rhs = np.zeros(self.m)
        # rhs column tracks B^-1 b of the original rows.
        orig_rhs[:] = self._orig_rhs
        self.rhs = scipy.linalg.lu_solve((lu, piv), orig_rhs)
        self._recompute_xB()
        self._recompute_z()

    # -- primal -----------------------------------------------------------

    def _init_slack_basis(self):
        n, m = self.n, self.m
        if not hasattr(self, "_orig_rhs"):
            self._orig_rhs = self.rhs.copy()
        # Clear any artificials left over from a previous solve.
        self.A_full[:, n + m:] = 0.0
        self.lo[n + m:] = 0.0
        self.hi[n + m:] = 0.0
        self.stat[:] = _LOWER
        for j in range(self.ncol):
            if np.isfinite(self.lo[j]):
                self.stat[j] = _LOWER
            elif np.isfinite(self.hi[j]):
                self.stat[j] = _UPPER
            else:
                self.stat[j] = _FREE
        self.basis = np.arange(n, n + m)
        self.stat[self.basis] = _BASIC
        self._art_used[:] = False
        self._pivots_at_refactor = self.pivot_count
        self.Tab = self.A_full.copy()
        self.rhs = self._orig_rhs.copy()
        self._recompute_xB()
        # Rows whose slack cannot absorb the residual get an artificial.
        for i in range(m):
            sl = n + i
            val = self.xB[i]
            if self.lo[sl] - FEAS_TOL <= val <= self.hi[sl] + FEAS_TOL:
                continue
            pinned = np.clip(val, self.lo[sl], self.hi[sl])
            art = n + m + i
            resid = val - pinned
            sign = 1.0 if resid > 0 else -1.0
            self.A_full[i, art] = sign
            self.Tab[i, art] = sign
            if sign < 0:
                # Basis column is -e_i, so this tableau row flips sign.
                self.Tab[i] *= -1.0
                self.rhs[i] *= -1.0
            self.hi[art] = np.inf
            self._art_used[i] = True
            self.stat[sl] = _LOWER if pinned == self.lo[sl] else _UPPER
            self.stat[art] = _BASIC
            self.basis[i] = art
            self.xB[i] = abs(resid)

    def _movable(self) -> np.ndarray:
        return self.hi - self.lo > 1e-12

    def _primal(self, max_iter: int) -> str:
        """Run primal simplex to optimality with the current cost in self.z."""
        movable = self._movable()
        stall = 0
        bland = False
        for _ in range(max_iter):
            stat, z = self.stat, self.z
            cand = np.zeros(self.ncol)
            sel = (stat == _LOWER) & movable & (z < -OPT_TOL)
            cand[sel] = -z[sel]
            sel = (stat == _UPPER) & movable & (z > OPT_TOL)
            cand[sel] = z[sel]
            sel = (stat == _FREE) & (np.abs(z) > OPT_TOL)
            cand[sel] = np.abs(z[sel])
            nz = np.flatnonzero(cand)
            if nz.size == 0:
                return "optimal"
            q = int(nz[0]) if bland else int(nz[np.argmax(cand[nz])])
            if stat[q] == _LOWER:
                sigma = 1.0
            elif stat[q] == _UPPER:
                sigma = -1.0
            else:
                sigma = -1.0 if z[q] > 0 else 1.0
            col = self.Tab[:, q]
            d = -sigma * col
            with np.errstate(divide="ignore", invalid="ignore"):
                up = np.where(d > PIVOT_TOL, (self.hi[self.basis] - self.xB) / d, np.inf)
                dn = np.where(d < -PIVOT_TOL, (self.xB - self.lo[self.basis]) / (-d), np.inf)
            ratios = np.minimum(up, dn)
            ratios = np.maximum(ratios, 0.0)
            t_row = ratios.min() if ratios.size else np.inf
            t_flip = self.hi[q] - self.lo[q] if stat[q] != _FREE else np.inf
            if not np.isfinite(min(t_row, t_flip)):
                return "unbounded"
            if t_flip <= t_row + 1e-12 and np.isfinite(t_flip):
                self.xB += d * t_flip
                self.stat[q] = _UPPER if stat[q] == _LOWER else _LOWER
                continue
            tie = np.flatnonzero(ratios <= t_row + 1e-7 * max(1.0, t_row))
            if bland:
                r = int(tie[np.argmin(self.basis[tie])])
            else:
                r = int(tie[np.argmax(np.abs(col[tie]))])
            t = ratios[r]
            enter_val = self._nb_value(q) + sigma * t
            self.xB += d * t
            leave_stat = _UPPER if d[r] > 0 else _LOWER
            if not np.isfinite(self.lo[self.basis[r]]) and leave_stat == _LOWER:
                leave_stat = _FREE
            if not np.isfinite(self.hi[self.basis[r]]) and leave_stat == _UPPER:
                leave_stat = _FREE
            self._pivot(r, q, enter_val, leave_stat)
            if t < 1e-12:
                stall += 1
                if stall > 2 * (self.m + 10):
                    bland = True
            else:
                stall = 0
                bland = False
        raise NumericFailureError("primal simplex exceeded its pivot budget")

    def _phase1(self, max_iter: int) -> bool:
        """Drive artificials to zero; False means the LP is infeasible."""
        if not np.any(self._art_used):
            return True
        save_c = self.c.copy()
        self.c = np.zeros(self.ncol)
        arts = self.n + self.m + np.flatnonzero(self._art_used)
        self.c[arts] = 1.0
        self._recompute_z()
        self._primal(max_iter)
        art_set = set(arts)
        infeas = sum(self.xB[i] for i, j in enumerate(self.basis) if j in art_set)
        self.c = save_c
        if infeas > 10 * FEAS_TOL:
            return False
        # Pin artificials so they can never re-enter.
        for a in arts:
            self.hi[a] = 0.0
            if self.stat[a] == _UPPER or self.stat[a] == _FREE:
                self.stat[a] = _LOWER
        # Kick still-basic artificials out where possible.
        for i in range(self.m):
            j = self.basis[i]
            if j >= self.n + self.m and self._art_used[j - self.n - self.m]:
                row = self.Tab[i, :self.n + self.m]
                nonbasic = np.flatnonzero((self.stat[:self.n + self.m] != _BASIC)
                                          & (np.abs(row) > 1e-7))
                if nonbasic.size:
                    q = int(nonbasic[np.argmax(np.abs(row[nonbasic]))])
                    self._pivot(i, q, self._nb_value(q), _LOWER)
        self._recompute_z()
        return True

    def solve_from_scratch(self, max_iter: int | None = None) -> str:
        if self.m == 0:
            return self._solve_unconstrained()
        max_iter = max_iter or self._iter_budget()
        self._init_slack_basis()
        if not self._phase1(max_iter):
            return STATUS_INFEASIBLE
        self._recompute_z()
        status = self._primal(max_iter)
        if status == "unbounded":
            return STATUS_UNBOUNDED
        return STATUS_OPTIMAL

    def _solve_unconstrained(self) -> str:
        for j in range(self.n):
            if self.c[j] > 0:
                if not np.isfinite(self.lo[j]):
                    return STATUS_UNBOUNDED
                self.stat[j] = _LOWER
            elif self.c[j] < 0:
                if not np.isfinite(self.hi[j]):
                    return STATUS_UNBOUNDED
                self.stat[j] = _UPPER
            else:
                self.stat[j] = (_LOWER if np.isfinite(self.lo[j]) else
                                _UPPER if np.isfinite(self.hi[j]) else _FREE)
        return STATUS_OPTIMAL

    def _iter_budget(self) -> int:
        return 20000 + 60 * (self.m + self.n)

    def objective(self) -> float:
        return float(self.c[:self.n] @ self.extract_x())

    # -- dual (warm restarts after bound changes) --------------------------

    def set_var_bounds(self, j: int, lo: float, hi: float):
        """Change bounds of structural variable j, keeping the basis valid."""
        old_val = None
        if self.stat[j] != _BASIC:
            old_val = self._nb_value(j)
        self.lo[j] = lo
        self.hi[j] = hi
        if self.stat[j] == _BASIC:
            return
        if self.stat[j] == _FREE and (np.isfinite(lo) or np.isfinite(hi)):
            self.stat[j] = _LOWER if np.isfinite(lo) else _UPPER
        if self.stat[j] == _LOWER and not np.isfinite(lo):
            self.stat[j] = _UPPER if np.isfinite(hi) else _FREE
        if self.stat[j] == _UPPER and not np.isfinite(hi):
            self.stat[j] = _LOWER if np.isfinite(lo) else _FREE
        new_val = self._nb_value(j)
        dv = new_val - old_val
        if dv != 0.0:
            self.xB -= self.Tab[:, j] * dv

    def _flip_nonbasic(self, j: int, new_stat: int):
        """Move nonbasic column j to its other bound, updating basic values."""
        old_val = self._nb_value(j)
        self.stat[j] = new_stat
        dv = self._nb_value(j) - old_val
        if dv != 0.0:
            self.xB -= self.Tab[:, j] * dv

    def _residual_norm(self) -> float:
        """Max violation of the original rows by the maintained solution."""
        x_full = self._nb_values()
        x_full[self.basis] = self.xB
        return float(np.max(np.abs(self.A_full @ x_full - self._orig_rhs)))

    def dual_resolve(self, max_iter: int | None = None) -> str:
        """Re-optimize after bound changes, starting from a dual-feasible basis.

        Falls back to a fresh phase-1 solve when the dual iteration stalls.
        """
        if self.m == 0:
            return self._solve_unconstrained()
        max_iter = max_iter or self._iter_budget()
        # Periodic refactorization bounds the drift that rank-1 tableau
        # updates accumulate across long warm-restart sequences.
        if self.pivot_count - self._pivots_at_refactor > 1500:
            self.refactorize()
            self._pivots_at_refactor = self.pivot_count
        # Relaxing a fixed column can leave its reduced cost with the wrong
        # sign for its bound; flip such columns to the other bound first so
        # the dual iteration starts from a genuinely dual-feasible basis.
        for j in np.flatnonzero(self.stat != _BASIC):
            if self.lo[j] == self.hi[j]:
                continue
            z = self.z[j]
            if self.stat[j] == _LOWER and z < -1e-9:
                if not np.isfinite(self.hi[j]):
                    return self.solve_from_scratch()
                self._flip_nonbasic(j, _UPPER)
            elif self.stat[j] == _UPPER and z > 1e-9:
                if not np.isfinite(self.lo[j]):
                    return self.solve_from_scratch()
                self._flip_nonbasic(j, _LOWER)
            elif self.stat[j] == _FREE and abs(z) > 1e-9:
                return self.solve_from_scratch()
        movable = self._movable()
        # A verdict is only trusted once the maintained solution still
        # satisfies the original rows exactly; otherwise rebuild and retry.
        for attempt in range(2):
            status = None
            for _ in range(max_iter):
                below = self.lo[self.basis] - self.xB
                above = self.xB - self.hi[self.basis]
                viol = np.maximum(below, above)
                r = int(np.argmax(viol)) if viol.size else 0
                if viol.size == 0 or viol[r] <= FEAS_TOL:
                    # Primal feasible again; polish with primal iterations.
                    self._recompute_z()
                    st = self._primal(max_iter)
                    status = (STATUS_UNBOUNDED if st == "unbounded"
                              else STATUS_OPTIMAL)
                    break
                delta = 1.0 if below[r] > above[r] else -1.0
                row = self.Tab[r]
                elig_lo = (self.stat == _LOWER) & movable & (row * delta < -PIVOT_TOL)
                elig_hi = (self.stat == _UPPER) & movable & (row * delta > PIVOT_TOL)
                elig_fr = (self.stat == _FREE) & (np.abs(row) > PIVOT_TOL)
                elig = np.flatnonzero(elig_lo | elig_hi | elig_fr)
                if elig.size == 0:
                    status = STATUS_INFEASIBLE
                    break
                ratios = np.abs(self.z[elig]) / np.abs(row[elig])
                best = ratios.min()
                tie = elig[np.flatnonzero(ratios <= best + 1e-7 * (1.0 + best))]
                # Among ratio ties take the largest pivot element (stability),
                # breaking remaining ties toward the lowest column index.
                piv_mag = np.abs(row[tie])
                q = int(tie[np.flatnonzero(piv_mag >= piv_mag.max() - 1e-12).min()])
                target = self.lo[self.basis[r]] if delta > 0 else self.hi[self.basis[r]]
                dt = (self.xB[r] - target) / row[q]
                enter_val = self._nb_value(q) + dt
                self.xB -= dt * self.Tab[:, q]
                leave_stat = _LOWER if delta > 0 else _UPPER
                self._pivot(r, q, enter_val, leave_stat)
            if status is None:
                break  # stalled; fall through to the scratch solve
            if attempt == 1 or self._residual_norm() <= 1e-6:
                return status
            self.refactorize()
            self._pivots_at_refactor = self.pivot_count
        # Stalled or still drifted: rebuild from scratch (rare; exact).
        return self.solve_from_scratch()

    def snapshot(self):
        return self.basis.copy(), self.stat.copy()

    def restore(self, snap):
        basis, stat = snap
        self.basis = basis.copy()
        self.stat = stat.copy()
        self.refactorize()


# ---------------------------------------------------------------------------
# Public solver entry points
# ---------------------------------------------------------------------------

def solve_lp(model: MilpModel) -> LpResult:
    """Solve the LP relaxation (binaries relaxed to [0, 1])."""
    model.validate()
    std = _standardize(model)
    if not std.feasible:
        return LpResult(STATUS_INFEASIBLE, None, None)
    sx = _Simplex(std)
    status = sx.solve_from_scratch()
    if status == STATUS_OPTIMAL:
        x = sx.extract_x()
        return LpResult(STATUS_OPTIMAL, float(std.c @ x), x)
    return LpResult(status, None, None)


def _is_integral(x: np.ndarray, binaries: list[int]) -> bool:
    return all(min(x[j], 1.0 - x[j]) < INT_TOL or abs(x[j]) < INT_TOL
               or abs(1 - x[j]) < INT_TOL for j in binaries)


def _most_fractional(x: np.ndarray, binaries: list[int]) -> int | None:
    best, best_frac = None, INT_TOL
    for j in binaries:
        frac = abs(x[j] - round(x[j]))
        if frac > best_frac:
            best, best_frac = j, frac
    return best


@dataclass
class _Node:
    bound: float
    fixes: dict[int, float] = field(default_factory=dict)


class _BinaryRows:
    """Row-incidence structure of the binaries of a model.

    Splits rows into pure-binary covering rows (sense >=, only binary
    columns) and the mixed rows each binary enters. Margins quantify how
    close the continuous part of a point comes to supporting a binary at 1.
    """

    def __init__(self, model: MilpModel, binaries: list[int]):
        self.model = model
        self.binaries = binaries
        bset = set(binaries)
        self.col_rows: dict[int, list] = {j: [] for j in binaries}
        self.cover_rows: set[int] = set()
        self.covers: list[tuple[int, list[int]]] = []
        for i, con in enumerate(model.constraints):
            for j, coef in con.coeffs:
                if j in bset:
                    self.col_rows[j].append((i, coef))
            if (con.sense == GREATER and con.coeffs and con.rhs > FEAS_TOL
                    and all(j in bset and coef > 0.0
                            for j, coef in con.coeffs)):
                self.cover_rows.add(i)
                self.covers.append((i, [j for j, _ in con.coeffs]))

    def continuous_activity(self, x: np.ndarray) -> np.ndarray:
        xi = x.copy()
        xi[self.binaries] = 0.0
        return np.array([sum(coef * xi[j] for j, coef in con.coeffs)
                         for con in self.model.constraints])

    def margins(self, x: np.ndarray) -> dict[int, float]:
        """Worst slack over a binary's mixed rows when it alone is set to 1."""
        act = self.continuous_activity(x)
        out = {}
        for j in self.binaries:
            worst = np.inf
            for i, coef in self.col_rows[j]:
                if i in self.cover_rows:
                    continue
                con = self.model.constraints[i]
                v = act[i] + coef
                if con.sense == LESS:
                    worst = min(worst, con.rhs - v)
                elif con.sense == GREATER:
                    worst = min(worst, v - con.rhs)
                else:
                    worst = min(worst, -abs(v - con.rhs))
            out[j] = worst
        return out


def _make_completion(model: MilpModel, binaries: list[int]):
    """Greedy integral completion of an LP point, verified exactly.

    Keeps the continuous part of x, zeroes every binary, then raises each
    binary to 1 when all rows containing it stay satisfied. Useful when
    binaries enter only big-M disjunction and covering rows: as soon as the
    continuous part clears the disjunctions, a feasible integral completion
    exists and the search can stop without driving every relaxed binary to
    a bound. Returns a callable x -> (objective, x_int) or None.
    """
    bset = set(binaries)
    col_rows: dict[int, list] = {j: [] for j in binaries}
    for i, con in enumerate(model.constraints):
        for j, coef in con.coeffs:
            if j in bset:
                col_rows[j].append((i, coef))

    def complete(x: np.ndarray):
        xi = x.copy()
        xi[binaries] = 0.0
        act = np.array([sum(coef * xi[j] for j, coef in con.coeffs)
                        for con in model.constraints])
        for j in binaries:
            ok = True
            for i, coef in col_rows[j]:
                v = act[i] + coef
                con = model.constraints[i]
                if con.sense == LESS and v > con.rhs + FEAS_TOL:
                    ok = False
                    break
                if con.sense == GREATER and v < con.rhs - FEAS_TOL:
                    ok = False
                    break
                if con.sense == EQUAL and abs(v - con.rhs) > FEAS_TOL:
                    ok = False
                    break
            if ok:
                xi[j] = 1.0
                for i, coef in col_rows[j]:
                    act[i] += coef
        if model.row_violation(xi) > 10 * FEAS_TOL:
            return None
        return model.objective_value(xi), xi

    return complete


def _dive(sx: "_Simplex", binaries: list[int], timed_out,
          completion=None, budget: int = 2000):
    """Depth-first rounding heuristic with chronological backtracking.

    Rounds the largest fractional binary up (flipping to 0 on failure),
    backtracking when both values fail. Stops early when the completion
    heuristic turns the current LP point into a feasible integral one.
    Returns (resolve count, (objective, x) or None) and leaves every
    touched bound relaxed again.
    """
    resolves = 0
    stack = []  # (column, value, flipped already)
    result = None

    def resolve():
        nonlocal resolves
        resolves += 1
        return sx.dual_resolve()

    try:
        while resolves < budget and not timed_out():
            x = sx.extract_x()
            if completion is not None:
                result = completion(x)
                if result is not None:
                    break
            frac = [(x[j], j) for j in binaries
                    if INT_TOL < x[j] < 1.0 - INT_TOL]
            if not frac:
                result = (sx.objective(), x)
                break
            # Round the largest fractional binary up first: in disjunction
            # covers that activates the branch the relaxation already
            # prefers, which is what forces progress toward integrality.
            _, j = max(frac)
            v = 1.0
            placed = False
            for val, flipped in ((v, False), (1.0 - v, True)):
                sx.set_var_bounds(j, val, val)
                if resolve() == STATUS_OPTIMAL:
                    stack.append((j, val, flipped))
                    placed = True
                    break
            if placed:
                continue
            sx.set_var_bounds(j, 0.0, 1.0)
            while stack:
                j2, v2, flipped = stack.pop()
                if flipped:
                    sx.set_var_bounds(j2, 0.0, 1.0)
                    continue
                sx.set_var_bounds(j2, 1.0 - v2, 1.0 - v2)
                if resolve() == STATUS_OPTIMAL:
                    stack.append((j2, 1.0 - v2, True))
                    break
                sx.set_var_bounds(j2, 0.0, 1.0)
            else:
                break  # every decision exhausted; no integral point found
    finally:
        for j2, _, _ in stack:
            sx.set_var_bounds(j2, 0.0, 1.0)
        if stack:
            sx.dual_resolve()
    return resolves, result


def _cover_dive(sx: "_Simplex", rows: _BinaryRows, completion, timed_out,
                budget: int = 600):
    """Heuristic that activates one binary per covering row.

    Covers already supported by the current geometry are batch-fixed (the
    current point stays feasible, so those resolves cannot fail); remaining
    covers are forced one at a time, closest to satisfied first. Returns
    (resolve count, (objective, x) or None) and restores every touched
    bound afterwards.
    """
    if not rows.covers:
        return 0, None
    model = rows.model
    fixed: set[int] = set()
    resolves = 0
    result = None

    def cover_open(i, members):
        con = model.constraints[i]
        have = sum(coef for j, coef in con.coeffs if j in fixed)
        return have < con.rhs - FEAS_TOL

    try:
        while resolves < budget and not timed_out():
            x = sx.extract_x()
            result = completion(x)
            if result is not None:
                break
            marg = rows.margins(x)
            open_cs = [(i, ms) for i, ms in rows.covers if cover_open(i, ms)]
            if not open_cs:
                break
            batch = []
            for i, members in open_cs:
                free = [j for j in members if j not in fixed]
                if free:
                    best = max(free, key=lambda j: marg[j])
                    if marg[best] >= -FEAS_TOL:
                        batch.append(best)
            if batch:
                for j in batch:
                    sx.set_var_bounds(j, 1.0, 1.0)
                    fixed.add(j)
                resolves += 1
                if sx.dual_resolve() != STATUS_OPTIMAL:
                    return resolves, None
                continue
            # Every open cover is violated; force the least violated one.
            forcible = [c for c in open_cs
                        if any(j not in fixed for j in c[1])]
            if not forcible:
                break
            i, members = max(
                forcible,
                key=lambda c: max(marg[j] for j in c[1] if j not in fixed))
            placed = False
            for j in sorted((j for j in members if j not in fixed),
                            key=lambda j: -marg[j]):
                sx.set_var_bounds(j, 1.0, 1.0)
                resolves += 1
                if sx.dual_resolve() == STATUS_OPTIMAL:
                    fixed.add(j)
                    placed = True
                    break
                sx.set_var_bounds(j, 0.0, 1.0)
                resolves += 1
                if sx.dual_resolve() != STATUS_OPTIMAL:
                    return resolves, None
            if not placed:
                break  # dead end; the caller falls back to the plain dive
    finally:
        for j in fixed:
            sx.set_var_bounds(j, 0.0, 1.0)
        if fixed:
            sx.dual_resolve()
    return resolves, result


def _cover_certificate(sx: "_Simplex", rows: _BinaryRows, timed_out,
                       max_covers: int = 10):
    """Try to prove infeasibility from a single covering row.

    A cover needs at least one member at 1; if activating each member alone
    already makes the LP infeasible, the whole MILP is infeasible. Probes
    only covers whose members are all unsupported at the current point,
    most violated first. Returns (resolve count, proven flag).
    """
    if not rows.covers:
        return 0, False
    marg = rows.margins(sx.extract_x())
    cands = []
    for i, members in rows.covers:
        best = max(marg[j] for j in members)
        if best < -FEAS_TOL:
            cands.append((best, i, members))
    cands.sort()
    resolves = 0
    for _, i, members in cands[:max_covers]:
        if timed_out():
            break
        proven = True
        for j in members:
            sx.set_var_bounds(j, 1.0, 1.0)
            resolves += 1
            st = sx.dual_resolve()
            sx.set_var_bounds(j, 0.0, 1.0)
            resolves += 1
            if sx.dual_resolve() != STATUS_OPTIMAL:
                sx.solve_from_scratch()
            if st == STATUS_OPTIMAL:
                proven = False
                break
        if proven:
            return resolves, True
    return resolves, False


def _improve(sx: "_Simplex", rows: _BinaryRows, completion, incumbent,
             timed_out, max_rounds: int = 10, target: float = -np.inf):
    """Reassign each cover's active binaries from the incumbent geometry.

    Fixing, per cover, the members with the largest margins at the current
    incumbent keeps that incumbent feasible, so every resolve can only
    lower the objective; iterate until the gain dries up or the objective
    reaches `target`. Returns (resolve count, best (objective, x)).
    """
    if not rows.covers:
        return 0, incumbent
    model = rows.model
    obj_inc, x_inc = incumbent
    fixed: list[int] = []
    resolves = 0
    try:
        for _ in range(max_rounds):
            if timed_out() or obj_inc <= target + 1e-9:
                break
            marg = rows.margins(x_inc)
            choose, supported = [], True
            for i, members in rows.covers:
                con = model.constraints[i]
                coef_of = dict(con.coeffs)
                have = 0.0
                for j in sorted(members, key=lambda j: -marg[j]):
                    if have >= con.rhs - FEAS_TOL:
                        break
                    if marg[j] < -FEAS_TOL:
                        supported = False
                        break
                    choose.append(j)
                    have += coef_of[j]
                if not supported or have < con.rhs - FEAS_TOL:
                    supported = False
                    break
            if not supported:
                break
            for j in fixed:
                sx.set_var_bounds(j, 0.0, 1.0)
            for j in choose:
                sx.set_var_bounds(j, 1.0, 1.0)
            fixed = choose
            resolves += 1
            if sx.dual_resolve() != STATUS_OPTIMAL:
                break
            comp = completion(sx.extract_x())
            if comp is None or comp[0] >= obj_inc - 1e-9:
                break
            obj_inc, x_inc = comp
    finally:
        for j in fixed:
            sx.set_var_bounds(j, 0.0, 1.0)
        if fixed:
            sx.dual_resolve()
    return resolves, (obj_inc, x_inc)


def branch_and_bound(model: MilpModel, gap: float = 0.0,
                     node_limit: int = 200000,
                     time_limit: float | None = None) -> SolveOutcome:
    """Best-bound branch-and-bound with absolute-gap termination.

    Branching is on the most-fractional binary (ties to the lowest index);
    a deterministic root dive supplies an early incumbent so a loose gap
    often terminates after a handful of LP solves.
    """
    start = time.perf_counter()
    model.validate()
    std = _standardize(model)
    binaries = model.binary_indices
    if not std.feasible:
        return SolveOutcome(STATUS_INFEASIBLE, None, None, 0, _since(start))

    sx = _Simplex(std)
    status = sx.solve_from_scratch()
    nodes = 1
    if status == STATUS_INFEASIBLE:
        return SolveOutcome(STATUS_INFEASIBLE, None, None, nodes, _since(start))
    if status == STATUS_UNBOUNDED:
        raise InvalidInputError("MILP relaxation is unbounded")

    root_bound = sx.objective()
    incumbent_obj, incumbent_x = np.inf, None

    x = sx.extract_x()
    if _is_integral(x, binaries):
        return SolveOutcome(STATUS_OPTIMAL, root_bound, x, nodes, _since(start))

    def timed_out():
        return time_limit is not None and time.perf_counter() - start > time_limit

    # Root heuristics: a cover-guided dive (falling back to depth-first
    # rounding), then geometric reassignment rounds on the incumbent.
    # Bound changes never break dual feasibility, so every probe is a cheap
    # warm dual resolve; small budgets cap the worst case.
    completion = _make_completion(model, binaries)
    rows = _BinaryRows(model, binaries)
    dive_nodes, dive_solution = _cover_dive(sx, rows, completion, timed_out)
    nodes += dive_nodes
    if dive_solution is None:
        # No heuristic solution: look for a one-cover infeasibility proof
        # before paying for the depth-first fallback.
        extra, proven = _cover_certificate(sx, rows, timed_out)
        nodes += extra
        if proven:
            return SolveOutcome(STATUS_INFEASIBLE, None, None, nodes,
                                _since(start))
        extra, dive_solution = _dive(sx, binaries, timed_out, completion)
        nodes += extra
    if dive_solution is not None:
        extra, dive_solution = _improve(sx, rows, completion, dive_solution,
                                        timed_out, target=root_bound + gap)
        nodes += extra
    if dive_solution is not None and dive_solution[0] < incumbent_obj:
        incumbent_obj, incumbent_x = dive_solution

    # A dive incumbent within the gap ends the search at the root.
    if incumbent_x is not None and incumbent_obj - root_bound <= gap + 1e-9:
        g = incumbent_obj - root_bound
        final = STATUS_OPTIMAL if g <= INT_TOL else STATUS_GAP
        viol = model.row_violation(incumbent_x)
        if viol > 10 * INT_TOL:
            raise InternalConsistencyError(
                f"incumbent violates a constraint by {viol:.2e}")
        return SolveOutcome(final, incumbent_obj, incumbent_x, nodes,
                            _since(start))

    applied: dict[int, float] = {}

    import heapq
    counter = itertools.count()
    heap: list[tuple[float, int, _Node]] = []
    heapq.heappush(heap, (root_bound, next(counter), _Node(root_bound, {})))

    def load(node: _Node):
        nonlocal applied
        for j in set(applied) - set(node.fixes):
            sx.set_var_bounds(j, 0.0, 1.0)
        for j, v in node.fixes.items():
            if applied.get(j) != v:
                sx.set_var_bounds(j, v, v)
        applied = dict(node.fixes)

    final_status = None
    while heap:
        if nodes >= node_limit or timed_out():
            final_status = STATUS_NODE_LIMIT
            break
        bound, _, node = heapq.heappop(heap)
        global_bound = min(bound, incumbent_obj)
        if incumbent_x is not None and incumbent_obj - global_bound <= gap + 1e-9:
            final_status = (STATUS_OPTIMAL if incumbent_obj - global_bound <= INT_TOL
                            else STATUS_GAP)
            break
        if bound >= incumbent_obj - 1e-9:
            continue  # pruned
        load(node)
        status = sx.dual_resolve()
        nodes += 1
        if status == STATUS_INFEASIBLE:
            continue
        if status == STATUS_UNBOUNDED:
            raise InvalidInputError("MILP relaxation is unbounded")
        obj = sx.objective()
        if obj >= incumbent_obj - 1e-9:
            continue
        x = sx.extract_x()
        if _is_integral(x, binaries):
            incumbent_obj, incumbent_x = obj, x
            continue
        comp = completion(x)
        if comp is not None:
            if comp[0] < incumbent_obj:
                incumbent_obj, incumbent_x = comp
            if comp[0] <= obj + 1e-9:
                continue  # node solved exactly by the completion
        j = _most_fractional(x, binaries)
        floor_val = float(np.floor(x[j] + INT_TOL))
        for v in (floor_val, 1.0 - floor_val):
            child = _Node(obj, {**node.fixes, j: v})
            heapq.heappush(heap, (obj, next(counter), child))

    if final_status is None:
        if incumbent_x is None:
            final_status = STATUS_INFEASIBLE
        else:
            final_status = STATUS_OPTIMAL
    if final_status in (STATUS_OPTIMAL, STATUS_GAP) and incumbent_x is None:
        final_status = STATUS_INFEASIBLE
    if final_status == STATUS_NODE_LIMIT and incumbent_x is None:
        return SolveOutcome(STATUS_NODE_LIMIT, None, None, nodes, _since(start))
    if final_status == STATUS_INFEASIBLE:
        return SolveOutcome(STATUS_INFEASIBLE, None, None, nodes, _since(start))

    viol = model.row_violation(incumbent_x)
    if viol > 10 * INT_TOL:
        raise InternalConsistencyError(
            f"incumbent violates a constraint by {viol:.2e}")
    return SolveOutcome(final_status, incumbent_obj, incumbent_x, nodes, _since(start))


def brute_force_solve(model: MilpModel) -> SolveOutcome:
    """Exhaustive binary enumeration; exact oracle for branch_and_bound."""
    start = time.perf_counter()
    model.validate()
    binaries = model.binary_indices
    if len(binaries) > 20:
        raise OracleScaleError(
            f"{len(binaries)} binaries exceed the enumeration limit of 20")
    best_obj, best_x = np.inf, None
    for bits in itertools.product((0.0, 1.0), repeat=len(binaries)):
        fixed = MilpModel()
        for j, v in enumerate(model.variables):
            fixed.variables.append(v)
        for j, bit in zip(binaries, bits):
            fixed.variables[j] = Variable(model.variables[j].name, bit, bit, False)
        fixed.constraints = list(model.constraints)
        fixed.objective = dict(model.objective)
        res = solve_lp(fixed)
        if res.status == STATUS_OPTIMAL and res.objective < best_obj - 1e-12:
            best_obj, best_x = res.objective, res.x
    if best_x is None:
        return SolveOutcome(STATUS_INFEASIBLE, None, None, 0, _since(start))
    return SolveOutcome(STATUS_OPTIMAL, best_obj, best_x, 0, _since(start))


def _since(start: float) -> float:
    return time.perf_counter() - start


# ---------------------------------------------------------------------------
# LP-file export
# ---------------------------------------------------------------------------

def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _term(coef: float, name: str, first: bool) -> str:
    mag = abs(coef)
    body = name if mag == 1.0 else f"{_fmt(mag)} {name}"
    if first:
        return f"-{body}" if coef < 0 else body
    return f" - {body}" if coef < 0 else f" + {body}"


def export_lp(model: MilpModel, path) -> None:
    """Write the model as CPLEX-LP-format text."""
    model.validate()
    names = [v.name for v in model.variables]
    if len(set(names)) != len(names):
        raise InvalidInputError("variable names must be unique for LP export")
    for name in names:
        if not _NAME_RE.match(name):
            raise InvalidInputError(f"variable name {name!r} not LP-safe")

    lines = ["Minimize"]
    terms = [(j, model.objective.get(j, 0.0)) for j in sorted(model.objective)]
    body = ""
    first = True
    for j, coef in terms:
        if coef == 0.0:
            continue
        body += _term(coef, names[j], first)
        first = False
    if first:
        body = "0 " + (names[0] if names else "x0")
    lines.append(f" obj: {body}")

    lines.append("Subject To")
    for i, con in enumerate(model.constraints):
        label = con.name or f"c{i}"
        body = ""
        first = True
        for j, coef in con.coeffs:
            body += _term(coef, names[j], first)
            first = False
        if first:
            body = "0 " + (names[0] if names else "x0")
        lines.append(f" {label}: {body} {con.sense} {_fmt(con.rhs)}")

    lines.append("Bounds")
    for j, v in enumerate(model.variables):
        if v.is_binary:
            continue
        if not np.isfinite(v.lb) and not np.isfinite(v.ub):
            lines.append(f" {v.name} free")
        elif not np.isfinite(v.ub):
            lines.append(f" {v.name} >= {_fmt(v.lb)}")
        elif not np.isfinite(v.lb):
            lines.append(f" -inf <= {v.name} <= {_fmt(v.ub)}")
        else:
            lines.append(f" {_fmt(v.lb)} <= {v.name} <= {_fmt(v.ub)}")

    binaries = model.binary_indices
    if binaries:
        lines.append("Binaries")
        for j in binaries:
            lines.append(f" {names[j]}")
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
