"""Convex polytopes in H-representation and direction sampling.

A polytope is the set {x | a @ x <= b}. All predicates treat polytopes as
closed sets; `interior_overlaps` is the strict variant used where touching
boundaries must not count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import InfeasibleGeometryError, InvalidInputError

# Feasibility slack used when re-checking LP solutions against rows.
FEAS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Polytope:
    """Bounded nonempty convex polytope {x | a @ x <= b}."""

    a: np.ndarray
    b: np.ndarray
    name: str | None = None
    # Per-coordinate [min, max] over the polytope, filled in __post_init__.
    bbox: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if a.shape[0] != b.shape[0]:
            raise InvalidInputError(
                f"facet count mismatch: {a.shape[0]} rows vs {b.shape[0]} offsets"
            )
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
            raise InvalidInputError("polytope coefficients must be finite")
        if np.any(np.linalg.norm(a, axis=1) == 0.0):
            raise InvalidInputError("every facet row must have a nonzero normal")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "bbox", _verify_bounded_nonempty(a, b, self.name))

    @property
    def dim(self) -> int:
        return self.a.shape[1]

    @property
    def n_facets(self) -> int:
        return self.a.shape[0]

    def contains(self, x, tol: float = 0.0) -> bool:
        """Row-wise check a @ x <= b + tol."""
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.dim:
            raise InvalidInputError(
                f"point has dimension {x.shape[0]}, polytope has {self.dim}"
            )
        if tol < 0:
            raise InvalidInputError("tol must be nonnegative")
        return bool(np.all(self.a @ x <= self.b + tol))

    def inflated(self, margin: float) -> "Polytope":
        """Polytope with every facet pushed outward by `margin` (Euclidean)."""
        norms = np.linalg.norm(self.a, axis=1)
        return Polytope(self.a, self.b + margin * norms, name=self.name)

    def facet_margin(self, x) -> float:
        """Largest normalized facet excess a_q @ x - b_q over all facets.

        Positive values lower-bound the Euclidean distance from x to the
        polytope; nonpositive means x is inside (or on the boundary).
        """
        x = np.asarray(x, dtype=float).ravel()
        norms = np.linalg.norm(self.a, axis=1)
        return float(np.max((self.a @ x - self.b) / norms))


@dataclass(frozen=True)
class DirectionSet:
    """L candidate separating directions with per-direction thresholds."""

    directions: np.ndarray  # (L, r), unit rows
    thresholds: np.ndarray  # (L,), all positive

    def __post_init__(self):
        dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
        thr = np.asarray(self.thresholds, dtype=float).ravel()
        if dirs.shape[0] < 3:
            raise InvalidInputError("need at least 3 candidate directions")
        if dirs.shape[0] != thr.shape[0]:
            raise InvalidInputError("one threshold per direction required")
        if np.any(thr <= 0):
            raise InvalidInputError("separation thresholds must be positive")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise InvalidInputError("directions must be unit vectors")
        for i in range(dirs.shape[0]):
            for j in range(i + 1, dirs.shape[0]):
                if np.allclose(dirs[i], dirs[j], atol=1e-12):
                    raise InvalidInputError("directions must be pairwise distinct")
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "thresholds", thr)

    def __len__(self) -> int:
        return self.directions.shape[0]


def _verify_bounded_nonempty(a, b, name):
    """Bounding-box computation doubling as the nonempty/bounded check."""
    label = name or "polytope"
    r = a.shape[1]
    bbox = np.empty((r, 2))
    for c in range(r):
        for side, sign in ((0, 1.0), (1, -1.0)):
            obj = np.zeros(r)
            obj[c] = sign
            res = linprog(obj, A_ub=a, b_ub=b, bounds=[(None, None)] * r,
                          method="highs")
            if res.status == 2:
                raise InfeasibleGeometryError(f"{label} is empty")
            if res.status == 3:
                raise InfeasibleGeometryError(f"{label} is unbounded")
            if res.status != 0:
                raise InfeasibleGeometryError(
                    f"{label}: bounding LP failed with status {res.status}")
            bbox[c, side] = sign * res.fun
    return bbox


def intersects(p: Polytope, q: Polytope) -> bool:
    """True iff the closed sets p and q share a point (phase-1 LP)."""
    if p.dim != q.dim:
        raise InvalidInputError("polytopes have different ambient dimensions")
    a = np.vstack([p.a, q.a])
    b = np.concatenate([p.b, q.b])
    res = linprog(np.zeros(p.dim), A_ub=a, b_ub=b + FEAS_TOL,
                  bounds=[(None, None)] * p.dim, method="highs")
    return res.status == 0


def interior_overlaps(p: Polytope, q: Polytope, tol: float = 1e-9) -> bool:
    """True iff p and q overlap with nonzero volume (inscribed radius > tol)."""
    if p.dim != q.dim:
        raise InvalidInputError("polytopes have different ambient dimensions")
    a = np.vstack([p.a, q.a])
    b = np.concatenate([p.b, q.b])
    radius = _max_inscribed_radius(a, b)
    return radius is not None and radius > tol


def _max_inscribed_radius(a, b):
    """Radius of the largest ball inside {x | a x <= b}, or None if empty."""
    r = a.shape[1]
    norms = np.linalg.norm(a, axis=1)
    a_ext = np.hstack([a, norms[:, None]])
    obj = np.zeros(r + 1)
    obj[r] = -1.0
    res = linprog(obj, A_ub=a_ext, b_ub=b,
                  bounds=[(None, None)] * r + [(0.0, None)], method="highs")
    if res.status != 0:
        return None
    return float(res.x[r])


def chebyshev_center(p: Polytope) -> np.ndarray:
    """Center of the largest inscribed ball.

    The optimal-center set can be a segment or face; for determinism the
    point returned is the coordinate-wise sequential midpoint of that set,
    which reduces to the box center for axis-aligned boxes.
    """
    radius = _max_inscribed_radius(p.a, p.b)
    if radius is None:
        raise InfeasibleGeometryError("cannot center an empty polytope")
    norms = np.linalg.norm(p.a, axis=1)
    # Optimal-center set: the polytope shrunk by the inscribed radius.
    b_shrunk = p.b - radius * norms + FEAS_TOL
    r = p.dim
    bounds = [[None, None] for _ in range(r)]
    center = np.empty(r)
    for c in range(r):
        lo = hi = None
        for sign in (1.0, -1.0):
            obj = np.zeros(r)
            obj[c] = sign
            res = linprog(obj, A_ub=p.a, b_ub=b_shrunk, bounds=bounds,
                          method="highs")
            if res.status != 0:
                raise InfeasibleGeometryError(
                    f"center refinement LP failed with status {res.status}")
            if sign > 0:
                lo = res.fun
            else:
                hi = -res.fun
        center[c] = 0.5 * (lo + hi)
        bounds[c] = [center[c], center[c]]
    return center


def sample_directions(L: int, d_sep: float) -> DirectionSet:
    """L unit vectors at angles 2*pi*l/L with a uniform threshold d_sep."""
    if L < 3:
        raise InvalidInputError("need at least 3 directions")
    if d_sep <= 0:
        raise InvalidInputError("d_sep must be positive")
    angles = 2.0 * np.pi * np.arange(L) / L
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    # Snap near-zero components so axis directions are exact.
    dirs[np.abs(dirs) < 1e-15] = 0.0
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    return DirectionSet(dirs, np.full(L, float(d_sep)))


def vertices_2d(p: Polytope) -> np.ndarray:
    """Vertices of a 2-D polytope, sorted counterclockwise (for rendering)."""
    if p.dim != 2:
        raise InvalidInputError("vertex enumeration implemented for 2-D only")
    pts = []
    n = p.n_facets
    for i in range(n):
        for j in range(i + 1, n):
            mat = p.a[[i, j]]
            if abs(np.linalg.det(mat)) < 1e-12:
                continue
            x = np.linalg.solve(mat, p.b[[i, j]])
            if p.contains(x, tol=1e-7):
                pts.append(x)
    if not pts:
        return np.zeros((0, 2))
    pts = np.array(pts)
    # Dedupe within tolerance.
    keep = []
    for x in pts:
        if not any(np.linalg.norm(x - y) < 1e-7 for y in keep):
            keep.append(x)
    pts = np.array(keep)
    centroid = pts.mean(axis=0)
    order = np.argsort(np.arctan2(pts[:, 1] - centroid[1], pts[:, 0] - centroid[0]))
    return pts[order]


def contains_polytope(outer: Polytope, inner: Polytope, tol: float = 1e-9) -> bool:
    """True iff inner is a subset of outer (per-facet support LP)."""
    if outer.dim != inner.dim:
        raise InvalidInputError("polytopes have different ambient dimensions")
    for q in range(outer.n_facets):
        res = linprog(-outer.a[q], A_ub=inner.a, b_ub=inner.b,
                      bounds=[(None, None)] * inner.dim, method="highs")
        if res.status != 0 or -res.fun > outer.b[q] + tol:
            return False
    return True


def box(x1min: float, x1max: float, x2min: float, x2max: float,
        name: str | None = None) -> Polytope:
    """Axis-aligned 2-D box as a polytope."""
    a = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    b = np.array([x1max, -x1min, x2max, -x2min], dtype=float)
    return Polytope(a, b, name=name)
