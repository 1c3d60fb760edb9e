"""Composition rules for allowable flow sets.

Nonnegative scaling, nonnegative injective matrix images, lifting into a
larger node space, Minkowski sums, intersections, and the aggregate-edge
construction all preserve the three defining properties (closed convex,
downward closed, contains 0), so each rule below returns another
``FlowSet`` oracle.

Support functions compose exactly:

    f_{aT}(xi)        = a * f_T(xi)
    f_{AT - R+}(xi)   = f_T(A.T @ xi)          for xi >= 0
    f_{T + T'}(xi)    = f_T(xi) + f_{T'}(xi)

Membership of image and sum sets has no cheap exact test; those sets
certify membership by checking ``xi @ x <= f(xi) + tol`` over a fixed fan
of nonnegative directions.  The fan test is a sound outer test: a point
it rejects is certainly outside, a point it accepts lies within the fan's
outer approximation.  Composition trees never materialize geometry; they
only forward oracle calls to their children.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .sets import DEFAULT_TOL, FlowSet, Support, as_vector, scaled_tol

FAN_SIZE = 720


@lru_cache(maxsize=None)
def direction_fan(dim: int, count: int = FAN_SIZE) -> np.ndarray:
    """Deterministic nonnegative test directions, one per row.

    Evenly spaced quarter-circle angles in 2-D, a low-discrepancy Halton
    set in higher dimensions; the coordinate axes are always included.
    """
    if dim < 1:
        raise ValueError("dimension must be positive")
    if dim == 1:
        return np.array([[1.0]])
    if dim == 2:
        angles = (np.arange(count) + 0.5) * (0.5 * math.pi / count)
        dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    else:
        sampler = qmc.Halton(d=dim, scramble=False)
        pts = sampler.random(count)[1:]  # first Halton point is the origin
        pts = pts[np.linalg.norm(pts, axis=1) > 1e-12]
        dirs = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    return np.vstack([dirs, np.eye(dim)])


def _fan_contains(the_set: FlowSet, x: np.ndarray, tol: float) -> bool:
    for xi in direction_fan(the_set.dim):
        value = the_set.support(xi).value
        if xi @ x > value + scaled_tol(tol, value):
            return False
    return True


def _nonneg_combination(matrix: np.ndarray, bound: np.ndarray) -> np.ndarray:
    """matrix @ bound with the convention 0 * inf = 0 (zero weight ignores inf)."""
    out = np.zeros(matrix.shape[0])
    for i in range(matrix.shape[0]):
        row = matrix[i]
        mask = row > 0.0
        out[i] = float(row[mask] @ bound[mask]) if mask.any() else 0.0
    return out


class ScaledSet(FlowSet):
    """alpha * T for alpha >= 0; alpha = 0 collapses to the downward closure of {0}."""

    def __init__(self, base: FlowSet, alpha: float):
        if alpha < 0.0:
            raise ValueError("scaling factor must be nonnegative")
        self.base = base
        self.alpha = float(alpha)
        self.dim = base.dim
        if alpha == 0.0:
            self.upper_bound = np.zeros(base.dim)
        else:
            self.upper_bound = alpha * base.upper_bound

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        v = as_vector(x, self.dim)
        if self.alpha == 0.0:
            return bool(np.all(v <= scaled_tol(tol, 0.0)))
        return self.base.contains(v / self.alpha, tol)

    def support(self, price) -> Support:
        xi = as_vector(price, self.dim)
        if np.any(xi < 0.0):
            return Support(math.inf, None)
        if self.alpha == 0.0:
            return Support(0.0, np.zeros(self.dim))
        value, point = self.base.support(xi)
        if not math.isfinite(value):
            return Support(value, None)
        return Support(self.alpha * value,
                       None if point is None else self.alpha * point)


class MatrixImageSet(FlowSet):
    """A @ T followed by downward closure, for nonnegative injective A.

    {x : x <= A @ x' for some x' in T}; each coordinate of A @ x' is a
    weighted meta-flow over the underlying edge.  Injectivity keeps the
    image closed, so rank-deficient matrices are rejected.
    """

    def __init__(self, base: FlowSet, matrix):
        a = np.asarray(matrix, dtype=float)
        if a.ndim != 2 or a.shape[1] != base.dim:
            raise ValueError(f"matrix must have {base.dim} columns")
        if np.any(a < 0.0):
            raise ValueError("matrix entries must be nonnegative")
        if np.linalg.matrix_rank(a) < a.shape[1]:
            raise ValueError("matrix must have a trivial null space")
        self.base = base
        self.matrix = a
        self.dim = a.shape[0]
        self.upper_bound = _nonneg_combination(a, base.upper_bound)

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        return _fan_contains(self, as_vector(x, self.dim), tol)

    def support(self, price) -> Support:
        xi = as_vector(price, self.dim)
        if np.any(xi < 0.0):
            return Support(math.inf, None)
        value, point = self.base.support(self.matrix.T @ xi)
        if not math.isfinite(value):
            return Support(value, None)
        return Support(value, None if point is None else self.matrix @ point)


class LiftedSet(FlowSet):
    """An edge set embedded at chosen node indices of a larger space.

    Selector-matrix image: selected coordinates follow the base set,
    unselected ones may only dissipate (x <= 0), and membership reduces
    exactly to the base oracle thanks to downward closure.
    """

    def __init__(self, base: FlowSet, indices: Sequence[int], ambient_dim: int):
        idx = [int(i) for i in indices]
        if len(idx) != base.dim:
            raise ValueError("need one index per base coordinate")
        if len(set(idx)) != len(idx):
            raise ValueError("indices must be distinct")
        if any(i < 0 or i >= ambient_dim for i in idx):
            raise ValueError("index out of range")
        self.base = base
        self.indices = np.array(idx, dtype=int)
        self.dim = int(ambient_dim)
        mask = np.ones(ambient_dim, dtype=bool)
        mask[self.indices] = False
        self._unselected = np.nonzero(mask)[0]
        ub = np.zeros(ambient_dim)
        ub[self.indices] = base.upper_bound
        self.upper_bound = ub

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        v = as_vector(x, self.dim)
        if np.any(v[self._unselected] > scaled_tol(tol, 0.0)):
            return False
        return self.base.contains(v[self.indices], tol)

    def support(self, price) -> Support:
        xi = as_vector(price, self.dim)
        if np.any(xi < 0.0):
            return Support(math.inf, None)
        value, point = self.base.support(xi[self.indices])
        if not math.isfinite(value) or point is None:
            return Support(value, None)
        lifted = np.zeros(self.dim)
        lifted[self.indices] = point
        return Support(value, lifted)

    def gauge(self, x, tol: float = DEFAULT_TOL) -> float:
        v = as_vector(x, self.dim)
        if np.any(v[self._unselected] > 0.0):
            return math.inf
        return self.base.gauge(v[self.indices], tol)


class MinkowskiSumSet(FlowSet):
    """T + T': an aggregate edge that may route through either summand.

    Requires both summands bounded above, so that finite inputs cannot
    generate infinite output.  Supports and maximizers add; membership is
    the fan separation test.
    """

    def __init__(self, first: FlowSet, second: FlowSet):
        if first.dim != second.dim:
            raise ValueError("summands must share a dimension")
        for part in (first, second):
            if not np.all(np.isfinite(part.upper_bound)):
                raise ValueError("summands must be bounded from above")
        self.parts = (first, second)
        self.dim = first.dim
        self.upper_bound = first.upper_bound + second.upper_bound

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        return _fan_contains(self, as_vector(x, self.dim), tol)

    def support(self, price) -> Support:
        xi = as_vector(price, self.dim)
        if np.any(xi < 0.0):
            return Support(math.inf, None)
        total = 0.0
        point: np.ndarray | None = np.zeros(self.dim)
        for part in self.parts:
            value, maximizer = part.support(xi)
            total += value
            if point is not None and maximizer is not None:
                point = point + maximizer
            else:
                point = None
        return Support(total, point)


class IntersectionSet(FlowSet):
    """T ∩ T'. Membership is the exact conjunction of the child oracles.

    The support function has no closed form; it is evaluated numerically
    through the dual split

        f_{T ∩ T'}(xi) = min_{0 <= z <= xi} f_T(z) + f_{T'}(xi - z)

    by projected subgradient descent, so the returned value is
    approximate (upper bound within the descent tolerance) and carries no
    maximizer.
    """

    approximate_support = True

    def __init__(self, first: FlowSet, second: FlowSet, descent_steps: int = 400):
        if first.dim != second.dim:
            raise ValueError("sets must share a dimension")
        self.parts = (first, second)
        self.dim = first.dim
        self.upper_bound = np.minimum(first.upper_bound, second.upper_bound)
        self.descent_steps = descent_steps

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        v = as_vector(x, self.dim)
        return all(part.contains(v, tol) for part in self.parts)

    def support(self, price) -> Support:
        xi = as_vector(price, self.dim)
        if np.any(xi < 0.0):
            return Support(math.inf, None)
        first, second = self.parts

        def split_value(z):
            return first.support(z).value + second.support(xi - z).value

        def split_grad(z):
            pa = first.support(z).point
            pb = second.support(xi - z).point
            if pa is None or pb is None:
                return None
            return pa - pb

        z = 0.5 * xi
        best_z, best = z.copy(), split_value(z)
        scale = float(np.max(xi)) or 1.0
        for k in range(1, self.descent_steps + 1):
            grad = split_grad(z)
            if grad is None:
                break
            norm = float(np.linalg.norm(grad))
            if norm < 1e-14:
                break
            z = np.clip(z - (0.5 * scale / math.sqrt(k)) * grad / norm, 0.0, xi)
            value = split_value(z)
            if value < best:
                best_z, best = z.copy(), value
        # refine with cyclic golden-section sweeps (convex along coordinates)
        ratio = 0.5 * (math.sqrt(5.0) - 1.0)
        z = best_z
        for _ in range(4):
            for j in range(self.dim):
                lo, hi = 0.0, float(xi[j])
                if hi <= 0.0:
                    continue
                a, b = hi - ratio * (hi - lo), lo + ratio * (hi - lo)
                za, zb = z.copy(), z.copy()
                za[j], zb[j] = a, b
                fa, fb = split_value(za), split_value(zb)
                for _ in range(48):
                    if fa <= fb:
                        hi, b, fb = b, a, fa
                        a = hi - ratio * (hi - lo)
                        za[j] = a
                        fa = split_value(za)
                    else:
                        lo, a, fa = a, b, fb
                        b = lo + ratio * (hi - lo)
                        zb[j] = b
                        fb = split_value(zb)
                z[j] = a if fa <= fb else b
                best = min(best, fa, fb)
        return Support(best, None)


class AggregateSet(FlowSet):
    """Sum over edges of their lifted sets: the one-big-edge view of a network.

    With zero edge utilities, maximizing U over this set is the whole
    flow problem; the oracle exists so that composition and the support
    calculus can be tested directly against solver behaviour.
    """

    def __init__(self, members: Sequence[tuple[FlowSet, Sequence[int]]], ambient_dim: int):
        if not members:
            raise ValueError("aggregate needs at least one edge")
        lifts = [LiftedSet(the_set, indices, ambient_dim) for the_set, indices in members]
        for lift_ in lifts:
            if not np.all(np.isfinite(lift_.base.upper_bound)):
                raise ValueError("aggregate members must be bounded from above")
        self.members = tuple(lifts)
        self.dim = int(ambient_dim)
        self.upper_bound = np.sum([m.upper_bound for m in lifts], axis=0)

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        return _fan_contains(self, as_vector(x, self.dim), tol)

    def support(self, price) -> Support:
        xi = as_vector(price, self.dim)
        if np.any(xi < 0.0):
            return Support(math.inf, None)
        total = 0.0
        point: np.ndarray | None = np.zeros(self.dim)
        for member in self.members:
            value, maximizer = member.support(xi)
            total += value
            if point is not None and maximizer is not None:
                point = point + maximizer
            else:
                point = None
        return Support(total, point)


def scale(the_set: FlowSet, alpha: float) -> ScaledSet:
    return ScaledSet(the_set, alpha)


def nonneg_matrix_image(the_set: FlowSet, matrix) -> MatrixImageSet:
    return MatrixImageSet(the_set, matrix)


def lift(the_set: FlowSet, indices: Sequence[int], ambient_dim: int) -> LiftedSet:
    return LiftedSet(the_set, indices, ambient_dim)


def minkowski_sum(first: FlowSet, second: FlowSet) -> MinkowskiSumSet:
    return MinkowskiSumSet(first, second)


def intersection(first: FlowSet, second: FlowSet) -> IntersectionSet:
    return IntersectionSet(first, second)


def aggregate(members: Sequence[tuple[FlowSet, Sequence[int]]], ambient_dim: int) -> AggregateSet:
    return AggregateSet(members, ambient_dim)
