"""Oracles for downward-closed allowable flow sets.

A flow set T describes the feasible flows of one network edge.  Every set
handled here is closed, convex, downward closed (x in T and x' <= x imply
x' in T) and contains 0, so an edge can always dissipate output or stay
unused.  Each set is exposed through three oracles:

* ``contains(x)``   -- membership, with a scaled additive tolerance,
* ``support(xi)``   -- ``sup_{x in T} xi @ x`` together with a maximizer
  when the supremum is finite and attained (the edge "arbitrage"
  subproblem of the dual solver),
* ``gauge(x)``      -- the Minkowski functional
  ``inf {lam > 0 : x / lam in T}``, whose one-level set traces the
  boundary of T.

Downward closure makes the support infinite as soon as any price
component is negative, and makes ``contains(x / lam)`` monotone in
``lam``, which is what the generic gauge bisection relies on.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

DEFAULT_TOL = 1e-9

# lambda beyond which a point is treated as unreachable by scaling
GAUGE_LIMIT = 1e12


class Support(NamedTuple):
    """Value of a support function and, when attained, a maximizer."""

    value: float
    point: np.ndarray | None


def as_vector(x, dim: int) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim == 0 and dim == 1:
        v = v.reshape(1)
    if v.shape != (dim,):
        raise ValueError(f"expected a vector of length {dim}, got shape {v.shape}")
    return v


def scaled_tol(tol: float, rhs: float) -> float:
    """Additive tolerance for one defining inequality, scaled by max(1, |rhs|)."""
    return tol * max(1.0, abs(rhs))


class FlowSet:
    """Base class for allowable-flow-set oracles.

    Subclasses set ``dim`` and ``upper_bound`` (elementwise bound b with
    x <= b for every member; entries may be ``inf``) and implement
    ``contains`` and ``support``.  Instances are immutable after
    construction and all operations are pure, so they are safe to share
    across threads.
    """

    dim: int
    upper_bound: np.ndarray

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        raise NotImplementedError

    def support(self, price) -> Support:
        raise NotImplementedError

    def gauge(self, x, tol: float = DEFAULT_TOL) -> float:
        """Minkowski functional by bisection over the membership oracle.

        Returns 0 for recession directions (x / lam feasible for every
        lam > 0) and ``inf`` when no lam up to GAUGE_LIMIT works.  The
        membership tolerance is tightened in proportion to the candidate
        scaling, so directions outside the recession cone cannot pass as
        members once scaled far down.
        """
        v = as_vector(x, self.dim)
        if not np.any(v):
            return 0.0

        def member(lam: float) -> bool:
            return self.contains(v / lam, DEFAULT_TOL / max(1.0, lam))

        hi = 1.0
        while not member(hi):
            hi *= 2.0
            if hi > GAUGE_LIMIT:
                return math.inf
        lo = 0.0
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if member(mid):
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)


class RationalGain:
    """Gain h(w) = w / (1 + w): strictly concave, increasing, h(0) = 0."""

    kind = "rational"

    def value(self, w: float) -> float:
        return w / (1.0 + w)

    def best_output(self, w: float) -> float:
        # increasing gain, so the largest admissible input is best
        return self.value(w)

    def best_input(self, price_in: float, price_out: float, cap: float) -> float:
        """Argmax of ``-price_in * w + price_out * h(w)`` over [0, cap]."""
        if price_out <= 0.0:
            return 0.0
        if price_in <= 0.0:
            return cap
        w = math.sqrt(price_out / price_in) - 1.0
        return min(max(w, 0.0), cap)


class PiecewiseLinearGain:
    """Concave piecewise-linear gain tabulated as (input, output) breakpoints.

    The implicit first breakpoint is (0, 0); segment slopes must be
    strictly decreasing, which guarantees concavity without any runtime
    checks.
    """

    kind = "piecewise_linear"

    def __init__(self, points: Sequence[Sequence[float]]):
        pts = [(float(w), float(h)) for w, h in points]
        if not pts:
            raise ValueError("piecewise gain needs at least one breakpoint")
        ws = [0.0] + [p[0] for p in pts]
        hs = [0.0] + [p[1] for p in pts]
        for a, b in zip(ws, ws[1:]):
            if b <= a:
                raise ValueError("breakpoint inputs must be strictly increasing and positive")
        slopes = [(hb - ha) / (wb - wa) for (wa, wb, ha, hb) in zip(ws, ws[1:], hs, hs[1:])]
        for a, b in zip(slopes, slopes[1:]):
            if b >= a:
                raise ValueError("segment slopes must be strictly decreasing")
        self.inputs = np.array(ws)
        self.outputs = np.array(hs)
        self.slopes = np.array(slopes)
        # input beyond which extra flow no longer raises the output
        nonpos = np.nonzero(self.slopes <= 0.0)[0]
        self._peak = float(self.inputs[nonpos[0]]) if nonpos.size else float(self.inputs[-1])

    @property
    def last_input(self) -> float:
        return float(self.inputs[-1])

    def value(self, w: float) -> float:
        if w > self.inputs[-1] + 1e-12:
            raise ValueError("input beyond the tabulated range")
        return float(np.interp(w, self.inputs, self.outputs))

    def best_output(self, w: float) -> float:
        return self.value(min(w, float(self._peak)))

    def best_input(self, price_in: float, price_out: float, cap: float) -> float:
        w = 0.0
        for lo, hi, s in zip(self.inputs, self.inputs[1:], self.slopes):
            if lo >= cap:
                break
            if -price_in + price_out * s > 0.0:
                w = min(hi, cap)
            else:
                break
        return w


class CappedConcaveEdge(FlowSet):
    """Directed two-node edge: send up to ``capacity`` units in, get h(input) out.

    T is the downward closure of {(-w, h(w)) : 0 <= w <= capacity}, i.e.

        T = {x : x1 <= 0,  x2 <= h(min(capacity, -x1))}

    for a nondecreasing gain (the best reachable output is used when the
    tabulated gain flattens out).
    """

    dim = 2

    def __init__(self, gain: RationalGain | PiecewiseLinearGain | None = None,
                 capacity: float = 1.0):
        if capacity <= 0.0:
            raise ValueError("capacity must be positive")
        gain = RationalGain() if gain is None else gain
        if isinstance(gain, PiecewiseLinearGain) and gain.last_input < capacity:
            raise ValueError("tabulated gain must cover [0, capacity]")
        self.gain = gain
        self.capacity = float(capacity)
        self.upper_bound = np.array([0.0, gain.best_output(self.capacity)])

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        v = as_vector(x, 2)
        if v[0] > scaled_tol(tol, 0.0):
            return False
        w = min(self.capacity, max(0.0, -v[0]))
        bound = self.gain.best_output(w)
        return v[1] <= bound + scaled_tol(tol, bound)

    def support(self, price) -> Support:
        xi = as_vector(price, 2)
        if xi[0] < 0.0 or xi[1] < 0.0:
            return Support(math.inf, None)
        w = self.gain.best_input(xi[0], xi[1], self.capacity)
        out = self.gain.value(w)
        value = -xi[0] * w + xi[1] * out
        if value <= 0.0:
            return Support(0.0, np.zeros(2))
        return Support(float(value), np.array([-w, out]))


class LinearTickEdge(FlowSet):
    """One orderbook tick: pay w <= cap of asset 1, receive price * w of asset 2.

    Downward closure of the segment {(-w, price * w) : 0 <= w <= cap};
    the support function is cap * max(0, price * xi2 - xi1) on xi >= 0.
    """

    dim = 2

    def __init__(self, price: float, cap: float):
        if price <= 0.0 or cap <= 0.0:
            raise ValueError("price and cap must be positive")
        self.price = float(price)
        self.cap = float(cap)
        self.upper_bound = np.array([0.0, self.price * self.cap])

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        v = as_vector(x, 2)
        if v[0] > scaled_tol(tol, 0.0):
            return False
        bound = self.price * min(self.cap, max(0.0, -v[0]))
        return v[1] <= bound + scaled_tol(tol, bound)

    def support(self, price) -> Support:
        xi = as_vector(price, 2)
        if xi[0] < 0.0 or xi[1] < 0.0:
            return Support(math.inf, None)
        unit = self.price * xi[1] - xi[0]
        if unit <= 0.0:
            return Support(0.0, np.zeros(2))
        return Support(float(self.cap * unit),
                       np.array([-self.cap, self.price * self.cap]))


class ProductMarketEdge(FlowSet):
    """Two-asset constant-product market with reserves (R1, R2).

    Feasible trades keep the product of post-trade reserves at or above
    its initial value k = R1 * R2:

        T = {x : (R1 - x1)(R2 - x2) >= k,  x1 <= R1,  x2 <= R2}.

    Zero lies on the boundary.  For strictly positive prices the support
    has the closed form  xi1 R1 + xi2 R2 - 2 sqrt(k xi1 xi2)  with
    maximizer on the reserve curve; when exactly one price vanishes the
    supremum is finite but approached only in the limit, so no maximizer
    is returned.
    """

    dim = 2

    def __init__(self, reserves: Sequence[float]):
        r = np.asarray(reserves, dtype=float)
        if r.shape != (2,) or np.any(r <= 0.0):
            raise ValueError("reserves must be two positive numbers")
        self.reserves = r
        self.invariant = float(r[0] * r[1])
        self.upper_bound = r.copy()

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        v = as_vector(x, 2)
        r = self.reserves
        if v[0] > r[0] + scaled_tol(tol, r[0]):
            return False
        if v[1] > r[1] + scaled_tol(tol, r[1]):
            return False
        prod = max(r[0] - v[0], 0.0) * max(r[1] - v[1], 0.0)
        return prod >= self.invariant - scaled_tol(tol, self.invariant)

    def support(self, price) -> Support:
        xi = as_vector(price, 2)
        if xi[0] < 0.0 or xi[1] < 0.0:
            return Support(math.inf, None)
        r, k = self.reserves, self.invariant
        if xi[0] == 0.0 and xi[1] == 0.0:
            return Support(0.0, np.zeros(2))
        if xi[0] == 0.0 or xi[1] == 0.0:
            # the free coordinate runs to -inf along the reserve curve
            return Support(float(xi @ r), None)
        value = float(xi @ r) - 2.0 * math.sqrt(k * xi[0] * xi[1])
        point = np.array([r[0] - math.sqrt(k * xi[1] / xi[0]),
                          r[1] - math.sqrt(k * xi[0] / xi[1])])
        return Support(max(value, 0.0), point)


class HalfLineEdge(FlowSet):
    """One-node edge supplying at most ``cap`` units: T = {z : z <= cap}.

    The simplest flow set; also the building block of the knapsack
    reduction, where cap is the item weight.
    """

    dim = 1

    def __init__(self, cap: float):
        if cap < 0.0:
            raise ValueError("cap must be nonnegative")
        self.cap = float(cap)
        self.upper_bound = np.array([self.cap])

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        v = as_vector(x, 1)
        return v[0] <= self.cap + scaled_tol(tol, self.cap)

    def support(self, price) -> Support:
        xi = as_vector(price, 1)
        if xi[0] < 0.0:
            return Support(math.inf, None)
        if xi[0] == 0.0:
            return Support(0.0, np.zeros(1))
        if not math.isfinite(self.cap):
            return Support(math.inf, None)
        return Support(float(xi[0] * self.cap), np.array([self.cap]))

    def gauge(self, x, tol: float = DEFAULT_TOL) -> float:
        v = as_vector(x, 1)
        if v[0] <= 0.0:
            return 0.0
        if self.cap == 0.0:
            return math.inf
        return float(v[0] / self.cap)
