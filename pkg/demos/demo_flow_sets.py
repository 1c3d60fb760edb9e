"""Tour of the built-in allowable-flow-set oracles.

Every edge set answers three questions: is a flow feasible (membership),
what is the best value extractable at given prices (support, with the
maximizing flow), and how far inside or outside the set a point sits
(gauge, whose one-level set is the boundary).
"""

import numpy as np

from convexflow import (CappedConcaveEdge, HalfLineEdge, LinearTickEdge,
                        PiecewiseLinearGain, ProductMarketEdge)

# A directed edge with one unit of input capacity and gain h(w) = w/(1+w):
# send w in, get h(w) out.
edge = CappedConcaveEdge(capacity=1.0)
print("capped concave edge, h(w) = w/(1+w), capacity 1")
print("  (-1.0, 0.5) feasible?  ", edge.contains([-1.0, 0.5]))   # h(1) = 1/2
print("  (-2.0, 1.0) feasible?  ", edge.contains([-2.0, 1.0]))   # beyond the cap
value, flow = edge.support([1.0, 4.0])
print(f"  best trade at prices (1, 4): value {value:.4f} with flow {flow}")
value, flow = edge.support([1.0, 1.0])
print(f"  at prices (1, 1) trading never pays: value {value:.4f}, flow {flow}")
print(f"  gauge of the boundary point (-1, 0.5): {edge.gauge([-1.0, 0.5]):.6f}")
print(f"  gauge of (-1, -1), pure dissipation:   {edge.gauge([-1.0, -1.0]):.1e}")
print()

# The same edge with a tabulated concave piecewise-linear gain.
pwl = CappedConcaveEdge(gain=PiecewiseLinearGain([(0.5, 0.45), (2.0, 1.0)]),
                        capacity=2.0)
print("tabulated piecewise-linear gain over [0, 2]")
print(f"  support at (1, 3): {pwl.support([1.0, 3.0]).value:.4f}")
print()

# One tick of an orderbook: up to `cap` units at a fixed price.
tick = LinearTickEdge(price=0.9, cap=1.0)
value, flow = tick.support([0.0, 1.0])
print(f"orderbook tick at price 0.9: depth at prices (0, 1) is {value:.2f}, "
      f"flow {flow}")
print()

# A two-asset constant-product market: trades keep (R1 - x1)(R2 - x2) >= R1 R2.
market = ProductMarketEdge([1.0, 1.0])
value, flow = market.support([1.0, 4.0])
print("constant-product market with unit reserves")
print(f"  arbitrage value at prices (1, 4): {value:.4f} with trade {flow}")
print(f"  closed form xi1 R1 + xi2 R2 - 2 sqrt(k xi1 xi2) = {1 + 4 - 2 * 2:.4f}")
print()

# The simplest set of all: a one-node supply of at most `cap` units.
supply = HalfLineEdge(3.0)
print(f"half-line supply of 3 units: support at price 2 is "
      f"{supply.support([2.0]).value:.1f}")
