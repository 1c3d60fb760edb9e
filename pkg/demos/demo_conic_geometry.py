"""The flow cone of an edge set and the geometry behind fixed fees.

The cone is the perspective of the set with a negated homogenizing
coordinate; slicing it at activation -1 recovers the set, clipping the
activation to [-1, 0] gives the convex hull of the fee constraint set
{0} ∪ (T × {-1}), and the polar cone has a one-line support-function
test.
"""

import numpy as np

from convexflow import (CappedConcaveEdge, ClippedCone, ConicInstance, Edge,
                        FlowCone, Instance, LinearUtility, conic_rewrite,
                        solve, solve_conic)

edge_set = CappedConcaveEdge(capacity=1.0)
cone = FlowCone(edge_set)

print("flow cone of the capped concave edge")
print("  (-1, 0.5, -1) in cone:", cone.contains([-1.0, 0.5, -1.0]))
print("  (-1, -1,  0) in cone:", cone.contains([-1.0, -1.0, 0.0]),
      " (recession direction)")
print("  ( 0,  1,  0) in cone:", cone.contains([0.0, 1.0, 0.0]))

# Downward closure in the activation coordinate: anything feasible at a
# partial activation is feasible at full activation.
point = [-0.5, 0.25, -0.5]
print("  dominating completion of", point, "->",
      cone.dominating_completion(point))

# Polar membership is a support-function epigraph test.
print("  ((1, 4), 1.0) in polar:", cone.polar_contains([1.0, 4.0, 1.0]))
print("  ((1, 4), 0.5) in polar:", cone.polar_contains([1.0, 4.0, 0.5]))

# The clipped cone is conv({0} ∪ T × {-1}); its support at (xi, q) is the
# fee subproblem max(f(xi) - q, 0) with an integral activation.
clipped = ClippedCone(cone)
value, point = clipped.support([1.0, 4.0, 0.5])
print("clipped-cone support at prices (1, 4) and fee 0.5:", value,
      "maximizer", point)

# Rewriting an instance in conic form leaves the optimal value unchanged.
inst = Instance(n=2, edges=(Edge(CappedConcaveEdge(capacity=1.0), (0, 1)),),
                utility=LinearUtility([1.0, 4.0]))
conic = conic_rewrite(inst)
print("conic rewrite: ambient dim", conic.ambient_dim,
      "selector of edge 0:", conic.selector(0))
print("direct optimum:", solve(inst).dual_value,
      " conic optimum:", solve_conic(conic).dual_value)
