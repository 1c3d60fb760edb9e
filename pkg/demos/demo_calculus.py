"""Composing flow sets: scaling, images, lifts, sums, and aggregates.

Downward closure survives every rule here, and support functions compose
exactly, which is what makes edge merging and splitting cheap.
"""

import numpy as np

from convexflow import (CappedConcaveEdge, LinearTickEdge, aggregate, lift,
                        minkowski_sum, nonneg_matrix_image, scale)

base = CappedConcaveEdge(capacity=1.0)

# Scaling an edge doubles its support.
print("scaling: f_{2T}(1, 4) =", scale(base, 2.0).support([1.0, 4.0]).value)

# A nonnegative injective matrix image: prices pull back through A^T.
image = nonneg_matrix_image(base, np.diag([1.0, 2.0]))
print("diag(1, 2) image: f(1, 2) =", image.support([1.0, 2.0]).value,
      " equals f_T(1, 4) =", base.support([1.0, 4.0]).value)

# Lifting embeds an edge into a larger node space; unselected nodes can
# only dissipate.
lifted = lift(base, [0, 2], 4)
value, flow = lifted.support([1.0, 9.0, 4.0, 7.0])
print("lift to nodes {0, 2} of 4: support", value, "flow", flow)

# Two opposing directed edges summed give an undirected edge: flow can go
# either way (the classic either-direction picture).
backward = nonneg_matrix_image(base, np.array([[0.0, 1.0], [1.0, 0.0]]))
undirected = minkowski_sum(base, backward)
print("undirected edge contains (-1, 0.5):", undirected.contains([-1.0, 0.5]))
print("undirected edge contains (0.5, -1):", undirected.contains([0.5, -1.0]))
print("but not (0.6, 0.6):", undirected.contains([0.6, 0.6]))

# An orderbook is the aggregate of its ticks; depth adds.
ticks = [(LinearTickEdge(price=p, cap=1.0), [0, 1]) for p in (1.0, 0.9, 0.8)]
book = aggregate(ticks, 2)
print("three-tick orderbook depth at prices (0, 1):",
      book.support([0.0, 1.0]).value)
