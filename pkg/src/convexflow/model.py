"""Problem instances: edges with node selectors and fees, network utilities,
degree bookkeeping, dual-side views, and the canonical document format.

Selector matrices are never materialized; an edge stores the list of
global node indices its local coordinates map to, and net flows are plain
scatter-adds over those lists.

Sign convention for the dual.  The Lagrange multiplier is placed on
``sum_i A_i x_i - y``, so the network conjugate is

    Ubar(nu) = sup_y ( U(y) - nu @ y )

and every edge subproblem sees the pulled price ``xi_i = nu[nodes_i]``
with nu >= 0.  With this convention the fee dual's edge terms are support
functions of the flow sets less the fee, which is exactly what the
solver evaluates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import IsolatedNodeError, SchemaError
from .sets import (CappedConcaveEdge, FlowSet, HalfLineEdge, LinearTickEdge,
                   PiecewiseLinearGain, ProductMarketEdge, RationalGain, as_vector,
                   scaled_tol)

SCHEMA_VERSION = 1


class LinearUtility:
    """U(y) = c @ y."""

    def __init__(self, c: Sequence[float]):
        self.c = np.asarray(c, dtype=float)
        if self.c.ndim != 1:
            raise ValueError("c must be a vector")

    @property
    def dim(self) -> int:
        return self.c.size

    def value(self, y) -> float:
        return float(self.c @ as_vector(y, self.dim))

    def conjugate(self, nu) -> tuple[float, np.ndarray | None]:
        """sup_y U(y) - nu @ y: 0 on nu = c, +inf elsewhere (no unique maximizer)."""
        v = as_vector(nu, self.dim)
        scale = max(1.0, float(np.max(np.abs(self.c))) if self.c.size else 1.0)
        if np.max(np.abs(v - self.c), initial=0.0) <= 1e-12 * scale:
            return 0.0, None
        return math.inf, None


class QuadraticUtility:
    """U(y) = c @ y - (mu / 2) * y @ y with risk aversion mu > 0.

    Nondecreasing only on y <= c / mu; the solver keeps prices
    nonnegative, which matches how the routing experiment uses it.
    """

    def __init__(self, c: Sequence[float], mu: float):
        self.c = np.asarray(c, dtype=float)
        if self.c.ndim != 1:
            raise ValueError("c must be a vector")
        if mu <= 0.0:
            raise ValueError("mu must be positive")
        self.mu = float(mu)

    @property
    def dim(self) -> int:
        return self.c.size

    def value(self, y) -> float:
        v = as_vector(y, self.dim)
        return float(self.c @ v - 0.5 * self.mu * (v @ v))

    def conjugate(self, nu) -> tuple[float, np.ndarray]:
        v = as_vector(nu, self.dim)
        diff = self.c - v
        maximizer = diff / self.mu
        return float(diff @ diff) / (2.0 * self.mu), maximizer


class ThresholdUtility:
    """Scalar demand utility: 0 when the net flow reaches b, -inf below it.

    This is the utility of the knapsack reduction; maximizing it only asks
    for feasibility of y >= b while the fees account for the cost.
    """

    def __init__(self, b: float):
        self.b = float(b)

    @property
    def dim(self) -> int:
        return 1

    def value(self, y) -> float:
        v = as_vector(y, 1)
        if v[0] >= self.b - scaled_tol(1e-9, self.b):
            return 0.0
        return -math.inf

    def conjugate(self, nu) -> tuple[float, np.ndarray | None]:
        v = as_vector(nu, 1)
        if v[0] < 0.0:
            return math.inf, None
        return -float(v[0]) * self.b, np.array([self.b])


Utility = LinearUtility | QuadraticUtility | ThresholdUtility


@dataclass(frozen=True)
class Edge:
    """One hyperedge: a flow set, the global nodes it touches, and a fixed fee.

    ``edge_utility`` carries linear edge-utility coefficients for schema
    completeness; the solver only accepts edges whose utility is absent
    or identically zero.
    """

    flow_set: FlowSet
    nodes: tuple[int, ...]
    fee: float = 0.0
    edge_utility: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(int(v) for v in self.nodes))
        if len(self.nodes) != self.flow_set.dim:
            raise ValueError("need one node per flow-set coordinate")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("edge nodes must be distinct")
        if self.fee < 0.0:
            raise ValueError("fee must be nonnegative")
        if self.edge_utility is not None:
            coeffs = tuple(float(v) for v in self.edge_utility)
            if len(coeffs) != self.flow_set.dim:
                raise ValueError("edge utility length must match the flow set")
            object.__setattr__(self, "edge_utility", coeffs)

    @property
    def degree(self) -> int:
        return len(self.nodes)

    def has_zero_utility(self) -> bool:
        return self.edge_utility is None or all(v == 0.0 for v in self.edge_utility)


@dataclass(frozen=True)
class Instance:
    """A convex flow problem: n nodes, hyperedges, and a network utility."""

    n: int
    edges: tuple[Edge, ...]
    utility: Utility

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        if self.n < 1:
            raise ValueError("need at least one node")
        if self.utility.dim != self.n:
            raise ValueError("utility dimension must equal the node count")
        for edge in self.edges:
            if any(v >= self.n for v in edge.nodes):
                raise ValueError("edge node index out of range")

    @property
    def m(self) -> int:
        return len(self.edges)

    def isolated_nodes(self) -> list[int]:
        touched = np.zeros(self.n, dtype=bool)
        for edge in self.edges:
            touched[list(edge.nodes)] = True
        return [int(j) for j in np.nonzero(~touched)[0]]

    def max_fee(self) -> float:
        return max((edge.fee for edge in self.edges), default=0.0)


def net_flow(instance: Instance, flows: Sequence) -> np.ndarray:
    """y = sum of edge flows scattered to their global nodes."""
    if len(flows) != instance.m:
        raise ValueError("need one flow vector per edge")
    y = np.zeros(instance.n)
    for edge, x in zip(instance.edges, flows):
        y[list(edge.nodes)] += as_vector(x, edge.degree)
    return y


def node_degrees(instance: Instance, strict: bool = False) -> np.ndarray:
    """Diagonal of D = sum_i A_i A_i^T: how many edges touch each node."""
    deg = np.zeros(instance.n, dtype=int)
    for edge in instance.edges:
        deg[list(edge.nodes)] += 1
    if strict and np.any(deg == 0):
        missing = np.nonzero(deg == 0)[0].tolist()
        raise IsolatedNodeError(f"isolated nodes: {missing}")
    return deg


@dataclass(frozen=True)
class DualInstanceView:
    """Dual-side bundle: node degrees, the network conjugate, and per-edge
    polar-cone oracles, used to evaluate the dual objective at candidate
    points and check weak duality without running the solver."""

    instance: Instance
    degrees: np.ndarray
    conjugate: Callable[[np.ndarray], tuple[float, np.ndarray | None]]
    polar_oracles: tuple[Callable[..., bool], ...] = field(repr=False)

    def dual_objective(self, nu) -> float:
        """Ubar(nu) + sum_i max(f_i(nu[nodes_i]) - q_i, 0)."""
        v = as_vector(nu, self.instance.n)
        total, _ = self.conjugate(v)
        if not math.isfinite(total):
            return math.inf
        for edge in self.instance.edges:
            value = edge.flow_set.support(v[list(edge.nodes)]).value
            if not math.isfinite(value):
                return math.inf
            total += max(value - edge.fee, 0.0)
        return total


def build_dual_view(instance: Instance) -> DualInstanceView:
    from .conic import FlowCone  # local import: conic depends on model types

    degrees = node_degrees(instance, strict=True)
    oracles = tuple(FlowCone(edge.flow_set).polar_contains for edge in instance.edges)
    return DualInstanceView(instance=instance, degrees=degrees,
                            conjugate=instance.utility.conjugate,
                            polar_oracles=oracles)


# ---------------------------------------------------------------------------
# canonical document format
# ---------------------------------------------------------------------------
#
# {"version": 1, "n": ..., "utility": {...}, "edges": [{kind, params, nodes,
#  fee, edge_utility?}], "meta"?: {...}}  -- numbers as decimal doubles,
# UTF-8, keys sorted in the canonical text form.

def _encode_gain(gain) -> dict:
    if isinstance(gain, RationalGain):
        return {"kind": "rational"}
    if isinstance(gain, PiecewiseLinearGain):
        points = [[float(w), float(h)] for w, h in zip(gain.inputs[1:], gain.outputs[1:])]
        return {"kind": "piecewise_linear", "points": points}
    raise SchemaError(f"gain {type(gain).__name__} is not serializable")


def _decode_gain(doc: dict):
    kind = doc.get("kind")
    if kind == "rational":
        return RationalGain()
    if kind == "piecewise_linear":
        return PiecewiseLinearGain(doc["points"])
    raise SchemaError(f"unknown gain kind: {kind!r}")


def _encode_set(the_set: FlowSet) -> tuple[str, dict]:
    if isinstance(the_set, CappedConcaveEdge):
        return "capped_concave", {"capacity": the_set.capacity,
                                  "gain": _encode_gain(the_set.gain)}
    if isinstance(the_set, LinearTickEdge):
        return "linear_tick", {"price": the_set.price, "cap": the_set.cap}
    if isinstance(the_set, ProductMarketEdge):
        return "product_market", {"reserves": [float(v) for v in the_set.reserves]}
    if isinstance(the_set, HalfLineEdge):
        return "half_line", {"cap": the_set.cap}
    raise SchemaError(f"set {type(the_set).__name__} is not serializable")


def _decode_set(kind: str, params: dict) -> FlowSet:
    try:
        if kind == "capped_concave":
            return CappedConcaveEdge(gain=_decode_gain(params["gain"]),
                                     capacity=params["capacity"])
        if kind == "linear_tick":
            return LinearTickEdge(price=params["price"], cap=params["cap"])
        if kind == "product_market":
            return ProductMarketEdge(params["reserves"])
        if kind == "half_line":
            return HalfLineEdge(params["cap"])
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"bad parameters for set kind {kind!r}: {exc}") from exc
    raise SchemaError(f"unknown set kind: {kind!r}")


def _encode_utility(utility: Utility) -> dict:
    if isinstance(utility, LinearUtility):
        return {"kind": "linear", "c": [float(v) for v in utility.c]}
    if isinstance(utility, QuadraticUtility):
        return {"kind": "quadratic", "c": [float(v) for v in utility.c],
                "mu": utility.mu}
    if isinstance(utility, ThresholdUtility):
        return {"kind": "threshold", "b": utility.b}
    raise SchemaError(f"utility {type(utility).__name__} is not serializable")


def _decode_utility(doc: dict) -> Utility:
    kind = doc.get("kind")
    try:
        if kind == "linear":
            return LinearUtility(doc["c"])
        if kind == "quadratic":
            return QuadraticUtility(doc["c"], doc["mu"])
        if kind == "threshold":
            return ThresholdUtility(doc["b"])
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"bad parameters for utility kind {kind!r}: {exc}") from exc
    raise SchemaError(f"unknown utility kind: {kind!r}")


def to_document(instance: Instance, meta: dict | None = None) -> dict:
    edges = []
    for edge in instance.edges:
        kind, params = _encode_set(edge.flow_set)
        doc = {"kind": kind, "params": params,
               "nodes": list(edge.nodes), "fee": float(edge.fee)}
        if edge.edge_utility is not None:
            doc["edge_utility"] = [float(v) for v in edge.edge_utility]
        edges.append(doc)
    out = {"version": SCHEMA_VERSION, "n": instance.n,
           "utility": _encode_utility(instance.utility), "edges": edges}
    if meta is not None:
        out["meta"] = meta
    return out


def from_document(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise SchemaError("instance document must be a JSON object")
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported document version: {version!r}")
    for key in ("n", "utility", "edges"):
        if key not in doc:
            raise SchemaError(f"missing field: {key!r}")
    if not isinstance(doc["edges"], list) or not isinstance(doc["utility"], dict):
        raise SchemaError("edges must be an array and utility an object")
    edges = []
    for i, edge_doc in enumerate(doc["edges"]):
        if not isinstance(edge_doc, dict):
            raise SchemaError(f"edge {i}: must be an object")
        fee = edge_doc.get("fee", 0.0)
        if fee < 0.0:
            raise SchemaError(f"edge {i}: fee must be nonnegative")
        the_set = _decode_set(edge_doc.get("kind"), edge_doc.get("params", {}))
        utility = edge_doc.get("edge_utility")
        try:
            edges.append(Edge(flow_set=the_set, nodes=tuple(edge_doc["nodes"]),
                              fee=float(fee),
                              edge_utility=None if utility is None else tuple(utility)))
        except (KeyError, ValueError) as exc:
            raise SchemaError(f"edge {i}: {exc}") from exc
    try:
        return Instance(n=int(doc["n"]), edges=tuple(edges),
                        utility=_decode_utility(doc["utility"]))
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def dumps(instance: Instance, meta: dict | None = None) -> str:
    """Canonical UTF-8 text form: sorted keys, minimal separators."""
    return json.dumps(to_document(instance, meta=meta), sort_keys=True,
                      separators=(",", ":"))


def loads(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    return from_document(doc)
