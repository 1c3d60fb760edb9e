import math

import numpy as np
import pytest

from convexflow.errors import (EdgeUtilityNotSupported, InfeasibleProblemError,
                               UnboundedProblemError)
from convexflow.model import (Edge, Instance, LinearUtility, QuadraticUtility,
                              ThresholdUtility)
from convexflow.sets import (CappedConcaveEdge, HalfLineEdge, LinearTickEdge,
                             ProductMarketEdge)
from convexflow.solver import (SolveReport, SolverOptions, dual_value_and_gradient,
                               minimize_dual, recover_primal, report_to_document,
                               solve, verify_optimality)

from oracles import central_difference


def capped_instance(fee, c=(1.0, 4.0), mu=None):
    utility = LinearUtility(c) if mu is None else QuadraticUtility(c, mu)
    return Instance(n=2, edges=(Edge(CappedConcaveEdge(capacity=1.0), (0, 1),
                                     fee=fee),), utility=utility)


def random_instance(rng, n_max=8, m_max=16, fee_range=(0.01, 1.0), mu=0.3):
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    edges = []
    for _ in range(m):
        kind = rng.integers(0, 4)
        fee = float(rng.uniform(*fee_range))
        if kind == 0:
            the_set = CappedConcaveEdge(capacity=float(rng.uniform(0.5, 2.0)))
        elif kind == 1:
            the_set = LinearTickEdge(price=float(rng.uniform(0.5, 2.0)),
                                     cap=float(rng.uniform(0.5, 2.0)))
        elif kind == 2:
            the_set = ProductMarketEdge(rng.uniform(1.0, 5.0, size=2))
        else:
            edges.append(Edge(HalfLineEdge(float(rng.uniform(0.5, 2.0))),
                              (int(rng.integers(0, n)),), fee=fee))
            continue
        pair = rng.choice(n, size=2, replace=False)
        edges.append(Edge(the_set, tuple(int(v) for v in pair), fee=fee))
    c = rng.uniform(0.5, 1.5, size=n)
    return Instance(n=n, edges=tuple(edges), utility=QuadraticUtility(c, mu))


class TestDualValueAndGradient:
    def test_active_edge_term(self):
        inst = capped_instance(0.5)
        g, grad, state = dual_value_and_gradient(inst, [1.0, 4.0])
        assert g == pytest.approx(0.5)
        assert state.records[0].active and not state.records[0].tied

    def test_inactive_edge_term(self):
        inst = capped_instance(2.0)
        g, grad, state = dual_value_and_gradient(inst, [1.0, 4.0])
        assert g == 0.0
        assert not state.records[0].active

    def test_gradient_reduces_to_conjugate_part(self):
        # fee too high for any activation: only the network term varies
        c, mu = np.array([1.0, 1.0]), 1.0
        inst = capped_instance(5.0, c=c, mu=mu)
        nu = np.array([0.7, 0.9])
        g, grad, state = dual_value_and_gradient(inst, nu)
        assert grad == pytest.approx(-(c - nu) / mu)

    def test_out_of_domain_price(self):
        inst = capped_instance(0.5)
        g, grad, _ = dual_value_and_gradient(inst, [1.0, 3.0])  # nu != c
        assert g == math.inf and grad is None

    def test_negative_nu_clamped(self):
        inst = capped_instance(0.5, c=(1.0, 1.0), mu=1.0)
        g, _, state = dual_value_and_gradient(inst, [-1.0, -1.0])
        assert np.all(state.nu == 0.0)
        assert math.isfinite(g)

    def test_nonzero_edge_utility_rejected(self):
        inst = Instance(n=2, edges=(Edge(CappedConcaveEdge(capacity=1.0), (0, 1),
                                         edge_utility=(1.0, 0.0)),),
                        utility=LinearUtility([1.0, 4.0]))
        with pytest.raises(EdgeUtilityNotSupported):
            dual_value_and_gradient(inst, [1.0, 4.0])


class TestMinimizeDual:
    def test_linear_short_circuit(self):
        inst = capped_instance(0.5)
        state = minimize_dual(inst)
        assert state.nu == pytest.approx([1.0, 4.0])
        assert state.g == pytest.approx(0.5)
        assert state.iterations == 1

    def test_quadratic_matches_grid_oracle(self):
        # frozen from a 2e6-point sweep of the frontier curve
        # 4 h(w) - (w^2 + h(w)^2) / 2 with h(w) = w / (1 + w)
        inst = capped_instance(0.0, c=(0.0, 4.0), mu=1.0)
        state = minimize_dual(inst)
        assert state.converged
        assert state.g == pytest.approx(1.3789653628876, abs=1e-6)

    def test_infeasible_start_is_clamped(self):
        inst = capped_instance(0.0, c=(1.0, 1.0), mu=1.0)
        opts = SolverOptions(start=np.array([-1.0, -1.0]), keep_trace=True)
        state = minimize_dual(inst, opts)
        assert state.converged
        assert np.all(state.nu >= 0.0)

    def test_monotone_accepted_iterates(self, rng):
        inst = random_instance(rng)
        state = minimize_dual(inst, SolverOptions(keep_trace=True))
        trace = np.array(state.trace)
        assert np.all(np.diff(trace) <= 1e-12 * (1 + np.abs(trace[:-1])))

    def test_projected_stationarity_at_convergence(self, rng):
        for _ in range(5):
            inst = random_instance(rng, n_max=5, m_max=8)
            state = minimize_dual(inst)
            if not state.converged:
                continue
            projected = state.nu - np.maximum(state.nu - state.gradient, 0.0)
            assert np.abs(projected).max() <= 1e-8

    def test_unbounded_linear_detected(self):
        # negative utility weight on a reachable node: flow can run away
        inst = capped_instance(0.0, c=(-1.0, 4.0))
        with pytest.raises(UnboundedProblemError):
            minimize_dual(inst)

    def test_threshold_breakpoint_scan(self):
        inst = Instance(n=1,
                        edges=(Edge(HalfLineEdge(2.0), (0,), fee=2.0),
                               Edge(HalfLineEdge(3.0), (0,), fee=3.0)),
                        utility=ThresholdUtility(5.0))
        state = minimize_dual(inst)
        assert state.nu == pytest.approx([1.0])
        assert state.g == pytest.approx(-5.0)
        assert all(r.tied for r in state.records)

    def test_threshold_infeasible(self):
        inst = Instance(n=1, edges=(Edge(HalfLineEdge(2.0), (0,), fee=2.0),),
                        utility=ThresholdUtility(5.0))
        with pytest.raises(InfeasibleProblemError):
            minimize_dual(inst)


class TestRecoverPrimal:
    def test_active_edge_recovery(self):
        inst = capped_instance(0.5)
        report = solve(inst)
        assert report.y_hat == pytest.approx([-1.0, 0.5])
        assert report.primal_value == pytest.approx(0.5)
        assert report.gap == pytest.approx(0.0, abs=1e-12)
        assert report.activations == pytest.approx([-1.0])

    def test_inactive_edge_recovery(self):
        report = solve(capped_instance(2.0))
        assert report.y_hat == pytest.approx([0.0, 0.0])
        assert report.primal_value == pytest.approx(0.0)

    def test_tie_enumeration_keeps_better_branch(self):
        # fee exactly equal to the support value at nu = c: both activation
        # choices are dual optimal and give the same primal value
        inst = capped_instance(1.0)
        report = solve(inst)
        assert report.tie_count == 1
        assert report.edge_tied == [True]
        assert report.primal_value == pytest.approx(0.0, abs=1e-12)
        assert report.gap == pytest.approx(0.0, abs=1e-12)

    def test_tie_cap_keeps_active_branch(self):
        # more tied edges than the enumeration cap: all stay active
        edges = tuple(Edge(HalfLineEdge(1.0), (0,), fee=1.0) for _ in range(3))
        inst = Instance(n=1, edges=edges, utility=ThresholdUtility(2.0))
        report = solve(inst, SolverOptions(max_tie_enum=0))
        assert np.all(report.activations == -1.0)

    def test_weak_duality_in_report(self, rng):
        for _ in range(10):
            report = solve(random_instance(rng, n_max=5, m_max=8))
            assert report.primal_value <= report.dual_value + 1e-8 * (
                1 + abs(report.dual_value))


class TestVerifyOptimality:
    def test_zero_gap_is_optimal(self):
        assert verify_optimality(solve(capped_instance(0.5))).status == "optimal"

    def test_irreducible_gap_certified_within_fee_bound(self):
        # relaxation reaches -b = -4 but the best subset sums to 5
        from convexflow.bench import gen_knapsack_instance

        inst = gen_knapsack_instance([2, 3], 4)
        report = solve(inst)
        result = verify_optimality(report, tol=1e-8)
        assert result.status == "gap_certified"
        lower, upper = result.bracket
        assert lower == pytest.approx(-5.0) and upper == pytest.approx(-4.0)
        assert upper - lower <= (inst.n + 1) * inst.max_fee() + 1e-9

    def test_no_finite_primal_is_unknown(self):
        report = SolveReport(dual_value=1.0, primal_value=-math.inf, flows=[],
                             activations=np.zeros(0), y_hat=np.zeros(1),
                             nu=np.zeros(1), gap=math.inf, rel_gap=math.inf,
                             tie_count=0, iterations=1, converged=True)
        assert verify_optimality(report).status == "unknown"

    def test_fee_free_quadratic_is_optimal(self, rng):
        inst = random_instance(rng, n_max=5, m_max=6, fee_range=(0.0, 0.0))
        report = solve(inst)
        assert verify_optimality(report, tol=1e-6).status == "optimal"


class TestInvariants:
    def test_gradient_matches_central_differences(self, rng):
        checked = 0
        while checked < 30:
            inst = random_instance(rng)
            nu = rng.uniform(0.2, 2.0, size=inst.n)
            g, grad, state = dual_value_and_gradient(inst, nu)
            # tie-free points only: the dual is differentiable there
            if min(abs(r.value - e.fee) for r, e in zip(state.records, inst.edges)) <= 1e-4:
                continue
            numeric = central_difference(
                lambda v: dual_value_and_gradient(inst, v)[0], nu)
            scale = max(1.0, float(np.abs(grad).max()))
            assert np.abs(grad - numeric).max() <= 1e-5 * scale
            checked += 1

    def test_dual_convex_along_lines(self, rng):
        inst = random_instance(rng, n_max=5, m_max=8)
        for _ in range(40):
            nu1 = rng.uniform(0.0, 2.0, size=inst.n)
            nu2 = rng.uniform(0.0, 2.0, size=inst.n)
            theta = rng.uniform()
            g1 = dual_value_and_gradient(inst, nu1)[0]
            g2 = dual_value_and_gradient(inst, nu2)[0]
            gm = dual_value_and_gradient(inst, theta * nu1 + (1 - theta) * nu2)[0]
            assert gm <= theta * g1 + (1 - theta) * g2 + 1e-9 * (1 + abs(g1) + abs(g2))

    def test_edge_records_independent_of_order(self, rng):
        inst = random_instance(rng, n_max=5, m_max=8)
        nu = rng.uniform(0.1, 2.0, size=inst.n)
        _, _, state = dual_value_and_gradient(inst, nu)
        perm = rng.permutation(inst.m)
        shuffled = Instance(n=inst.n, edges=tuple(inst.edges[i] for i in perm),
                            utility=inst.utility)
        _, _, state2 = dual_value_and_gradient(shuffled, nu)
        for k, i in enumerate(perm):
            a, b = state.records[i], state2.records[k]
            assert a.value == b.value and a.active == b.active
            if a.maximizer is None:
                assert b.maximizer is None
            else:
                assert np.array_equal(a.maximizer, b.maximizer)

    def test_repeat_evaluation_bit_identical(self, rng):
        inst = random_instance(rng)
        nu = rng.uniform(0.1, 2.0, size=inst.n)
        g1, grad1, _ = dual_value_and_gradient(inst, nu)
        g2, grad2, _ = dual_value_and_gradient(inst, nu)
        assert g1 == g2 and np.array_equal(grad1, grad2)


def test_report_document_schema():
    doc = report_to_document(solve(capped_instance(0.5)))
    assert set(doc) == {"objective_dual", "objective_primal", "gap", "nu", "edges"}
    assert doc["edges"][0]["lambda"] == -1.0
    assert doc["edges"][0]["value"] == pytest.approx(1.0)
    assert doc["edges"][0]["tied"] is False
