import itertools
import math
import random
from fractions import Fraction as F

import pytest

from oracles import product_value, quad_internal_vertex, quad_wedge
from oscqgt.integrator import (
    TAU1,
    TAU2,
    Chamber,
    DivergentIntegral,
    Domain,
    ExpPolyTerm,
    Propagator,
    PropagatorProduct,
    TimeVar,
    enumerate_chambers,
    integrate_all,
    integrate_innermost,
    internal_vertex,
    propagator_value,
    resolve_absolute_values,
    wedge_integral,
)
from oscqgt.scalar_algebra import ScalarSeries, ScalarTerm

S1 = internal_vertex(1)
S2 = internal_vertex(2)


def product(edges, coeff=None):
    return PropagatorProduct(coeff or ScalarSeries.one(), tuple(Propagator(e) for e in edges))


class TestResolve:
    def test_wedge_propagator_single_chamber(self):
        terms = resolve_absolute_values(product([("tau1", "tau2")]), [TAU1, TAU2])
        assert len(terms) == 1
        t = terms[0]
        assert t.rates_dict == {"tau1": F(1), "tau2": F(-1)}
        assert t.scalar == ScalarTerm(F(1, 2), -1)

    def test_vertex_bridge_three_chambers(self):
        terms = resolve_absolute_values(
            product([("s1", "tau1"), ("s1", "tau2")]), [TAU1, TAU2, S1]
        )
        chambers = {t.chamber.describe(): t for t in terms}
        assert set(chambers) == {
            "s1 < tau1 < tau2",
            "tau1 < s1 < tau2",
            "tau1 < tau2 < s1",
        }
        # the middle chamber is where the s-dependence cancels
        assert chambers["tau1 < s1 < tau2"].rates_dict.get("s1") is None

    def test_equal_time_loop_is_constant(self):
        terms = resolve_absolute_values(product([("tau1", "tau1")]), [TAU1])
        assert len(terms) == 1
        assert terms[0].rates == ()
        assert terms[0].scalar == ScalarTerm(F(1, 2), -1)

    @pytest.mark.parametrize("alpha", [0.7, 1.0, 2.3])
    def test_chambers_tile_the_integrand(self, alpha):
        # at random points, exactly one chamber matches and reproduces |.| value
        rng = random.Random(7)
        edges = [("s1", "tau1"), ("s1", "tau2"), ("tau1", "tau2")]
        terms = resolve_absolute_values(product(edges), [TAU1, TAU2, S1])
        for _ in range(20):
            assignment = {
                "tau1": -rng.uniform(0, 3),
                "tau2": rng.uniform(0, 3),
                "s1": rng.uniform(-4, 4),
            }
            order = sorted(assignment, key=assignment.get)
            matches = [
                t for t in terms if [v.name for v in t.chamber.order] == order
            ]
            assert len(matches) == 1
            got = matches[0].evaluate(alpha, assignment)
            want = product_value(alpha, edges, assignment)
            assert got == pytest.approx(want, rel=1e-12)


class TestKernels:
    def test_exponential_half_axis(self):
        # int_0^inf e^(-sqrt(a) u) du = 1/sqrt(a)
        term = ExpPolyTerm(
            ScalarTerm(F(1)), (), (("tau2", F(-1)),), Chamber((TAU2,))
        )
        out = integrate_innermost(term, TAU2)
        assert len(out) == 1
        assert out[0].scalar == ScalarTerm(F(1), -1)

    def test_monomial_exponential(self):
        # int_0^inf u e^(-2 sqrt(a) u) du = 1/(4a)
        term = ExpPolyTerm(
            ScalarTerm(F(1)), (("tau2", 1),), (("tau2", F(-2)),), Chamber((TAU2,))
        )
        out = integrate_innermost(term, TAU2)
        assert len(out) == 1
        assert out[0].scalar == ScalarTerm(F(1, 4), -2)

    def test_zero_rate_bounded_interval_bumps_degree(self):
        # int_tau1^tau2 ds of an s-independent term gives (tau2 - tau1)
        term = ExpPolyTerm(
            ScalarTerm(F(1)), (), (), Chamber((TAU1, S1, TAU2))
        )
        out = integrate_innermost(term, S1)
        monos = sorted((t.monomial, t.scalar.coeff) for t in out)
        assert monos == [
            ((("tau1", 1),), F(-1)),
            ((("tau2", 1),), F(1)),
        ]

    def test_zero_rate_unbounded_diverges(self):
        term = ExpPolyTerm(ScalarTerm(F(1)), (), (), Chamber((S1, TAU1, TAU2)))
        with pytest.raises(DivergentIntegral):
            integrate_innermost(term, S1)

    def test_wrong_sign_rate_diverges(self):
        term = ExpPolyTerm(
            ScalarTerm(F(1)), (), (("tau2", F(1)),), Chamber((TAU2,))
        )
        with pytest.raises(DivergentIntegral):
            integrate_innermost(term, TAU2)

    @pytest.mark.parametrize("alpha", [0.6, 1.0, 1.9])
    def test_innermost_vertex_matches_quadrature(self, alpha):
        rng = random.Random(3)
        cases = [
            [("s1", "tau1"), ("s1", "tau2")],
            [("s1", "tau1"), ("s1", "tau1"), ("s1", "tau2"), ("s1", "tau2")],
            [("s1", "tau1"), ("s1", "tau2"), ("s1", "tau2"), ("s1", "tau2")],
            [("s1", "s1"), ("s1", "tau1"), ("s1", "tau2"), ("tau1", "tau2")],
            [("s1", "tau1"), ("tau1", "tau2")],
        ]
        for edges in cases:
            resolved = resolve_absolute_values(product(edges), [TAU1, TAU2, S1])
            integrated = []
            for t in resolved:
                integrated.extend(integrate_innermost(t, S1))
            for _ in range(5):
                assignment = {"tau1": -rng.uniform(0.1, 2.5), "tau2": rng.uniform(0.1, 2.5)}
                # sum the surviving chambers (now orderings of tau1, tau2 only)
                total = sum(t.evaluate(alpha, assignment) for t in integrated)
                want = quad_internal_vertex(alpha, edges, assignment, "s1")
                assert total == pytest.approx(want, rel=1e-8)


class TestIntegrateAll:
    def test_wedge_of_single_propagator(self):
        # the (j, j) metric integrand
        assert wedge_integral([product([("tau1", "tau2")])]) == ScalarSeries.term(
            F(1, 2), -3
        )

    def test_wedge_of_double_propagator_with_prefactor(self):
        prod = product([("tau1", "tau2")] * 2, ScalarSeries.term(F(1, 2)))
        assert wedge_integral([prod]) == ScalarSeries.term(F(1, 32), -4)

    def test_wedge_with_internal_vertex(self):
        # "-2J * D(s,tau1) D(tau1,tau2)" integrand times the 1/2 prefactor
        prod = product(
            [("s1", "tau1"), ("tau1", "tau2")],
            ScalarSeries.term(F(-1), j_pow=1),
        )
        assert wedge_integral([prod], n_vertices=1) == ScalarSeries.term(
            F(-1, 2), -5, j_pow=1
        )

    @pytest.mark.parametrize(
        "edges,n_vertices",
        [
            ([("tau1", "tau2")], 0),
            ([("tau1", "tau2")] * 2, 0),
            ([("s1", "tau1"), ("s1", "tau2")], 1),
            ([("s1", "s1"), ("s1", "tau1"), ("s1", "tau2"), ("tau1", "tau2")], 1),
            ([("s1", "tau1"), ("s1", "tau1"), ("s1", "tau2"), ("s1", "tau2")], 1),
        ],
    )
    @pytest.mark.parametrize("alpha", [0.8, 1.7])
    def test_full_wedge_matches_quadrature(self, edges, n_vertices, alpha):
        series = wedge_integral([product(edges)], n_vertices=n_vertices)
        assert series.evaluate(alpha) == pytest.approx(
            quad_wedge(alpha, edges, n_vertices), rel=1e-8
        )

    def test_missing_external_dependence_diverges(self):
        with pytest.raises(DivergentIntegral):
            wedge_integral([product([("tau1", "tau1")])])

    def test_origin_endpoint_is_supported(self):
        # int_-inf^0 dtau1 int_0^inf dtau2 D(tau1, 0) D(0, tau2) = 1/(4 a^2)
        series = wedge_integral([product([("0", "tau1"), ("0", "tau2")])])
        assert series == ScalarSeries.term(F(1, 4), -4)

    def test_fubini_vertex_order_independence(self):
        edges = [
            ("s1", "tau1"), ("s1", "s2"), ("s2", "tau2"), ("tau1", "tau2"),
        ]
        orders = [
            [S1, S2, TAU2, TAU1],
            [S2, S1, TAU2, TAU1],
        ]
        results = {
            wedge_integral([product(edges)], n_vertices=2, elimination_order=o)
            for o in orders
        }
        assert len(results) == 1

    def test_scaling_law_alpha_exponent(self):
        # a product of p propagators integrated over v variables lands on
        # alpha^(-(p+v)/2) relative to the bare coefficient
        cases = [
            ([("tau1", "tau2")], 0),
            ([("tau1", "tau2")] * 3, 0),
            ([("s1", "tau1"), ("s1", "tau2")], 1),
            ([("s1", "s1"), ("s1", "tau1"), ("s1", "tau2"), ("tau1", "tau2")], 1),
            ([("s1", "tau1"), ("s1", "s2"), ("s2", "tau2"), ("tau1", "tau2")], 2),
        ]
        for edges, n_vertices in cases:
            series = wedge_integral([product(edges)], n_vertices=n_vertices)
            p, v = len(edges), n_vertices + 2
            assert all(t.alpha_half_pow == -(p + v) for t in series.terms)


class TestChambers:
    def test_counts_without_origin(self):
        assert len(enumerate_chambers([TAU1, TAU2])) == 1
        assert len(enumerate_chambers([TAU1, TAU2, S1])) == 3
        # two vertices: 4!/2 orderings with tau1 before tau2
        assert len(enumerate_chambers([TAU1, TAU2, S1, S2])) == 12

    def test_counts_with_origin(self):
        # the pinned origin splits the vertex gap between the external legs
        assert len(enumerate_chambers([TAU1, TAU2, S1], include_origin=True)) == 4


class TestGreenFunction:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_jump_condition(self, alpha):
        # (d^2/dt^2 - alpha) D = -delta: the slope of D jumps by -1 across
        # the diagonal
        eps = 1e-7
        t0 = 0.4
        right = (propagator_value(alpha, t0 + 2 * eps, t0) - propagator_value(alpha, t0, t0)) / (2 * eps)
        left = (propagator_value(alpha, t0, t0) - propagator_value(alpha, t0 - 2 * eps, t0)) / (2 * eps)
        assert right - left == pytest.approx(-1.0, rel=1e-5)

    @pytest.mark.parametrize("alpha", [0.5, 2.0])
    def test_homogeneous_away_from_diagonal(self, alpha):
        h = 1e-5
        t, t0 = 1.3, 0.2
        second = (
            propagator_value(alpha, t + h, t0)
            - 2 * propagator_value(alpha, t, t0)
            + propagator_value(alpha, t - h, t0)
        ) / h**2
        assert second == pytest.approx(alpha * propagator_value(alpha, t, t0), rel=1e-4)
