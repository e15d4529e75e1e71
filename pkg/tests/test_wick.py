from fractions import Fraction as F
from math import prod

import pytest

from oracles import brute_force_diagrams, points_of
from oscqgt.scalar_algebra import ScalarSeries
from oscqgt.wick import (
    GaussianModel,
    InsertionPoint,
    connected_pair_correlator,
    diagram_to_dot,
    enumerate_pairings,
    moment,
    product_of_sums,
)

FREE = GaussianModel(source_j=False)
SOURCED = GaussianModel(source_j=True)

MEAN = ScalarSeries.term(-1, alpha_half_pow=-2, j_pow=1)  # <q> = -J/alpha


@pytest.mark.parametrize("n", range(1, 7))
def test_pairing_count_double_factorial(n):
    diagrams = enumerate_pairings([InsertionPoint("t", 2 * n)])
    assert sum(d.multiplicity for d in diagrams) == prod(range(2 * n - 1, 0, -2))


def test_two_by_two_diagrams():
    diagrams = enumerate_pairings(points_of({"tau1": 2, "tau2": 2}))
    by_edges = {d.edges: d.multiplicity for d in diagrams}
    assert by_edges == {
        (("tau1", "tau2"), ("tau1", "tau2")): 2,
        (("tau1", "tau1"), ("tau2", "tau2")): 1,
    }


def test_single_propagator():
    diagrams = enumerate_pairings(points_of({"tau1": 1, "tau2": 1}))
    assert len(diagrams) == 1
    assert diagrams[0].edges == (("tau1", "tau2"),)
    assert diagrams[0].multiplicity == 1


def test_quartic_vertex_vacuum_factor():
    # all three pairings of four equal-time legs give the same self-loop pair
    diagrams = enumerate_pairings([InsertionPoint("s", 4)])
    assert len(diagrams) == 1
    assert diagrams[0].edges == (("s", "s"), ("s", "s"))
    assert diagrams[0].multiplicity == 3


@pytest.mark.parametrize(
    "legs",
    [
        {"tau1": 2, "tau2": 2},
        {"tau1": 4, "tau2": 2},
        {"tau1": 2, "tau2": 2, "s1": 4},
        {"tau1": 1, "tau2": 3, "s1": 2},
        {"tau1": 3, "s1": 3},
    ],
)
@pytest.mark.parametrize("with_mean", [False, True])
def test_matches_brute_force_enumeration(legs, with_mean):
    got = {
        (d.edges, d.mean_legs): d.multiplicity
        for d in enumerate_pairings(points_of(legs), with_mean=with_mean)
    }
    assert got == brute_force_diagrams(points_of(legs), with_mean=with_mean)


@pytest.mark.parametrize("power", [1, 3, 5])
def test_odd_free_moments_vanish(power):
    assert moment(FREE, [InsertionPoint("t", power)]) == []


def test_one_point_function_with_source():
    terms = moment(SOURCED, [InsertionPoint("t", 1)])
    assert len(terms) == 1
    assert terms[0].propagators == ()
    assert terms[0].coeff == MEAN


def test_sourced_two_point_subtraction():
    # <q q> - <q><q> = D(tau1, tau2): the mean contributions cancel
    connected = connected_pair_correlator(
        SOURCED, [InsertionPoint("tau1", 1)], [InsertionPoint("tau2", 1)]
    )
    assert len(connected) == 1
    assert connected[0].edges == (("tau1", "tau2"),)
    assert connected[0].coeff == ScalarSeries.one()


def test_connected_q2_q2_free():
    connected = connected_pair_correlator(
        FREE, [InsertionPoint("tau1", 2)], [InsertionPoint("tau2", 2)]
    )
    assert len(connected) == 1
    assert connected[0].edges == (("tau1", "tau2"), ("tau1", "tau2"))
    assert connected[0].coeff == ScalarSeries.term(2)


def test_connected_q2_q_with_source():
    connected = connected_pair_correlator(
        SOURCED, [InsertionPoint("tau1", 2)], [InsertionPoint("tau2", 1)]
    )
    assert len(connected) == 1
    assert connected[0].edges == (("tau1", "tau2"),)
    assert connected[0].coeff == MEAN * 2


def test_clusters_sharing_a_time_variable():
    # artificial split of one cluster: the disconnected algebra still cancels
    connected = connected_pair_correlator(
        SOURCED, [InsertionPoint("tau1", 1)], [InsertionPoint("tau1", 1)]
    )
    assert len(connected) == 1
    assert connected[0].edges == (("tau1", "tau1"),)
    assert connected[0].coeff == ScalarSeries.one()


def _relabel(products, mapping):
    out = []
    for p in products:
        edges = tuple(
            tuple(sorted((mapping.get(a, a), mapping.get(b, b)))) for a, b in p.edges
        )
        out.append((tuple(sorted(edges)), p.coeff))
    return sorted(out, key=lambda x: x[0])


@pytest.mark.parametrize(
    "legs_a,legs_b",
    [
        ({"tau1": 2}, {"tau2": 2}),
        ({"tau1": 3}, {"tau2": 1}),
        ({"tau1": 4}, {"tau2": 2}),
        ({"tau1": 1}, {"tau2": 3}),
    ],
)
@pytest.mark.parametrize("model", [FREE, SOURCED])
def test_cluster_swap_is_a_relabeling(legs_a, legs_b, model):
    ab = connected_pair_correlator(model, points_of(legs_a), points_of(legs_b))
    swap_a = {k.replace("tau1", "tau2"): v for k, v in legs_a.items()}
    swap_b = {k.replace("tau2", "tau1"): v for k, v in legs_b.items()}
    ba = connected_pair_correlator(model, points_of(swap_b), points_of(swap_a))
    swap = {"tau1": "tau2", "tau2": "tau1"}
    assert _relabel(ab, swap) == _relabel(ba, {})


def _component_nodes(edges):
    comps = []
    for a, b in edges:
        hit = [c for c in comps if a in c or b in c]
        merged = {a, b}.union(*hit) if hit else {a, b}
        comps = [c for c in comps if c not in hit] + [merged]
    return comps


@pytest.mark.parametrize(
    "legs_a,legs_b",
    [
        ({"tau1": 2}, {"tau2": 2}),
        ({"tau1": 2}, {"tau2": 4}),
        ({"tau1": 4}, {"tau2": 4}),
        ({"tau1": 3}, {"tau2": 3}),
        ({"tau1": 4}, {"tau2": 6}),
    ],
)
def test_subtraction_equals_connectivity_filter(legs_a, legs_b):
    # the subtracted correlator must equal the linked-diagram part of the
    # joint moment, computed here with an independent component filter
    connected = {
        p.edges: p.coeff for p in connected_pair_correlator(FREE, points_of(legs_a), points_of(legs_b))
    }
    joint = moment(FREE, points_of(legs_a) + points_of(legs_b))
    filtered = {}
    for p in joint:
        linked = any(
            "tau1" in comp and "tau2" in comp for comp in _component_nodes(p.edges)
        )
        if linked:
            filtered[p.edges] = p.coeff
    assert connected == filtered


def test_moment_with_source_reduces_to_free_at_zero_mean():
    # J = 0 evaluation of the sourced moment equals the free moment
    pts = points_of({"tau1": 2, "tau2": 2})
    sourced = moment(SOURCED, pts)
    free = {p.edges: p.coeff for p in moment(FREE, pts)}
    for p in sourced:
        j_free = ScalarSeries.from_terms(t for t in p.coeff.terms if t.j_pow == 0)
        if p.edges in free:
            assert j_free == free[p.edges]
        else:
            assert j_free.is_zero


def test_product_of_sums_merges_duplicates():
    a = moment(FREE, points_of({"tau1": 2}))
    combined = product_of_sums(a, a)
    assert len(combined) == 1
    assert combined[0].coeff == ScalarSeries.one()


def test_dot_export():
    diagram = enumerate_pairings(points_of({"tau1": 2, "tau2": 2}))[1]
    dot = diagram_to_dot(diagram, "pair")
    assert "graph pair" in dot
    assert dot.count("tau1 -- tau2") == 2
    assert "multiplicity 2" in dot
