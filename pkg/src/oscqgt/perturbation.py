"""Interacting Green's functions as formal power series in the coupling.

The n-point function of the theory with interaction lambda*V(q) is the ratio
of two free-oscillator series: at order m the numerator inserts m internal
vertices s_1..s_m, each carrying q**deg and weight (-lambda)^m/m! times the
potential coefficients, while the denominator holds the pure vacuum series.
The ratio is computed by formal power-series division truncated at the
requested order; vacuum-bubble contributions then cancel identically, and the
subtracted two-cluster combination keeps exactly the diagrams that join the
two external clusters.

Diagrams are stored per coupling order as {edge-multiset: exact coefficient},
with internal vertex labels canonicalized (relabelings merged, the 1/m!
symmetrization absorbed into the coefficients).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Iterable, Mapping, Sequence

from .integrator import Propagator, PropagatorProduct
from .scalar_algebra import ScalarSeries
from .wick import InsertionPoint, enumerate_pairings

__all__ = [
    "PolynomialPotential",
    "DeformationOperator",
    "PerturbativeExpansion",
    "InteractingGreen",
    "OrderOverflow",
    "DEFAULT_MAX_ORDER",
    "interacting_green",
    "connected_integrand",
    "integrand_products",
    "integrand_term_lines",
    "connected_components",
    "clusters_linked",
    "has_vacuum_component",
]

DEFAULT_MAX_ORDER = 2

EXTERNAL_A = "tau1"
EXTERNAL_B = "tau2"

# edge multiset of one diagram: tuple of sorted (name, name) pairs, sorted
Edges = tuple[tuple[str, str], ...]
# coupling-graded diagram sum: order -> {edges: coefficient}
GradedSum = dict[int, dict[Edges, Fraction]]


class OrderOverflow(ValueError):
    """Requested expansion order exceeds the configured maximum."""


@dataclass(frozen=True)
class PolynomialPotential:
    """V(q) = sum_n c_n q**n with finite support and exact coefficients."""

    coefficients: tuple[tuple[int, Fraction], ...]

    def __post_init__(self):
        coeffs = tuple(sorted((int(n), Fraction(c)) for n, c in self.coefficients if c != 0))
        if not coeffs or coeffs[0][0] < 1:
            raise ValueError("potential needs finite support of degree >= 1")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def monomial(cls, k: int) -> "PolynomialPotential":
        """V(q) = q**k / k!"""
        return cls(((k, Fraction(1, factorial(k))),))

    @classmethod
    def from_dict(cls, coeffs: Mapping[int, Fraction]) -> "PolynomialPotential":
        return cls(tuple(coeffs.items()))

    @property
    def degree(self) -> int:
        return self.coefficients[-1][0]

    @property
    def is_monomial(self) -> bool:
        return len(self.coefficients) == 1


@dataclass(frozen=True)
class DeformationOperator:
    """Operator conjugate to a parameter: prefactor * q**q_power."""

    parameter_label: str
    q_power: int
    prefactor: Fraction

    @classmethod
    def stiffness(cls) -> "DeformationOperator":
        # conjugate to alpha in H = p^2/2 + alpha q^2/2 + ...
        return cls("alpha", 2, Fraction(-1, 2))

    @classmethod
    def coupling(cls, potential: PolynomialPotential) -> "DeformationOperator":
        # conjugate to the coupling of a monomial potential: -V(q)
        if not potential.is_monomial:
            raise ValueError("the coupling deformation requires a monomial potential")
        k, c = potential.coefficients[0]
        return cls("lambda", k, -c)

    @classmethod
    def source(cls) -> "DeformationOperator":
        # conjugate to the source J in H -> H + J q
        return cls("j", 1, Fraction(-1))


@dataclass(frozen=True)
class PerturbativeExpansion:
    """Truncation order plus the interaction the vertices carry."""

    order: int
    interaction: PolynomialPotential
    max_order: int = DEFAULT_MAX_ORDER

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("expansion order must be >= 0")
        if self.order > self.max_order:
            raise OrderOverflow(
                f"order {self.order} exceeds the configured maximum {self.max_order}"
            )

    def green(self, points: Sequence[InsertionPoint]) -> "InteractingGreen":
        return interacting_green(points, self.order, self.interaction, self.max_order)


@dataclass(frozen=True)
class InteractingGreen:
    """Numerator, denominator and divided series of one interacting correlator."""

    numerator: GradedSum
    denominator: GradedSum
    ratio: GradedSum


def _vertex_names(m: int, offset: int = 0) -> list[str]:
    return [f"s{i}" for i in range(offset + 1, offset + m + 1)]


def _canonical_edges(edges: Sequence[tuple[str, str]], vertices: Sequence[str]) -> Edges:
    """Minimal edge multiset over relabelings of the internal vertices."""
    edges = tuple(sorted(tuple(sorted(e)) for e in edges))
    if len(vertices) < 2:
        return edges
    best = None
    for perm in itertools.permutations(vertices):
        mapping = dict(zip(vertices, perm))
        relab = tuple(
            sorted(tuple(sorted((mapping.get(a, a), mapping.get(b, b)))) for a, b in edges)
        )
        if best is None or relab < best:
            best = relab
    return best


def _add(acc: dict[Edges, Fraction], edges: Edges, coeff: Fraction) -> None:
    new = acc.get(edges, Fraction(0)) + coeff
    if new == 0:
        acc.pop(edges, None)
    else:
        acc[edges] = new


def _graded_moments(points: Sequence[InsertionPoint], order: int, potential: PolynomialPotential) -> GradedSum:
    """Free moments of the external points with m = 0..order interaction vertices.

    Coefficients carry the full (-1)^m/m! * prod c_deg weights, so grade m is
    the exact lambda^m coefficient of <prod q e^{-S_int}> before integration.
    """
    out: GradedSum = {}
    for m in range(order + 1):
        grade: dict[Edges, Fraction] = {}
        names = _vertex_names(m)
        for degrees in itertools.product([d for d, _ in potential.coefficients], repeat=m):
            weight = Fraction((-1) ** m, factorial(m))
            for d in degrees:
                weight *= dict(potential.coefficients)[d]
            insertions = list(points) + [
                InsertionPoint(name, deg) for name, deg in zip(names, degrees)
            ]
            total_legs = sum(p.power for p in insertions)
            if total_legs % 2:
                continue
            for diag in enumerate_pairings(insertions):
                _add(grade, _canonical_edges(diag.edges, names), weight * diag.multiplicity)
        out[m] = grade
    return out


def _graded_product(a: GradedSum, b: GradedSum, order: int) -> GradedSum:
    """Product of graded sums; the right factor's vertices are relabeled fresh."""
    out: GradedSum = {m: {} for m in range(order + 1)}
    for i, gi in a.items():
        for j, gj in b.items():
            m = i + j
            if m > order:
                continue
            names_b = _vertex_names(j)
            shifted = {old: new for old, new in zip(names_b, _vertex_names(j, offset=i))}
            for ea, ca in gi.items():
                for eb, cb in gj.items():
                    moved = tuple(
                        tuple(sorted((shifted.get(x, x), shifted.get(y, y)))) for x, y in eb
                    )
                    edges = _canonical_edges(ea + moved, _vertex_names(m))
                    _add(out[m], edges, ca * cb)
    return out


def _graded_sub(a: GradedSum, b: GradedSum) -> GradedSum:
    out: GradedSum = {}
    for m in set(a) | set(b):
        grade = dict(a.get(m, {}))
        for edges, coeff in b.get(m, {}).items():
            _add(grade, edges, -coeff)
        out[m] = grade
    return out


def interacting_green(
    points: Sequence[InsertionPoint],
    order: int,
    potential: PolynomialPotential,
    max_order: int = DEFAULT_MAX_ORDER,
) -> InteractingGreen:
    """Expansion of <prod q^power(time)> in the interacting theory.

    Returns the numerator and vacuum-denominator series and their formal
    ratio, truncated at the given coupling order.
    """
    if order > max_order:
        raise OrderOverflow(f"order {order} exceeds the configured maximum {max_order}")
    numerator = _graded_moments(points, order, potential)
    denominator = _graded_moments([], order, potential)
    # divide: ratio_m = num_m - sum_{i=1..m} den_i * ratio_{m-i}
    ratio: GradedSum = {}
    for m in range(order + 1):
        grade = dict(numerator.get(m, {}))
        for i in range(1, m + 1):
            correction = _graded_product({i: denominator[i]}, {m - i: ratio[m - i]}, m)
            for edges, coeff in correction.get(m, {}).items():
                _add(grade, edges, -coeff)
        ratio[m] = grade
    return InteractingGreen(numerator, denominator, ratio)


def connected_integrand(
    op_a: DeformationOperator,
    op_b: DeformationOperator,
    order: int,
    potential: PolynomialPotential,
    max_order: int = DEFAULT_MAX_ORDER,
) -> GradedSum:
    """Two-cluster connected integrand, graded by coupling order.

    Grade m holds {edge multiset: coefficient} for the diagrams of
    <q^na(tau1) q^nb(tau2)>_int - <q^na(tau1)>_int <q^nb(tau2)>_int with m
    internal vertices; all vacuum bubbles cancel before integration.  The
    operator prefactors are not included here (the tensor assembly owns them).
    """
    a_pts = [InsertionPoint(EXTERNAL_A, op_a.q_power)]
    b_pts = [InsertionPoint(EXTERNAL_B, op_b.q_power)]
    g_ab = interacting_green(a_pts + b_pts, order, potential, max_order).ratio
    g_a = interacting_green(a_pts, order, potential, max_order).ratio
    g_b = interacting_green(b_pts, order, potential, max_order).ratio
    result = _graded_sub(g_ab, _graded_product(g_a, g_b, order))
    return {m: grade for m, grade in result.items() if m <= order}


def integrand_products(
    graded: GradedSum, coupling_label: str = "lambda"
) -> dict[int, list[PropagatorProduct]]:
    """Attach the coupling power to each grade and wrap diagrams for the integrator."""
    if coupling_label == "lambda":
        power_slot = {"lambda_pow": 1}
    elif coupling_label == "j":
        power_slot = {"j_pow": 1}
    else:
        raise ValueError(f"unknown coupling label {coupling_label!r}")
    out: dict[int, list[PropagatorProduct]] = {}
    for m, grade in sorted(graded.items()):
        products = []
        for edges, coeff in sorted(grade.items()):
            series = ScalarSeries.term(coeff, **{k: v * m for k, v in power_slot.items()})
            products.append(PropagatorProduct(series, tuple(Propagator(e) for e in edges)))
        out[m] = products
    return out


def integrand_term_lines(graded: GradedSum, potential: PolynomialPotential) -> list[str]:
    """Stable text form of the integrand term list (pattern + raw coefficient).

    For a monomial potential q**k/k! the printed coefficient at grade m is the
    plain pairing count, i.e. the diagram coefficient with the (-1/k!)^m/m!
    vertex weights divided out.
    """
    if not potential.is_monomial:
        raise ValueError("the raw-coefficient view needs a monomial potential")
    k, c = potential.coefficients[0]
    lines = []
    for m, grade in sorted(graded.items()):
        strip = (Fraction(-1) / c) ** m * factorial(m)
        for edges, coeff in sorted(grade.items()):
            raw = coeff * strip
            pattern = " ".join(f"D({a},{b})" for a, b in edges)
            lines.append(f"order {m}: {raw} * {pattern}")
    return lines


# -- connectivity helpers (used by the verification suite) -------------------


def connected_components(edges: Iterable[tuple[str, str]]) -> list[set[str]]:
    nodes: set[str] = set()
    adj: dict[str, set[str]] = {}
    for a, b in edges:
        nodes.update((a, b))
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    seen: set[str] = set()
    comps = []
    for start in sorted(nodes):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in comp:
                    comp.add(nxt)
                    stack.append(nxt)
        seen |= comp
        comps.append(comp)
    return comps


def clusters_linked(edges: Edges, a: str = EXTERNAL_A, b: str = EXTERNAL_B) -> bool:
    """True if the two external clusters sit in one connected component."""
    for comp in connected_components(edges):
        if a in comp and b in comp:
            return True
    return False


def has_vacuum_component(edges: Edges, external: Sequence[str] = (EXTERNAL_A, EXTERNAL_B)) -> bool:
    """True if some component touches no external time (a vacuum bubble)."""
    for comp in connected_components(edges):
        if not comp & set(external):
            return True
    return False
