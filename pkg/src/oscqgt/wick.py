"""Wick contractions of Gaussian moments <q^n1(t1) ... q^nk(tk)>.

Moments of the free (or constant-source) Euclidean oscillator factorize into
sums over perfect pairings of the q-factors.  Legs attached to the same time
are interchangeable, so a diagram is fully described by how many propagators
join each pair of times (plus self-loops and, with a source, legs routed to
the one-point function).  Diagrams are enumerated directly in that collapsed
form; the pairing multiplicity of a diagram with n_i legs at time i, e_ij
edges between times i and j, e_ii self-loops and m_i mean legs is

    prod_i n_i! / ( prod_{i<j} e_ij! * prod_i 2**e_ii e_ii! * prod_i m_i! ).

With a constant source J the one-point function is <q> = -J/alpha, constant
in Euclidean time, so the s-integral of the attached propagator is folded in
once and for all.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Iterable, Sequence

from .integrator import Propagator, PropagatorProduct
from .scalar_algebra import ScalarSeries

__all__ = [
    "InsertionPoint",
    "WickDiagram",
    "GaussianModel",
    "enumerate_pairings",
    "moment",
    "connected_pair_correlator",
    "diagram_to_dot",
    "edges_to_dot",
]


@dataclass(frozen=True)
class InsertionPoint:
    """power q-factors inserted at one Euclidean time."""

    time_var: str
    power: int

    def __post_init__(self):
        if self.power < 1:
            raise ValueError("insertion power must be >= 1")


@dataclass(frozen=True)
class WickDiagram:
    """One pairing class: a multiset of edges, optional mean legs, and its multiplicity."""

    edges: tuple[tuple[str, str], ...]
    mean_legs: tuple[str, ...] = ()
    multiplicity: int = 1


@dataclass(frozen=True)
class GaussianModel:
    """Reference Gaussian: free oscillator, optionally with a constant source J."""

    source_j: bool = False

    @property
    def mean_value(self) -> ScalarSeries:
        # <q(tau)> = -J * integral ds D(s, tau) = -J/alpha, constant in tau
        if self.source_j:
            return ScalarSeries.term(-1, alpha_half_pow=-2, j_pow=1)
        return ScalarSeries.zero()


def _merge_points(points: Iterable[InsertionPoint]) -> list[tuple[str, int]]:
    counts: dict[str, int] = {}
    for p in points:
        counts[p.time_var] = counts.get(p.time_var, 0) + p.power
    return sorted(counts.items())


def enumerate_pairings(
    points: Sequence[InsertionPoint], with_mean: bool = False
) -> list[WickDiagram]:
    """All pairing classes of the given insertions, with exact multiplicities.

    Multiplicities over all diagrams of 2n legs (no mean) sum to (2n-1)!!.
    An odd total without mean legs yields an empty list (the moment is zero).
    """
    nodes = _merge_points(points)
    names = [n for n, _ in nodes]
    legs = [c for _, c in nodes]
    k = len(nodes)
    diagrams: list[WickDiagram] = []

    # state: remaining legs per node; assign node i's legs to self-loops,
    # mean legs and edges toward nodes j > i.
    def walk(i: int, remaining: list[int], edges: dict[tuple[int, int], int], means: list[int]):
        if i == k:
            mult = 1
            for c in legs:
                mult *= factorial(c)
            denom = 1
            for (a, b), e in edges.items():
                denom *= factorial(e) * (2**e if a == b else 1)
            for m in means:
                denom *= factorial(m)
            q, rem = divmod(mult, denom)
            assert rem == 0
            edge_list = []
            for (a, b), e in sorted(edges.items()):
                edge_list.extend([(names[a], names[b])] * e)
            mean_list = []
            for idx, m in enumerate(means):
                mean_list.extend([names[idx]] * m)
            diagrams.append(WickDiagram(tuple(edge_list), tuple(mean_list), q))
            return
        n_i = remaining[i]
        mean_range = range(n_i + 1) if with_mean else (0,)
        for m_i in mean_range:
            for self_i in range((n_i - m_i) // 2 + 1):
                rest = n_i - m_i - 2 * self_i
                # distribute `rest` legs among nodes j > i, capped by their remaining legs
                for combo in _compositions(rest, [remaining[j] for j in range(i + 1, k)]):
                    new_remaining = list(remaining)
                    new_remaining[i] = 0
                    new_edges = dict(edges)
                    if self_i:
                        new_edges[(i, i)] = self_i
                    ok = True
                    for off, e in enumerate(combo):
                        j = i + 1 + off
                        if e:
                            new_edges[(i, j)] = e
                            new_remaining[j] -= e
                            if new_remaining[j] < 0:
                                ok = False
                                break
                    if not ok:
                        continue
                    new_means = list(means)
                    new_means[i] = m_i
                    walk(i + 1, new_remaining, new_edges, new_means)

    walk(0, list(legs), {}, [0] * k)
    diagrams.sort(key=lambda d: (d.edges, d.mean_legs))
    return diagrams


def _compositions(total: int, caps: list[int]):
    """Ways to write `total` as an ordered sum bounded by caps."""
    if not caps:
        if total == 0:
            yield ()
        return
    for first in range(min(total, caps[0]) + 1):
        for rest in _compositions(total - first, caps[1:]):
            yield (first,) + rest


def moment(model: GaussianModel, points: Sequence[InsertionPoint]) -> list[PropagatorProduct]:
    """<prod q^power(time)> as a sum of propagator products (pre-integration)."""
    diagrams = enumerate_pairings(points, with_mean=model.source_j)
    mean = model.mean_value
    out = []
    for d in diagrams:
        coeff = ScalarSeries.term(d.multiplicity)
        if d.mean_legs:
            coeff = coeff * mean ** len(d.mean_legs)
        if coeff.is_zero:
            continue
        out.append(PropagatorProduct(coeff, tuple(Propagator(e) for e in d.edges)))
    return _merge_products(out)


def _merge_products(products: Iterable[PropagatorProduct]) -> list[PropagatorProduct]:
    acc: dict[tuple, ScalarSeries] = {}
    for p in products:
        acc[p.edges] = acc.get(p.edges, ScalarSeries.zero()) + p.coeff
    out = [
        PropagatorProduct(c, tuple(Propagator(e) for e in edges))
        for edges, c in acc.items()
        if not c.is_zero
    ]
    out.sort(key=lambda p: p.edges)
    return out


def product_of_sums(
    a: Iterable[PropagatorProduct], b: Iterable[PropagatorProduct]
) -> list[PropagatorProduct]:
    """Distributive product of two propagator sums, canonically merged."""
    out = [
        PropagatorProduct(pa.coeff * pb.coeff, pa.propagators + pb.propagators)
        for pa in a
        for pb in b
    ]
    return _merge_products(out)


def sum_of_sums(
    a: Iterable[PropagatorProduct], b: Iterable[PropagatorProduct], sign: int = 1
) -> list[PropagatorProduct]:
    scaled = [PropagatorProduct(p.coeff * sign, p.propagators) for p in b]
    return _merge_products(list(a) + scaled)


def connected_pair_correlator(
    model: GaussianModel,
    a_points: Sequence[InsertionPoint],
    b_points: Sequence[InsertionPoint],
) -> list[PropagatorProduct]:
    """<O_A O_B> - <O_A><O_B>, cancelled exactly term by term.

    What survives are the pairing classes in which the A-cluster and the
    B-cluster are joined by at least one chain of propagators; the clusters
    may even share a time variable.
    """
    joint = moment(model, list(a_points) + list(b_points))
    disconnected = product_of_sums(moment(model, a_points), moment(model, b_points))
    return sum_of_sums(joint, disconnected, sign=-1)


# -- diagram rendering -------------------------------------------------------


def edges_to_dot(
    edges: Sequence[tuple[str, str]],
    name: str,
    label: str,
    mean_legs: Sequence[str] = (),
) -> str:
    lines = [f"graph {name} {{", f'  label="{label}";']
    nodes = sorted({e for pair in edges for e in pair} | set(mean_legs))
    for n in nodes:
        lines.append(f"  {n};")
    if mean_legs:
        lines.append('  source [shape=box, label="J"];')
    for a, b in sorted(edges):
        lines.append(f"  {a} -- {b};")
    for leg in sorted(mean_legs):
        lines.append(f"  {leg} -- source [style=dashed];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def diagram_to_dot(diagram: WickDiagram, name: str = "diagram") -> str:
    return edges_to_dot(
        diagram.edges,
        name,
        f"multiplicity {diagram.multiplicity}",
        diagram.mean_legs,
    )
