"""Local determinants of Coxeter diagrams.

The local determinant of Sigma on a subdiagram T is det(Sigma) /
det(Sigma minus T).  For the order-3 triangle with labels p, q, r and v
the node opposite the r-edge, the local determinant on v has the closed
form D(p, q, r) implemented here.
"""

from __future__ import annotations

import math

from .diagram import DEFAULT_TOL, Diagram, DiagramError, determinant


class LocalDetError(DiagramError):
    pass


class NearZeroDenominator(LocalDetError):
    """det(Sigma minus T) is numerically zero; carries its magnitude."""

    def __init__(self, value):
        super().__init__(f"|det(Sigma \\ T)| = {abs(value):.3e} below tolerance")
        self.value = value


def local_det(sigma: Diagram, t, tol: float = DEFAULT_TOL) -> float:
    """det(sigma) / det(sigma minus t); t may be a node or a collection."""
    if not isinstance(t, (list, tuple, set, frozenset)):
        t = [t]
    t = set(t)
    rest = [v for v in sigma.nodes if v not in t]
    denom = determinant(sigma.subdiagram(rest).gram())
    if abs(denom) <= tol:
        raise NearZeroDenominator(denom)
    return determinant(sigma.gram()) / denom


def d_pqr(p: int, q: int, r: int) -> float:
    """Closed form for the local determinant of the (p, q, r) triangle on
    the node opposite its r-edge."""
    if min(p, q, r) < 2:
        raise LocalDetError("labels must be >= 2")
    if r < 3:
        raise LocalDetError("r must be >= 3 (orient the triple so the r-edge is last)")
    cp = math.cos(math.pi / p)
    cq = math.cos(math.pi / q)
    cr = math.cos(math.pi / r)
    sr2 = math.sin(math.pi / r) ** 2
    return 1.0 - (cp * cp + cq * cq + 2.0 * cp * cq * cr) / sr2


def triangle(p: int, q: int, r: int) -> Diagram:
    """The order-3 diagram with edge labels p, q, r.

    Node 1 is opposite the p-edge, node 2 opposite q, node 3 opposite r,
    so d_pqr(p, q, r) = local_det(triangle(p, q, r), 3).
    """
    from .diagram import Angle

    edges = {}
    for (i, j), m in (((2, 3), p), ((1, 3), q), ((1, 2), r)):
        if m >= 3:
            edges[(i, j)] = Angle(m)
        elif m != 2:
            raise LocalDetError("labels must be >= 2")
    return Diagram((1, 2, 3), edges)


def loc_sum(parts, tol: float = DEFAULT_TOL):
    """Additivity of local determinants over diagrams glued at one node.

    ``parts`` are diagrams sharing exactly one common node v and having
    no other nodes in common (nor edges between their private nodes once
    glued).  Returns (formula_value, direct_value, union_diagram) where
    formula_value = sum_i det(part_i, v) - (l - 1) and direct_value is
    det(union, v) computed as a quotient.
    """
    parts = list(parts)
    if not parts:
        raise LocalDetError("need at least one part")
    common = set(parts[0].nodes)
    for p in parts[1:]:
        common &= set(p.nodes)
    if len(common) != 1:
        raise LocalDetError(f"parts must share exactly one node, got {sorted(common, key=repr)}")
    (v,) = common
    for i, a in enumerate(parts):
        for b in parts[i + 1 :]:
            overlap = (set(a.nodes) & set(b.nodes)) - {v}
            if overlap:
                raise LocalDetError(f"parts overlap beyond the shared node: {overlap}")
    nodes = []
    edges = {}
    for p in parts:
        for u in p.nodes:
            if u not in nodes:
                nodes.append(u)
        edges.update(p.edges)
    union = Diagram(nodes, edges)
    formula = sum(local_det(p, v, tol) for p in parts) - (len(parts) - 1)
    direct = local_det(union, v, tol)
    return formula, direct, union
