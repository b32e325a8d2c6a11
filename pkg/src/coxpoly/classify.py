"""Classification of Coxeter diagrams and elliptic subdiagram machinery.

Verdicts follow the usual trichotomy for symmetric Gram matrices:
elliptic (positive definite), parabolic (every component degenerate
positive semidefinite), Lanner (connected, indefinite, all proper
subdiagrams elliptic), hyperbolic (negative inertia index one), and
other-indefinite.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import factorial
from typing import List, Tuple

import numpy as np

from .diagram import (
    DEFAULT_TOL,
    Angle,
    Diagram,
    DiagramError,
    matrix_signature,
    signature,
)


class ClassifyError(DiagramError):
    pass


class UncertifiedError(ClassifyError):
    """Signature could not be certified even at extended precision."""


class DiagramClass(enum.Enum):
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    LANNER = "lanner"
    HYPERBOLIC = "hyperbolic"
    OTHER_INDEFINITE = "other-indefinite"


@dataclass(frozen=True)
class Component:
    """One connected component of an elliptic diagram."""

    family: str  # A, B, D, E, F, H, or G2
    rank: int
    m: int = 0  # edge label, G2 family only
    nodes: Tuple = ()

    @property
    def name(self) -> str:
        if self.family == "G2":
            return f"G2^({self.m})"
        return f"{self.family}{self.rank}"

    @property
    def group_order(self) -> int:
        return _group_order(self.family, self.rank, self.m)


@dataclass(frozen=True)
class EllipticType:
    """Multiset of standard-family components of an elliptic diagram."""

    components: Tuple[Component, ...]

    @property
    def group_order(self) -> int:
        out = 1
        for c in self.components:
            out *= c.group_order
        return out

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(sorted(c.name for c in self.components))

    def has_family(self, family: str, rank=None) -> bool:
        return any(
            c.family == family and (rank is None or c.rank == rank)
            for c in self.components
        )

    def __str__(self):
        return " + ".join(self.names) if self.components else "(empty)"


_EXCEPTIONAL_ORDERS = {
    ("F", 4): 1152,
    ("H", 3): 120,
    ("H", 4): 14400,
    ("E", 6): 51840,
    ("E", 7): 2903040,
    ("E", 8): 696729600,
}


def _group_order(family, rank, m=0) -> int:
    if family == "A":
        return factorial(rank + 1)
    if family == "B":
        return 2**rank * factorial(rank)
    if family == "D":
        return 2 ** (rank - 1) * factorial(rank)
    if family == "G2":
        return 2 * m
    return _EXCEPTIONAL_ORDERS[(family, rank)]


def _certified(report, what):
    if not report.certified:
        raise UncertifiedError(f"uncertified signature for {what}")
    return report


def classify(diagram: Diagram, tol: float = DEFAULT_TOL) -> DiagramClass:
    """Classify a diagram with all weights known."""
    g = diagram.gram()
    sig = _certified(signature(g, tol), diagram)
    if sig.n_neg == 0 and sig.n_zero == 0:
        return DiagramClass.ELLIPTIC
    if sig.n_neg == 0:
        # positive semidefinite; parabolic iff every component is degenerate
        for comp in diagram.components():
            s = _certified(signature(diagram.subdiagram(comp).gram(), tol), comp)
            if s.n_zero == 0:
                return DiagramClass.OTHER_INDEFINITE  # mixed definite/degenerate
        return DiagramClass.PARABOLIC
    if diagram.is_connected() and _proper_subdiagrams_elliptic(diagram, tol):
        return DiagramClass.LANNER
    if sig.n_neg == 1:
        return DiagramClass.HYPERBOLIC
    return DiagramClass.OTHER_INDEFINITE


def is_lanner(diagram: Diagram, tol: float = DEFAULT_TOL) -> bool:
    """Connected, indefinite, and every proper subdiagram elliptic."""
    if diagram.order == 0 or not diagram.is_connected():
        return False
    sig = _certified(signature(diagram.gram(), tol), diagram)
    if sig.n_neg == 0:
        return False
    return _proper_subdiagrams_elliptic(diagram, tol)


def _proper_subdiagrams_elliptic(diagram: Diagram, tol) -> bool:
    # ellipticity is hereditary, so maximal proper subdiagrams suffice
    for v in diagram.nodes:
        rest = [u for u in diagram.nodes if u != v]
        s = _certified(signature(diagram.subdiagram(rest).gram(), tol), rest)
        if s.n_neg or s.n_zero:
            return False
    return True


def is_elliptic(diagram: Diagram, tol: float = DEFAULT_TOL) -> bool:
    sig = signature(diagram.gram(), tol)
    return sig.certified and sig.n_neg == 0 and sig.n_zero == 0


# -- standard-family recognition ---------------------------------------


def elliptic_type(diagram: Diagram, tol: float = DEFAULT_TOL) -> EllipticType:
    """Component decomposition of an elliptic diagram into standard families."""
    if classify(diagram, tol) is not DiagramClass.ELLIPTIC:
        raise ClassifyError("elliptic_type called on a non-elliptic diagram")
    comps = []
    for comp in diagram.components():
        comps.append(_component_type(diagram.subdiagram(comp)))
    comps.sort(key=lambda c: (c.family, c.rank, c.m))
    return EllipticType(tuple(comps))


def _component_type(d: Diagram) -> Component:
    """Structural recognition of a connected positive definite diagram."""
    n = d.order
    nodes = tuple(d.nodes)
    if n == 1:
        return Component("A", 1, nodes=nodes)
    labels = {}
    for (i, j), lab in d.edges.items():
        if not isinstance(lab, Angle):
            raise ClassifyError("dotted edge inside an elliptic diagram")
        labels[(i, j)] = lab.m
    if n == 2:
        (m,) = labels.values()
        if m == 3:
            return Component("A", 2, nodes=nodes)
        if m == 4:
            return Component("B", 2, nodes=nodes)
        return Component("G2", 2, m=m, nodes=nodes)
    degs = {v: len(d.neighbors(v)) for v in d.nodes}
    maxdeg = max(degs.values())
    ms = sorted(labels.values())
    if maxdeg <= 2:
        # a path (cycles are never positive definite)
        if all(m == 3 for m in ms):
            return Component("A", n, nodes=nodes)
        if ms.count(4) == 1 and all(m in (3, 4) for m in ms):
            end4 = _label_at_end(d, labels, 4)
            if end4:
                return Component("B", n, nodes=nodes)
            if n == 4:
                return Component("F", 4, nodes=nodes)
        if ms.count(5) == 1 and all(m in (3, 5) for m in ms) and n in (3, 4):
            if _label_at_end(d, labels, 5):
                return Component("H", n, nodes=nodes)
        raise ClassifyError(f"unrecognized elliptic path with labels {ms}")
    if maxdeg == 3 and all(m == 3 for m in ms):
        branch = [v for v, k in degs.items() if k == 3]
        if len(branch) == 1:
            arms = sorted(_arm_lengths(d, branch[0]))
            if arms == [1, 1, n - 3]:
                return Component("D", n, nodes=nodes)
            if arms in ([1, 2, 2], [1, 2, 3], [1, 2, 4]) and n in (6, 7, 8):
                return Component("E", n, nodes=nodes)
    raise ClassifyError("unrecognized elliptic component shape")


def _label_at_end(d: Diagram, labels, m) -> bool:
    """True if the unique m-labeled edge has an endpoint of degree 1."""
    for (i, j), lab in labels.items():
        if lab == m:
            return len(d.neighbors(i)) == 1 or len(d.neighbors(j)) == 1
    return False


def _arm_lengths(d: Diagram, center):
    lengths = []
    for start in d.neighbors(center):
        ln, prev, cur = 1, center, start
        while True:
            nxt = [u for u in d.neighbors(cur) if u != prev]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            ln += 1
        lengths.append(ln)
    return lengths


# -- elliptic subset enumeration ---------------------------------------


def _elliptic_mask_ok(mat, idx, tol) -> bool:
    sub = mat[np.ix_(idx, idx)]
    if np.isnan(sub).any():
        return False
    if np.any(sub[~np.eye(len(idx), dtype=bool)] < -1.0 + tol):
        return False  # a dotted entry: 2x2 minor already indefinite
    eig = np.linalg.eigvalsh(sub)
    return bool(eig[0] > tol)


def elliptic_subsets_by_order(diagram: Diagram, max_order: int, tol=DEFAULT_TOL):
    """Lists of index tuples (into diagram.nodes) of elliptic subdiagrams.

    Level-grown: an elliptic set of order k extends elliptic sets of
    order k-1, so supersets of non-elliptic subsets are pruned for free.
    Returns a dict order -> sorted list of tuples; order 0 maps to [()].
    """
    mat = diagram.gram().matrix
    n = diagram.order
    levels = {0: [()]}
    current = [(i,) for i in range(n) if _elliptic_mask_ok(mat, [i], tol)]
    k = 1
    while k <= max_order and current:
        levels[k] = current
        nxt = []
        for s in current:
            for j in range(s[-1] + 1, n):
                cand = s + (j,)
                if _elliptic_mask_ok(mat, list(cand), tol):
                    nxt.append(cand)
        current = nxt
        k += 1
    return levels


def enumerate_elliptic_subdiagrams(diagram: Diagram, order: int, tol=DEFAULT_TOL):
    """All node subsets of the given size with elliptic induced diagram."""
    if order < 0:
        raise ClassifyError("order must be nonnegative")
    levels = elliptic_subsets_by_order(diagram, order, tol)
    subsets = levels.get(order, [])
    return [tuple(diagram.nodes[i] for i in s) for s in subsets]


def max_elliptic_order(diagram: Diagram, tol=DEFAULT_TOL) -> int:
    levels = elliptic_subsets_by_order(diagram, diagram.order, tol)
    return max(k for k, v in levels.items() if v)


def connected_elliptic_shapes(rank: int, max_label: int):
    """Edge lists of connected elliptic diagrams of the given rank.

    Nodes are 0..rank-1; yields (name, {(i, j): m}) for every standard
    family member whose labels do not exceed max_label.
    """
    r, k = rank, max_label
    if r < 1:
        return
    if r == 1:
        yield "A1", {}
        return
    path = lambda ms: {(i, i + 1): m for i, m in enumerate(ms)}
    if r == 2:
        for m in range(3, k + 1):
            yield ("A2" if m == 3 else "B2" if m == 4 else f"G2^({m})"), {(0, 1): m}
        return
    yield f"A{r}", path([3] * (r - 1))
    if k >= 4:
        yield f"B{r}", path([3] * (r - 2) + [4])
    if r >= 4:
        # path 0..r-2 with a fork: leaf r-1 also attached at node r-3
        d = {(i, i + 1): 3 for i in range(r - 2)}
        d[(r - 3, r - 1)] = 3
        yield f"D{r}", d
    if r == 4 and k >= 4:
        yield "F4", path([3, 4, 3])
    if r in (3, 4) and k >= 5:
        yield f"H{r}", path([5] + [3] * (r - 2))
    if r in (6, 7, 8):
        # path 0..r-2 plus a leaf at node 2
        d = {(i, i + 1): 3 for i in range(r - 2)}
        d[(2, r - 1)] = 3
        yield f"E{r}", d


def elliptic_diagrams(order: int, max_label: int):
    """All elliptic diagrams of the given order with labels <= max_label.

    One representative per isomorphism class, on nodes 0..order-1;
    includes disconnected diagrams (unions of standard components).
    """
    shapes = {}
    for r in range(1, order + 1):
        shapes[r] = list(connected_elliptic_shapes(r, max_label))
    out = []

    def build(remaining, start_rank, start_idx, chosen):
        if remaining == 0:
            out.append(_assemble(chosen))
            return
        for r in range(start_rank, 0, -1):
            if r > remaining:
                continue
            idx0 = start_idx if r == start_rank else 0
            for i in range(idx0, len(shapes[r])):
                build(remaining - r, r, i, chosen + [(r, shapes[r][i])])

    def _assemble(chosen):
        nodes = []
        edges = {}
        base = 0
        for r, (_name, comp_edges) in chosen:
            nodes.extend(range(base, base + r))
            for (i, j), m in comp_edges.items():
                edges[(base + i, base + j)] = Angle(m)
            base += r
        return Diagram(nodes, edges)

    build(order, order, 0, [])
    return out


def count_elliptic_diagrams(order: int, max_label: int) -> int:
    return len(elliptic_diagrams(order, max_label))


def has_parabolic_subdiagram(diagram: Diagram, tol=DEFAULT_TOL) -> bool:
    """True if some subdiagram contains an affine (degenerate PSD) component.

    Every affine diagram minus a node is elliptic, so affine subsets show
    up as one-node extensions of elliptic subsets during level growth.
    """
    mat = diagram.gram().matrix
    n = diagram.order
    levels = elliptic_subsets_by_order(diagram, n, tol)
    for k, sets in levels.items():
        if k == 0:
            continue
        for s in sets:
            for j in range(n):
                if j in s:
                    continue
                idx = sorted(s + (j,))
                sub = mat[np.ix_(idx, idx)]
                if np.isnan(sub).any():
                    continue
                if np.any(sub[~np.eye(len(idx), dtype=bool)] < -1.0 + tol):
                    continue
                sig = matrix_signature(sub, tol)
                if sig.n_neg == 0 and sig.n_zero >= 1:
                    return True
    return False


def lanner_diagrams(order: int, max_label: int, tol: float = DEFAULT_TOL):
    """Exhaustive search for Lanner diagrams of the given order.

    Every order-(n-1) subdiagram of a Lanner diagram is elliptic, so
    candidates are elliptic representatives on n-1 nodes plus one node
    with every label vector; eigenvalues are batched, survivors are
    verified with is_lanner and deduplicated by canonical form.
    Returns one representative per isomorphism class.
    """
    from itertools import product as _product

    from ._canon import canonical_key

    if order < 3:
        raise ClassifyError("Lanner search needs order >= 3")
    n = order
    reps = elliptic_diagrams(n - 1, max_label)
    weights = np.array([0.0] + [-_cos_cached(m) for m in range(3, max_label + 1)])
    label_vectors = np.array(list(_product(range(max_label - 1), repeat=n - 1)))
    rows = weights[label_vectors]  # (batch, n-1) Gram row of the new node
    batch = rows.shape[0]
    out = {}
    for rep in reps:
        base = rep.gram().matrix
        mats = np.broadcast_to(np.eye(n), (batch, n, n)).copy()
        mats[:, : n - 1, : n - 1] = base
        mats[:, n - 1, : n - 1] = rows
        mats[:, : n - 1, n - 1] = rows
        eig = np.linalg.eigvalsh(mats)
        mask = (eig[:, 0] < -tol) & (eig[:, 1] > tol)  # signature (n-1, 1)
        # every order-(n-1) principal subdiagram must be elliptic
        for drop in range(n - 1):
            if not mask.any():
                break
            keep = [i for i in range(n) if i != drop]
            sub = mats[np.ix_(np.nonzero(mask)[0], keep, keep)]
            ok = np.linalg.eigvalsh(sub)[:, 0] > tol
            mask[np.nonzero(mask)[0][~ok]] = False
        for bi in np.nonzero(mask)[0]:
            labels = {
                i: Angle(int(lv) + 2)
                for i, lv in enumerate(label_vectors[bi])
                if lv > 0
            }
            if not labels:
                continue
            dia = rep.with_node(n - 1, labels)
            if not dia.is_connected():
                continue
            key = canonical_key(dia)
            if key in out:
                continue
            if is_lanner(dia, tol):
                out[key] = dia
    return [out[k] for k in sorted(out)]


def _cos_cached(m):
    from .diagram import cos_pi_over

    return cos_pi_over(m)
