"""Coxeter diagrams, Gram matrices, and certified signatures.

A diagram is a weighted graph on facet nodes.  An edge labeled ``m``
stands for a dihedral angle pi/m (Gram entry -cos(pi/m)), an absent edge
for a right angle (entry 0), and a dotted edge for a pair of diverging
facets at distance rho (entry -cosh(rho) < -1).  Dotted weights may be
unknown; they are solved later by the verification algorithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Union

import numpy as np

#: default zero-threshold for eigenvalue sign counting
DEFAULT_TOL = 1e-9


class DiagramError(Exception):
    """Malformed diagram or invalid operation on one."""


class ParseError(DiagramError):
    """Syntax error in a ``.cox`` file; carries the 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnknownWeightError(DiagramError):
    """Operation requires all dotted weights to be known."""


@dataclass(frozen=True)
class Angle:
    """Edge of weight cos(pi/m), m >= 3.  m = 2 is encoded as edge absence."""

    m: int

    def __post_init__(self):
        if self.m < 3:
            raise DiagramError(f"angle label m={self.m} < 3 (use edge absence for m=2)")

    @property
    def weight(self) -> float:
        return cos_pi_over(self.m)


@dataclass(frozen=True)
class Dotted:
    """Dotted edge: weight cosh(rho) > 1, or None when not yet known."""

    w: Optional[float] = None

    def __post_init__(self):
        if self.w is not None and self.w <= 1.0:
            raise DiagramError(f"dotted weight {self.w} must be > 1")

    @property
    def known(self) -> bool:
        return self.w is not None

    @property
    def weight(self) -> float:
        if self.w is None:
            raise UnknownWeightError("dotted edge with unknown weight")
        return self.w


EdgeLabel = Union[Angle, Dotted]


@lru_cache(maxsize=None)
def cos_pi_over(m: int) -> float:
    """cos(pi/m), cached so Gram entries are bit-identical across a run."""
    return math.cos(math.pi / m)


def _key(i, j):
    return (i, j) if i < j else (j, i)


class Diagram:
    """Abstract Coxeter diagram: ordered nodes plus a symmetric edge map.

    Node identifiers are arbitrary hashable values (1-based integers for
    diagrams read from ``.cox`` files).  Instances are treated as
    immutable; all operations return new diagrams.
    """

    __slots__ = ("nodes", "edges", "_index")

    def __init__(self, nodes: Iterable, edges=None):
        nodes = tuple(nodes)
        if len(set(nodes)) != len(nodes):
            raise DiagramError("duplicate node identifiers")
        self.nodes = nodes
        self._index = {v: i for i, v in enumerate(nodes)}
        emap = {}
        if edges:
            for (i, j), label in dict(edges).items():
                if i == j:
                    raise DiagramError(f"self-edge at node {i}")
                if i not in self._index or j not in self._index:
                    raise DiagramError(f"edge ({i},{j}) references unknown node")
                k = _key(i, j)
                if k in emap and emap[k] != label:
                    raise DiagramError(f"conflicting labels for edge {k}")
                emap[k] = label
        self.edges = emap

    # -- basic queries -------------------------------------------------

    @property
    def order(self) -> int:
        return len(self.nodes)

    def label(self, i, j) -> Optional[EdgeLabel]:
        """Edge label between i and j, or None for a right angle."""
        return self.edges.get(_key(i, j))

    def weight(self, i, j) -> float:
        lab = self.label(i, j)
        return 0.0 if lab is None else lab.weight

    def has_unknown(self) -> bool:
        return any(isinstance(l, Dotted) and not l.known for l in self.edges.values())

    def dotted_edges(self):
        return [k for k, l in self.edges.items() if isinstance(l, Dotted)]

    def max_angle_label(self) -> int:
        """Largest finite edge label m, or 2 if there are no angle edges."""
        ms = [l.m for l in self.edges.values() if isinstance(l, Angle)]
        return max(ms, default=2)

    def neighbors(self, v):
        return [u for u in self.nodes if u != v and self.label(u, v) is not None]

    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    def components(self):
        """Connected components as lists of nodes, in node order."""
        seen = set()
        comps = []
        for start in self.nodes:
            if start in seen:
                continue
            stack, comp = [start], []
            seen.add(start)
            while stack:
                v = stack.pop()
                comp.append(v)
                for u in self.neighbors(v):
                    if u not in seen:
                        seen.add(u)
                        stack.append(u)
            comps.append(sorted(comp, key=self._index.__getitem__))
        return comps

    # -- derived diagrams ----------------------------------------------

    def subdiagram(self, nodes: Iterable) -> "Diagram":
        """Induced diagram on a subset of nodes, labels preserved."""
        nodes = list(nodes)
        for v in nodes:
            if v not in self._index:
                raise DiagramError(f"unknown node identifier {v!r}")
        nodes.sort(key=self._index.__getitem__)
        keep = set(nodes)
        edges = {k: l for k, l in self.edges.items() if k[0] in keep and k[1] in keep}
        return Diagram(nodes, edges)

    def with_edge(self, i, j, label: Optional[EdgeLabel]) -> "Diagram":
        """Copy with the (i, j) label replaced (None removes the edge)."""
        edges = dict(self.edges)
        k = _key(i, j)
        if label is None:
            edges.pop(k, None)
        else:
            edges[k] = label
        return Diagram(self.nodes, edges)

    def with_node(self, v, labels: dict) -> "Diagram":
        """Copy with one extra node v, joined per ``labels`` {node: EdgeLabel}."""
        edges = dict(self.edges)
        for u, lab in labels.items():
            if lab is not None:
                edges[_key(u, v)] = lab
        return Diagram(self.nodes + (v,), edges)

    def relabeled(self, mapping: dict) -> "Diagram":
        nodes = [mapping[v] for v in self.nodes]
        edges = {(mapping[i], mapping[j]): l for (i, j), l in self.edges.items()}
        return Diagram(nodes, edges)

    # -- Gram matrix ---------------------------------------------------

    def gram(self) -> "GramView":
        return gram(self)

    def __eq__(self, other):
        return (
            isinstance(other, Diagram)
            and self.nodes == other.nodes
            and self.edges == other.edges
        )

    def __hash__(self):
        return hash((self.nodes, tuple(sorted(self.edges.items(), key=repr))))

    def __repr__(self):
        return f"Diagram(order={self.order}, edges={len(self.edges)})"


@dataclass(frozen=True)
class GramView:
    """Symmetric matrix c with c_ii = 1 and c_ij = -w_ij.

    Entries for unknown dotted weights hold NaN and ``complete`` is False.
    """

    matrix: np.ndarray
    complete: bool

    @property
    def order(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SignatureReport:
    """Certified inertia triple of a symmetric matrix."""

    n_pos: int
    n_neg: int
    n_zero: int
    tol: float
    certified: bool

    @property
    def triple(self):
        return (self.n_pos, self.n_neg, self.n_zero)


def gram(diagram: Diagram) -> GramView:
    """Gram matrix of the diagram in node order."""
    n = diagram.order
    c = np.eye(n)
    complete = True
    idx = {v: i for i, v in enumerate(diagram.nodes)}
    for (u, v), lab in diagram.edges.items():
        i, j = idx[u], idx[v]
        if isinstance(lab, Dotted) and not lab.known:
            c[i, j] = c[j, i] = np.nan
            complete = False
        else:
            c[i, j] = c[j, i] = -lab.weight
    return GramView(c, complete)


def determinant(g: GramView) -> float:
    """Determinant of a fully materialized Gram matrix."""
    if not g.complete:
        raise UnknownWeightError("determinant of a Gram matrix with unknown weights")
    if g.order == 0:
        return 1.0
    return float(np.linalg.det(g.matrix))


def signature(g: GramView, tol: float = DEFAULT_TOL) -> SignatureReport:
    """Inertia of the Gram matrix by eigenvalue sign counting.

    Eigenvalues with magnitude <= tol count as zero.  When any eigenvalue
    falls in (tol, 10 tol) the count is re-done at roughly quadruple
    working precision via mpmath; if the ambiguity persists the report is
    returned with certified=False rather than raising.
    """
    if not g.complete:
        raise UnknownWeightError("signature of a Gram matrix with unknown weights")
    return matrix_signature(g.matrix, tol)


def matrix_signature(mat: np.ndarray, tol: float = DEFAULT_TOL) -> SignatureReport:
    n = mat.shape[0]
    if n == 0:
        return SignatureReport(0, 0, 0, tol, True)
    eig = np.linalg.eigvalsh(mat)
    report = _count(eig, n, tol)
    if report.certified:
        return report
    eig = _eig_extended(mat)
    return _count(eig, n, tol)


def _count(eig, n, tol) -> SignatureReport:
    eig = np.asarray(eig, dtype=float)
    n_pos = int(np.sum(eig > tol))
    n_neg = int(np.sum(eig < -tol))
    n_zero = n - n_pos - n_neg
    ambiguous = np.any((np.abs(eig) > tol) & (np.abs(eig) < 10 * tol))
    return SignatureReport(n_pos, n_neg, n_zero, tol, not bool(ambiguous))


def _eig_extended(mat: np.ndarray):
    """Eigenvalues at >= twice the double-precision mantissa width."""
    import mpmath as mp

    with mp.workdps(34):
        m = mp.matrix(mat.tolist())
        eig = mp.eigsy(m, eigvals_only=True)
        return [float(e) for e in eig]


# -- .cox text format --------------------------------------------------


def parse_diagram(text: str) -> Diagram:
    """Parse the ``.cox`` line-oriented format.

    Grammar: optional ``dim <d>``, ``nodes <n>``, then ``edge <i> <j>
    <label>`` lines with label ``m<k>`` (k >= 3), ``dotted w=<decimal>``
    or ``dotted w=?``.  ``#`` starts a comment.  Node ids are 1-based.
    """
    d, n = None, None
    edges = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        try:
            if kind == "dim":
                d = int(parts[1])
            elif kind == "nodes":
                n = int(parts[1])
            elif kind == "edge":
                i, j = int(parts[1]), int(parts[2])
                label = _parse_label(parts[3:])
                if i == j:
                    raise ParseError(f"self-edge at node {i}", lineno)
                if n is None:
                    raise ParseError("edge before nodes declaration", lineno)
                if not (1 <= i <= n and 1 <= j <= n):
                    raise ParseError(f"edge ({i},{j}) out of range 1..{n}", lineno)
                k = _key(i, j)
                if k in edges:
                    raise ParseError(f"duplicate edge ({i},{j})", lineno)
                edges[k] = label
            else:
                raise ParseError(f"unknown directive {kind!r}", lineno)
        except ParseError:
            raise
        except (IndexError, ValueError) as exc:
            raise ParseError(str(exc), lineno) from exc
        except DiagramError as exc:
            raise ParseError(str(exc), lineno) from exc
    if n is None:
        raise ParseError("missing nodes declaration")
    dia = Diagram(range(1, n + 1), edges)
    return dia


def parse_dimension(text: str) -> Optional[int]:
    """The ``dim`` header of a ``.cox`` file, if present."""
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line.startswith("dim "):
            return int(line.split()[1])
    return None


def _parse_label(parts) -> EdgeLabel:
    if not parts:
        raise ValueError("missing edge label")
    tok = parts[0]
    if tok.startswith("m"):
        m = int(tok[1:])
        if m < 3:
            raise DiagramError(f"angle label m={m} < 3 (right angles are implicit)")
        return Angle(m)
    if tok == "dotted":
        if len(parts) < 2 or not parts[1].startswith("w="):
            raise ValueError("dotted edge needs w=<decimal> or w=?")
        val = parts[1][2:]
        if val == "?":
            return Dotted(None)
        w = float(val)
        if w == 1.0:
            raise DiagramError("bold edge (w=1) rejected: compact polytopes only")
        return Dotted(w)
    if tok == "bold":
        raise DiagramError("bold edge rejected: compact polytopes only")
    raise ValueError(f"unknown edge label {tok!r}")


def serialize_diagram(diagram: Diagram, dim: Optional[int] = None, header=()) -> str:
    """Inverse of parse_diagram; edges sorted lexicographically.

    Only works for diagrams whose nodes are 1..n.
    """
    n = diagram.order
    if tuple(diagram.nodes) != tuple(range(1, n + 1)):
        mapping = {v: i + 1 for i, v in enumerate(diagram.nodes)}
        diagram = diagram.relabeled(mapping)
    lines = [f"# {h}" for h in header]
    if dim is not None:
        lines.append(f"dim {dim}")
    lines.append(f"nodes {n}")
    for (i, j) in sorted(diagram.edges):
        lab = diagram.edges[(i, j)]
        if isinstance(lab, Angle):
            lines.append(f"edge {i} {j} m{lab.m}")
        elif lab.known:
            lines.append(f"edge {i} {j} dotted w={lab.w!r}")
        else:
            lines.append(f"edge {i} {j} dotted w=?")
    return "\n".join(lines) + "\n"
