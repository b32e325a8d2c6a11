"""Verification of compact Coxeter polytope diagrams.

A diagram with (possibly unknown) dotted weights is tested against a
dimension d by reconstructing outward unit facet normals in Lorentzian
(d+1)-space: a seed of d+1 facets whose Gram matrix has signature (d, 1)
fixes a basis, every further normal is a solution of a linear system in
its prescribed inner products, and unknown dotted weights fall out of
the reconstruction.  Inconsistencies reject the diagram.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .diagram import (
    DEFAULT_TOL,
    Angle,
    Diagram,
    DiagramError,
    Dotted,
    _key as _edge_key,
    cos_pi_over,
    matrix_signature,
)
from .classify import (
    elliptic_subsets_by_order,
    elliptic_type,
    has_parabolic_subdiagram,
    is_elliptic,
)

#: tolerance for inner products reproducing Gram entries
PRODUCT_TOL = 1e-8
#: tolerance for unit square norms
NORM_TOL = 1e-10


class PolytopeError(DiagramError):
    pass


class NoSeedError(PolytopeError):
    """No fully-known order-(d+1) subdiagram of signature (d, 1) to start from."""


class DegenerateBasisError(PolytopeError):
    pass


class PrecisionError(PolytopeError):
    pass


def lorentz_form(dim: int) -> np.ndarray:
    j = np.eye(dim + 1)
    j[dim, dim] = -1.0
    return j


@dataclass(frozen=True)
class VectorModel:
    """Unit outward normals in R^(d,1) realizing a diagram's Gram matrix.

    The bilinear form is diag(1, ..., 1, -1); vectors are rows.
    """

    dimension: int
    vectors: np.ndarray  # (n, d+1)
    nodes: Tuple = ()

    def product(self, i: int, j: int) -> float:
        return float(lorentz_dot(self.vectors[i], self.vectors[j]))

    def products(self) -> np.ndarray:
        J = lorentz_form(self.dimension)
        return self.vectors @ J @ self.vectors.T


def lorentz_dot(u, v) -> float:
    return float(np.dot(u[:-1], v[:-1]) - u[-1] * v[-1])


def model_from_gram(mat: np.ndarray, d: int, tol=DEFAULT_TOL) -> np.ndarray:
    """Vectors in R^(d,1) whose pairwise products reproduce ``mat``.

    Requires inertia (d, 1, *); raises otherwise.
    """
    sig = matrix_signature(mat, tol)
    if sig.n_pos != d or sig.n_neg != 1:
        raise PolytopeError(f"matrix has inertia {sig.triple}, expected ({d}, 1, *)")
    w, v = np.linalg.eigh(mat)
    order = np.argsort(w)
    neg = order[0]
    pos = order[-d:] if d else order[:0]
    n = mat.shape[0]
    x = np.zeros((n, d + 1))
    for col, k in enumerate(pos):
        x[:, col] = v[:, k] * np.sqrt(w[k])
    x[:, d] = v[:, neg] * np.sqrt(-w[neg])
    return x


@dataclass(frozen=True)
class PolytopeRecord:
    """A verified compact Coxeter d-polytope diagram."""

    diagram: Diagram  # all dotted weights solved
    dimension: int
    model: VectorModel
    vertices: Tuple[Tuple, ...]  # order-d elliptic subdiagram node sets
    face_lattice_ok: bool
    meta: dict = field(default_factory=dict)

    @property
    def facet_count(self) -> int:
        return self.diagram.order

    @property
    def dotted_count(self) -> int:
        return len(self.diagram.dotted_edges())


@dataclass(frozen=True)
class Rejection:
    """Why a diagram is not (or cannot be completed to) a polytope diagram."""

    reason: str
    detail: str = ""

    def __bool__(self):
        return False

    def __str__(self):
        return f"{self.reason}: {self.detail}" if self.detail else self.reason


# -- combinatorial face-lattice test -----------------------------------


def combinatorial_check(diagram: Diagram, d: int, tol=DEFAULT_TOL):
    """Face-poset test that needs no dotted weights.

    (a) the maximal elliptic subdiagram order equals d; (b) every
    elliptic subdiagram of order d-1 lies in exactly two of order d.
    Returns (ok, diagnostic string naming the first violation).
    """
    if d < 1:
        raise PolytopeError("dimension must be >= 1")
    levels = elliptic_subsets_by_order(diagram, d + 1, tol)
    over = levels.get(d + 1, [])
    if over:
        nodes = tuple(diagram.nodes[i] for i in over[0])
        return False, f"elliptic subdiagram of order {d + 1}: {nodes}"
    verts = levels.get(d, [])
    if not verts:
        return False, f"no elliptic subdiagram of order {d}"
    vert_sets = [frozenset(s) for s in verts]
    for s in levels.get(d - 1, []):
        fs = frozenset(s)
        count = sum(1 for v in vert_sets if fs <= v)
        if count != 2:
            nodes = tuple(diagram.nodes[i] for i in s)
            return False, (
                f"order-{d - 1} elliptic subdiagram {nodes} lies in "
                f"{count} vertices (expected 2)"
            )
    return True, "ok"


# -- vector reconstruction ---------------------------------------------


def reconstruct_vector(basis: np.ndarray, products, last_index: int, tol=DEFAULT_TOL):
    """Unit vectors with prescribed products against all basis vectors but one.

    ``basis`` is a (d+1) x (d+1) array of row vectors spanning R^(d,1);
    ``products`` are the d inner products with the rows other than
    ``last_index``.  Returns up to two (vector, induced_product) pairs,
    where induced_product is the product with the withheld row.
    """
    dim = basis.shape[0]
    J = lorentz_form(dim - 1)
    A = basis @ J
    rows = [i for i in range(dim) if i != last_index]
    M = A[rows]
    c = np.asarray(products, dtype=float)
    if c.shape != (dim - 1,):
        raise PolytopeError(f"expected {dim - 1} products, got {c.shape}")
    # particular solution + 1-dim null direction
    u_, s, vt = np.linalg.svd(M)
    if s[-1] < 1e-10 * max(1.0, s[0]):
        raise DegenerateBasisError("basis rows do not span the space")
    v0 = vt[:-1].T @ ((u_.T @ c) / s)
    null = vt[-1]
    a = lorentz_dot(null, null)
    b = 2.0 * lorentz_dot(v0, null)
    c0 = lorentz_dot(v0, v0) - 1.0
    ts = _real_roots(a, b, c0)
    out = []
    for t in ts:
        v = v0 + t * null
        induced = float(A[last_index] @ v)
        out.append((v, induced))
    out.sort(key=lambda p: p[1])
    return out


def _real_roots(a, b, c, eps=1e-12):
    if abs(a) < eps:
        if abs(b) < eps:
            return [0.0] if abs(c) < 1e-9 else []
        return [-c / b]
    disc = b * b - 4.0 * a * c
    if disc < -1e-12 * max(1.0, b * b + abs(4 * a * c)):
        return []
    disc = max(disc, 0.0)
    r = np.sqrt(disc)
    return sorted({(-b - r) / (2 * a), (-b + r) / (2 * a)})


# -- the solver --------------------------------------------------------


def solve_dotted(
    diagram: Diagram,
    d: int,
    tol: float = DEFAULT_TOL,
    meta: Optional[dict] = None,
):
    """Verify a diagram as a compact d-polytope diagram, solving unknown
    dotted weights along the way.

    Returns a PolytopeRecord on success, a Rejection otherwise.  Raises
    NoSeedError when no starting basis exists and PrecisionError when the
    final signature cannot be certified.
    """
    ok, diag = combinatorial_check(diagram, d, tol)
    if not ok:
        return Rejection("combinatorial", diag)
    n = diagram.order
    if n < d + 1:
        return Rejection("too-few-facets", f"{n} facets for dimension {d}")
    nodes = list(diagram.nodes)
    gmat = diagram.gram().matrix

    seed = _find_seed(diagram, gmat, d, tol)
    if seed is None:
        raise NoSeedError(
            f"no fully-known order-{d + 1} subdiagram of signature ({d}, 1)"
        )
    seed_vectors = model_from_gram(gmat[np.ix_(seed, seed)], d, tol)

    placed = {nodes[seed[i]]: seed_vectors[i] for i in range(d + 1)}
    state = _Solver(diagram, d, gmat, tol)
    result = state.run(placed)
    if isinstance(result, Rejection):
        return result
    vectors, solved = result

    # assemble the solved diagram
    edges = dict(diagram.edges)
    for (i, j), w in solved.items():
        edges[(i, j)] = Dotted(w)
    solved_diagram = Diagram(diagram.nodes, edges)

    full = solved_diagram.gram().matrix
    sig = matrix_signature(full, tol)
    if not sig.certified:
        raise PrecisionError("final signature uncertified at extended precision")
    if sig.n_pos != d or sig.n_neg != 1:
        return Rejection("signature", f"inertia {sig.triple}, expected ({d}, 1, {n - d - 1})")
    if not solved_diagram.is_connected():
        return Rejection("disconnected", "polytope diagram must be connected")
    if has_parabolic_subdiagram(solved_diagram, tol):
        return Rejection("parabolic", "contains a parabolic subdiagram")

    vec = np.array([vectors[v] for v in nodes])
    model = VectorModel(d, vec, tuple(nodes))
    levels = elliptic_subsets_by_order(solved_diagram, d, tol)
    vertices = tuple(
        tuple(nodes[i] for i in s) for s in levels.get(d, [])
    )
    return PolytopeRecord(
        diagram=solved_diagram,
        dimension=d,
        model=model,
        vertices=vertices,
        face_lattice_ok=True,
        meta=dict(meta or {}),
    )


def _find_seed(diagram, gmat, d, tol):
    """Lexicographically least fully-known (d+1)-subset of inertia (d, 1, 0)."""
    n = diagram.order
    for idx in itertools.combinations(range(n), d + 1):
        sub = gmat[np.ix_(idx, idx)]
        if np.isnan(sub).any():
            continue
        sig = matrix_signature(sub, tol)
        if sig.triple == (d, 1, 0):
            return list(idx)
    return None


class _Solver:
    """Backtracking attachment of nodes to a growing vector configuration."""

    def __init__(self, diagram, d, gmat, tol):
        self.diagram = diagram
        self.d = d
        self.gmat = gmat
        self.tol = tol
        self.nodes = list(diagram.nodes)
        self.index = {v: i for i, v in enumerate(self.nodes)}
        self.last_rejection = None

    def run(self, placed):
        result = self._extend(dict(placed), {})
        if result is None:
            return self.last_rejection or Rejection("unsatisfiable", "no consistent completion")
        return result

    def _extend(self, placed, solved):
        remaining = [v for v in self.nodes if v not in placed]
        if not remaining:
            return placed, solved
        choice = self._pick(placed, remaining)
        if choice is None:
            return None
        w, basis_nodes, unknown_edge = choice
        candidates = self._candidates(placed, w, basis_nodes, unknown_edge)
        for vec, extra_solved in candidates:
            nxt_placed = dict(placed)
            nxt_placed[w] = vec
            nxt_solved = dict(solved)
            nxt_solved.update(extra_solved)
            out = self._extend(nxt_placed, nxt_solved)
            if out is not None:
                return out
        return None

    def _pick(self, placed, remaining):
        """Next node to attach plus a basis for it.

        Preference: fewest unknown edges into the placed set (Lemma-style
        tie-break), then node order.  The basis is the lexicographically
        least nondegenerate (d+1)-subset of placed nodes with at most one
        unknown edge to the node.
        """
        scored = []
        for w in remaining:
            unknowns = sum(
                1
                for u in placed
                if isinstance(self.diagram.label(w, u), Dotted)
                and not self.diagram.label(w, u).known
            )
            scored.append((unknowns, self.index[w], w))
        scored.sort()
        placed_sorted = sorted(placed, key=self.index.__getitem__)
        for _, _, w in scored:
            basis = self._find_basis(placed, placed_sorted, w)
            if basis is not None:
                return (w, *basis)
        self.last_rejection = Rejection(
            "no-basis", "no attachable node with a usable (d+1)-basis"
        )
        return None

    def _find_basis(self, placed, placed_sorted, w):
        d = self.d
        for subset in itertools.combinations(placed_sorted, d + 1):
            unknown = [
                u
                for u in subset
                if isinstance(self.diagram.label(w, u), Dotted)
                and not self.diagram.label(w, u).known
            ]
            if len(unknown) > 1:
                continue
            B = np.array([placed[u] for u in subset])
            g = B @ lorentz_form(d) @ B.T
            if abs(np.linalg.det(g)) < 1e-8:
                continue
            return subset, (unknown[0] if unknown else None)
        return None

    def _candidates(self, placed, w, basis_nodes, unknown_edge):
        d = self.d
        B = np.array([placed[u] for u in basis_nodes])
        prescribed = {u: -self._known_weight(w, u) for u in basis_nodes if u != unknown_edge}
        out = []
        if unknown_edge is None:
            J = lorentz_form(d)
            A = B @ J
            c = np.array([prescribed[u] for u in basis_nodes])
            v = np.linalg.solve(A, c)
            if abs(lorentz_dot(v, v) - 1.0) > PRODUCT_TOL:
                self.last_rejection = Rejection(
                    "norm", f"node {w}: reconstructed normal has square norm "
                    f"{lorentz_dot(v, v):.6f}"
                )
                return []
            raw = [(v, None)]
        else:
            last = basis_nodes.index(unknown_edge)
            prods = [prescribed[u] for u in basis_nodes if u != unknown_edge]
            try:
                pairs = reconstruct_vector(B, prods, last, self.tol)
            except DegenerateBasisError:
                return []
            raw = []
            for v, induced in pairs:
                weight = -induced
                if weight <= 1.0 + self.tol:
                    # a dotted edge must stay dotted: weight > 1
                    self.last_rejection = Rejection(
                        "dotted-weight",
                        f"edge {_ekey(w, unknown_edge)}: solved weight "
                        f"{weight:.6f} <= 1",
                    )
                    continue
                raw.append((v, {unknown_edge: weight}))
        # validate products against every other placed node
        for v, extra in raw:
            solved_here = {}
            if isinstance(extra, dict):
                for u, weight in extra.items():
                    solved_here[_ekey(w, u)] = weight
            ok = True
            for u, uvec in placed.items():
                if u in basis_nodes:
                    continue
                prod = lorentz_dot(v, uvec)
                lab = self.diagram.label(w, u)
                if isinstance(lab, Dotted) and not lab.known:
                    weight = -prod
                    if weight <= 1.0 + self.tol:
                        self.last_rejection = Rejection(
                            "dotted-weight",
                            f"edge {_ekey(w, u)}: solved weight {weight:.6f} <= 1",
                        )
                        ok = False
                        break
                    solved_here[_ekey(w, u)] = weight
                else:
                    want = -self._known_weight(w, u)
                    if abs(prod - want) > PRODUCT_TOL:
                        self.last_rejection = Rejection(
                            "product-mismatch",
                            f"edge {_ekey(w, u)}: product {prod:.8f} vs "
                            f"prescribed {want:.8f}",
                        )
                        ok = False
                        break
            if ok:
                yield_item = (v, solved_here)
                out.append(yield_item)
        return out

    def _known_weight(self, i, j):
        lab = self.diagram.label(i, j)
        return 0.0 if lab is None else lab.weight


def _ekey(i, j):
    return _edge_key(i, j)


def is_polytope_diagram(diagram: Diagram, d: int, tol=DEFAULT_TOL) -> bool:
    """Fast predicate for diagrams with all weights known."""
    if diagram.has_unknown() or diagram.order < d + 1:
        return False
    if not diagram.is_connected():
        return False
    sig = matrix_signature(diagram.gram().matrix, tol)
    if not (sig.certified and sig.n_pos == d and sig.n_neg == 1):
        return False
    ok, _ = combinatorial_check(diagram, d, tol)
    if not ok:
        return False
    return not has_parabolic_subdiagram(diagram, tol)


# -- face diagrams ------------------------------------------------------


@dataclass(frozen=True)
class FaceGuaranteeError(Exception):
    """Borcherds' condition fails: the face may not be a Coxeter polytope."""

    component: str

    def __str__(self):
        return (
            f"face polytope not guaranteed Coxeter: elliptic subdiagram has "
            f"an {self.component} component"
        )


def face_diagram(record: PolytopeRecord, s0, tol=DEFAULT_TOL) -> Diagram:
    """Coxeter diagram of the face P(S0) for an elliptic subdiagram S0.

    Requires S0 without A_n or D_5 components (Borcherds).  With no good
    neighbors the induced diagram is returned verbatim; otherwise weights
    between good neighbors are recomputed by projecting normals to the
    orthogonal complement of span(S0).
    """
    s0 = tuple(s0)
    sub = record.diagram.subdiagram(s0)
    if not is_elliptic(sub, tol):
        raise PolytopeError("S0 must be elliptic")
    etype = elliptic_type(sub, tol)
    for comp in etype.components:
        if comp.family == "A" or (comp.family == "D" and comp.rank == 5):
            raise FaceGuaranteeError(comp.name)

    dia = record.diagram
    s0set = set(s0)
    good, far = [], []
    for v in dia.nodes:
        if v in s0set:
            continue
        joined = any(dia.label(v, u) is not None for u in s0)
        if not joined:
            far.append(v)
        elif is_elliptic(dia.subdiagram(list(s0) + [v]), tol):
            good.append(v)
    keep = [v for v in dia.nodes if v in set(good) | set(far)]
    if not good:
        return dia.subdiagram(keep)

    # project normals to the complement of span(S0) and renormalize
    J = lorentz_form(record.dimension)
    idx = {v: i for i, v in enumerate(record.model.nodes)}
    basis = _orthonormal_span([record.model.vectors[idx[v]] for v in s0], J)
    proj = {}
    for v in keep:
        x = record.model.vectors[idx[v]].copy()
        for e in basis:
            x = x - (x @ J @ e) * e
        norm2 = float(x @ J @ x)
        if norm2 <= tol:
            raise PolytopeError(f"projected normal for {v} is not spacelike")
        proj[v] = x / np.sqrt(norm2)

    edges = {}
    for a, b in itertools.combinations(keep, 2):
        w = -float(proj[a] @ J @ proj[b])
        lab = _snap_weight(w)
        if lab is not None:
            edges[(a, b)] = lab
    return Diagram(keep, edges)


def _orthonormal_span(vectors, J):
    """Gram-Schmidt under the Lorentzian form (valid on definite spans)."""
    basis = []
    for v in vectors:
        x = np.array(v, dtype=float)
        for e in basis:
            x = x - (x @ J @ e) * e
        n2 = float(x @ J @ x)
        if n2 > 1e-12:
            basis.append(x / np.sqrt(n2))
    return basis


def _snap_weight(w, snap_tol=1e-6, max_label=1000):
    """Map a numeric weight to an edge label (None = right angle)."""
    if abs(w) <= snap_tol:
        return None
    if w > 1.0 + 1e-9:
        return Dotted(w)
    for m in range(3, max_label + 1):
        if abs(w - cos_pi_over(m)) <= snap_tol:
            return Angle(m)
    raise PolytopeError(f"weight {w!r} is neither cos(pi/m) nor dotted")
