"""Reduced enumeration of compact Coxeter d-polytope diagrams.

The search grows candidate subdiagrams in stages.  L0 holds elliptic
order-d seeds; L1 their one-node extensions without dotted edges; L2
adds a second node, solving the connecting weight from the vanishing
determinant forced by d+2 vectors in (d+1)-space.  Stage 2.1 attaches
all nodes reachable with at most one dotted edge (tuples of pairwise
compatible attachments); stage 2.2 walks along polytope edges, adding
nodes that complete edges at a vertex whose edge figure is unfinished.
Diagrams that verify as polytope diagrams move to the result list and
are not extended further (a polytope diagram never properly contains
another of the same dimension).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .diagram import (
    DEFAULT_TOL,
    Angle,
    Diagram,
    DiagramError,
    Dotted,
    cos_pi_over,
    matrix_signature,
)
from .classify import (
    elliptic_diagrams,
    elliptic_subsets_by_order,
    has_parabolic_subdiagram,
)
from .polytope import (
    PolytopeRecord,
    is_polytope_diagram,
    lorentz_form,
    model_from_gram,
    reconstruct_vector,
    solve_dotted,
)
from ._canon import canonical_diagram, canonical_key

SNAP_TOL = 1e-6
DOTTED_MIN = 1.0 + 1e-9
PRODUCT_TOL = 1e-8


class EnumerateError(DiagramError):
    pass


class ResourceCapError(EnumerateError):
    """Entry cap exceeded; carries the completed frontier description."""

    def __init__(self, message, frontier=None):
        super().__init__(message)
        self.frontier = frontier or []


@dataclass(frozen=True)
class EnumConfig:
    d: int
    k_max: int
    n_max: int
    jobs: int = 1
    limit_entries: Optional[int] = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.k_max < 3:
            raise EnumerateError("k_max must be >= 3")
        if self.n_max < self.d + 1:
            raise EnumerateError("n_max must be >= d + 1")

    def dotted_budget(self, n: Optional[int] = None) -> int:
        n = self.n_max if n is None else n
        return max(0, n - self.d - 2)


@dataclass
class Entry:
    """One candidate subdiagram with its vector realization."""

    diagram: Diagram
    vectors: np.ndarray  # rows aligned with diagram.nodes
    stage: str
    parent: Optional[tuple] = None
    base: Optional[tuple] = None  # identity of the underlying seed+x+y block

    _key_cache: Optional[tuple] = field(default=None, repr=False, compare=False)

    @property
    def key(self):
        if self._key_cache is None:
            self._key_cache = canonical_key(self.diagram)
        return self._key_cache

    @property
    def dotted_count(self):
        return len(self.diagram.dotted_edges())


def snap_weight(value: float, k_max: int):
    """Classify a solved weight: ('angle', k) with 2 <= k <= k_max,
    ('dotted', w) for w > 1, or None when inadmissible."""
    if abs(value) <= SNAP_TOL:
        return ("angle", 2)
    if value >= DOTTED_MIN:
        return ("dotted", float(value))
    for k in range(3, k_max + 1):
        if abs(value - cos_pi_over(k)) <= SNAP_TOL:
            return ("angle", k)
    return None


def _label_of(snap):
    kind, v = snap
    if kind == "angle":
        return None if v == 2 else Angle(v)
    return Dotted(v)


def _admissible(diagram: Diagram, d: int, tol) -> bool:
    """Candidate subdiagram test: inertia (d', 1, *) certified with
    d' <= d, no parabolic subdiagram, no elliptic order-(d+1) subset."""
    sig = matrix_signature(diagram.gram().matrix, tol)
    if not sig.certified or sig.n_neg != 1 or sig.n_pos > d:
        return False
    if has_parabolic_subdiagram(diagram, tol):
        return False
    levels = elliptic_subsets_by_order(diagram, d + 1, tol)
    return not levels.get(d + 1)


def _contains_result(diagram: Diagram, results: Dict[tuple, Diagram]) -> bool:
    """Proper-subdiagram test against already-found polytope diagrams."""
    n = diagram.order
    for key, found in results.items():
        fo = found.order
        if fo >= n:
            continue
        for subset in itertools.combinations(diagram.nodes, fo):
            if canonical_key(diagram.subdiagram(subset)) == key:
                return True
    return False


# -- seed stages -------------------------------------------------------


def seed_lists(config: EnumConfig):
    """Stages L0 (elliptic seeds), L1 (<S,x> no dotted), L2 (<S,x,y>).

    Returns (l0, l1, l2, results) where results maps canonical keys of
    polytope diagrams discovered on the way to their diagrams.
    """
    d, k = config.d, config.k_max
    tol = config.tol
    results: Dict[tuple, Diagram] = {}
    l0 = elliptic_diagrams(d, k)

    # L1: attach x = node d with every non-dotted label vector
    l1 = []  # (seed_index, diagram)
    for si, seed in enumerate(l0):
        base = seed.gram().matrix
        for labels in itertools.product(range(2, k + 1), repeat=d):
            if all(m == 2 for m in labels):
                continue  # x must be joined to the seed
            mat = _attach_row(base, [_cos(m) for m in labels])
            sig = matrix_signature(mat, tol)
            if not sig.certified or sig.n_neg != 1:
                continue
            dia = seed.with_node(
                d, {i: (Angle(m) if m >= 3 else None) for i, m in enumerate(labels)}
            )
            if has_parabolic_subdiagram(dia, tol):
                continue
            if is_polytope_diagram(dia, d, tol):
                results.setdefault(canonical_key(dia), dia)
                continue
            l1.append((si, dia))

    _check_cap(config, len(l1), "L1")
    _check_cap(config, len(results), "L1-results")

    # L2: same-seed pairs; the <x,y> weight solves det = 0
    l2 = []
    seen2 = set()
    by_seed: Dict[int, list] = {}
    for si, dia in l1:
        by_seed.setdefault(si, []).append(dia)
    for si, dias in by_seed.items():
        for ai in range(len(dias)):
            for bi in range(ai, len(dias)):
                for dia2 in _compose_pair(dias[ai], dias[bi], d, k, tol):
                    if _contains_result(dia2, results):
                        continue
                    if is_polytope_diagram(dia2, d, tol):
                        results.setdefault(canonical_key(dia2), dia2)
                        continue
                    ck = canonical_key(dia2)
                    if ck in seen2:
                        continue
                    seen2.add(ck)
                    l2.append(dia2)
    l2.sort(key=canonical_key)
    return l0, l1, l2, results


def _cos(m: int) -> float:
    return cos_pi_over(m) if m >= 3 else 0.0


def _attach_row(base: np.ndarray, weights) -> np.ndarray:
    n = base.shape[0]
    mat = np.eye(n + 1)
    mat[:n, :n] = base
    row = -np.asarray(weights, dtype=float)
    mat[n, :n] = row
    mat[:n, n] = row
    return mat


def _compose_pair(dia_x: Diagram, dia_y: Diagram, d: int, k_max: int, tol):
    """Join <S,x> and <S,y> over their common seed and solve the x-y
    weight from det = 0; yields admissible order-(d+2) diagrams."""
    # dia_x, dia_y live on nodes 0..d with x = y = node d
    edges = dict(dia_x.edges)
    for (i, j), lab in dia_y.edges.items():
        a = d + 1 if i == d else i
        b = d + 1 if j == d else j
        edges[(min(a, b), max(a, b))] = lab
    joined = Diagram(range(d + 2), edges)
    base = joined.gram().matrix

    def det_at(w):
        m = base.copy()
        m[d, d + 1] = m[d + 1, d] = -w
        return float(np.linalg.det(m))

    c = det_at(0.0)
    a = (det_at(1.0) + det_at(-1.0)) / 2.0 - c
    b = (det_at(1.0) - det_at(-1.0)) / 2.0
    roots = _real_roots(a, b, c)
    for w in roots:
        snap = snap_weight(w, k_max)
        if snap is None or snap[0] != "angle":
            continue  # <S,x,y> has no dotted edges by construction
        k = snap[1]
        dia2 = joined.with_edge(d, d + 1, None if k == 2 else Angle(k))
        mat = dia2.gram().matrix
        if abs(np.linalg.det(mat)) > 1e-7:
            continue
        sig = matrix_signature(mat, tol)
        if sig.n_pos != d or sig.n_neg != 1:
            continue
        if has_parabolic_subdiagram(dia2, tol):
            continue
        yield dia2


def _real_roots(a, b, c, eps=1e-12):
    if abs(a) < eps:
        if abs(b) < eps:
            return []
        return [-c / b]
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    r = disc**0.5
    return sorted({(-b - r) / (2 * a), (-b + r) / (2 * a)})


# -- stage 2.1: attaching nodes with at most one dotted edge -----------


def attachments_for(entry: Entry, config: EnumConfig) -> List[Entry]:
    """All single-node attachments w of the L3 kind for a <S,x,y> entry.

    w is joined to Sigma_1 minus one node v by non-dotted labels; the
    weights to v and y come from the reconstructed vector and must snap
    to an angle or (for at most one of them) a dotted weight > 1.
    """
    d, k = config.d, config.k_max
    dia = entry.diagram
    nodes = list(dia.nodes)
    sigma1 = nodes[: d + 1]  # seed + x
    y = nodes[d + 1]
    basis = entry.vectors[: d + 1]
    yvec = entry.vectors[d + 1]
    out = []
    new_node = max(n for n in nodes if isinstance(n, int)) + 1
    for vi, v in enumerate(sigma1):
        rest = [u for u in sigma1 if u != v]
        for labels in itertools.product(range(2, k + 1), repeat=d):
            prods = [-_cos(m) for m in labels]
            try:
                pairs = reconstruct_vector(basis, prods, vi)
            except Exception:
                continue
            for vec, induced_v in pairs:
                w_v = -induced_v
                w_y = -float(_ldot(vec, yvec))
                snap_v = snap_weight(w_v, k)
                snap_y = snap_weight(w_y, k)
                if snap_v is None or snap_y is None:
                    continue
                dotted = [s for s in (snap_v, snap_y) if s[0] == "dotted"]
                if len(dotted) > 1:
                    continue
                wlabels = {}
                for i, u in enumerate(rest):
                    if labels[i] >= 3:
                        wlabels[u] = Angle(labels[i])
                for u, s in ((v, snap_v), (y, snap_y)):
                    lab = _label_of(s)
                    if lab is not None:
                        wlabels[u] = lab
                if not wlabels:
                    continue
                new_dia = dia.with_node(new_node, wlabels)
                if not _admissible(new_dia, d, config.tol):
                    continue
                if not _vectors_consistent(new_dia, entry.vectors, vec):
                    continue
                vecs = np.vstack([entry.vectors, vec[None, :]])
                out.append(
                    Entry(new_dia, vecs, "L3", parent=entry.key, base=entry.key)
                )
    return _dedup_entries(out)


def _ldot(u, v):
    return float(np.dot(u[:-1], v[:-1]) - u[-1] * v[-1])


def _vectors_consistent(diagram, vectors, new_vec, tol=PRODUCT_TOL):
    """The new vector must reproduce every prescribed Gram entry."""
    g = diagram.gram().matrix
    n = g.shape[0] - 1
    prods = np.array([_ldot(new_vec, vectors[i]) for i in range(n)])
    want = g[n, :n]
    return bool(np.all(np.abs(prods - want) <= tol)) and abs(_ldot(new_vec, new_vec) - 1.0) <= 1e-8


def _dedup_entries(entries: List[Entry]) -> List[Entry]:
    seen = {}
    for e in entries:
        seen.setdefault(e.key, e)
    return [seen[k] for k in sorted(seen)]


def extend_tuples(
    base_entry: Entry,
    attachments: List[Entry],
    config: EnumConfig,
    results: Dict[tuple, Diagram],
) -> List[Entry]:
    """Unions of pairwise-compatible attachment tuples over one <S,x,y>.

    Compatibility of two attachments: the weight between their new nodes
    (a plain vector product) snaps to an angle <= k_max or is dotted.
    Returns all maximal-stage entries; polytope diagrams found along the
    way are added to ``results``.
    """
    d, k = config.d, config.k_max
    base_n = base_entry.diagram.order
    compat = {}

    def pair_label(e1: Entry, e2: Entry):
        v1 = e1.vectors[-1]
        v2 = e2.vectors[-1]
        w = -_ldot(v1, v2)
        snap = snap_weight(w, k)
        return snap

    frontier = [
        (e, [i]) for i, e in enumerate(attachments)
    ]  # (entry, attachment indices used)
    all_entries = []
    while frontier:
        all_entries.extend(e for e, _ in frontier)
        nxt = []
        for entry, used in frontier:
            for j in range(used[-1] + 1, len(attachments)):
                cand = attachments[j]
                ok = True
                new_labels = {}
                for ui in used:
                    pl = compat.get((ui, j))
                    if pl is None:
                        pl = pair_label(attachments[ui], cand)
                        compat[(ui, j)] = pl if pl is not None else False
                    if pl is False or pl is None:
                        ok = False
                        break
                    new_labels[ui] = pl
                if not ok:
                    continue
                union = _union_with(entry, cand, used, new_labels, attachments)
                if union is None:
                    continue
                if union.diagram.order > config.n_max:
                    continue
                if union.dotted_count > config.dotted_budget():
                    continue
                if not _admissible(union.diagram, d, config.tol):
                    continue
                if _contains_result(union.diagram, results):
                    continue
                if is_polytope_diagram(union.diagram, d, config.tol):
                    results.setdefault(canonical_key(union.diagram), union.diagram)
                    continue
                nxt.append((union, used + [j]))
        frontier = _dedup_frontier(nxt)
    # classify polytopes among singles too
    final = []
    for e in all_entries:
        if is_polytope_diagram(e.diagram, d, config.tol):
            results.setdefault(canonical_key(e.diagram), e.diagram)
        else:
            final.append(e)
    return _dedup_entries(final)


def _dedup_frontier(frontier):
    seen = {}
    for entry, used in frontier:
        seen.setdefault(entry.key, (entry, used))
    return [seen[k] for k in sorted(seen)]


def _union_with(entry: Entry, cand: Entry, used, new_labels, attachments):
    """Merge one more attachment node into an entry."""
    dia = entry.diagram
    nodes = list(dia.nodes)
    cand_dia = cand.diagram
    cand_node = cand_dia.nodes[-1]
    new_node = max(n for n in nodes if isinstance(n, int)) + 1
    labels = {}
    for u in cand_dia.nodes[:-1]:
        lab = cand_dia.label(cand_node, u)
        if lab is not None:
            labels[u] = lab
    # edges to previously used attachment nodes (in entry order)
    base_order = cand_dia.order - 1  # nodes of <S,x,y>
    for pos, ui in enumerate(used):
        partner = nodes[base_order + pos]
        snap = new_labels[ui]
        lab = _label_of(snap)
        if lab is not None:
            labels[partner] = lab
    new_dia = dia.with_node(new_node, labels)
    vec = cand.vectors[-1]
    if not _vectors_consistent(new_dia, entry.vectors, vec):
        return None
    vecs = np.vstack([entry.vectors, vec[None, :]])
    return Entry(new_dia, vecs, "tuple", parent=entry.key, base=entry.base)


# -- stage 2.2: walking along edges ------------------------------------


def incomplete_vertex_figures(diagram: Diagram, d: int, tol=DEFAULT_TOL):
    """Elliptic order-d subsets S whose edge figures are unfinished:
    some order-(d-1) elliptic subset of S lies in fewer than two
    order-d elliptic subsets of the diagram."""
    levels = elliptic_subsets_by_order(diagram, d, tol)
    verts = [frozenset(s) for s in levels.get(d, [])]
    out = []
    for s in levels.get(d, []):
        fs = frozenset(s)
        for drop in s:
            e = fs - {drop}
            if sum(1 for v in verts if e <= v) < 2:
                out.append(tuple(diagram.nodes[i] for i in s))
                break
    return out


def walk_edges(
    entries: List[Entry],
    config: EnumConfig,
    results: Dict[tuple, Diagram],
) -> List[Entry]:
    """One sweep of edge-completion attachments over all entries."""
    d, k = config.d, config.k_max
    J = lorentz_form(d)
    out = []
    for entry in entries:
        dia = entry.diagram
        if dia.order >= config.n_max:
            continue
        nodes = list(dia.nodes)
        index = {v: i for i, v in enumerate(nodes)}
        new_node = max(n for n in nodes if isinstance(n, int)) + 1
        figures = incomplete_vertex_figures(dia, d, config.tol)
        if not figures:
            continue
        s_nodes = figures[0]  # deterministic: first incomplete vertex
        for u in nodes:
            if u in s_nodes:
                continue
            basis_nodes = list(s_nodes) + [u]
            B = entry.vectors[[index[b] for b in basis_nodes]]
            g = B @ J @ B.T
            if abs(np.linalg.det(g)) < 1e-8:
                continue
            for ent in _walk_attach(entry, basis_nodes, B, new_node, config, results):
                out.append(ent)
    return _dedup_entries(out)


def _walk_attach(entry, basis_nodes, B, new_node, config, results):
    """Attach a node to basis <S,u>: non-dotted labels on all but at
    most one basis node (the withheld one may come out dotted)."""
    d, k = config.d, config.k_max
    dia = entry.diagram
    found = []
    for withheld in range(d + 1):
        rest = [b for i, b in enumerate(basis_nodes) if i != withheld]
        for labels in itertools.product(range(2, k + 1), repeat=d):
            prods = [-_cos(m) for m in labels]
            try:
                pairs = reconstruct_vector(B, prods, withheld)
            except Exception:
                continue
            for vec, induced in pairs:
                snap_w = snap_weight(-induced, k)
                if snap_w is None:
                    continue
                ent = _finish_walk_node(
                    entry, rest, labels, basis_nodes[withheld], snap_w, vec, new_node, config
                )
                if ent is None:
                    continue
                if _contains_result(ent.diagram, results):
                    continue
                if is_polytope_diagram(ent.diagram, d, config.tol):
                    results.setdefault(canonical_key(ent.diagram), ent.diagram)
                    continue
                found.append(ent)
    return _dedup_entries(found)


def _finish_walk_node(entry, rest, labels, withheld_node, snap_w, vec, new_node, config):
    dia = entry.diagram
    nodes = list(dia.nodes)
    wlabels = {}
    for i, u in enumerate(rest):
        if labels[i] >= 3:
            wlabels[u] = Angle(labels[i])
    lab = _label_of(snap_w)
    if lab is not None:
        wlabels[withheld_node] = lab
    # remaining nodes: weights from the vector model
    covered = set(rest) | {withheld_node}
    index = {v: i for i, v in enumerate(nodes)}
    for u in nodes:
        if u in covered:
            continue
        w = -_ldot(vec, entry.vectors[index[u]])
        s = snap_weight(w, config.k_max)
        if s is None:
            return None
        lab = _label_of(s)
        if lab is not None:
            wlabels[u] = lab
    if not wlabels:
        return None
    new_dia = dia.with_node(new_node, wlabels)
    if new_dia.order > config.n_max:
        return None
    if len(new_dia.dotted_edges()) > config.dotted_budget():
        return None
    if not _admissible(new_dia, config.d, config.tol):
        return None
    if not _vectors_consistent(new_dia, entry.vectors, vec):
        return None
    vecs = np.vstack([entry.vectors, vec[None, :]])
    return Entry(new_dia, vecs, "walk", parent=entry.key, base=entry.base)


# -- the full pipeline -------------------------------------------------


def enumerate_P(config: EnumConfig) -> List[PolytopeRecord]:
    """All polytope diagrams found by the staged search, re-verified.

    Deterministic: output sorted by canonical form.  Raises
    ResourceCapError when limit_entries is exceeded.
    """
    d = config.d
    _l0, _l1, l2, results = seed_lists(config)
    _check_cap(config, len(l2), "L2")

    # stage 2.1 over each <S,x,y>
    survivors: List[Entry] = []
    base_entries = []
    for dia2 in l2:
        vecs = model_from_gram(dia2.gram().matrix, d, config.tol)
        base_entries.append(Entry(dia2, vecs, "L2"))
    for entry in base_entries:
        att = attachments_for(entry, config)
        _check_cap(config, len(att), "L3")
        survivors.append(entry)
        survivors.extend(extend_tuples(entry, att, config, results))
    survivors = _dedup_entries(survivors)

    # stage 2.2 sweeps
    frontier = [
        e
        for e in survivors
        if e.dotted_count <= config.dotted_budget()
        and not is_polytope_diagram(e.diagram, d, config.tol)
    ]
    while frontier:
        _check_cap(config, len(frontier), "walk")
        frontier = walk_edges(frontier, config, results)

    # final: re-verify everything via the independent solver
    records = []
    for key in sorted(results):
        dia = results[key]
        n, p = dia.order, len(dia.dotted_edges())
        if p > max(0, n - d - 2):
            continue  # too many disjoint facet pairs for the class
        rec = solve_dotted(canonical_diagram(dia), d, config.tol)
        if isinstance(rec, PolytopeRecord):
            records.append(rec)
    records = _minimal_only(records, d)
    return records


def _minimal_only(records: List[PolytopeRecord], d: int) -> List[PolytopeRecord]:
    """Drop any record properly containing another record's diagram."""
    keys = {canonical_key(r.diagram): r for r in records}
    out = []
    for key, rec in sorted(keys.items()):
        others = {k: v.diagram for k, v in keys.items() if k != key and v.diagram.order < rec.diagram.order}
        if others and _contains_result(rec.diagram, others):
            continue
        out.append(rec)
    return out


def _check_cap(config: EnumConfig, count: int, stage: str):
    if config.limit_entries is not None and count > config.limit_entries:
        raise ResourceCapError(
            f"entry cap {config.limit_entries} exceeded at stage {stage} ({count} entries)",
            frontier=[stage],
        )
