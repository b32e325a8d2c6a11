"""Essentiality toolkit: dissections, doubling, volumes, subgroup filters.

A dissecting hyperplane cuts a compact Coxeter polytope into two Coxeter
polytopes.  Every facet the hyperplane crosses in interior points must
be orthogonal to it, except — in the angle-split case — the two facets
of one dihedral angle pi/m, which it splits into pi/a + pi/b with
integer a and b.  Doubling glues a polytope to its mirror image along a
facet; it succeeds exactly when every dihedral angle at that facet is
pi/(2k) or the neighbouring facet is orthogonal (and so extends through
the mirror).  Even-dimensional volumes come from the Gauss-Bonnet
formula (d = 2) and the orbifold Euler characteristic (d = 4).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from .diagram import (
    DEFAULT_TOL,
    Angle,
    Diagram,
    DiagramError,
    Dotted,
    cos_pi_over,
    parse_diagram,
    parse_dimension,
)
from .classify import elliptic_subsets_by_order, elliptic_type
from .polytope import (
    PolytopeRecord,
    PrecisionError,
    Rejection,
    lorentz_dot,
    lorentz_form,
    solve_dotted,
)
from ._canon import canonical_key

SNAP_TOL = 1e-6
SIDE_TOL = 1e-7
MAX_SNAP_LABEL = 200


class EssentialError(DiagramError):
    pass


# -- geometry helpers --------------------------------------------------


def vertex_points(record: PolytopeRecord) -> Dict[tuple, np.ndarray]:
    """Hyperbolic vertex points (timelike, (x,x) = -1, interior side
    nonpositive against every outward normal), keyed by vertex node set."""
    d = record.dimension
    J = lorentz_form(d)
    vecs = record.model.vectors
    nodes = list(record.diagram.nodes)
    index = {v: i for i, v in enumerate(nodes)}
    out = {}
    for vert in record.vertices:
        N = vecs[[index[v] for v in vert]] @ J
        _, _, vt = np.linalg.svd(N)
        x = vt[-1]
        q = lorentz_dot(x, x)
        if q >= -1e-12:
            raise PrecisionError(f"vertex {vert} direction is not timelike")
        x = x / math.sqrt(-q)
        prods = vecs @ J @ x
        if np.max(prods) > 1e-8:
            x = -x
            prods = -prods
        if np.max(prods) > 1e-8:
            raise PrecisionError(f"vertex {vert} lies outside the polytope")
        out[tuple(vert)] = x
    return out


def _snap_label(weight: float, tol: float = SNAP_TOL):
    """Edge label for a solved Gram weight, or None when inadmissible.

    Returns 'right' for an absent edge (angle pi/2)."""
    if abs(weight) <= tol:
        return "right"
    if weight > 1.0 + 1e-9:
        return Dotted(float(weight))
    for m in range(3, MAX_SNAP_LABEL + 1):
        if abs(weight - cos_pi_over(m)) <= tol:
            return Angle(m)
    return None


def _diagram_from_normals(normals: List[np.ndarray], node_ids, d: int):
    """Diagram whose Gram matrix the given normals realize; None when a
    pairwise weight is not an integer part of pi (and not dotted)."""
    J = lorentz_form(d)
    arr = np.asarray(normals)
    g = arr @ J @ arr.T
    edges = {}
    n = len(node_ids)
    for i in range(n):
        for j in range(i + 1, n):
            lab = _snap_label(-g[i, j])
            if lab is None:
                return None
            if lab != "right":
                a, b = node_ids[i], node_ids[j]
                edges[(min(a, b), max(a, b))] = lab
    return Diagram(node_ids, edges)


# -- dissections -------------------------------------------------------


@dataclass
class DissectionWitness:
    """A hyperplane dissecting a polytope into two Coxeter polytopes."""

    kind: str  # "orthogonal" | "angle-split"
    normal: np.ndarray
    parts: Tuple[PolytopeRecord, PolytopeRecord]
    angle_table: Dict  # facet node -> "orthogonal" | ("angle", m) | "missed"
    split: Optional[tuple] = None  # (facet1, facet2, m, a, b) for angle-split

    @property
    def key(self):
        return tuple(sorted(canonical_key(p.diagram) for p in self.parts)) + (
            self.kind,
        )


def find_dissections(record: PolytopeRecord, tol: float = DEFAULT_TOL):
    """All dissections found by the orthogonal-hyperplane and
    angle-split searches, deduplicated by the parts' canonical forms."""
    import itertools

    d = record.dimension
    dia = record.diagram
    nodes = list(dia.nodes)
    index = {v: i for i, v in enumerate(nodes)}
    vecs = record.model.vectors
    points = vertex_points(record)
    vertex_sets = [frozenset(v) for v in record.vertices]

    witnesses = []

    # orthogonal search: d facets not forming a vertex
    vert_lookup = set(vertex_sets)
    for subset in itertools.combinations(nodes, d):
        if frozenset(subset) in vert_lookup:
            continue
        u = _orthogonal_normal(vecs, [index[v] for v in subset], d)
        if u is None:
            continue
        for cand in (u,):
            w = _try_hyperplane(record, points, cand, "orthogonal", None, tol)
            if w is not None:
                witnesses.append(w)

    # angle-split search: codim-2 faces (intersecting facet pairs)
    J = lorentz_form(d)
    levels = elliptic_subsets_by_order(dia, 2, tol)
    for (i, j) in levels.get(2, []):
        f1, f2 = nodes[i], nodes[j]
        lab = dia.label(f1, f2)
        m = lab.m if isinstance(lab, Angle) else 2
        for a in range(m + 1, 2 * m + 1):
            bb = Fraction(1, m) - Fraction(1, a)
            if bb <= 0 or bb.numerator != 1:
                continue
            b = bb.denominator
            u = _split_normal(vecs[index[f1]], vecs[index[f2]], m, a, b, d)
            if u is None:
                continue
            w = _try_hyperplane(
                record, points, u, "angle-split", (f1, f2, m, a, b), tol
            )
            if w is not None:
                witnesses.append(w)

    seen = {}
    for w in witnesses:
        seen.setdefault(w.key, w)
    return [seen[k] for k in sorted(seen)]


def _orthogonal_normal(vecs, idxs, d):
    """Unit spacelike vector orthogonal to the given d normals, if any."""
    J = lorentz_form(d)
    N = vecs[idxs] @ J
    _, sv, vt = np.linalg.svd(N)
    if len(sv) == N.shape[0] and sv[-1] > 1e-8:
        u = vt[-1]
    else:
        return None
    q = lorentz_dot(u, u)
    if q <= 1e-10:
        return None
    return u / math.sqrt(q)


def _split_normal(n1, n2, m, a, b, d):
    """Unit normal through the codim-2 face of (n1, n2) making angles
    pi/a with facet 1 and pi/b with facet 2."""
    g11 = 1.0
    g12 = lorentz_dot(n1, n2)
    G = np.array([[g11, g12], [g12, g11]])
    p = np.array([-cos_pi_over(a), cos_pi_over(b)])
    try:
        x = np.linalg.solve(G, p)
    except np.linalg.LinAlgError:
        return None
    u = x[0] * n1 + x[1] * n2
    q = lorentz_dot(u, u)
    if abs(q - 1.0) > 1e-6:
        return None
    return u / math.sqrt(q)


def _try_hyperplane(record, points, u, kind, split, tol):
    """Validate one candidate hyperplane and build the two parts."""
    d = record.dimension
    dia = record.diagram
    nodes = list(dia.nodes)
    index = {v: i for i, v in enumerate(nodes)}
    vecs = record.model.vectors

    sides = {}
    for vert, x in points.items():
        s = lorentz_dot(u, x)
        sides[vert] = 0 if abs(s) <= SIDE_TOL else (1 if s < 0 else -1)
    if not any(s == 1 for s in sides.values()) or not any(
        s == -1 for s in sides.values()
    ):
        return None  # hyperplane does not separate the polytope

    split_pair = set(split[:2]) if split else set()
    angle_table = {}
    for f in nodes:
        fsides = {sides[v] for v in points if f in v}
        w = -lorentz_dot(u, vecs[index[f]])
        if 1 in fsides and -1 in fsides:
            if f in split_pair:
                angle_table[f] = ("angle", None)
                continue
            if abs(w) > SNAP_TOL:
                return None  # crossed in interior but not orthogonal
            angle_table[f] = "orthogonal"
        else:
            angle_table[f] = "missed" if f not in split_pair else ("angle", None)

    parts = []
    for sign, own in ((1, u), (-1, -u)):
        part_nodes = [
            f
            for f in nodes
            if any(sides[v] == sign for v in points if f in v)
            or angle_table[f] == "orthogonal"
        ]
        alpha_id = max(n for n in nodes if isinstance(n, int)) + 1
        normals = [vecs[index[f]] for f in part_nodes] + [own]
        part_dia = _diagram_from_normals(normals, part_nodes + [alpha_id], d)
        if part_dia is None:
            return None
        rec = solve_dotted(part_dia, d, tol)
        if not isinstance(rec, PolytopeRecord):
            return None
        parts.append(rec)

    return DissectionWitness(
        kind=kind,
        normal=u,
        parts=(parts[0], parts[1]),
        angle_table=angle_table,
        split=split,
    )


# -- doubling ----------------------------------------------------------


def double(record: PolytopeRecord, facet, tol: float = DEFAULT_TOL):
    """Double the polytope along a facet, or reject with the offending
    dihedral angle."""
    dia = record.diagram
    if facet not in dia.nodes:
        raise EssentialError(f"no facet {facet!r} in the diagram")
    d = record.dimension
    nodes = list(dia.nodes)
    index = {v: i for i, v in enumerate(nodes)}
    for g in nodes:
        if g == facet:
            continue
        lab = dia.label(facet, g)
        if isinstance(lab, Angle) and lab.m % 2 == 1:
            return Rejection(
                "angle-obstruction",
                f"dihedral angle pi/{lab.m} at facets ({facet!r}, {g!r}) "
                f"doubles to 2*pi/{lab.m}",
            )
    vecs = record.model.vectors
    nf = vecs[index[facet]]
    J = lorentz_form(d)

    def reflect(v):
        return v - 2.0 * lorentz_dot(v, nf) * nf

    normals = []
    node_ids = []
    fresh = max(n for n in nodes if isinstance(n, int)) + 1
    for g in nodes:
        if g == facet:
            continue
        vg = vecs[index[g]]
        normals.append(vg)
        node_ids.append(g)
        if abs(lorentz_dot(vg, nf)) > SNAP_TOL:
            normals.append(reflect(vg))
            node_ids.append(fresh)
            fresh += 1
    dbl = _diagram_from_normals(normals, node_ids, d)
    if dbl is None:
        return Rejection(
            "angle-obstruction",
            "a reflected facet pair meets at an angle that is not an "
            "integer part of pi",
        )
    rec = solve_dotted(dbl, d, tol)
    if not isinstance(rec, PolytopeRecord):
        return rec
    return rec


# -- volumes -----------------------------------------------------------


def volume(record: PolytopeRecord, tol: float = DEFAULT_TOL) -> float:
    """Hyperbolic volume for even dimensions (d = 2 or 4)."""
    d = record.dimension
    dia = record.diagram
    if d == 2:
        n = dia.order
        total = 0.0
        levels = elliptic_subsets_by_order(dia, 2, tol)
        nodes = list(dia.nodes)
        for (i, j) in levels.get(2, []):
            lab = dia.label(nodes[i], nodes[j])
            m = lab.m if isinstance(lab, Angle) else 2
            total += math.pi / m
        return (n - 2) * math.pi - total
    if d == 4:
        levels = elliptic_subsets_by_order(dia, 4, tol)
        nodes = list(dia.nodes)
        chi = 0.0
        for order, subsets in levels.items():
            for s in subsets:
                sub = dia.subdiagram([nodes[i] for i in s])
                w = 1 if order == 0 else elliptic_type(sub, tol).group_order
                chi += (-1.0) ** order / w
        return (4.0 * math.pi**2 / 3.0) * chi
    raise EssentialError(f"volume unsupported in dimension {d} (even d only)")


# -- finite-index subgroup filter --------------------------------------


@dataclass(frozen=True)
class Verdict:
    possible: bool
    reason: str = ""

    def __bool__(self):
        return self.possible

    def __str__(self):
        return "possible" if self.possible else f"impossible({self.reason})"


def subgroup_filter(p: PolytopeRecord, f: PolytopeRecord, tol=DEFAULT_TOL) -> Verdict:
    """Necessary conditions for the reflection group of ``p`` to be a
    finite-index subgroup of the reflection group of ``f``.

    Ordered checks: facet count; on equality, combinatorial equivalence;
    vertex-group embedding; for even d, integer volume ratio.  A
    'possible' verdict is necessary-only, never a proof.
    """
    if p.dimension != f.dimension:
        raise EssentialError(
            f"dimension mismatch: {p.dimension} vs {f.dimension}"
        )
    if f.facet_count > p.facet_count:
        return Verdict(False, "facet-count")
    if f.facet_count == p.facet_count and not combinatorially_equivalent(p, f):
        return Verdict(False, "combinatorics")
    orders_f = sorted(_vertex_orders(f, tol))
    for of in sorted(_vertex_orders(p, tol)):
        if not any(og % of == 0 for og in orders_f):
            return Verdict(False, f"vertex-group(order {of})")
    if p.dimension % 2 == 0:
        vp, vf = volume(p, tol), volume(f, tol)
        ratio = vp / vf
        if ratio < 1 - 1e-6 or abs(ratio - round(ratio)) > 1e-6:
            return Verdict(False, f"volume-ratio({ratio:.6f})")
    return Verdict(True)


def _vertex_orders(record: PolytopeRecord, tol):
    dia = record.diagram
    return [
        elliptic_type(dia.subdiagram(v), tol).group_order for v in record.vertices
    ]


def combinatorially_equivalent(p: PolytopeRecord, f: PolytopeRecord) -> bool:
    """Face-lattice isomorphism via facet permutation search over the
    full sets of faces (elliptic subdiagram node sets)."""
    import itertools

    if p.facet_count != f.facet_count:
        return False
    fp = _face_sets(p)
    ff = _face_sets(f)
    if sorted(map(len, fp)) != sorted(map(len, ff)):
        return False
    nodes_p = list(p.diagram.nodes)
    nodes_f = list(f.diagram.nodes)
    ff_set = set(ff)
    # facet invariant: multiset of face sizes through the facet
    def profile(faces, n):
        prof = {}
        for face in faces:
            for v in face:
                prof.setdefault(v, []).append(len(face))
        return {v: tuple(sorted(prof.get(v, []))) for v in n}

    prof_p = profile(fp, nodes_p)
    prof_f = profile(ff, nodes_f)
    if sorted(prof_p.values()) != sorted(prof_f.values()):
        return False
    candidates = {
        a: [b for b in nodes_f if prof_f[b] == prof_p[a]] for a in nodes_p
    }

    def search(i, mapping, used):
        if i == len(nodes_p):
            return True
        a = nodes_p[i]
        for b in candidates[a]:
            if b in used:
                continue
            mapping[a] = b
            if all(
                frozenset(mapping[v] for v in face) in ff_set
                for face in fp
                if all(v in mapping for v in face)
            ):
                if search(i + 1, mapping, used | {b}):
                    return True
            del mapping[a]
        return False

    return search(0, {}, set())


def _face_sets(record: PolytopeRecord):
    dia = record.diagram
    nodes = list(dia.nodes)
    levels = elliptic_subsets_by_order(dia, record.dimension, DEFAULT_TOL)
    out = []
    for order, subsets in levels.items():
        if order == 0:
            continue
        for s in subsets:
            out.append(frozenset(nodes[i] for i in s))
    return out


# -- catalog -----------------------------------------------------------


@dataclass
class CatalogEntry:
    name: str
    family: str
    source: str
    record: PolytopeRecord
    filename: str
    text: str = field(repr=False, default="")


class CatalogError(EssentialError):
    pass


def load_catalog(directory, tol: float = DEFAULT_TOL) -> List[CatalogEntry]:
    """Load and verify every .cox file in a directory (sorted by name)."""
    entries = []
    for fn in sorted(os.listdir(directory)):
        if not fn.endswith(".cox"):
            continue
        path = os.path.join(directory, fn)
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        try:
            headers = _parse_headers(text)
            dia = parse_diagram(text)
            d = parse_dimension(text)
            rec = solve_dotted(dia, d, tol)
        except DiagramError as exc:
            raise CatalogError(f"{fn}: {exc}") from exc
        if not isinstance(rec, PolytopeRecord):
            raise CatalogError(f"{fn}: verification failed: {rec}")
        entries.append(
            CatalogEntry(
                name=headers.get("name", fn[:-4]),
                family=headers.get("family", "other"),
                source=headers.get("source", ""),
                record=rec,
                filename=fn,
                text=text,
            )
        )
    return entries


def save_catalog(entries: List[CatalogEntry], directory):
    """Write entries back; a loaded entry round-trips byte-identically."""
    os.makedirs(directory, exist_ok=True)
    for e in entries:
        with open(os.path.join(directory, e.filename), "w", encoding="utf-8") as fh:
            fh.write(e.text)


def _parse_headers(text: str) -> Dict[str, str]:
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line.startswith("#"):
            continue
        body = line[1:].strip()
        for key in ("name", "family", "source"):
            if body.startswith(key + ":"):
                out[key] = body[len(key) + 1 :].strip()
    return out


# -- odd subdiagram ----------------------------------------------------


def sigma_odd(diagram: Diagram) -> Diagram:
    """Induced subdiagram on nodes incident to an odd-labeled edge."""
    keep = set()
    for (i, j), lab in diagram.edges.items():
        if isinstance(lab, Angle) and lab.m % 2 == 1:
            keep.add(i)
            keep.add(j)
    return diagram.subdiagram([v for v in diagram.nodes if v in keep])
