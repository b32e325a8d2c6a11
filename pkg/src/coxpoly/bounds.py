"""Explicit facet- and label-count bounds, plus the search-based
refinement of the maximal edge label.

The closed-form bounds chain together as: q0/q1 bound the number of
nodes reachable from a starting elliptic diagram, and n0 bounds the
total facet count of any polytope diagram once the maximal edge label
k0 is known.  refine_k_bound replaces the crude k0 by an exhaustive
zero-determinant search over two-node extensions of elliptic seeds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from .diagram import (
    DEFAULT_TOL,
    Angle,
    Diagram,
    DiagramError,
    cos_pi_over,
    matrix_signature,
)
from .classify import (
    elliptic_diagrams,
    has_parabolic_subdiagram,
)
from ._canon import canonical_key
from .localdet import d_pqr


class BoundsError(DiagramError):
    pass


@dataclass(frozen=True)
class BoundSet:
    """The bound values for one (d, k) configuration."""

    d: int
    k: int
    q0: int
    q1: int
    n0: int
    k0: Optional[int] = None
    k0_provenance: str = "formula"  # formula | search

    def lines(self):
        out = [
            ("dimension", self.d),
            ("max-label", self.k),
            ("q0", self.q0),
            ("q1", self.q1),
            ("n0", self.n0),
        ]
        if self.k0 is not None:
            out.append(("k0", self.k0))
            out.append(("k0-provenance", self.k0_provenance))
        return out


# -- closed-form / counted bounds --------------------------------------


def _elliptic_count_bound(d: int, k: int) -> int:
    """Upper bound for the number of elliptic order-d diagrams, labels <= k.

    d = 4 uses the closed form 8 + k(k-1)/2; other d count exactly.
    """
    if d == 4:
        return 8 + k * (k - 1) // 2
    return len(elliptic_diagrams(d, k))


def n0_count(d: int, k: int, mode: str = "counted") -> int:
    """N0: the number of one-node extensions <S, x> of elliptic seeds.

    formula mode: (elliptic count bound) * (k-1)^d label vectors.
    counted mode: exact enumeration, isomorphism-deduplicated, keeping
    only extensions whose Gram matrix has negative inertia index <= 1.
    """
    if mode == "formula":
        return _elliptic_count_bound(d, k) * (k - 1) ** d
    if mode != "counted":
        raise BoundsError(f"unknown mode {mode!r}")
    seen = set()
    for seed in elliptic_diagrams(d, k):
        base = seed.gram().matrix
        for labels in itertools.product(range(2, k + 1), repeat=d):
            mat = _extend_matrix(base, labels)
            sig = matrix_signature(mat)
            if not sig.certified or sig.n_neg > 1:
                continue
            ext = seed.with_node(
                d, {i: (Angle(m) if m >= 3 else None) for i, m in enumerate(labels)}
            )
            seen.add(canonical_key(ext))
    return len(seen)


def _extend_matrix(base: np.ndarray, labels) -> np.ndarray:
    n = base.shape[0]
    mat = np.eye(n + 1)
    mat[:n, :n] = base
    row = np.array([-cos_pi_over(m) if m >= 3 else 0.0 for m in labels])
    mat[n, :n] = row
    mat[:n, n] = row
    return mat


def q0_bound(d: int, k: int, mode: str = "formula") -> int:
    """Node-count bound: N0 * (k-1)^(d+1) + (d+1).

    formula mode is the crude closed form (for d = 4 exactly
    (8 + k(k-1)/2)(k-1)^9 + 5); counted mode substitutes the exact N0.
    """
    if d < 2 or k < 3:
        raise BoundsError("require d >= 2 and k >= 3")
    return n0_count(d, k, mode) * (k - 1) ** (d + 1) + (d + 1)


def q1_bound(d: int, k: int) -> int:
    """2(d+1) * N0(d,k) * (k-1)^d with the counted N0."""
    return 2 * (d + 1) * n0_count(d, k, "counted") * (k - 1) ** d


def n0_bound(d: int, k0: int) -> int:
    """Facet-count bound 2*q1(d, k0) + d + 2."""
    if d < 1 or k0 < 3:
        raise BoundsError("require d >= 1 and k0 >= 3")
    return 2 * q1_bound(d, k0) + d + 2


def compute_bounds(d: int, k: int) -> BoundSet:
    return BoundSet(
        d=d,
        k=k,
        q0=q0_bound(d, k, "formula"),
        q1=q1_bound(d, k),
        n0=n0_bound(d, k),
    )


# -- refine_k_bound ----------------------------------------------------


@dataclass(frozen=True)
class RefineResult:
    max_label: int
    witnesses: Tuple[Diagram, ...]
    cap: int
    shape: str

    @property
    def cap_reached(self) -> bool:
        """The maximum sits at the cap, so the bound is not established."""
        return self.max_label >= self.cap


def refine_k_bound(
    d: int,
    label_cap: int,
    shape: str = "general",
    tol: float = DEFAULT_TOL,
    jobs: int = 1,
) -> RefineResult:
    """Maximal edge label over zero-determinant two-node extensions.

    Searches diagrams <S, x, y> of order d+2 built on elliptic order-d
    seeds S: no dotted edges, attachment labels bounded by the maximal
    label of S, determinant zero, negative inertia index 1.  Returns the
    maximal label occurring, with the witnessing diagrams.

    shape="general" scans all attachments by brute force (practical for
    d = 2); shape="triangle" is the dimension-4 search where the face
    polygon of the heaviest edge is a hyperbolic triangle.
    """
    if label_cap < 7:
        raise BoundsError("label cap must be >= 7")
    if shape == "general":
        return _refine_general(d, label_cap, tol)
    if shape == "triangle":
        if d != 4:
            raise BoundsError("triangle shape is specific to dimension 4")
        return _refine_triangle(label_cap, tol, jobs)
    raise BoundsError(f"unknown shape {shape!r}")


# .. general brute-force shape .........................................


def _refine_general(d: int, cap: int, tol: float) -> RefineResult:
    best = 0
    witnesses = []
    seeds = sorted(
        elliptic_diagrams(d, cap), key=lambda s: -s.max_angle_label()
    )
    for seed in seeds:
        k_s = max(seed.max_angle_label(), 3)
        if k_s < best:
            continue  # cannot improve the maximum
        base = seed.gram().matrix
        found = _zero_det_extensions(base, k_s, tol)
        for labels_x, labels_y, m_xy in found:
            dia = _assemble_extension(seed, labels_x, labels_y, m_xy)
            if has_parabolic_subdiagram(dia, tol):
                continue
            if not _exact_zero_det(dia):
                continue
            lab = dia.max_angle_label()
            if lab > best:
                best, witnesses = lab, [dia]
            elif lab == best:
                witnesses.append(dia)
    witnesses = _dedup(witnesses)
    return RefineResult(best, tuple(witnesses), cap, "general")


def _zero_det_extensions(base: np.ndarray, k_s: int, tol: float):
    """All (labels_x, labels_y, m_xy) with |det| < 1e-7 and inertia (.,1,.).

    Labels range over 2..k_s; both x and y must be joined to the rest.
    """
    d = base.shape[0]
    labels = list(range(2, k_s + 1))
    out = []
    grids = itertools.product(labels, repeat=d)
    for labels_x in grids:
        mat_x = _extend_matrix(base, labels_x)
        for labels_y in itertools.product(labels, repeat=d):
            for m_xy in labels:
                full = _extend_matrix(mat_x, list(labels_y) + [m_xy])
                det = np.linalg.det(full)
                if abs(det) >= 1e-7:
                    continue
                sig = matrix_signature(full, DEFAULT_TOL)
                if sig.n_neg != 1:
                    continue
                if all(m == 2 for m in labels_x) or all(
                    m == 2 for m in list(labels_y) + [m_xy]
                ):
                    continue  # x or y not joined at all
                out.append((labels_x, labels_y, m_xy))
    return out


def _assemble_extension(seed: Diagram, labels_x, labels_y, m_xy) -> Diagram:
    d = seed.order
    x, y = d, d + 1  # seeds live on nodes 0..d-1
    dia = seed.with_node(
        x, {seed.nodes[i]: (Angle(m) if m >= 3 else None) for i, m in enumerate(labels_x)}
    )
    ylab = {seed.nodes[i]: (Angle(m) if m >= 3 else None) for i, m in enumerate(labels_y)}
    if m_xy >= 3:
        ylab[x] = Angle(m_xy)
    return dia.with_node(y, ylab)


def _dedup(diagrams: List[Diagram]) -> List[Diagram]:
    seen = {}
    for dia in diagrams:
        seen.setdefault(canonical_key(dia), dia)
    return [seen[key] for key in sorted(seen)]


# .. dimension-4 triangle-face shape ...................................
#
# The heaviest edge S0 (label k) has a triangle face polygon with
# Lanner diagram (p, q, r); a node y is attached to both S0 and the
# triangle.  Gluing at y gives the local-determinant identity
#     D(l, m, k) + ldet2(p,q,r,s,t,u) = 1,
# where l, m are y's labels to S0 and s, t, u its labels to the
# triangle, and ldet2 = 1 - c^T L^{-1} c for the triangle Gram L and
# the attachment weight vector c.


def _refine_triangle(cap: int, tol: float, jobs: int) -> RefineResult:
    triangles = [
        (p, q, r)
        for p in range(2, cap + 1)
        for q in range(p, cap + 1)
        for r in range(q, cap + 1)
        if 1.0 / p + 1.0 / q + 1.0 / r < 1.0
    ]
    if jobs > 1:
        import multiprocessing as mp

        with mp.Pool(jobs) as pool:
            parts = pool.starmap(
                _triangle_seed_hits,
                [(tri, cap, tol) for tri in triangles],
                chunksize=max(1, len(triangles) // (8 * jobs)),
            )
        hits = [h for part in parts for h in part]
    else:
        hits = []
        for tri in triangles:
            hits.extend(_triangle_seed_hits(tri, cap, tol))

    best = 0
    witnesses = []
    for k, dia in hits:
        if k > best:
            best, witnesses = k, [dia]
        elif k == best:
            witnesses.append(dia)
    witnesses = _dedup(witnesses)
    return RefineResult(best, tuple(witnesses), cap, "triangle")


@lru_cache(maxsize=4)
def _query_tables(cap: int):
    """Arrays over all (k, l, m) with 7 <= k <= cap, 2 <= l <= m <= k,
    (l, m) != (2, 2): target ldet2 value and |det|-window numerator."""
    ks, ls, ms_, targets, winbase = [], [], [], [], []
    for k in range(7, cap + 1):
        sk2 = math.sin(math.pi / k) ** 2
        for l in range(2, k + 1):
            for m in range(l, k + 1):
                if l == 2 and m == 2:
                    continue  # y must be joined to S0
                ks.append(k)
                ls.append(l)
                ms_.append(m)
                targets.append(1.0 - d_pqr(l, m, k))
                winbase.append(1e-7 / sk2)
    return (
        np.array(ks),
        np.array(ls),
        np.array(ms_),
        np.array(targets),
        np.array(winbase),
    )


@lru_cache(maxsize=2)
def _stu_tables(cap: int):
    """Per-cap grid of attachment label triples (s, t, u) with label
    arrays, the quadratic-form basis matrix (columns c_s^2, c_t^2,
    c_u^2, 2c_s c_t, 2c_s c_u, 2c_t c_u), and the joined-to-triangle
    mask.  Shared by every triangle seed at this cap."""
    vals = np.array(
        [cos_pi_over(m) if m >= 3 else 0.0 for m in range(2, cap + 1)]
    )
    nv = len(vals)
    idx = np.arange(nv**3)
    s_lab = idx // (nv * nv) + 2
    t_lab = (idx // nv) % nv + 2
    u_lab = idx % nv + 2
    maxstu = np.maximum(np.maximum(s_lab, t_lab), u_lab)
    c0, c1, c2 = vals[s_lab - 2], vals[t_lab - 2], vals[u_lab - 2]
    basis = np.stack(
        [c0 * c0, c1 * c1, c2 * c2, 2 * c0 * c1, 2 * c0 * c2, 2 * c1 * c2],
        axis=1,
    )
    joined = ~((s_lab == 2) & (t_lab == 2) & (u_lab == 2))
    return s_lab, t_lab, u_lab, maxstu, basis, joined


def _triangle_seed_hits(tri, cap, tol):
    """All verified (k, witness) pairs for one Lanner triangle (p,q,r)."""
    p, q, r = tri
    L = np.eye(3)
    for (i, j), m in (((0, 1), r), ((0, 2), q), ((1, 2), p)):
        L[i, j] = L[j, i] = -cos_pi_over(m) if m >= 3 else 0.0
    detL = float(np.linalg.det(L))
    if abs(detL) < 1e-12:
        return []
    Linv = np.linalg.inv(L)

    s_lab, t_lab, u_lab, maxstu_all, basis, joined = _stu_tables(cap)
    linv6 = np.array(
        [Linv[0, 0], Linv[1, 1], Linv[2, 2], Linv[0, 1], Linv[0, 2], Linv[1, 2]]
    )
    ldet2 = 1.0 - basis @ linv6

    # sort the full grid by ldet2; every other per-entry predicate
    # (joined, attachment range, parabolic pairs) is evaluated only at
    # the rare candidate positions found by the window search
    order = np.argsort(ldet2)
    ldet2_sorted = ldet2[order]

    ks, ls, ms_, targets, winbase = _query_tables(cap)
    qmask = ks >= max(7, r)  # every label in the witness is <= k
    ks, ls, ms_, targets = ks[qmask], ls[qmask], ms_[qmask], targets[qmask]
    window = winbase[qmask] / abs(detL)
    lo = np.searchsorted(ldet2_sorted, targets - window, side="left")
    hi = np.searchsorted(ldet2_sorted, targets + window, side="right")

    counts = hi - lo
    total = int(counts.sum())
    if total == 0:
        return []
    # expand (query, grid position) candidate pairs without Python loops
    cand_q = np.repeat(np.arange(len(ks)), counts)
    cum = np.cumsum(counts)
    cand_pos = np.arange(total) - np.repeat(cum - counts, counts) + np.repeat(lo, counts)
    orig = order[cand_pos]
    ok = maxstu_all[orig] <= ks[cand_q]
    ok &= joined[orig]
    ok &= ldet2[orig] > -1e-6  # negative inertia index of <L, y> stays 1
    ok &= _triangle_pair_mask(p, q, r, s_lab[orig], t_lab[orig], u_lab[orig])
    cand_q, cand_pos = cand_q[ok], cand_pos[ok]

    # vectorized exact-root guard: with c = cos(pi/k') continuous, the
    # zero-determinant condition is ldet2*(1-c^2) = cl^2 + cm^2 + 2*cl*cm*c;
    # require a root within 1e-9 of cos(pi/k).
    cl = np.where(ls >= 3, np.cos(np.pi / ls), 0.0)[cand_q]
    cm = np.where(ms_ >= 3, np.cos(np.pi / ms_), 0.0)[cand_q]
    ck = np.cos(np.pi / ks)[cand_q]
    vals = ldet2_sorted[cand_pos]
    a = -vals
    b = -2.0 * cl * cm
    c = vals - cl * cl - cm * cm
    disc = b * b - 4.0 * a * c
    near = np.zeros(len(vals), dtype=bool)
    quad = np.abs(a) >= 1e-14
    with np.errstate(invalid="ignore", divide="ignore"):
        rdisc = np.sqrt(np.maximum(disc, 0.0))
        r1 = (-b - rdisc) / (2.0 * a)
        r2 = (-b + rdisc) / (2.0 * a)
        rlin = -c / b
    near |= quad & (disc >= 0) & (np.abs(r1 - ck) < 1e-9)
    near |= quad & (disc >= 0) & (np.abs(r2 - ck) < 1e-9)
    near |= ~quad & (np.abs(b) >= 1e-14) & (np.abs(rlin - ck) < 1e-9)
    cand_q, cand_pos = cand_q[near], cand_pos[near]

    hits = []
    for qi, pos in zip(cand_q, cand_pos):
        k, l, m = int(ks[qi]), int(ls[qi]), int(ms_[qi])
        g = order[pos]
        s, t, u = int(s_lab[g]), int(t_lab[g]), int(u_lab[g])
        dia = _triangle_witness(p, q, r, s, t, u, l, m, k)
        full = dia.gram().matrix
        det = float(np.linalg.det(full))
        sig = matrix_signature(full, tol)
        if (
            abs(det) < 1e-7
            and sig.n_neg == 1
            and not has_parabolic_subdiagram(dia, tol)
            and _exact_zero_det(dia)
        ):
            hits.append((k, dia))
    return hits


def _triangle_pair_mask(p, q, r, s_lab, t_lab, u_lab):
    """Exclude attachments creating a parabolic order-3 subdiagram."""
    ok = np.ones(len(s_lab), dtype=bool)
    # node order of the triangle Gram above: edge (0,1)=r, (0,2)=q, (1,2)=p
    for (a, b), m in (((s_lab, t_lab), r), ((s_lab, u_lab), q), ((t_lab, u_lab), p)):
        ok &= ~_is_parabolic_triple(a, b, m)
    return ok


_PARABOLIC_TRIPLES = {(2, 3, 6), (2, 4, 4), (3, 3, 3)}


def _is_parabolic_triple(a, b, m):
    out = np.zeros(len(a), dtype=bool)
    for trip in _PARABOLIC_TRIPLES:
        for perm in set(itertools.permutations(trip)):
            if perm[2] == m:
                out |= (a == perm[0]) & (b == perm[1])
    return out


def _exact_zero_det(diagram: Diagram, threshold: float = 1e-25) -> bool:
    """Extended-precision confirmation that the determinant is an exact zero.

    Double-precision near-misses (|det| ~ 1e-9) pass the coarse window
    and the root guard; a genuine witness is an algebraic zero, so its
    determinant at 40 digits is ~1e-38.  Only angle-labeled diagrams.
    """
    import mpmath as mp

    with mp.workdps(40):
        n = diagram.order
        idx = {v: i for i, v in enumerate(diagram.nodes)}
        M = mp.eye(n)
        for (a, b), lab in diagram.edges.items():
            val = -mp.cos(mp.pi / lab.m)
            M[idx[a], idx[b]] = M[idx[b], idx[a]] = val
        return abs(mp.det(M)) < threshold


def _confirm_root(l, m, k, ldet2, root_tol=1e-9):
    """Exact-root guard: with c = cos(pi/k') treated as continuous, the
    zero-determinant condition reads
        g(c) = ldet2*(1 - c^2) - cl^2 - cm^2 - 2*cl*cm*c = 0;
    require a root of g within root_tol of cos(pi/k)."""
    cl = cos_pi_over(l) if l >= 3 else 0.0
    cm = cos_pi_over(m) if m >= 3 else 0.0
    a = -ldet2
    b = -2.0 * cl * cm
    c = ldet2 - cl * cl - cm * cm
    ck = cos_pi_over(k)
    roots = []
    if abs(a) < 1e-14:
        if abs(b) > 1e-14:
            roots = [-c / b]
    else:
        disc = b * b - 4 * a * c
        if disc >= 0:
            rdisc = math.sqrt(disc)
            roots = [(-b - rdisc) / (2 * a), (-b + rdisc) / (2 * a)]
    return any(abs(root - ck) < root_tol for root in roots)


def _triangle_witness(p, q, r, s, t, u, l, m, k) -> Diagram:
    """The order-6 witness: triangle on nodes 1-3, the heaviest edge
    on nodes 4-5 (label k), and node 6 = y joined to both sides."""
    edges = {}
    # triangle with Gram node order (0,1)=r, (0,2)=q, (1,2)=p -> nodes 1,2,3
    for (i, j), mm in (((1, 2), r), ((1, 3), q), ((2, 3), p)):
        if mm >= 3:
            edges[(i, j)] = Angle(mm)
    edges[(4, 5)] = Angle(k)
    for node, mm in ((1, s), (2, t), (3, u), (4, l), (5, m)):
        if mm >= 3:
            edges[(node, 6)] = Angle(mm)
    return Diagram((1, 2, 3, 4, 5, 6), edges)
