"""Canonical forms and isomorphism testing for diagrams.

The canonical form is the minimum, over node permutations, of the
row-major upper-triangle of the label matrix.  Permutations are pruned
by iterated neighborhood-color refinement, so only automorphism-like
permutations are ever enumerated.
"""

from __future__ import annotations

import itertools

from .diagram import Angle, Diagram, Dotted


def _label_token(lab):
    """Totally ordered encoding of an edge label."""
    if lab is None:
        return (0,)
    if isinstance(lab, Angle):
        return (1, lab.m)
    if lab.known:
        return (2, round(lab.w, 9))
    return (3,)


def _label_matrix(diagram):
    n = diagram.order
    nodes = diagram.nodes
    mat = [[(0,)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            tok = _label_token(diagram.label(nodes[i], nodes[j]))
            mat[i][j] = mat[j][i] = tok
    return mat


def _refine_colors(mat):
    """Stable coloring: iterate 'own color + multiset of (edge, color)'."""
    n = len(mat)
    colors = [0] * n
    while True:
        sigs = []
        for i in range(n):
            sig = (colors[i], tuple(sorted((mat[i][j], colors[j]) for j in range(n) if j != i)))
            sigs.append(sig)
        ranking = {s: r for r, s in enumerate(sorted(set(sigs)))}
        new = [ranking[s] for s in sigs]
        if new == colors:
            return colors
        colors = new


def canonical_key(diagram: Diagram):
    """Permutation-invariant key: lexicographically least label matrix."""
    n = diagram.order
    if n == 0:
        return ()
    mat = _label_matrix(diagram)
    colors = _refine_colors(mat)
    # candidate orderings: nodes sorted by color, ties broken by search
    classes = {}
    for i, c in enumerate(colors):
        classes.setdefault(c, []).append(i)
    ordered_classes = [classes[c] for c in sorted(classes)]

    best = None
    for perm in _class_permutations(ordered_classes):
        key = _upper_triangle(mat, perm, best)
        if key is not None:
            best = key
    return best


def _class_permutations(ordered_classes):
    pools = [itertools.permutations(cls) for cls in ordered_classes]
    for combo in itertools.product(*pools):
        yield [i for cls in combo for i in cls]


def _upper_triangle(mat, perm, best):
    """Row-major upper triangle under perm; None if already >= best."""
    n = len(perm)
    out = []
    pos = 0
    for a in range(n):
        for b in range(a + 1, n):
            tok = mat[perm[a]][perm[b]]
            if best is not None:
                ref = best[pos]
                if tok > ref:
                    return None
                if tok < ref:
                    best = None  # strictly better; stop comparing
            out.append(tok)
            pos += 1
    return tuple(out)


def canonical_diagram(diagram: Diagram) -> Diagram:
    """Isomorphic copy on nodes 1..n realizing the canonical key."""
    n = diagram.order
    key = canonical_key(diagram)
    edges = {}
    pos = 0
    for a in range(n):
        for b in range(a + 1, n):
            tok = key[pos]
            pos += 1
            if tok == (0,):
                pass
            elif tok[0] == 1:
                edges[(a + 1, b + 1)] = Angle(tok[1])
            elif tok[0] == 2:
                edges[(a + 1, b + 1)] = Dotted(tok[1])
            else:
                edges[(a + 1, b + 1)] = Dotted(None)
    return Diagram(range(1, n + 1), edges)


def is_isomorphic(a: Diagram, b: Diagram) -> bool:
    if a.order != b.order or len(a.edges) != len(b.edges):
        return False
    return canonical_key(a) == canonical_key(b)
