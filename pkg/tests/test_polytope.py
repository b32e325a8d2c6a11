import math

import numpy as np
import pytest

from coxpoly.diagram import Angle, Diagram, Dotted
from coxpoly.localdet import triangle
from coxpoly.polytope import (
    NoSeedError,
    PolytopeRecord,
    Rejection,
    combinatorial_check,
    face_diagram,
    is_polytope_diagram,
    lorentz_dot,
    model_from_gram,
    solve_dotted,
)

PHI = (1 + math.sqrt(5)) / 2


def _pentagon(weight=PHI):
    edges = {}
    for i in range(5):
        j = (i + 2) % 5
        a, b = min(i, j) + 1, max(i, j) + 1
        edges[(a, b)] = Dotted(weight)
    return Diagram(range(1, 6), edges)


def test_triangle_record():
    rec = solve_dotted(triangle(2, 3, 7), 2)
    assert isinstance(rec, PolytopeRecord)
    assert rec.facet_count == 3
    assert len(rec.vertices) == 3
    assert rec.dotted_count == 0
    # Gram reproduced by the model
    g = rec.model.products()
    want = rec.diagram.gram().matrix
    assert np.max(np.abs(g - want)) < 1e-9


def test_pentagon_blank_one_weight_recovers_phi():
    dia = _pentagon()
    blanked = dia.with_edge(1, 3, Dotted(None))
    rec = solve_dotted(blanked, 2)
    assert isinstance(rec, PolytopeRecord)
    assert rec.diagram.label(1, 3).w == pytest.approx(PHI, abs=1e-10)


def test_pentagon_too_many_unknowns_no_seed():
    dia = _pentagon()
    blanked = dia
    for (i, j) in dia.dotted_edges():
        blanked = blanked.with_edge(i, j, Dotted(None))
    # every order-3 subdiagram now carries an unknown weight
    with pytest.raises(NoSeedError):
        solve_dotted(blanked, 2)


def test_reject_wrong_signature():
    # elliptic diagram cannot be a hyperbolic polytope
    a3 = Diagram(range(1, 4), {(1, 2): Angle(3), (2, 3): Angle(3)})
    result = solve_dotted(a3, 2)
    assert isinstance(result, Rejection)


def test_reject_combinatorics():
    # signature (2,1) but an order-1 "edge" subdiagram in only one vertex:
    # a 2-polytope needs every facet in exactly two vertices
    dia = Diagram(
        range(1, 4), {(1, 2): Dotted(1.5), (1, 3): Dotted(1.5), (2, 3): Angle(3)}
    )
    result = solve_dotted(dia, 2)
    assert isinstance(result, Rejection)


def test_combinatorial_check_simplex():
    ok, diag = combinatorial_check(triangle(2, 3, 7), 2)
    assert ok, diag
    bad = Diagram(range(1, 4), {(1, 2): Angle(7), (1, 3): Angle(7), (2, 3): Angle(7)})
    # (7,7,7) triangle: all pairs elliptic, fine combinatorially
    ok2, _ = combinatorial_check(bad, 2)
    assert ok2


def test_is_polytope_diagram_fast_path():
    assert is_polytope_diagram(triangle(2, 3, 7), 2)
    assert is_polytope_diagram(_pentagon(), 2)
    assert not is_polytope_diagram(_pentagon().with_edge(1, 3, Dotted(None)), 2)
    a3 = Diagram(range(1, 4), {(1, 2): Angle(3), (2, 3): Angle(3)})
    assert not is_polytope_diagram(a3, 2)


def test_model_from_gram_inertia_guard():
    a3 = Diagram(range(1, 4), {(1, 2): Angle(3), (2, 3): Angle(3)})
    with pytest.raises(Exception):
        model_from_gram(a3.gram().matrix, 2)


def test_model_vectors_unit_spacelike():
    rec = solve_dotted(_pentagon(), 2)
    for v in rec.model.vectors:
        assert lorentz_dot(v, v) == pytest.approx(1.0, abs=1e-10)


def test_lanner_simplex_4d():
    # compact 4-simplex: path with labels 5,3,3,3
    dia = Diagram(
        range(1, 6),
        {(1, 2): Angle(5), (2, 3): Angle(3), (3, 4): Angle(3), (4, 5): Angle(3)},
    )
    rec = solve_dotted(dia, 4)
    assert isinstance(rec, PolytopeRecord)
    assert len(rec.vertices) == 5


def test_face_diagram_triangle_vertex():
    # faces of a 2-polytope vertex are facet pairs; use a 4-simplex facet
    dia = Diagram(
        range(1, 6),
        {(1, 2): Angle(5), (2, 3): Angle(3), (3, 4): Angle(3), (4, 5): Angle(3)},
    )
    rec = solve_dotted(dia, 4)
    # S0 = the label-5 pair (an H2 component, allowed by the guarantee);
    # the corresponding face of the 4-simplex is a 2-face
    face = face_diagram(rec, (1, 2))
    assert face.order >= 2
