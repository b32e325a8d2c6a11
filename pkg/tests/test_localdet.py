import math
import random

import pytest

from coxpoly.diagram import Angle, Diagram, determinant
from coxpoly.localdet import (
    LocalDetError,
    NearZeroDenominator,
    d_pqr,
    loc_sum,
    local_det,
    triangle,
)


def test_d_pqr_closed_form_matches_quotient():
    for p, q, r in [(2, 3, 7), (2, 3, 8), (2, 4, 5), (3, 3, 4), (4, 4, 4), (2, 5, 6)]:
        tri = triangle(p, q, r)
        assert d_pqr(p, q, r) == pytest.approx(local_det(tri, 3), abs=1e-12)


def test_d_237_value():
    assert d_pqr(2, 3, 7) == pytest.approx(-0.32798527760568263, abs=1e-12)


def test_local_det_quotient_definition():
    dia = triangle(2, 3, 7)
    full = determinant(dia.gram())
    rest = determinant(dia.subdiagram([1, 2]).gram())
    assert local_det(dia, 3) == pytest.approx(full / rest, abs=1e-12)


def test_local_det_multi_node_subset():
    dia = triangle(3, 4, 5)
    full = determinant(dia.gram())
    rest = determinant(dia.subdiagram([1]).gram())
    assert local_det(dia, [2, 3]) == pytest.approx(full / rest, abs=1e-12)


def test_near_zero_denominator():
    # removing node 3 from the affine (3,3,3) triangle's extension:
    # make det(rest) = 0 by using an affine pair configuration
    aff = Diagram(
        range(1, 4), {(1, 2): Angle(3), (1, 3): Angle(3), (2, 3): Angle(3)}
    )
    ext = aff.with_node(4, {1: Angle(3)})
    with pytest.raises(NearZeroDenominator):
        local_det(ext, 4)


def test_loc_sum_additivity_example():
    # two triangles glued at node 0
    a = Diagram([0, 1, 2], {(0, 1): Angle(3), (1, 2): Angle(4)})
    b = Diagram([0, 10, 11], {(0, 10): Angle(5), (10, 11): Angle(3)})
    formula, direct, union = loc_sum([a, b])
    assert formula == pytest.approx(direct, abs=1e-12)
    assert union.order == 5


def test_loc_sum_rejects_bad_glue():
    a = Diagram([0, 1], {(0, 1): Angle(3)})
    b = Diagram([2, 3], {(2, 3): Angle(3)})
    with pytest.raises(LocalDetError):
        loc_sum([a, b])
    c = Diagram([0, 1, 4], {(0, 1): Angle(3)})
    with pytest.raises(LocalDetError):
        loc_sum([a, c])  # overlap beyond the shared node


def test_triangle_orientation():
    # node 3 sits opposite the r-edge: d_pqr(p,q,r) = local_det(triangle, 3)
    tri = triangle(2, 3, 7)
    assert tri.label(1, 2).m == 7
    assert tri.label(1, 3).m == 3
    assert tri.label(2, 3) is None  # p = 2, right angle


def test_d_pqr_input_validation():
    with pytest.raises(LocalDetError):
        d_pqr(2, 3, 2)  # r must be >= 3
    with pytest.raises(LocalDetError):
        d_pqr(1, 3, 7)
