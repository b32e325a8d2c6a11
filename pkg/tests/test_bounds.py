import itertools

import numpy as np
import pytest

from coxpoly.diagram import Angle, Diagram, cos_pi_over, matrix_signature
from coxpoly.classify import elliptic_diagrams, has_parabolic_subdiagram
from coxpoly.bounds import (
    BoundsError,
    compute_bounds,
    n0_bound,
    n0_count,
    q0_bound,
    q1_bound,
    refine_k_bound,
)


def test_q0_formula_reference_value():
    assert q0_bound(4, 3, "formula") == 5637
    assert q0_bound(4, 3, "formula") == (8 + 3) * 2**9 + 5


def test_counted_values_regression():
    # exact isomorphism-class counts substitute the crude closed form
    assert n0_count(4, 3, "counted") == 27
    assert q0_bound(4, 3, "counted") == 869
    assert q1_bound(4, 3) == 4320
    assert n0_bound(4, 3) == 8646


def test_counted_never_exceeds_formula():
    for k in (3, 4, 5):
        assert n0_count(4, k, "counted") <= n0_count(4, k, "formula")


def test_formula_closed_form_matches_elliptic_count_for_large_k():
    # the d=4 closed form equals the exact elliptic order-4 class count
    # once every family is realizable (k >= 5)
    for k in (5, 6, 7):
        assert 8 + k * (k - 1) // 2 == len(elliptic_diagrams(4, k))


def test_bound_set_lines():
    bounds = compute_bounds(4, 3)
    keys = [k for k, _ in bounds.lines()]
    assert keys[:5] == ["dimension", "max-label", "q0", "q1", "n0"]


def test_input_validation():
    with pytest.raises(BoundsError):
        q0_bound(1, 3)
    with pytest.raises(BoundsError):
        q0_bound(4, 2)
    with pytest.raises(BoundsError):
        refine_k_bound(4, 5)  # cap must be >= 7


def _brute_refine_2d(cap):
    """Independent d=2 oracle: diagrams <S, x, y> with S an elliptic
    2-node seed, zero determinant, hyperbolic signature, no parabolic
    subdiagram; returns the maximal edge label used."""
    best = 0
    seeds = elliptic_diagrams(2, cap)
    for seed in seeds:
        for lx in itertools.product(range(2, cap + 1), repeat=2):
            if all(m == 2 for m in lx):
                continue
            for ly in itertools.product(range(2, cap + 1), repeat=2):
                if all(m == 2 for m in ly):
                    continue
                for lxy in range(2, cap + 1):
                    dia = seed.with_node(
                        2, {i: Angle(m) for i, m in enumerate(lx) if m > 2}
                    ).with_node(
                        3, {i: Angle(m) for i, m in enumerate(ly) if m > 2}
                    )
                    if lxy > 2:
                        dia = dia.with_edge(2, 3, Angle(lxy))
                    mat = dia.gram().matrix
                    if abs(np.linalg.det(mat)) > 1e-9:
                        continue
                    sig = matrix_signature(mat)
                    if sig.n_neg != 1 or sig.n_pos != 2:
                        continue
                    if has_parabolic_subdiagram(dia):
                        continue
                    best = max(best, dia.max_angle_label())
    return best


def test_refine_general_matches_2d_brute_oracle():
    cap = 8
    oracle = _brute_refine_2d(cap)
    result = refine_k_bound(2, cap, shape="general")
    assert result.max_label == oracle


def test_refine_triangle_cap20_reaches_20():
    result = refine_k_bound(4, 20, shape="triangle")
    assert result.max_label == 20
    assert result.cap_reached
    # some witness uses the (2,3,10) triangle
    found = False
    for w in result.witnesses:
        labels = sorted(l.m for l in w.edges.values() if isinstance(l, Angle))
        if 10 in labels and 20 in labels:
            found = True
    assert found


def test_refine_witnesses_have_zero_det_and_hyperbolic_signature():
    result = refine_k_bound(4, 20, shape="triangle")
    assert result.witnesses
    for w in result.witnesses:
        mat = w.gram().matrix
        assert abs(np.linalg.det(mat)) < 1e-7
        sig = matrix_signature(mat)
        assert sig.n_neg == 1
        assert not has_parabolic_subdiagram(w)


def test_refine_triangle_jobs_parameter_is_result_invariant():
    from coxpoly._canon import canonical_key

    r1 = refine_k_bound(4, 12, shape="triangle", jobs=1)
    r2 = refine_k_bound(4, 12, shape="triangle", jobs=2)
    assert r1.max_label == r2.max_label
    assert sorted(map(canonical_key, r1.witnesses)) == sorted(
        map(canonical_key, r2.witnesses)
    )
