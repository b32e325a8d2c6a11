import itertools
import math
import random

import mpmath
import numpy as np
import pytest

from coxpoly.diagram import (
    Angle,
    Diagram,
    DiagramError,
    Dotted,
    ParseError,
    cos_pi_over,
    determinant,
    matrix_signature,
    parse_diagram,
    parse_dimension,
    serialize_diagram,
    signature,
)


def _cofactor_det(mat):
    """Independent determinant oracle: cofactor expansion."""
    n = mat.shape[0]
    if n == 0:
        return 1.0
    if n == 1:
        return float(mat[0, 0])
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(mat, 0, axis=0), j, axis=1)
        total += ((-1.0) ** j) * mat[0, j] * _cofactor_det(minor)
    return total


def test_parse_serialize_round_trip():
    text = "dim 3\nnodes 4\nedge 1 2 m5\nedge 2 3 m3\nedge 3 4 dotted w=1.25\n"
    dia = parse_diagram(text)
    assert dia.order == 4
    assert dia.label(1, 2) == Angle(5)
    assert dia.label(3, 4) == Dotted(1.25)
    assert parse_dimension(text) == 3
    assert serialize_diagram(dia, dim=3) == text
    assert parse_diagram(serialize_diagram(dia, dim=3)).edges == dia.edges


def test_parse_unknown_dotted_and_comments():
    text = "# a comment\nnodes 2\nedge 1 2 dotted w=?\n"
    dia = parse_diagram(text)
    assert dia.label(1, 2) == Dotted(None)
    assert dia.has_unknown()
    assert parse_dimension(text) is None


@pytest.mark.parametrize(
    "bad",
    [
        "nodes 2\nedge 1 2 m2\n",  # m < 3
        "nodes 2\nedge 1 2 dotted w=0.5\n",  # weight <= 1
        "nodes 2\nedge 1 2 m3\nedge 2 1 m4\n",  # duplicate edge
        "nodes 2\nedge 1 3 m3\n",  # out of range
        "nodes x\n",
    ],
)
def test_parse_errors(bad):
    with pytest.raises((ParseError, DiagramError)):
        parse_diagram(bad)


def test_gram_entries():
    dia = Diagram([1, 2, 3], {(1, 2): Angle(5), (2, 3): Dotted(1.5)})
    g = dia.gram().matrix
    assert g[0, 0] == 1.0
    assert g[0, 1] == pytest.approx(-math.cos(math.pi / 5))
    assert g[0, 2] == 0.0
    assert g[1, 2] == -1.5


def test_determinant_against_cofactor_oracle():
    rng = random.Random(7)
    for _ in range(50):
        n = rng.randint(1, 5)
        edges = {}
        for a, b in itertools.combinations(range(n), 2):
            if rng.random() < 0.6:
                edges[(a, b)] = Angle(rng.choice([3, 4, 5, 7]))
        dia = Diagram(range(n), edges)
        mat = dia.gram().matrix
        assert determinant(dia.gram()) == pytest.approx(
            _cofactor_det(mat), abs=1e-10
        )


def test_signature_against_mpmath_oracle():
    rng = random.Random(11)
    for _ in range(30):
        n = rng.randint(2, 6)
        edges = {}
        for a, b in itertools.combinations(range(n), 2):
            if rng.random() < 0.5:
                edges[(a, b)] = Angle(rng.choice([3, 4, 5, 6, 7]))
        dia = Diagram(range(n), edges)
        rep = signature(dia.gram())
        with mpmath.workdps(50):
            m = mpmath.matrix(
                [[mpmath.mpf(dia.gram().matrix[i][j]) for j in range(n)] for i in range(n)]
            )
            eig = mpmath.mp.eigsy(m, eigvals_only=True)
            # the matrix entries are double-rounded, so true zeros of the
            # underlying diagram appear as ~1e-16 residues; use the same
            # zero window as the library
            pos = sum(1 for e in eig if e > 1e-9)
            neg = sum(1 for e in eig if e < -1e-9)
        assert (rep.n_pos, rep.n_neg, rep.n_zero) == (pos, neg, n - pos - neg)


def test_known_signatures():
    # A3 path: positive definite
    a3 = Diagram(range(3), {(0, 1): Angle(3), (1, 2): Angle(3)})
    assert signature(a3.gram()).triple == (3, 0, 0)
    # affine (3,3,3) triangle: one zero
    aff = Diagram(
        range(3), {(0, 1): Angle(3), (0, 2): Angle(3), (1, 2): Angle(3)}
    )
    assert signature(aff.gram()).triple == (2, 0, 1)
    # Lanner (2,3,7) triangle: signature (2,1)
    hyp = Diagram(range(3), {(0, 1): Angle(7), (1, 2): Angle(3)})
    assert signature(hyp.gram()).triple == (2, 1, 0)


def test_empty_and_single():
    assert determinant(Diagram([], {}).gram()) == 1.0
    assert signature(Diagram([1], {}).gram()).triple == (1, 0, 0)


def test_components():
    dia = Diagram(range(4), {(0, 1): Angle(3), (2, 3): Angle(4)})
    comps = dia.components()
    assert sorted(len(c) for c in comps) == [2, 2]
    assert not dia.is_connected()


def test_cos_pi_over_cached_identity():
    assert cos_pi_over(2) == pytest.approx(0.0)
    assert cos_pi_over(3) == pytest.approx(0.5)
    assert cos_pi_over(5) is cos_pi_over(5) or cos_pi_over(5) == cos_pi_over(5)
