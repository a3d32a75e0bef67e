import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgspacing import (BasisMismatchError, InvalidInputError, LengthBasis, build_complete, build_figure_eight,
                       build_from_bonds, build_lasso, build_star, mean_density, total_length, validate)
from qgspacing.graph import integer_relation, pairwise_relations

import support


def test_three_star_lengths():
    g = build_star(support.STAR3)
    assert g.vertex_count == 4 and g.bond_count == 3
    assert total_length(g) == pytest.approx(9.46929, abs=1e-5)
    assert mean_density(g) == total_length(g) / math.pi
    assert mean_density(g) == pytest.approx(3.01417, abs=1e-5)


def test_single_bond_and_two_bond_star():
    g = build_star([1.0])
    assert total_length(g) == 1.0
    assert mean_density(build_star([math.pi])) == pytest.approx(1.0, rel=1e-15)
    g = build_star([math.sqrt(2), math.sqrt(3)])
    assert (g.vertex_count, g.bond_count) == (3, 2)


def test_complete_graphs():
    g = build_complete(5, support.PENTAGON)
    assert g.bond_count == 10
    assert np.all(g.valence == 4)
    off = g.connectivity - np.diag(np.diag(g.connectivity))
    assert np.all(off + np.eye(5, dtype=int) == 1)
    tetra = build_complete(4, 1.05 * np.array([math.sqrt(2), math.sqrt(3), math.pi, math.sqrt(6),
                                               math.sqrt(7), math.sqrt(13)]))
    assert np.all(tetra.valence == 3)
    single = build_complete(2, [2.5])
    assert single.bond_count == 1 and total_length(single) == 2.5
    with pytest.raises(InvalidInputError):
        build_complete(4, [1.0, 2.0])


def test_loops():
    eight = build_figure_eight(math.sqrt(2), math.sqrt(3))
    assert (eight.vertex_count, eight.bond_count) == (1, 2)
    assert eight.valence.tolist() == [4]
    assert mean_density(eight) == pytest.approx((math.sqrt(2) + math.sqrt(3)) / math.pi)
    lasso = build_lasso(math.sqrt(2), math.sqrt(3))
    assert (lasso.vertex_count, lasso.bond_count) == (2, 2)
    assert lasso.valence.tolist() == [1, 3]
    assert build_figure_eight(1.0, 1.0).commensurate
    assert not eight.commensurate


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_nonpositive_lengths_rejected(bad):
    with pytest.raises(InvalidInputError):
        build_figure_eight(1.0, bad)
    with pytest.raises(InvalidInputError):
        build_star([1.0, bad])


def test_vertex_out_of_range_and_isolated():
    with pytest.raises(InvalidInputError):
        build_from_bonds([(0, 1, 1.0)], vertex_count=1)
    with pytest.raises(InvalidInputError):
        build_from_bonds([(0, 1, 1.0)], vertex_count=3)


def test_validate_natural_three_star():
    g = build_star(support.STAR3)
    report = validate(g, LengthBasis.natural(g))
    assert report.dimension == 3
    assert report.incommensurate
    assert not tuple(pairwise_relations(support.STAR3, 50))


def test_validate_two_length_star():
    l1, l2 = support.STAR2
    g = build_star([l1, l2, l1])
    basis = LengthBasis.natural(g)
    assert basis.dimension == 2
    assert basis.coefficient_matrix.tolist() == [[1, 0], [0, 1], [1, 0]]
    assert validate(g, basis).incommensurate


def test_validate_rational_multiple():
    g = build_star([math.sqrt(2), 2 * math.sqrt(2)])
    basis = LengthBasis.fit([math.sqrt(2)], g.lengths)
    assert basis.dimension == 1
    assert basis.coefficients[1] == (Fraction(2),)
    assert validate(g, basis).dimension == 1


def test_validate_detects_hidden_relation():
    g = build_star([math.sqrt(2), math.sqrt(8), math.sqrt(3)])
    report = validate(g, LengthBasis.natural(g))
    assert not report.incommensurate
    assert report.pairwise[0][:2] == (0, 1)
    assert report.pairwise[0][2] == Fraction(1, 2)


def test_integer_relation_three_terms():
    # sqrt(2) + sqrt(8) - 3 sqrt(2) = 0 involves three basis numbers
    rel = integer_relation([math.sqrt(2), math.sqrt(8), math.sqrt(2) * 3])
    assert rel is not None
    assert abs(sum(m * v for m, v in zip(rel, [math.sqrt(2), math.sqrt(8), 3 * math.sqrt(2)]))) < 1e-12
    assert integer_relation([1.0, math.pi, math.e], bound=10) is None


def test_basis_mismatch():
    g = build_star([1.0, 2.0])
    with pytest.raises(BasisMismatchError):
        validate(g, LengthBasis([1.0], [[1], [3]]))
    with pytest.raises(BasisMismatchError):
        validate(g, LengthBasis([1.0], [[1]]))


lengths = st.floats(min_value=0.1, max_value=10.0, allow_nan=False, allow_infinity=False)


@st.composite
def graphs(draw):
    kind = draw(st.sampled_from(["star", "complete", "eight", "lasso", "bonds"]))
    if kind == "star":
        return build_star(draw(st.lists(lengths, min_size=1, max_size=6)))
    if kind == "complete":
        V = draw(st.integers(2, 5))
        return build_complete(V, draw(st.lists(lengths, min_size=V * (V - 1) // 2, max_size=V * (V - 1) // 2)))
    if kind == "eight":
        return build_figure_eight(draw(lengths), draw(lengths))
    if kind == "lasso":
        return build_lasso(draw(lengths), draw(lengths))
    n = draw(st.integers(1, 5))
    # a path with random extra bonds (possibly loops) stays connected
    bonds = [(i, i + 1, draw(lengths)) for i in range(n)]
    for _ in range(draw(st.integers(0, 3))):
        bonds.append((draw(st.integers(0, n)), draw(st.integers(0, n)), draw(lengths)))
    return build_from_bonds(bonds)


@settings(max_examples=60, deadline=None)
@given(graphs())
def test_constructor_invariants(g):
    assert total_length(g) == pytest.approx(sum(b.length for b in g.bonds), rel=1e-15)
    assert mean_density(g) * math.pi == pytest.approx(total_length(g), rel=1e-15)
    C = g.connectivity
    assert np.array_equal(C, C.T)
    assert int(g.valence.sum()) == 2 * g.bond_count
    report = validate(g, LengthBasis.natural(g))
    assert np.all(report.residuals == 0.0)
