import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epidiff.errors import (DimensionError, PointOutsideSetError, PreconditionError,
                            VertexEnumerationError)
from epidiff.polyhedra import Polyhedron

UNIT = Polyhedron.interval(0.0, 1.0)
SIMPLEX = Polyhedron.from_rows([[1, 1, 1], [-1, 0, 0], [0, -1, 0]])


def test_from_rows_layout():
    P = Polyhedron.from_rows([[1, 2, 3]], [[0, 1, 0.5]])
    assert P.dim == 2
    np.testing.assert_array_equal(P.A, [[1, 2]])
    np.testing.assert_array_equal(P.b, [3])
    np.testing.assert_array_equal(P.E, [[0, 1]])
    assert P.to_rows() == {"ineq": [[1.0, 2.0, 3.0]], "eq": [[0.0, 1.0, 0.5]]}


@pytest.mark.parametrize("y, expected", [([0.5, 0.5], True), ([0.0, 0.0], True),
                                         ([0.6, 0.6], False), ([-1e-3, 0.2], False)])
def test_contains(y, expected):
    assert SIMPLEX.contains(y) is expected


def test_contains_is_tolerant_to_activity_epsilon():
    assert UNIT.contains([1.0 + 5e-10])
    assert not UNIT.contains([1.0 + 5e-9])


def test_tangent_cone_at_endpoint():
    assert UNIT.tangent_cone_contains([1.0], [-1.0])
    assert not UNIT.tangent_cone_contains([1.0], [1.0])
    assert UNIT.tangent_cone_contains([0.5], [7.0])


def test_second_tangent_examples():
    assert UNIT.second_tangent_contains([1.0], [-1.0], [9.0])
    assert UNIT.second_tangent_contains([1.0], [0.0], [-1.0])
    assert not UNIT.second_tangent_contains([1.0], [0.0], [1.0])


def test_vertices():
    assert sorted(v[0] for v in UNIT.vertices()) == [0.0, 1.0]
    assert sorted(map(tuple, SIMPLEX.vertices())) == [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)]


def test_vertices_with_equalities():
    # the unit square cut by x + y = 1 is a segment
    P = Polyhedron.box([0, 0], [1, 1]).with_equality([1, 1], 1.0)
    assert sorted(map(tuple, np.round(P.vertices(), 12))) == [(0.0, 1.0), (1.0, 0.0)]
    # repeated equality rows are harmless
    P2 = P.with_equality([2, 2], 2.0)
    assert len(P2.vertices()) == 2


def test_support_and_maximize():
    assert SIMPLEX.support([1.0, 2.0]) == pytest.approx(2.0)
    assert Polyhedron.interval(lo=0.0).support([1.0]) == np.inf
    empty = Polyhedron.from_rows([[1, -1], [-1, -1]])
    assert empty.is_empty()
    assert empty.support([1.0]) == -np.inf


def test_product_is_blockwise():
    P = Polyhedron.product([UNIT, SIMPLEX])
    assert P.dim == 3
    assert P.contains([1.0, 0.2, 0.3])
    assert not P.contains([1.5, 0.2, 0.3])
    assert len(P.vertices()) == 6


def test_boundedness():
    assert SIMPLEX.is_bounded()
    assert not Polyhedron.interval(hi=0.0).is_bounded()


# ----------------------------------------------------------------------
# errors

def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        SIMPLEX.contains([1.0, 2.0, 3.0])
    with pytest.raises(DimensionError):
        Polyhedron.from_rows([[1, 2, 3], [1, 2]])
    with pytest.raises(DimensionError):
        UNIT.intersect(SIMPLEX)


def test_tangent_cone_needs_a_point_in_the_set():
    with pytest.raises(PointOutsideSetError):
        UNIT.tangent_cone_contains([2.0], [1.0])


def test_second_tangent_needs_a_tangent_direction():
    with pytest.raises(PreconditionError):
        UNIT.second_tangent_contains([1.0], [1.0], [0.0])


def test_vertex_enumeration_guards():
    with pytest.raises(VertexEnumerationError):
        Polyhedron.interval(hi=0.0).vertices()
    with pytest.raises(VertexEnumerationError):
        Polyhedron.box(np.zeros(9), np.ones(9)).vertices()


def test_immutable():
    with pytest.raises(AttributeError):
        UNIT.dim = 3


# ----------------------------------------------------------------------
# properties: tangent sets against their definitions along short rays

small_ints = st.integers(-3, 3)


def _random_polytope(data, dim):
    """Integer rows through the point 0, plus a box so the set is bounded."""
    rows = data.draw(st.lists(st.lists(small_ints, min_size=dim, max_size=dim), min_size=1, max_size=4))
    A = np.array(rows, dtype=float)
    return Polyhedron(A, np.zeros(len(rows)), dim=dim).intersect(Polyhedron.box(-np.ones(dim), np.ones(dim)))


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_tangent_cone_matches_ray_definition(data):
    dim = data.draw(st.integers(1, 3))
    P = _random_polytope(data, dim)
    w = np.array(data.draw(st.lists(small_ints, min_size=dim, max_size=dim)), dtype=float)
    y = np.zeros(dim)
    by_ray = P.contains(y + 1e-4 * w, eps_act=1e-12)
    assert P.tangent_cone_contains(y, w) is by_ray


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_second_tangent_matches_parabola_definition(data):
    dim = data.draw(st.integers(1, 3))
    P = _random_polytope(data, dim)
    y = np.zeros(dim)
    w = np.array(data.draw(st.lists(small_ints, min_size=dim, max_size=dim)), dtype=float)
    if not P.tangent_cone_contains(y, w):
        return
    z = np.array(data.draw(st.lists(small_ints, min_size=dim, max_size=dim)), dtype=float)
    t = 1e-3
    by_arc = P.contains(y + t * w + 0.5 * t * t * z, eps_act=1e-12)
    assert P.second_tangent_contains(y, w, z) is by_arc


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(-2, 0), st.floats(0.1, 2)), min_size=1, max_size=4))
def test_box_vertices_are_the_corners(bounds):
    lo, width = np.array(bounds).T
    P = Polyhedron.box(lo, lo + width)
    corners = {tuple(c) for c in itertools.product(*zip(lo, lo + width))}
    found = {tuple(v) for v in np.asarray(P.vertices())}
    assert len(found) == len(corners)
    for c in corners:
        assert min(np.max(np.abs(np.array(c) - np.array(f))) for f in found) < 1e-9
