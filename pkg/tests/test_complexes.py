"""Tests for the combinatorial complex module."""

from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from meandim.complexes import (
    SimplicialComplex,
    VertexPartition,
    barycentric_subdivide,
    bucket_dimension_bound,
    bucket_of_dimension,
    cone,
    dimension_buckets,
    full_subcomplex,
    wedge_cones,
)
from meandim.errors import PreconditionError


def two_simplex():
    return SimplicialComplex.from_maximal(["a", "b", "c"], [["a", "b", "c"]])


def brute_force_flag_count(K, length):
    """Oracle: count chains of `length` mutually distinct nested simplices."""
    simplices = list(K.simplices)
    count = 0
    for combo in combinations(simplices, length):
        chain = sorted(combo, key=len)
        if all(chain[i] < chain[i + 1] for i in range(length - 1)):
            count += 1
    return count


class TestSubdivision:
    def test_two_simplex_counts(self):
        K = two_simplex()
        Kp = barycentric_subdivide(K)
        assert len(Kp.vertices) == 7
        tops = [s for s in Kp.simplices if len(s) == 3]
        assert len(tops) == 6
        # oracle cross-check: flags enumerated independently of the DP
        assert len(Kp.vertices) == brute_force_flag_count(K, 1)
        assert len(tops) == brute_force_flag_count(K, 3)
        assert len([s for s in Kp.simplices if len(s) == 2]) == brute_force_flag_count(K, 2)

    def test_edge_split(self):
        K = SimplicialComplex.from_maximal(["a", "b"], [["a", "b"]])
        Kp = barycentric_subdivide(K)
        assert len(Kp.vertices) == 3
        assert len([s for s in Kp.simplices if len(s) == 2]) == 2

    def test_dimension_preserved(self):
        for K in (two_simplex(), SimplicialComplex.from_maximal(["a", "b"], [["a", "b"]])):
            assert barycentric_subdivide(K).dim == K.dim

    def test_empty_complex_rejected(self):
        with pytest.raises(PreconditionError, match="empty complex"):
            barycentric_subdivide(SimplicialComplex.empty())

    def test_vertex_labels_are_source_simplices(self):
        K = two_simplex()
        Kp = barycentric_subdivide(K)
        assert set(Kp.vertices) == {K.sorted_simplex(s) for s in K.simplices}


class TestFullSubcomplex:
    def test_empty_selection(self):
        K = two_simplex()
        sub = full_subcomplex(K, [])
        assert sub.dim == -1
        assert sub.vertices == ()

    def test_whole_selection(self):
        K = two_simplex()
        sub = full_subcomplex(K, K.vertices)
        assert sub.simplices == K.simplices

    def test_edge_selection(self):
        K = two_simplex()
        sub = full_subcomplex(K, ["a", "b"])
        assert sub.simplices == frozenset(
            {frozenset({"a"}), frozenset({"b"}), frozenset({"a", "b"})}
        )

    def test_unknown_vertex(self):
        with pytest.raises(PreconditionError, match="unknown vertex"):
            full_subcomplex(two_simplex(), ["a", "z"])


class TestConeAndWedge:
    def test_cone_of_empty_is_point(self):
        C, apex = cone(SimplicialComplex.empty())
        assert C.dim == 0
        assert C.vertices == (apex,)

    def test_cone_of_two_points_is_path(self):
        K = SimplicialComplex.from_maximal(["p", "q"], [["p"], ["q"]])
        C, apex = cone(K)
        assert C.dim == 1
        assert len([s for s in C.simplices if len(s) == 2]) == 2

    def test_cone_of_edge_is_triangle(self):
        K = SimplicialComplex.from_maximal(["a", "b"], [["a", "b"]])
        C, apex = cone(K)
        assert C.dim == K.dim + 1
        assert frozenset({"a", "b", apex}) in C.simplices

    def test_wedge_of_one_matches_cone(self):
        K = SimplicialComplex.from_maximal(["a", "b"], [["a", "b"]])
        C, _ = cone(K)
        W, _ = wedge_cones([K])
        assert W.dim == C.dim
        assert len(W.vertices) == len(C.vertices)
        assert len(W.simplices) == len(C.simplices)

    def test_wedge_of_three_edges(self):
        edge = SimplicialComplex.from_maximal(["a", "b"], [["a", "b"]])
        W, apex = wedge_cones([edge, edge, edge])
        assert W.dim == 2
        assert apex in W.vertices
        # three triangles through the shared apex
        assert len([s for s in W.simplices if len(s) == 3]) == 3

    def test_wedge_dimension_is_max_plus_one(self):
        point = SimplicialComplex.from_maximal(["p"], [["p"]])
        edge = SimplicialComplex.from_maximal(["a", "b"], [["a", "b"]])
        W, _ = wedge_cones([point, edge, two_simplex()])
        assert W.dim == 3

    def test_empty_wedge_rejected(self):
        with pytest.raises(PreconditionError):
            wedge_cones([])


class TestDimensionBuckets:
    def test_two_simplex_two_buckets(self):
        K = two_simplex()
        P = dimension_buckets(K, 2)
        Kp = barycentric_subdivide(K)
        assert full_subcomplex(Kp, P.blocks[0]).dim == 1
        assert full_subcomplex(Kp, P.blocks[1]).dim == 0

    def test_single_bucket_is_everything(self):
        K = two_simplex()
        P = dimension_buckets(K, 1)
        Kp = barycentric_subdivide(K)
        assert P.blocks[0] == frozenset(Kp.vertices)

    def test_million_dimension_bounds_without_building(self):
        dim_k, m = 10**6, 1001
        for i in range(1, m + 1):
            assert bucket_dimension_bound(dim_k, m, i) < 1000

    def test_bucket_of_dimension_ranges(self):
        assert bucket_of_dimension(0, 2, 2) == 1
        assert bucket_of_dimension(1, 2, 2) == 1
        assert bucket_of_dimension(2, 2, 2) == 2


# hypothesis strategy: small random complexes from random maximal simplices
@st.composite
def random_complexes(draw, max_vertices=6, max_facets=5):
    n = draw(st.integers(min_value=1, max_value=max_vertices))
    verts = list(range(n))
    facets = draw(
        st.lists(
            st.lists(st.sampled_from(verts), min_size=1, max_size=min(n, 5), unique=True),
            min_size=1,
            max_size=max_facets,
        )
    )
    return SimplicialComplex.from_maximal(verts, facets)


@settings(max_examples=60, deadline=None)
@given(K=random_complexes())
def test_constructors_stay_downward_closed(K):
    for built in (
        barycentric_subdivide(K),
        cone(K)[0],
        wedge_cones([K, K])[0],
        full_subcomplex(K, K.vertices[: max(1, len(K.vertices) // 2)]),
    ):
        for s in built.simplices:
            if len(s) > 1:
                for v in s:
                    assert s - {v} in built.simplices


@settings(max_examples=60, deadline=None)
@given(K=random_complexes())
def test_subdivision_dimension_and_vertex_count(K):
    Kp = barycentric_subdivide(K)
    assert Kp.dim == K.dim
    assert len(Kp.vertices) == len(K.simplices)


@settings(max_examples=60, deadline=None)
@given(K=random_complexes(), data=st.data())
def test_full_subcomplex_monotone_in_selection(K, data):
    A = set(data.draw(st.lists(st.sampled_from(list(K.vertices)), unique=True)))
    B = set(data.draw(st.lists(st.sampled_from(list(K.vertices)), unique=True)))
    inner = full_subcomplex(K, A & B)
    outer = full_subcomplex(K, A)
    assert inner.simplices <= outer.simplices


@settings(max_examples=40, deadline=None)
@given(K=random_complexes(max_vertices=5, max_facets=4), m=st.integers(min_value=1, max_value=5))
def test_bucket_partition_and_dimension_bounds(K, m):
    P = dimension_buckets(K, m)
    Kp = barycentric_subdivide(K)
    P.validate_covers(Kp.vertices)
    assert P.m == m
    from fractions import Fraction

    for i, block in enumerate(P.blocks, start=1):
        d = full_subcomplex(Kp, block).dim
        assert d <= bucket_dimension_bound(K.dim, m, i)
        if i == 1:
            assert d <= Fraction(K.dim, m)
        else:
            assert d < Fraction(K.dim, m) or d == -1


def test_partition_rejects_overlap():
    with pytest.raises(PreconditionError):
        VertexPartition((frozenset({1, 2}), frozenset({2, 3})))


def test_json_roundtrip():
    K = two_simplex()
    data = K.dumps()
    K2 = SimplicialComplex.loads(data)
    assert K2.simplices == K.simplices
    assert K2.vertices == K.vertices
    # subdivision labels (tuples) survive the trip as well
    Kp = barycentric_subdivide(K)
    Kp2 = SimplicialComplex.loads(Kp.dumps())
    assert Kp2.simplices == Kp.simplices
