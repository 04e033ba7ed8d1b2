"""Tests for geometric realizations, Kuhn triangulations and point location."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from meandim.complexes import SimplicialComplex
from meandim.errors import BudgetExceededError, PreconditionError
from meandim.geometry import (
    BarycentricPoint,
    ExactSqrt,
    GeometricComplex,
    barycentric_subdivide_geometric,
    eval_simplicial_map,
    kuhn_triangulate_cube,
    locate,
    max_star_mesh,
    star_diameter,
    subdivide_to_mesh,
)

F = Fraction


def standard_two_simplex(norm="linf"):
    K = SimplicialComplex.from_maximal(["a", "b", "c"], [["a", "b", "c"]])
    coords = {
        "a": (F(1), F(0), F(0)),
        "b": (F(0), F(1), F(0)),
        "c": (F(0), F(0), F(1)),
    }
    return GeometricComplex(K, coords, norm)


def exact_det(rows):
    """Oracle: determinant by cofactor expansion over Fractions."""
    n = len(rows)
    if n == 1:
        return rows[0][0]
    total = F(0)
    for j in range(n):
        minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
        sign = -1 if j % 2 else 1
        total += sign * rows[0][j] * exact_det(minor)
    return total


def simplex_volume(G, simplex):
    verts = G.complex.sorted_simplex(simplex)
    pts = [G.vertex_point(v) for v in verts]
    n = len(pts) - 1
    rows = [[pts[i + 1][d] - pts[0][d] for d in range(n)] for i in range(n)]
    from math import factorial

    return abs(exact_det(rows)) / factorial(n)


class TestStarDiameter:
    def test_isolated_vertex(self):
        K = SimplicialComplex.from_maximal(["p"], [["p"]])
        G = GeometricComplex(K, {"p": (F(0), F(0))})
        assert star_diameter(G, "p") == 0

    def test_standard_simplex_linf(self):
        G = standard_two_simplex()
        for v in "abc":
            assert star_diameter(G, v) == 1

    def test_unit_edge_l1(self):
        K = SimplicialComplex.from_maximal(["a", "b"], [["a", "b"]])
        G = GeometricComplex(K, {"a": (F(0),), "b": (F(1),)}, "l1")
        assert star_diameter(G, "a") == 1

    def test_unknown_vertex(self):
        with pytest.raises(PreconditionError, match="unknown vertex"):
            star_diameter(standard_two_simplex(), "z")

    def test_l2_exact_sqrt(self):
        G = standard_two_simplex("l2")
        d = star_diameter(G, "a")
        assert isinstance(d, ExactSqrt)
        assert d.square == 2
        assert d < F(3, 2)
        assert d > 1

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10**6))
    def test_sampled_points_never_exceed_reported_diameter(self, seed):
        G = standard_two_simplex()
        reported = star_diameter(G, "a")
        rng = random.Random(seed)
        star = [s for s in G.complex.simplices if "a" in s]

        def sample():
            s = G.complex.sorted_simplex(rng.choice(star))
            raw = [F(rng.randint(0, 16), 16) for _ in s]
            total = sum(raw) or F(1)
            weights = [r / total for r in raw]
            weights[0] += 1 - sum(weights)
            pt = BarycentricPoint(frozenset(s), dict(zip(s, weights)))
            return pt.realize(G)

        for _ in range(20):
            assert G.distance(sample(), sample()) <= reported


class TestMesh:
    def test_single_two_simplex(self):
        assert max_star_mesh(standard_two_simplex()) == 1

    def test_subdivision_shrinks_mesh(self):
        # one round keeps the closed star of an edge midpoint spanning the
        # whole edge, so the star mesh strictly drops only from round two
        G = standard_two_simplex()
        once = barycentric_subdivide_geometric(G)
        twice = barycentric_subdivide_geometric(once)
        assert max_star_mesh(once) <= max_star_mesh(G)
        assert max_star_mesh(twice) < max_star_mesh(G)

    def test_isolated_points_zero_mesh(self):
        K = SimplicialComplex.from_maximal(["p", "q"], [["p"], ["q"]])
        G = GeometricComplex(K, {"p": (F(0),), "q": (F(1),)})
        assert max_star_mesh(G) == 0

    def test_subdivide_to_mesh_noop(self):
        G = standard_two_simplex()
        assert subdivide_to_mesh(G, F(2)) is G

    def test_unit_edge_rounds_to_reach_mesh(self):
        K = SimplicialComplex.from_maximal(["a", "b"], [["a", "b"]])
        G = GeometricComplex(K, {"a": (F(0),), "b": (F(1),)})
        # star meshes go 1 -> 1 -> 1/2 -> 1/4: a midpoint's star spans both
        # incident segments, so three rounds land strictly under 3/10
        meshes = []
        cur = G
        for _ in range(4):
            meshes.append(max_star_mesh(cur))
            cur = barycentric_subdivide_geometric(cur)
        assert meshes == [1, 1, F(1, 2), F(1, 4)]
        refined = subdivide_to_mesh(G, F(3, 10))
        assert max_star_mesh(refined) == F(1, 4)
        assert len(refined.complex.vertices) == 9

    def test_two_simplex_reaches_half(self):
        refined = subdivide_to_mesh(standard_two_simplex(), F(1, 2))
        assert max_star_mesh(refined) < F(1, 2)

    def test_round_cap(self):
        G = standard_two_simplex()
        with pytest.raises(BudgetExceededError, match="mesh not reached"):
            subdivide_to_mesh(G, F(1, 10**9), max_rounds=2)


class TestKuhn:
    def test_segment(self):
        G = kuhn_triangulate_cube(1, 2)
        assert len(G.complex.vertices) == 3
        assert len([s for s in G.complex.simplices if len(s) == 2]) == 2

    def test_single_cell_square(self):
        G = kuhn_triangulate_cube(2, 1)
        assert len(G.complex.vertices) == 4
        assert len([s for s in G.complex.simplices if len(s) == 3]) == 2

    def test_grid_16(self):
        G = kuhn_triangulate_cube(2, 16)
        tops = [s for s in G.complex.simplices if len(s) == 3]
        assert len(tops) == 2 * 16 * 16
        assert max_star_mesh(G) <= F(1, 8)

    def test_volumes_sum_to_one(self):
        for n, g in ((1, 3), (2, 2), (3, 1)):
            G = kuhn_triangulate_cube(n, g)
            tops = [s for s in G.complex.simplices if len(s) == n + 1]
            assert sum(simplex_volume(G, s) for s in tops) == 1

    def test_every_grid_point_is_a_vertex(self):
        G = kuhn_triangulate_cube(2, 3)
        assert len(G.complex.vertices) == 16

    def test_star_mesh_bound(self):
        for n, g in ((1, 4), (2, 3), (3, 2)):
            assert max_star_mesh(kuhn_triangulate_cube(n, g)) <= F(2, g)

    def test_bounds_checked(self):
        with pytest.raises(PreconditionError):
            kuhn_triangulate_cube(0, 2)
        with pytest.raises(PreconditionError):
            kuhn_triangulate_cube(7, 1)
        with pytest.raises(PreconditionError):
            kuhn_triangulate_cube(2, 0)


class TestLocate:
    def test_cube_vertex(self):
        G = kuhn_triangulate_cube(2, 2)
        pt = locate(G, (F(1, 2), F(1, 2)))
        assert pt.weights[(1, 1)] == 1

    def test_cell_center(self):
        G = kuhn_triangulate_cube(2, 1)
        pt = locate(G, (F(1, 2), F(1, 2)))
        # the diagonal midpoint: half weight on each diagonal endpoint
        assert pt.weights[(0, 0)] == F(1, 2)
        assert pt.weights[(1, 1)] == F(1, 2)

    def test_outside(self):
        G = kuhn_triangulate_cube(2, 1)
        with pytest.raises(PreconditionError, match="not in complex"):
            locate(G, (F(3, 2), F(0)))

    def test_general_path_agrees_with_kuhn(self):
        G = kuhn_triangulate_cube(2, 2)
        general = GeometricComplex(G.complex, G.coords, G.norm)  # no grid metadata
        rng = random.Random(7)
        for _ in range(25):
            p = (F(rng.randint(0, 24), 24), F(rng.randint(0, 24), 24))
            a = locate(G, p).realize(G)
            b = locate(general, p).realize(general)
            assert a == b == p

    def test_realize_recovers_input(self):
        G = kuhn_triangulate_cube(3, 2)
        rng = random.Random(3)
        for _ in range(20):
            p = tuple(F(rng.randint(0, 12), 12) for _ in range(3))
            assert locate(G, p).realize(G) == p


class FakeMap:
    def __init__(self, vertex_images, target):
        self.vertex_images = vertex_images
        self.target = target


def segment_target():
    K = SimplicialComplex.from_maximal([1, 2], [[1, 2]])
    coords = {1: (F(1), F(0)), 2: (F(0), F(1))}
    return GeometricComplex(K, coords)


class TestEvalSimplicialMap:
    def test_vertex_goes_to_image(self):
        G = standard_two_simplex()
        f = FakeMap({"a": 1, "b": 1, "c": 2}, segment_target())
        x = BarycentricPoint(frozenset({"a"}), {"a": F(1)})
        assert eval_simplicial_map(f, x) == (F(1), F(0))

    def test_collapsed_edge_midpoint(self):
        f = FakeMap({"a": 1, "b": 1, "c": 2}, segment_target())
        x = BarycentricPoint(frozenset({"a", "b"}), {"a": F(1, 2), "b": F(1, 2)})
        assert eval_simplicial_map(f, x) == (F(1), F(0))

    def test_barycenter_weights(self):
        f = FakeMap({"a": 1, "b": 1, "c": 2}, segment_target())
        x = BarycentricPoint(
            frozenset({"a", "b", "c"}), {"a": F(1, 3), "b": F(1, 3), "c": F(1, 3)}
        )
        assert eval_simplicial_map(f, x) == (F(2, 3), F(1, 3))

    def test_missing_vertex(self):
        f = FakeMap({"a": 1}, segment_target())
        x = BarycentricPoint(frozenset({"a", "b"}), {"a": F(1, 2), "b": F(1, 2)})
        with pytest.raises(PreconditionError, match="missing from map table"):
            eval_simplicial_map(f, x)

    @settings(max_examples=30, deadline=None)
    @given(
        t=st.integers(min_value=0, max_value=8),
        wa=st.integers(min_value=0, max_value=8),
        wb=st.integers(min_value=0, max_value=8),
    )
    def test_affine_on_simplices(self, t, wa, wb):
        f = FakeMap({"a": 1, "b": 1, "c": 2}, segment_target())
        t = F(t, 8)

        def to_point(wa, wb):
            wa, wb = F(wa, 8), F(wb, 8)
            wc = 1 - wa - wb
            if wc < 0:
                wa, wb, wc = wa / 2, wb / 2, 1 - wa / 2 - wb / 2
            return BarycentricPoint(
                frozenset({"a", "b", "c"}), {"a": wa, "b": wb, "c": wc}
            )

        x, y = to_point(wa, wb), to_point(wb, wa)
        mix = BarycentricPoint(
            frozenset({"a", "b", "c"}),
            {
                v: t * x.weights[v] + (1 - t) * y.weights[v]
                for v in ("a", "b", "c")
            },
        )
        fx, fy = eval_simplicial_map(f, x), eval_simplicial_map(f, y)
        expected = tuple(t * a + (1 - t) * b for a, b in zip(fx, fy))
        assert eval_simplicial_map(f, mix) == expected


def test_affine_dependence_rejected():
    K = SimplicialComplex.from_maximal(["a", "b", "c"], [["a", "b", "c"]])
    coords = {"a": (F(0), F(0)), "b": (F(1), F(1)), "c": (F(2), F(2))}
    with pytest.raises(PreconditionError, match="affinely dependent"):
        GeometricComplex(K, coords)


def test_geometric_json_roundtrip():
    G = kuhn_triangulate_cube(2, 2)
    back = GeometricComplex.from_json_dict(G.to_json_dict())
    assert back.norm == G.norm
    assert back.complex.simplices == G.complex.simplices
    for v in G.complex.vertices:
        assert back.coords[v] == G.vertex_point(v)
