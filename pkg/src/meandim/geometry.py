"""Geometric realizations with exact rational coordinates.

Everything is computed in exact arithmetic so certificate premises (star
meshes, containment, affine evaluation) are decided without floating
tolerances. Distances under the l-infinity and l1 norms are Fractions;
the l2 norm returns an exact square-root wrapper that compares through
squared rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from itertools import combinations, permutations

from .complexes import SimplicialComplex, barycentric_subdivide
from .errors import BudgetExceededError, PreconditionError

NORMS = ("linf", "l1", "l2")


@total_ordering
class ExactSqrt:
    """Nonnegative number sqrt(q) for rational q, compared exactly via squares."""

    __slots__ = ("square",)

    def __init__(self, square):
        square = Fraction(square)
        if square < 0:
            raise PreconditionError("negative square")
        self.square = square

    @staticmethod
    def _sq(other):
        if isinstance(other, ExactSqrt):
            return other.square
        other = Fraction(other)
        if other < 0:
            return None  # other is negative, sqrt is nonnegative
        return other * other

    def __eq__(self, other):
        sq = self._sq(other)
        return sq is not None and self.square == sq

    def __lt__(self, other):
        sq = self._sq(other)
        if sq is None:
            return False
        return self.square < sq

    def __hash__(self):
        return hash(("ExactSqrt", self.square))

    def __repr__(self):
        return f"ExactSqrt({self.square})"


def _vec_sub(p, q):
    return tuple(a - b for a, b in zip(p, q))


def norm_value(vec, norm: str):
    if norm == "linf":
        return max((abs(c) for c in vec), default=Fraction(0))
    if norm == "l1":
        return sum((abs(c) for c in vec), Fraction(0))
    if norm == "l2":
        return ExactSqrt(sum((c * c for c in vec), Fraction(0)))
    raise PreconditionError(f"unknown norm {norm!r}")


def _rank(vectors) -> int:
    """Exact rank by Gaussian elimination over Fractions."""
    rows = [list(v) for v in vectors]
    rank = 0
    cols = len(rows[0]) if rows else 0
    for col in range(cols):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = rows[rank][col]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                factor = rows[r][col] / inv
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
    return rank


@dataclass(frozen=True, eq=False)
class GeometricComplex:
    """A simplicial complex with rational vertex coordinates and a norm."""

    complex: SimplicialComplex
    coords: dict
    norm: str = "linf"
    kuhn_grid: tuple | None = None  # (n, g) when built by kuhn_triangulate_cube

    def __post_init__(self):
        if self.norm not in NORMS:
            raise PreconditionError(f"unknown norm {self.norm!r}")
        dims = set()
        for v in self.complex.vertices:
            if v not in self.coords:
                raise PreconditionError(f"vertex {v!r} has no coordinates")
            pt = tuple(Fraction(c) for c in self.coords[v])
            dims.add(len(pt))
        if len(dims) > 1:
            raise PreconditionError("coordinate dimensions differ")
        for s in self.complex.maximal_simplices():
            pts = [self.coords[v] for v in s]
            if len(pts) > 1:
                base = pts[0]
                if _rank([_vec_sub(p, base) for p in pts[1:]]) != len(pts) - 1:
                    raise PreconditionError(
                        f"realized simplex is affinely dependent: {sorted(map(repr, s))}"
                    )

    @property
    def ambient_dim(self) -> int:
        for v in self.complex.vertices:
            return len(self.coords[v])
        return 0

    def distance(self, p, q):
        return norm_value(_vec_sub(p, q), self.norm)

    def vertex_point(self, v):
        return tuple(Fraction(c) for c in self.coords[v])

    def incident(self):
        """vertex -> list of simplices containing it (built once, cached)."""
        cached = self.__dict__.get("_incident")
        if cached is None:
            cached = {v: [] for v in self.complex.vertices}
            for s in self.complex.simplices:
                for v in s:
                    cached[v].append(s)
            object.__setattr__(self, "_incident", cached)
        return cached

    def to_json_dict(self) -> dict:
        from .serialize import format_fraction, vertex_to_jsonable

        data = self.complex.to_json_dict()
        data["coords"] = [
            [vertex_to_jsonable(v), [format_fraction(c) for c in self.coords[v]]]
            for v in self.complex.vertices
        ]
        data["norm"] = self.norm
        return data

    @classmethod
    def from_json_dict(cls, data: dict) -> "GeometricComplex":
        from .complexes import SimplicialComplex
        from .serialize import parse_fraction, vertex_from_jsonable

        K = SimplicialComplex.from_json_dict(data)
        coords = {
            vertex_from_jsonable(v): tuple(parse_fraction(c) for c in pt)
            for v, pt in data["coords"]
        }
        return cls(K, coords, data.get("norm", "linf"))


def star_diameter(G: GeometricComplex, v):
    """Diameter of the closed star of v.

    The norm's maximum over a union of convex hulls is attained at realization
    vertices, so the exact value is the max pairwise distance between vertices
    of simplices containing v.
    """
    incident = G.incident()
    if v not in incident:
        raise PreconditionError(f"unknown vertex: {v!r}")
    points = set()
    for s in incident[v]:
        points |= s
    pts = [G.vertex_point(u) for u in points]
    best = Fraction(0) if G.norm != "l2" else ExactSqrt(0)
    for p, q in combinations(pts, 2):
        d = G.distance(p, q)
        if d > best:
            best = d
    return best


def max_star_mesh(G: GeometricComplex):
    best = Fraction(0) if G.norm != "l2" else ExactSqrt(0)
    for v in G.complex.vertices:
        d = star_diameter(G, v)
        if d > best:
            best = d
    return best


def barycentric_subdivide_geometric(G: GeometricComplex) -> GeometricComplex:
    """Subdivide combinatorially; each new vertex sits at its source simplex's
    coordinate average."""
    Kp = barycentric_subdivide(G.complex)
    coords = {}
    for label in Kp.vertices:
        pts = [G.vertex_point(v) for v in label]
        n = len(pts)
        coords[label] = tuple(sum(col, Fraction(0)) / n for col in zip(*pts))
    return GeometricComplex(Kp, coords, G.norm)


def subdivide_to_mesh(G: GeometricComplex, eps, max_rounds: int = 30) -> GeometricComplex:
    """Barycentrically subdivide until the star mesh drops strictly below eps."""
    eps = Fraction(eps)
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    current = G
    for _ in range(max_rounds + 1):
        if max_star_mesh(current) < eps:
            return current
        current = barycentric_subdivide_geometric(current)
    raise BudgetExceededError("mesh not reached")


def kuhn_triangulate_cube(n: int, g: int) -> GeometricComplex:
    """Triangulate the unit n-cube on the uniform 1/g grid.

    Each grid cell splits into n! simplices along coordinate-order chains.
    Vertices are integer grid tuples with coordinates i/g; the l-infinity
    star mesh is at most 2/g.
    """
    if not 1 <= n <= 6:
        raise PreconditionError("cube dimension out of range (1..6)")
    if g < 1:
        raise PreconditionError("grid resolution must be positive")
    maximal = []
    cells = [()]
    for _ in range(n):
        cells = [c + (i,) for c in cells for i in range(g)]
    for corner in cells:
        for perm in permutations(range(n)):
            chain = [corner]
            cur = list(corner)
            for axis in perm:
                cur[axis] += 1
                chain.append(tuple(cur))
            maximal.append(chain)
    verts = sorted({v for s in maximal for v in s})
    K = SimplicialComplex.from_maximal(verts, maximal)
    coords = {v: tuple(Fraction(i, g) for i in v) for v in verts}
    return GeometricComplex(K, coords, "linf", kuhn_grid=(n, g))


@dataclass(frozen=True, eq=False)
class BarycentricPoint:
    """A point of the realization: a containing simplex plus nonnegative
    rational weights on its vertices summing to one. Strictly positive weights
    identify the simplex interior."""

    simplex: frozenset
    weights: dict

    def __post_init__(self):
        total = Fraction(0)
        for v in self.simplex:
            w = Fraction(self.weights.get(v, 0))
            if w < 0:
                raise PreconditionError("negative barycentric weight")
            total += w
        if total != 1:
            raise PreconditionError("barycentric weights must sum to 1")

    def realize(self, G: GeometricComplex) -> tuple:
        pt = None
        for v in self.simplex:
            w = Fraction(self.weights.get(v, 0))
            coords = G.vertex_point(v)
            if pt is None:
                pt = tuple(w * c for c in coords)
            else:
                pt = tuple(a + w * c for a, c in zip(pt, coords))
        return pt


def _locate_kuhn(G: GeometricComplex, p) -> BarycentricPoint:
    n, g = G.kuhn_grid
    p = tuple(Fraction(c) for c in p)
    if len(p) != n or any(c < 0 or c > 1 for c in p):
        raise PreconditionError("not in complex")
    cell = []
    local = []
    for c in p:
        scaled = c * g
        i = min(scaled.numerator // scaled.denominator, g - 1)
        cell.append(i)
        local.append(scaled - i)
    # ties resolved toward the lexicographically smallest admissible simplex
    order = sorted(range(n), key=lambda j: (-local[j], j))
    verts = [tuple(cell)]
    cur = list(cell)
    for axis in order:
        cur[axis] += 1
        verts.append(tuple(cur))
    sorted_local = [local[j] for j in order]
    weights = {}
    weights[verts[0]] = 1 - sorted_local[0]
    for t in range(n):
        nxt = sorted_local[t + 1] if t + 1 < n else Fraction(0)
        weights[verts[t + 1]] = sorted_local[t] - nxt
    return BarycentricPoint(frozenset(verts), weights)


def _solve_barycentric(points, target):
    """Weights w >= 0 with sum 1 and sum w_i * points_i = target, or None."""
    k = len(points)
    base = points[0]
    if k == 1:
        return [Fraction(1)] if tuple(base) == tuple(target) else None
    cols = [_vec_sub(p, base) for p in points[1:]]
    rhs = list(_vec_sub(target, base))
    rows = [[cols[j][d] for j in range(k - 1)] + [rhs[d]] for d in range(len(base))]
    # Gaussian elimination; the system may be overdetermined but consistent
    pivots = []
    r = 0
    for c in range(k - 1):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = rows[r][c]
        rows[r] = [a / inv for a in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    sol = [Fraction(0)] * (k - 1)
    for row_idx, c in enumerate(pivots):
        sol[c] = rows[row_idx][-1]
    for i in range(r, len(rows)):
        if rows[i][-1] != 0:
            return None  # inconsistent
    # affine independence of realized simplices makes the solution unique
    w0 = 1 - sum(sol, Fraction(0))
    weights = [w0] + sol
    if any(w < 0 for w in weights):
        return None
    # verify exactly (guards the overdetermined case)
    for d in range(len(base)):
        if sum(w * pt[d] for w, pt in zip(weights, points)) != target[d]:
            return None
    return weights


def locate(G: GeometricComplex, p, candidates=None) -> BarycentricPoint:
    """Find a containing simplex and exact barycentric weights for p.

    Kuhn complexes use the closed-form cell-plus-sort location; otherwise the
    candidate simplices (all of them by default) are scanned in canonical
    order and the first admissible one wins.
    """
    if G.kuhn_grid is not None and candidates is None:
        return _locate_kuhn(G, p)
    p = tuple(Fraction(c) for c in p)
    pool = candidates if candidates is not None else G.complex.iter_simplices()
    for s in sorted(pool, key=G.complex.simplex_key):
        verts = G.complex.sorted_simplex(s)
        weights = _solve_barycentric([G.vertex_point(v) for v in verts], p)
        if weights is not None:
            return BarycentricPoint(frozenset(verts), dict(zip(verts, weights)))
    raise PreconditionError("not in complex")


def eval_simplicial_map(f, x: BarycentricPoint) -> tuple:
    """Linear extension: image of x under a vertex map, in target coordinates.

    `f` needs `vertex_images` (source vertex -> target vertex) and `target`
    (a GeometricComplex).
    """
    pt = None
    for v, w in x.weights.items():
        try:
            image = f.vertex_images[v]
        except KeyError:
            raise PreconditionError(f"vertex {v!r} missing from map table") from None
        coords = f.target.vertex_point(image)
        if pt is None:
            pt = tuple(Fraction(w) * c for c in coords)
        else:
            pt = tuple(a + Fraction(w) * c for a, c in zip(pt, coords))
    if pt is None:
        raise PreconditionError("empty barycentric point")
    return pt
