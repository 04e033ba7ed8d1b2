"""Width-reducing simplicial maps onto standard simplexes and cubes.

Three layers:

* partition_map: the basic construction. Vertices collapse block-wise onto
  the standard simplex; each fiber retracts into the full subcomplex of one
  block, and the retraction's fibers sit inside vertex stars, so the star
  mesh bounds every fiber diameter.
* bucket_width_map / cube_width_map: the composed pipeline (refine to mesh,
  subdivide once, partition the subdivision by source-simplex dimension).
  These materialize complexes and compute meshes and subcomplex dimensions
  exactly; practical up to four-dimensional cubes.
* KuhnWidthPipeline / padded_block_map: the same map evaluated in closed
  form (cell location plus weight sorting), usable at any dimension. Its
  certificates carry arithmetic bounds (grid mesh, chain-length bucket
  dimensions) instead of materialized values; tests cross-check the two
  layers on small grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .certificates import (
    EpsEmbeddingCertificate,
    MetricSpaceHandle,
    structural_record,
)
from .complexes import (
    SimplicialComplex,
    VertexPartition,
    bucket_dimension_bound,
    bucket_of_dimension,
    dimension_buckets,
    full_subcomplex,
)
from .errors import BudgetExceededError, PreconditionError
from .geometry import (
    BarycentricPoint,
    GeometricComplex,
    barycentric_subdivide_geometric,
    kuhn_triangulate_cube,
    max_star_mesh,
    norm_value,
    subdivide_to_mesh,
)
from .serialize import format_fraction

WEIGHT_DENOMINATOR = 64  # granularity of sampled rational convex weights


@dataclass(frozen=True, eq=False)
class SimplicialMap:
    """Vertex map whose image vertex sets always span target simplices."""

    source: SimplicialComplex
    target: GeometricComplex
    vertex_images: dict

    def __post_init__(self):
        for v in self.source.vertices:
            if v not in self.vertex_images:
                raise PreconditionError(f"vertex {v!r} missing from map table")
        target_simplices = self.target.complex.simplices
        for s in self.source.simplices:
            image = frozenset(self.vertex_images[v] for v in s)
            if image not in target_simplices:
                raise PreconditionError("vertex images do not span a target simplex")

    def evaluate(self, x: BarycentricPoint) -> tuple:
        from .geometry import eval_simplicial_map

        return eval_simplicial_map(self, x)


def standard_simplex_target(m: int) -> GeometricComplex:
    """The standard (m-1)-simplex spanned by the basis of R^m; every nonempty
    vertex subset is a face."""
    if m < 1:
        raise PreconditionError("m must be positive")
    verts = list(range(1, m + 1))
    K = SimplicialComplex.from_maximal(verts, [verts])
    coords = {
        i: tuple(Fraction(1 if j == i - 1 else 0) for j in range(m)) for i in verts
    }
    return GeometricComplex(K, coords, "linf")


def _sample_simplex_weights(rng, count: int, total: Fraction):
    """count nonnegative rationals summing exactly to total."""
    raw = [rng.randint(0, WEIGHT_DENOMINATOR) for _ in range(count)]
    if not any(raw):
        raw[rng.randrange(count)] = 1
    s = sum(raw)
    return [total * r / s for r in raw]


def empty_fiber_certificate(eps) -> EpsEmbeddingCertificate:
    """The vacuous claim for an empty fiber: nothing to embed."""
    return EpsEmbeddingCertificate(
        domain=MetricSpaceHandle(
            "geometric-complex", "empty fiber", lambda a, b: Fraction(0),
            lambda rng: (),
        ),
        target_dim=0,
        epsilon=Fraction(eps),
        evaluator=lambda x: (),
        obligations=(structural_record("empty-fiber"),),
    )


@dataclass(eq=False)
class PartitionWidthMap:
    """A partition simplicial map plus its per-fiber certificate builder."""

    geometry: GeometricComplex
    partition: VertexPartition
    eps: Fraction
    mapping: SimplicialMap
    mesh_record: object
    bucket_source_dim: int | None = None  # set when blocks are dimension buckets

    def __post_init__(self):
        self._block_of = {}
        for i, block in enumerate(self.partition.blocks, start=1):
            for v in block:
                self._block_of[v] = i
        self._by_pattern = None

    @property
    def m(self) -> int:
        return self.partition.m

    def evaluate(self, x: BarycentricPoint) -> tuple:
        """Barycentric image: per-block weight sums."""
        sums = [Fraction(0)] * self.m
        for v, w in x.weights.items():
            sums[self._block_of[v] - 1] += Fraction(w)
        return tuple(sums)

    def _pattern_index(self):
        if self._by_pattern is None:
            index = {}
            for s in self.geometry.complex.iter_simplices():
                pattern = frozenset(self._block_of[v] for v in s)
                index.setdefault(pattern, []).append(s)
            self._by_pattern = index
        return self._by_pattern

    def fiber_points_exist(self, t) -> bool:
        support = frozenset(i + 1 for i, ti in enumerate(t) if ti > 0)
        return bool(self._pattern_index().get(support))

    def fiber_certificate(self, t) -> EpsEmbeddingCertificate:
        """Certificate for the fiber over the barycentric target point t.

        The retraction onto the full subcomplex of the lowest-index positive
        block has fibers inside vertex stars, so the star mesh premise bounds
        every retraction fiber by eps.
        """
        t = tuple(Fraction(ti) for ti in t)
        if len(t) != self.m or any(ti < 0 for ti in t) or sum(t) != 1:
            raise PreconditionError("target point must be barycentric over the blocks")
        support = frozenset(i + 1 for i, ti in enumerate(t) if ti > 0)
        admissible = self._pattern_index().get(support, [])
        if not admissible:
            return empty_fiber_certificate(self.eps)
        i_star = min(support)
        block = self.partition.blocks[i_star - 1]
        sub = full_subcomplex(self.geometry.complex, block)
        dim = sub.dim
        G = self.geometry
        block_of = self._block_of
        admissible = sorted(admissible, key=G.complex.simplex_key)

        def sample(rng):
            s = admissible[rng.randrange(len(admissible))]
            verts = G.complex.sorted_simplex(s)
            weights = {}
            for i in support:
                group = [v for v in verts if block_of[v] == i]
                for v, w in zip(group, _sample_simplex_weights(rng, len(group), t[i - 1])):
                    weights[v] = w
            return BarycentricPoint(frozenset(verts), weights)

        def dist(x, y):
            return norm_value(
                tuple(a - b for a, b in zip(x.realize(G), y.realize(G))), G.norm
            )

        def retract(x):
            coords = None
            for v, w in x.weights.items():
                if block_of[v] != i_star or w == 0:
                    continue
                pt = G.vertex_point(v)
                if coords is None:
                    coords = tuple(Fraction(w) * c for c in pt)
                else:
                    coords = tuple(a + Fraction(w) * c for a, c in zip(coords, pt))
            return tuple(c / t[i_star - 1] for c in coords)

        obligations = [
            self.mesh_record,
            structural_record("simplicial-by-block-collapse"),
            structural_record("retraction-fibers-lie-in-stars"),
        ]
        if self.bucket_source_dim is not None:
            obligations.append(
                structural_record(
                    "bucket-dimension-bound",
                    source_dim=self.bucket_source_dim,
                    m=self.m,
                    bucket=i_star,
                    dim=dim,
                )
            )
        domain = MetricSpaceHandle(
            kind="geometric-complex",
            description=f"fiber over {tuple(format_fraction(ti) for ti in t)}",
            dist=dist,
            sample=sample,
        )
        return EpsEmbeddingCertificate(
            domain=domain,
            target_dim=dim,
            epsilon=self.eps,
            evaluator=retract,
            obligations=tuple(obligations),
        )


def partition_map(
    G: GeometricComplex,
    P: VertexPartition,
    eps,
    mesh_threshold=None,
    inherited_mesh=None,
    bucket_source_dim=None,
) -> PartitionWidthMap:
    """Collapse each partition block to one target vertex, extended linearly.

    The star-mesh hypothesis is verified exactly before anything else: either
    recomputed on G, or taken from `inherited_mesh`, an exact value known to
    dominate G's mesh (a parent complex's mesh; subdivision stars live inside
    parent star closures).
    """
    eps = Fraction(eps)
    threshold = Fraction(mesh_threshold) if mesh_threshold is not None else eps
    P.validate_covers(G.complex.vertices)
    if inherited_mesh is not None:
        mesh = Fraction(inherited_mesh)
        record_name = "star-mesh-inherited-bound"
        data = {"parent_mesh": format_fraction(mesh), "scale": format_fraction(threshold)}
    else:
        mesh = max_star_mesh(G)
        record_name = "star-mesh-below-scale"
        data = {
            "mesh": format_fraction(Fraction(mesh)) if not hasattr(mesh, "square") else repr(mesh),
            "scale": format_fraction(threshold),
        }
    if not mesh < threshold:
        offender = None
        from .geometry import star_diameter

        for v in G.complex.vertices:
            d = star_diameter(G, v)
            if not d < threshold:
                offender = (v, d)
                break
        raise PreconditionError(
            f"star mesh hypothesis fails: star of {offender[0]!r} has diameter "
            f"{offender[1]} which is not below {threshold}"
        )
    mesh_record = structural_record(record_name, **data)
    target = standard_simplex_target(P.m)
    images = {}
    for i, block in enumerate(P.blocks, start=1):
        for v in block:
            images[v] = i
    mapping = SimplicialMap(G.complex, target, images)
    return PartitionWidthMap(
        geometry=G,
        partition=P,
        eps=eps,
        mapping=mapping,
        mesh_record=mesh_record,
        bucket_source_dim=bucket_source_dim,
    )


def bucket_width_map(G: GeometricComplex, m: int, eps) -> PartitionWidthMap:
    """Refine to mesh below eps, subdivide once more, and partition the
    subdivision's vertices by source-simplex dimension. Every fiber
    certificate lands at or below dim(G)/m."""
    if m < 1:
        raise PreconditionError("m must be positive")
    eps = Fraction(eps)
    fine = subdivide_to_mesh(G, eps)
    mesh = max_star_mesh(fine)
    P = dimension_buckets(fine.complex, m)
    subdivided = barycentric_subdivide_geometric(fine)
    return partition_map(
        subdivided,
        P,
        eps,
        inherited_mesh=mesh,
        bucket_source_dim=fine.complex.dim,
    )


# ---------------------------------------------------------------------------
# the radial chart between the standard simplex and the cube
# ---------------------------------------------------------------------------


def _corner_center(m: int):
    return tuple(Fraction(1, m) for _ in range(m - 1))


def _cube_center(m: int):
    return tuple(Fraction(1, 2) for _ in range(m - 1))


def _corner_exit(center, w, m):
    """Largest lambda keeping center + lambda*w inside {u >= 0, sum u <= 1}."""
    lam = None
    for ci, wi in zip(center, w):
        if wi < 0:
            cand = ci / (-wi)
            lam = cand if lam is None or cand < lam else lam
    total = sum(w, Fraction(0))
    if total > 0:
        cand = (1 - sum(center, Fraction(0))) / total
        lam = cand if lam is None or cand < lam else lam
    return lam


def _cube_exit(center, w):
    lam = None
    for ci, wi in zip(center, w):
        if wi > 0:
            cand = (1 - ci) / wi
        elif wi < 0:
            cand = ci / (-wi)
        else:
            continue
        lam = cand if lam is None or cand < lam else lam
    return lam


def cube_from_barycentric(t) -> tuple:
    """Radial homeomorphism from the standard simplex onto the unit cube,
    centered at the barycenter; rays scale so boundaries match. Bijective and
    exact; fibers of any map composed with it are unchanged."""
    t = tuple(Fraction(x) for x in t)
    m = len(t)
    if m == 1:
        return ()
    u = t[:-1]
    center_t = _corner_center(m)
    center_c = _cube_center(m)
    w = tuple(a - b for a, b in zip(u, center_t))
    if all(x == 0 for x in w):
        return center_c
    ratio = _cube_exit(center_c, w) / _corner_exit(center_t, w, m)
    return tuple(c + ratio * x for c, x in zip(center_c, w))


def barycentric_from_cube(p) -> tuple:
    p = tuple(Fraction(x) for x in p)
    m = len(p) + 1
    if m == 1:
        return (Fraction(1),)
    if any(x < 0 or x > 1 for x in p):
        raise PreconditionError("point outside the unit cube")
    center_t = _corner_center(m)
    center_c = _cube_center(m)
    w = tuple(a - b for a, b in zip(p, center_c))
    if all(x == 0 for x in w):
        u = center_t
    else:
        ratio = _corner_exit(center_t, w, m) / _cube_exit(center_c, w)
        u = tuple(c + ratio * x for c, x in zip(center_t, w))
    return u + (1 - sum(u, Fraction(0)),)


# ---------------------------------------------------------------------------
# closed-form pipeline on Kuhn grids (any dimension)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlagPoint:
    """A point expressed in the subdivision of one Kuhn simplex: nested faces
    (prefixes of the vertex chain in weight order) and their weights."""

    faces: tuple  # tuple of vertex tuples, increasing
    weights: tuple  # Fractions, same length, summing to 1

    def realize(self, grid: int) -> tuple:
        n = len(self.faces[-1][0])
        coords = [Fraction(0)] * n
        for face, w in zip(self.faces, self.weights):
            if w == 0:
                continue
            k = len(face)
            for d in range(n):
                coords[d] += w * Fraction(sum(v[d] for v in face), k * grid)
        return tuple(coords)


@dataclass(frozen=True, eq=False)
class KuhnWidthPipeline:
    """Evaluate the dimension-bucket width map on a Kuhn grid without
    materializing the complex."""

    n: int
    m: int
    grid: int

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.grid < 1:
            raise PreconditionError("bad pipeline parameters")

    def locate_flag(self, x) -> FlagPoint:
        n, g = self.n, self.grid
        x = tuple(Fraction(c) for c in x)
        if len(x) != n or any(c < 0 or c > 1 for c in x):
            raise PreconditionError("not in complex")
        cell = []
        local = []
        for c in x:
            scaled = c * g
            i = min(scaled.numerator // scaled.denominator, g - 1)
            cell.append(i)
            local.append(scaled - i)
        order = sorted(range(n), key=lambda j: (-local[j], j))
        verts = [tuple(cell)]
        cur = list(cell)
        for axis in order:
            cur[axis] += 1
            verts.append(tuple(cur))
        simplex_weights = [1 - local[order[0]]]
        for t in range(n):
            nxt = local[order[t + 1]] if t + 1 < n else Fraction(0)
            simplex_weights.append(local[order[t]] - nxt)
        # vertices sorted descending by weight give the containing flag
        by_weight = sorted(range(n + 1), key=lambda i: (-simplex_weights[i], verts[i]))
        faces = []
        weights = []
        prefix = []
        for rank, idx in enumerate(by_weight):
            prefix.append(verts[idx])
            nxt = (
                simplex_weights[by_weight[rank + 1]] if rank + 1 < n + 1 else Fraction(0)
            )
            faces.append(tuple(sorted(prefix)))
            weights.append((rank + 1) * (simplex_weights[idx] - nxt))
        return FlagPoint(tuple(faces), tuple(weights))

    def bucket_of_face(self, face) -> int:
        return bucket_of_dimension(len(face) - 1, self.n, self.m)

    def bucket_sums(self, flag: FlagPoint) -> tuple:
        sums = [Fraction(0)] * self.m
        for face, w in zip(flag.faces, flag.weights):
            sums[self.bucket_of_face(face) - 1] += w
        return tuple(sums)

    def evaluate(self, x) -> tuple:
        """The width map into the (m-1)-cube."""
        return cube_from_barycentric(self.bucket_sums(self.locate_flag(x)))

    def retract(self, flag: FlagPoint, bucket: int) -> tuple:
        sums = self.bucket_sums(flag)
        scale = sums[bucket - 1]
        if scale == 0:
            raise PreconditionError("retraction bucket has zero weight")
        n, g = self.n, self.grid
        coords = [Fraction(0)] * n
        for face, w in zip(flag.faces, flag.weights):
            if w == 0 or self.bucket_of_face(face) != bucket:
                continue
            k = len(face)
            for d in range(n):
                coords[d] += w * Fraction(sum(v[d] for v in face), k * g)
        return tuple(c / scale for c in coords)

    def canonical_fiber_point(self, t) -> FlagPoint:
        """A fiber point over barycentric target t inside the canonical flag
        of the origin cell (identity vertex chain)."""
        t = tuple(Fraction(x) for x in t)
        verts = [tuple(0 for _ in range(self.n))]
        cur = [0] * self.n
        for axis in range(self.n):
            cur[axis] += 1
            verts.append(tuple(cur))
        faces = [tuple(sorted(verts[: j + 1])) for j in range(self.n + 1)]
        weights = [Fraction(0)] * (self.n + 1)
        for i, ti in enumerate(t, start=1):
            if ti == 0:
                continue
            hits = [
                j for j in range(self.n + 1) if self.bucket_of_face(faces[j]) == i
            ]
            if not hits:
                # only possible when the grid dimension is below m
                raise PreconditionError(f"no face in dimension bucket {i}")
            weights[hits[0]] = ti
        return FlagPoint(tuple(faces), tuple(weights))

    def fiber_certificate(self, t, scale, mesh_threshold, known=None) -> EpsEmbeddingCertificate:
        """Certificate for the fiber over barycentric t, sampled locally in
        the flag polytope of a known fiber point. Dimensions come from the
        chain-length bucket bounds; the mesh premise is the grid bound 2/g."""
        t = tuple(Fraction(x) for x in t)
        scale = Fraction(scale)
        mesh_threshold = Fraction(mesh_threshold)
        support = [i for i in range(1, self.m + 1) if t[i - 1] > 0]
        i_star = min(support)
        dim = bucket_dimension_bound(self.n, self.m, i_star)
        flag0 = known if known is not None else self.canonical_fiber_point(t)
        if self.bucket_sums(flag0) != t:
            raise PreconditionError("known point is not in the fiber")
        groups = {
            i: [
                j
                for j in range(len(flag0.faces))
                if self.bucket_of_face(flag0.faces[j]) == i
            ]
            for i in support
        }
        pipeline = self
        g = self.grid

        def sample(rng):
            weights = [Fraction(0)] * len(flag0.faces)
            for i in support:
                picks = _sample_simplex_weights(rng, len(groups[i]), t[i - 1])
                for j, w in zip(groups[i], picks):
                    weights[j] = w
            return FlagPoint(flag0.faces, tuple(weights))

        def dist(a, b):
            return max(
                abs(x - y) for x, y in zip(a.realize(g), b.realize(g))
            )

        obligations = (
            structural_record(
                "star-mesh-grid-bound",
                grid=g,
                bound=format_fraction(Fraction(2, g)),
                scale=format_fraction(mesh_threshold),
            ),
            structural_record("simplicial-by-block-collapse"),
            structural_record("retraction-fibers-lie-in-stars"),
            structural_record(
                "bucket-dimension-bound",
                source_dim=self.n,
                m=self.m,
                bucket=i_star,
                dim=dim,
            ),
        )
        return EpsEmbeddingCertificate(
            domain=MetricSpaceHandle(
                kind="geometric-complex",
                description=f"grid-{g} width-map fiber in dimension {self.n}",
                dist=dist,
                sample=sample,
            ),
            target_dim=dim,
            epsilon=scale,
            evaluator=lambda flag: pipeline.retract(flag, i_star),
            obligations=obligations,
        )


def grid_for_mesh(mesh_scale) -> int:
    """Smallest g with 2/g strictly below the mesh scale."""
    mesh_scale = Fraction(mesh_scale)
    if mesh_scale <= 0:
        raise PreconditionError("mesh scale must be positive")
    g = (2 / mesh_scale).__floor__() + 1
    return max(1, g)


@dataclass(eq=False)
class CubeWidthMap:
    """Explicit width map on the triangulated cube with exact certificates."""

    n: int
    m: int
    eps: Fraction
    mesh_scale: Fraction
    grid: int
    geometry: GeometricComplex  # the subdivided triangulation carrying the map
    inner: PartitionWidthMap
    pipeline: KuhnWidthPipeline

    @property
    def fiber_bound(self) -> Fraction:
        return Fraction(self.n, self.m)

    def evaluate(self, x) -> tuple:
        return self.pipeline.evaluate(x)

    def fiber_certificate(self, p) -> EpsEmbeddingCertificate:
        """Certificate for the fiber over a cube point p, with exact
        subcomplex dimensions from the materialized complex. Points outside
        the cube have empty fibers and discharge trivially."""
        p = tuple(Fraction(c) for c in p)
        if len(p) != self.m - 1:
            raise PreconditionError("target point has wrong length")
        if any(c < 0 or c > 1 for c in p):
            return empty_fiber_certificate(self.eps)
        t = barycentric_from_cube(p)
        return self.inner.fiber_certificate(t)

    def to_json_dict(self) -> dict:
        mesh = self.inner.mesh_record.data_dict
        return {
            "kind": "cube-width-map",
            "n": self.n,
            "m": self.m,
            "eps": format_fraction(self.eps),
            "mesh_scale": format_fraction(self.mesh_scale),
            "grid": self.grid,
            "mesh": mesh.get("parent_mesh", mesh.get("mesh")),
            "vertices": len(self.geometry.complex.vertices),
            "simplices": len(self.geometry.complex.simplices),
            "fiber_bound": format_fraction(self.fiber_bound),
            "bucket_dims": [
                full_subcomplex(self.geometry.complex, block).dim
                for block in self.inner.partition.blocks
            ],
        }


def estimate_subdivided_tops(n: int, g: int) -> int:
    return g**n * factorial(n) * factorial(n + 1)


def cube_width_map(
    n: int,
    m: int,
    eps,
    mesh_scale=None,
    budget: int = 200_000,
) -> CubeWidthMap:
    """Width map [0,1]^n -> [0,1]^{m-1} whose fibers certify at dim n/m.

    The triangulation is refined to star mesh strictly below mesh_scale
    (eps/4 by default, the scale the downstream construction consumes), so
    certificates discharge the mesh premise with that margin.
    """
    eps = Fraction(eps)
    if m < 2:
        raise PreconditionError("m must be at least 2")
    if not 1 <= n <= 4:
        raise PreconditionError("cube dimension out of range (1..4); use padded_block_map for larger blocks")
    mesh_scale = Fraction(mesh_scale) if mesh_scale is not None else eps / 4
    g = grid_for_mesh(mesh_scale)
    estimated = estimate_subdivided_tops(n, g)
    if estimated > budget:
        raise BudgetExceededError(
            f"size budget exceeded: ~{estimated} subdivided simplices > {budget}"
        )
    G = kuhn_triangulate_cube(n, g)
    mesh = max_star_mesh(G)
    if not mesh < mesh_scale:
        raise PreconditionError("grid mesh not below the requested scale")
    P = dimension_buckets(G.complex, m)
    subdivided = barycentric_subdivide_geometric(G)
    inner = partition_map(
        subdivided,
        P,
        eps,
        mesh_threshold=mesh_scale,
        inherited_mesh=mesh,
        bucket_source_dim=G.complex.dim,
    )
    return CubeWidthMap(
        n=n,
        m=m,
        eps=eps,
        mesh_scale=mesh_scale,
        grid=g,
        geometry=subdivided,
        inner=inner,
        pipeline=KuhnWidthPipeline(n, m, g),
    )


@dataclass(eq=False)
class PaddedBlockMap:
    """The width map padded with zeros back to the block's own dimension.

    Evaluates [0,1]^n -> [0,1]^n with at most m-1 nonzero output entries;
    fibers are the width-map fibers, certified at half the construction
    scale with the grid mesh strictly below a quarter of it.
    """

    n: int
    m: int
    eps: Fraction
    grid: int
    pipeline: KuhnWidthPipeline

    @property
    def block_scale(self) -> Fraction:
        return self.eps / 2

    @property
    def mesh_scale(self) -> Fraction:
        return self.eps / 4

    @property
    def nonzero_bound(self) -> int:
        return self.m - 1

    def evaluate(self, x) -> tuple:
        head = self.pipeline.evaluate(x)
        return head + tuple(Fraction(0) for _ in range(self.n - self.m + 1))

    def fiber_certificate(self, p, known=None) -> EpsEmbeddingCertificate:
        p = tuple(Fraction(c) for c in p)
        if len(p) != self.n:
            raise PreconditionError("target point has wrong length")
        if any(c != 0 for c in p[self.m - 1 :]) or any(c < 0 or c > 1 for c in p):
            return empty_fiber_certificate(self.block_scale)
        t = barycentric_from_cube(p[: self.m - 1])
        return self.pipeline.fiber_certificate(
            t, self.block_scale, self.mesh_scale, known=known
        )


def padded_block_map(n: int, m: int, eps) -> PaddedBlockMap:
    if n < m:
        raise PreconditionError("block dimension must be at least m")
    eps = Fraction(eps)
    g = grid_for_mesh(eps / 4)
    return PaddedBlockMap(
        n=n, m=m, eps=eps, grid=g, pipeline=KuhnWidthPipeline(n, m, g)
    )
