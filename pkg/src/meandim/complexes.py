"""Finite abstract simplicial complexes and purely combinatorial constructions.

A complex stores its full downward-closed simplex family explicitly (not
maximal faces only), so subcomplex and star queries are plain set filters.
Desk-scale sizes make this affordable. All operations are pure; instances
are immutable and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import ceil, floor

from .errors import PreconditionError
from .serialize import vertex_from_jsonable, vertex_to_jsonable


def _universal_key(v):
    # total order across the vertex universes we use: ints, strings, nested tuples
    if isinstance(v, bool):
        return (0, int(v))
    if isinstance(v, int):
        return (0, v)
    if isinstance(v, str):
        return (1, v)
    if isinstance(v, tuple):
        return (2, tuple(_universal_key(x) for x in v))
    return (3, repr(v))


def close_downward(simplices):
    """All nonempty subsets of the given simplices."""
    closed = set()
    for s in simplices:
        s = frozenset(s)
        if not s:
            raise PreconditionError("simplices must be nonempty")
        for r in range(1, len(s) + 1):
            for sub in combinations(sorted(s, key=_universal_key), r):
                closed.add(frozenset(sub))
    return frozenset(closed)


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """Vertex tuple (ordered, unique) plus a downward-closed family of simplices.

    Every vertex appears as a singleton simplex; dim of the empty complex
    is -1 by convention.
    """

    vertices: tuple
    simplices: frozenset

    def __post_init__(self):
        seen = set(self.vertices)
        if len(seen) != len(self.vertices):
            raise PreconditionError("duplicate vertices")
        for s in self.simplices:
            if not s:
                raise PreconditionError("empty simplex")
            if not s <= seen:
                raise PreconditionError("unknown vertex")
            if len(s) > 1:
                for v in s:
                    if s - {v} not in self.simplices:
                        raise PreconditionError("simplex family is not downward closed")
        for v in self.vertices:
            if frozenset({v}) not in self.simplices:
                raise PreconditionError("missing singleton simplex")

    @classmethod
    def empty(cls) -> "SimplicialComplex":
        return cls((), frozenset())

    @classmethod
    def from_simplices(cls, simplices, vertices=None) -> "SimplicialComplex":
        closed = close_downward(simplices)
        present = set()
        for s in closed:
            present |= s
        if vertices is None:
            vertices = tuple(sorted(present, key=_universal_key))
        else:
            vertices = tuple(vertices)
            if not present <= set(vertices):
                raise PreconditionError("unknown vertex")
        closed = closed | {frozenset({v}) for v in vertices}
        return cls(vertices, frozenset(closed))

    @classmethod
    def from_maximal(cls, vertices, maximal_simplices) -> "SimplicialComplex":
        return cls.from_simplices(maximal_simplices, vertices=vertices)

    @property
    def dim(self) -> int:
        if not self.simplices:
            return -1
        return max(len(s) for s in self.simplices) - 1

    def vertex_index(self, v) -> int:
        idx = self.__dict__.get("_vindex")
        if idx is None:
            idx = {u: i for i, u in enumerate(self.vertices)}
            object.__setattr__(self, "_vindex", idx)
        try:
            return idx[v]
        except KeyError:
            raise PreconditionError(f"unknown vertex: {v!r}") from None

    def simplex_key(self, s):
        return (len(s), tuple(sorted(self.vertex_index(v) for v in s)))

    def sorted_simplex(self, s) -> tuple:
        return tuple(sorted(s, key=self.vertex_index))

    def iter_simplices(self):
        """Simplices ordered by size then vertex indices; faces precede cofaces."""
        return sorted(self.simplices, key=self.simplex_key)

    def maximal_simplices(self):
        covered = set()
        for t in self.simplices:
            if len(t) > 1:
                for v in t:
                    covered.add(t - {v})
        return [s for s in self.iter_simplices() if s not in covered]

    def star(self, v) -> frozenset:
        """Simplices containing v (the combinatorial open star)."""
        self.vertex_index(v)
        return frozenset(s for s in self.simplices if v in s)

    def to_json_dict(self) -> dict:
        return {
            "vertices": [vertex_to_jsonable(v) for v in self.vertices],
            "maximal_simplices": [
                [vertex_to_jsonable(v) for v in self.sorted_simplex(s)]
                for s in self.maximal_simplices()
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SimplicialComplex":
        vertices = tuple(vertex_from_jsonable(v) for v in data["vertices"])
        maximal = [
            [vertex_from_jsonable(v) for v in s] for s in data["maximal_simplices"]
        ]
        return cls.from_maximal(vertices, maximal)

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "SimplicialComplex":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class VertexPartition:
    """Disjoint vertex blocks; empty blocks are permitted."""

    blocks: tuple

    def __post_init__(self):
        seen = set()
        for block in self.blocks:
            if seen & set(block):
                raise PreconditionError("partition blocks overlap")
            seen |= set(block)

    @property
    def m(self) -> int:
        return len(self.blocks)

    def block_of(self, v) -> int:
        """1-based index of the block containing v."""
        for i, block in enumerate(self.blocks, start=1):
            if v in block:
                return i
        raise PreconditionError(f"vertex {v!r} not in any block")

    def validate_covers(self, vertices):
        union = set()
        for block in self.blocks:
            union |= set(block)
        if union != set(vertices):
            raise PreconditionError("partition does not cover the vertex set")


def barycentric_subdivide(K: SimplicialComplex) -> SimplicialComplex:
    """Flag complex of K: one vertex per simplex, one simplex per strict chain.

    Subdivision vertices are labeled by their source simplex as a tuple
    sorted in K's vertex order, giving canonical hashable identifiers that
    stay stable across repeated subdivision.
    """
    if not K.simplices:
        raise PreconditionError("empty complex")
    label = {s: K.sorted_simplex(s) for s in K.simplices}
    order = K.iter_simplices()

    # chains ending at each simplex; every proper nonempty subset is a face
    # by downward closure, so faces enumerate as combinations
    ending_at = {}
    for s in order:
        here = [(s,)]
        sorted_s = label[s]
        for r in range(1, len(s)):
            for sub in combinations(sorted_s, r):
                here.extend(chain + (s,) for chain in ending_at[frozenset(sub)])
        ending_at[s] = here
    all_chains = [c for lst in ending_at.values() for c in lst]
    simplices = frozenset(frozenset(label[s] for s in chain) for chain in all_chains)
    vertices = tuple(label[s] for s in order)
    return SimplicialComplex(vertices, simplices)


def full_subcomplex(K: SimplicialComplex, A) -> SimplicialComplex:
    """K(A): all simplices of K with every vertex in A. K(empty) is empty."""
    A = set(A)
    if not A <= set(K.vertices):
        raise PreconditionError("unknown vertex")
    vertices = tuple(v for v in K.vertices if v in A)
    simplices = frozenset(s for s in K.simplices if s <= A)
    return SimplicialComplex(vertices, simplices)


def _fresh_apex(taken):
    apex = "*"
    i = 1
    while apex in taken:
        i += 1
        apex = f"*{i}"
    return apex


def cone(K: SimplicialComplex, apex=None):
    """Join K to a new apex vertex. Returns (complex, apex); dim rises by one.

    The cone of the empty complex is a single point.
    """
    if apex is None:
        apex = _fresh_apex(set(K.vertices))
    elif apex in K.vertices:
        raise PreconditionError("apex collides with an existing vertex")
    simplices = set(K.simplices)
    simplices.add(frozenset({apex}))
    for s in K.simplices:
        simplices.add(s | {apex})
    return SimplicialComplex(K.vertices + (apex,), frozenset(simplices)), apex


def wedge_cones(Ks):
    """Cones over each complex, glued at a single shared apex.

    The disjoint union tags each complex's vertices with its index, so equal
    vertex names in different factors never collide. Returns (complex, apex).
    """
    Ks = list(Ks)
    if not Ks:
        raise PreconditionError("empty list")
    apex = "*"
    vertices = [apex]
    simplices = {frozenset({apex})}
    for i, K in enumerate(Ks):
        vertices.extend((i, v) for v in K.vertices)
        for s in K.simplices:
            tagged = frozenset((i, v) for v in s)
            simplices.add(tagged)
            simplices.add(tagged | {apex})
    return SimplicialComplex(tuple(vertices), frozenset(simplices)), apex


def bucket_of_dimension(d: int, dim_k: int, m: int) -> int:
    """1-based dimension bucket: bucket i covers ((i-1)*dim_k/m, i*dim_k/m],
    with bucket 1 also taking everything at or below dim_k/m."""
    if m < 1:
        raise PreconditionError("m must be positive")
    if d < 0 or d > dim_k:
        raise PreconditionError("dimension out of range")
    if dim_k == 0:
        return 1
    i = ceil(Fraction(d * m, dim_k))
    return max(1, i)


def bucket_dimension_bound(dim_k: int, m: int, i: int) -> int:
    """Largest possible dimension of the bucket-i full subcomplex of the
    subdivision, by the strict-chain length argument. -1 for an empty bucket."""
    if not 1 <= i <= m:
        raise PreconditionError("bucket index out of range")
    if dim_k < 0:
        return -1
    if i == 1:
        return floor(Fraction(dim_k, m))
    lo = floor(Fraction((i - 1) * dim_k, m))
    hi = floor(Fraction(i * dim_k, m))
    return hi - lo - 1


def dimension_buckets(K: SimplicialComplex, m: int) -> VertexPartition:
    """Partition the subdivision's vertices by the dimension of their source
    simplex. Block 1 keeps the subcomplex dimension at or below dim(K)/m and
    every later block stays strictly below it."""
    if m < 1:
        raise PreconditionError("m must be positive")
    if not K.simplices:
        raise PreconditionError("empty complex")
    dim_k = K.dim
    blocks = [set() for _ in range(m)]
    for s in K.simplices:
        i = bucket_of_dimension(len(s) - 1, dim_k, m)
        blocks[i - 1].add(K.sorted_simplex(s))
    return VertexPartition(tuple(frozenset(b) for b in blocks))
