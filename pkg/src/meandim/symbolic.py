"""Subshifts of finite type, cylinder-set algebra, orbit capacity, the dyadic
odometer tower, and window metrics for shift spaces.

Orbit capacity is computed exactly: the finite-horizon value by dynamic
programming over the transition graph of window words, the limit value by a
maximum mean cycle computation with rational weights (the finite values are
sub-additive, so the limit is their infimum and equals the best cycle mean).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import InsufficientWindowError, PreconditionError

TOTAL_DYADIC_WEIGHT = Fraction(3)  # sum of 2^-|n| over all integers


@dataclass(frozen=True, eq=False)
class Sft:
    """A subshift of finite type given by its allowed adjacent symbol pairs.

    The transition graph must be essential (every symbol has an outgoing and
    an incoming transition), so every finite word of the language extends to
    a bi-infinite point.
    """

    alphabet: tuple
    transitions: frozenset

    def __post_init__(self):
        symbols = set(self.alphabet)
        if len(symbols) != len(self.alphabet) or not symbols:
            raise PreconditionError("alphabet must be nonempty without duplicates")
        for a, b in self.transitions:
            if a not in symbols or b not in symbols:
                raise PreconditionError("transition uses unknown symbol")
        outgoing = {a for a, _ in self.transitions}
        incoming = {b for _, b in self.transitions}
        if outgoing != symbols or incoming != symbols:
            raise PreconditionError(
                "graph is not essential: every symbol needs an outgoing and an incoming transition"
            )

    @classmethod
    def full_shift(cls, symbols) -> "Sft":
        symbols = tuple(symbols)
        return cls(symbols, frozenset((a, b) for a in symbols for b in symbols))

    @classmethod
    def golden_mean(cls) -> "Sft":
        # binary shift forbidding "11"
        return cls(("0", "1"), frozenset({("0", "0"), ("0", "1"), ("1", "0")}))

    def words(self, length: int) -> tuple:
        """Language words of the given length, sorted."""
        if length < 0:
            raise PreconditionError("length must be nonnegative")
        cache = self.__dict__.setdefault("_words_cache", {})
        if length not in cache:
            if length == 0:
                result = ((),)
            else:
                result = [(a,) for a in sorted(self.alphabet, key=repr)]
                for _ in range(length - 1):
                    result = [
                        w + (b,)
                        for w in result
                        for b in sorted(self.alphabet, key=repr)
                        if (w[-1], b) in self.transitions
                    ]
                result = tuple(sorted(result, key=repr))
            cache[length] = result
        return cache[length]

    def is_word(self, word) -> bool:
        word = tuple(word)
        if any(s not in self.alphabet for s in word):
            return False
        return all(
            (word[i], word[i + 1]) in self.transitions for i in range(len(word) - 1)
        )

    def to_json_dict(self) -> dict:
        return {
            "alphabet": list(self.alphabet),
            "transitions": sorted([a, b] for a, b in self.transitions),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Sft":
        return cls(
            tuple(data["alphabet"]),
            frozenset((a, b) for a, b in data["transitions"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "Sft":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class CylinderSet:
    """A clopen set: all points whose window restriction lies in `words`.

    A zero-length window encodes the whole space (words == {()}) or the empty
    set (words == frozenset()). Construction intersects the stated words with
    the language, so the representation is always language-consistent.
    """

    sft: Sft
    offset: int
    length: int
    words: frozenset

    def __post_init__(self):
        for w in self.words:
            if len(w) != self.length or not self.sft.is_word(w):
                raise PreconditionError("cylinder word outside the language")

    @classmethod
    def whole(cls, sft: Sft) -> "CylinderSet":
        return cls(sft, 0, 0, frozenset({()}))

    @classmethod
    def empty(cls, sft: Sft) -> "CylinderSet":
        return cls(sft, 0, 0, frozenset())

    @classmethod
    def from_constraints(cls, sft: Sft, constraints) -> "CylinderSet":
        """Intersection of (offset, word) constraints."""
        constraints = [(int(o), tuple(w)) for o, w in constraints]
        if not constraints:
            return cls.whole(sft)
        lo = min(o for o, _ in constraints)
        hi = max(o + len(w) for o, w in constraints)
        words = []
        for w in sft.words(hi - lo):
            if all(
                w[o - lo : o - lo + len(req)] == req for o, req in constraints
            ):
                words.append(w)
        return cls(sft, lo, hi - lo, frozenset(words))

    @property
    def is_empty(self) -> bool:
        return not self.words

    @property
    def is_whole(self) -> bool:
        return self.same_set(CylinderSet.whole(self.sft))

    def refine(self, lo: int, hi: int) -> "CylinderSet":
        """The same set presented on the window [lo, hi)."""
        if self.length and (lo > self.offset or hi < self.offset + self.length):
            lo = min(lo, self.offset)
            hi = max(hi, self.offset + self.length)
        if lo == self.offset and hi - lo == self.length:
            return self
        shift = self.offset - lo
        words = frozenset(
            w
            for w in self.sft.words(hi - lo)
            if w[shift : shift + self.length] in self.words
        )
        return CylinderSet(self.sft, lo, hi - lo, words)

    def _common(self, other: "CylinderSet"):
        if self.sft is not other.sft and self.sft.to_json_dict() != other.sft.to_json_dict():
            raise PreconditionError("cylinder sets live on different subshifts")
        windows = [
            (c.offset, c.offset + c.length) for c in (self, other) if c.length
        ]
        if not windows:
            lo, hi = 0, 1
        else:
            lo = min(w[0] for w in windows)
            hi = max(w[1] for w in windows)
        return self.refine(lo, hi), other.refine(lo, hi)

    def union(self, other: "CylinderSet") -> "CylinderSet":
        a, b = self._common(other)
        return CylinderSet(a.sft, a.offset, a.length, a.words | b.words)

    def intersection(self, other: "CylinderSet") -> "CylinderSet":
        a, b = self._common(other)
        return CylinderSet(a.sft, a.offset, a.length, a.words & b.words)

    def difference(self, other: "CylinderSet") -> "CylinderSet":
        a, b = self._common(other)
        return CylinderSet(a.sft, a.offset, a.length, a.words - b.words)

    def complement(self) -> "CylinderSet":
        window = self if self.length else self.refine(0, 1)
        all_words = frozenset(self.sft.words(window.length))
        return CylinderSet(
            self.sft, window.offset, window.length, all_words - window.words
        )

    def same_set(self, other: "CylinderSet") -> bool:
        a, b = self._common(other)
        return a.words == b.words

    def contains_point(self, x: WindowSeq, shift: int = 0) -> bool:
        """Membership of the time-`shift` iterate of the point x."""
        if not self.length:
            return bool(self.words)
        lo = self.offset + shift
        return x.restrict(lo, lo + self.length) in self.words

    def indicator_words(self):
        """(length, word set) with length >= 1, for graph weighting."""
        if self.length:
            return self.length, self.words
        refined = self.refine(0, 1)
        return 1, refined.words

    def to_json(self):
        return {
            "offset": self.offset,
            "words": sorted("".join(map(str, w)) for w in self.words),
        }

    @classmethod
    def from_constraint_json(cls, sft: Sft, data) -> "CylinderSet":
        """JSON form: list of [offset, word] pairs, intersected."""
        constraints = []
        for offset, word in data:
            symbols = tuple(word) if isinstance(word, (list, tuple)) else tuple(str(word))
            constraints.append((offset, symbols))
        return cls.from_constraints(sft, constraints)


# ---------------------------------------------------------------------------
# orbit capacity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OcapResult:
    value: Fraction
    witness: tuple
    graph_size: int


def _word_graph(sft: Sft, length: int):
    words = sft.words(length)
    if not words:
        raise PreconditionError("empty language")
    index = {w: i for i, w in enumerate(words)}
    succs = [[] for _ in words]
    for i, w in enumerate(words):
        if length == 1:
            for b in sorted(sft.alphabet, key=repr):
                if (w[0], b) in sft.transitions:
                    succs[i].append(index[(b,)])
        else:
            for b in sorted(sft.alphabet, key=repr):
                j = index.get(w[1:] + (b,))
                if j is not None:
                    succs[i].append(j)
    return words, succs


def _recode(sft: Sft, A: CylinderSet):
    length, hit = A.indicator_words()
    words, succs = _word_graph(sft, length)
    weights = [1 if w in hit else 0 for w in words]
    return words, succs, weights


def ocap_finite_N(sft: Sft, A: CylinderSet, N: int) -> Fraction:
    """(1/N) times the exact maximum number of visits to A along length-N
    orbit segments, by dynamic programming over window words."""
    if N < 1:
        raise PreconditionError("N must be positive")
    words, succs, weights = _recode(sft, A)
    dp = list(weights)
    for _ in range(N - 1):
        nxt = [None] * len(words)
        for i, best in enumerate(dp):
            if best is None:
                continue
            for j in succs[i]:
                cand = best + weights[j]
                if nxt[j] is None or cand > nxt[j]:
                    nxt[j] = cand
        dp = nxt
    best = max(v for v in dp if v is not None)
    return Fraction(best, N)


def max_subsampled_visits(sft: Sft, A: CylinderSet, count: int, step: int) -> int:
    """Exact maximum of visits to A at times 0, step, ..., (count-1)*step."""
    if count < 1 or step < 1:
        raise PreconditionError("count and step must be positive")
    words, succs, weights = _recode(sft, A)
    horizon = (count - 1) * step
    dp = list(weights)
    for t in range(1, horizon + 1):
        live = t % step == 0
        nxt = [None] * len(words)
        for i, best in enumerate(dp):
            if best is None:
                continue
            for j in succs[i]:
                cand = best + (weights[j] if live else 0)
                if nxt[j] is None or cand > nxt[j]:
                    nxt[j] = cand
        dp = nxt
    return max(v for v in dp if v is not None)


def _sccs(succs):
    """Kosaraju strongly connected components, iterative."""
    n = len(succs)
    visited = [False] * n
    order = []
    for start in range(n):
        if visited[start]:
            continue
        stack = [(start, iter(succs[start]))]
        visited[start] = True
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if not visited[nxt]:
                    visited[nxt] = True
                    stack.append((nxt, iter(succs[nxt])))
                    advanced = True
                    break
            if not advanced:
                order.append(node)
                stack.pop()
    preds = [[] for _ in range(n)]
    for u, outs in enumerate(succs):
        for v in outs:
            preds[v].append(u)
    assigned = [None] * n
    comps = []
    for root in reversed(order):
        if assigned[root] is not None:
            continue
        comp = []
        stack = [root]
        assigned[root] = len(comps)
        while stack:
            node = stack.pop()
            comp.append(node)
            for p in preds[node]:
                if assigned[p] is None:
                    assigned[p] = len(comps)
                    stack.append(p)
        comps.append(sorted(comp))
    return comps


def _karp_max_mean(nodes, succs, weights):
    """Karp's formula on a strongly connected subgraph; None without edges."""
    node_set = set(nodes)
    local = {v: i for i, v in enumerate(nodes)}
    edges = [
        (local[u], local[v])
        for u in nodes
        for v in succs[u]
        if v in node_set
    ]
    if not edges:
        return None
    n = len(nodes)
    D = [[None] * n for _ in range(n + 1)]
    D[0][0] = Fraction(0)
    for k in range(1, n + 1):
        for u, v in edges:
            if D[k - 1][u] is not None:
                cand = D[k - 1][u] + weights[nodes[v]]
                if D[k][v] is None or cand > D[k][v]:
                    D[k][v] = cand
    best = None
    for v in range(n):
        if D[n][v] is None:
            continue
        worst = None
        for k in range(n):
            if D[k][v] is None:
                continue
            ratio = Fraction(D[n][v] - D[k][v], n - k)
            if worst is None or ratio < worst:
                worst = ratio
        if worst is not None and (best is None or worst > best):
            best = worst
    return best


def _critical_cycle(nodes, succs, weights, mean):
    """A cycle of exactly the given mean: stabilize max-plus potentials for the
    shifted weights (no positive cycles remain), then walk tight edges."""
    node_set = set(nodes)
    h = {v: Fraction(0) for v in nodes}
    for _ in range(len(nodes)):
        changed = False
        for u in nodes:
            for v in succs[u]:
                if v not in node_set:
                    continue
                cand = h[u] + weights[v] - mean
                if cand > h[v]:
                    h[v] = cand
                    changed = True
        if not changed:
            break
    tight = {
        u: sorted(
            v for v in succs[u] if v in node_set and h[v] == h[u] + weights[v] - mean
        )
        for u in nodes
    }
    # any cycle of tight edges telescopes to the optimal mean, so a depth
    # first search for a back edge suffices
    color = {v: 0 for v in nodes}  # 0 unvisited, 1 on stack, 2 done
    for start in nodes:
        if color[start]:
            continue
        path = []
        on_path = {}
        stack = [(start, iter(tight[start]))]
        color[start] = 1
        on_path[start] = 0
        path.append(start)
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == 1:
                    return path[on_path[nxt] :]
                if color[nxt] == 0:
                    color[nxt] = 1
                    on_path[nxt] = len(path)
                    path.append(nxt)
                    stack.append((nxt, iter(tight[nxt])))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                color[node] = 2
                on_path.pop(node)
                path.pop()
    raise PreconditionError("no critical cycle found")  # unreachable when mean is exact


def ocap_limit(sft: Sft, A: CylinderSet) -> OcapResult:
    """Exact limit orbit capacity: the maximum mean of the visit indicator
    over cycles of the recoded transition graph, with a witness cycle."""
    words, succs, weights = _recode(sft, A)
    best = None
    for comp in sorted(_sccs(succs)):
        mean = _karp_max_mean(comp, succs, weights)
        if mean is not None and (best is None or mean > best[0]):
            best = (mean, comp)
    if best is None:
        raise PreconditionError("transition graph has no cycle")
    mean, comp = best
    cycle = _critical_cycle(comp, succs, weights, mean)
    assert sum(weights[v] for v in cycle) == mean * len(cycle)
    rotation = min(range(len(cycle)), key=lambda i: words[cycle[i]])
    cycle = cycle[rotation:] + cycle[:rotation]
    witness = tuple(words[v][0] for v in cycle)
    return OcapResult(value=mean, witness=witness, graph_size=len(words))


def ocap_neighborhood(sft: Sft, E, delta) -> CylinderSet:
    """A clopen neighborhood whose capacity stays within delta of the target.

    Clopen sets are their own best neighborhood (exact equality). A decreasing
    sequence of cylinder sets (deepest last, standing in for a non-clopen
    intersection) is scanned for the shallowest depth already within delta of
    the deepest available capacity.
    """
    delta = Fraction(delta)
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    if isinstance(E, CylinderSet):
        return E
    stages = list(E)
    if not stages:
        raise PreconditionError("empty refinement sequence")
    for prev, nxt in zip(stages, stages[1:]):
        if not nxt.difference(prev).is_empty:
            raise PreconditionError("refinement sequence is not decreasing")
    target = (
        Fraction(0) if stages[-1].is_empty else ocap_limit(sft, stages[-1]).value
    )
    for stage in stages:
        value = Fraction(0) if stage.is_empty else ocap_limit(sft, stage).value
        if value < target + delta:
            return stage
    raise PreconditionError("bound unreachable at depth cap")


def sbp_cover_refine(sft: Sft, cover, delta):
    """Peel a clopen cover into disjoint pieces with the same union.

    Clopen sets have empty boundary, so the peeling is exact: E_1 = V_1 and
    E_i removes everything already covered. Returns the pieces and the orbit
    capacity report of the leftover complement (exactly zero for a cover).
    Raises with an uncovered word witness if the input is not a cover.
    """
    delta = Fraction(delta)
    cover = list(cover)
    if not cover:
        raise PreconditionError("empty cover")
    union = cover[0]
    for V in cover[1:]:
        union = union.union(V)
    leftover = union.complement()
    if not leftover.is_empty:
        witness = sorted(leftover.words)[0]
        raise PreconditionError(
            f"not a cover: word {''.join(map(str, witness))!r} at offset {leftover.offset} is uncovered"
        )
    pieces = []
    covered = None
    for V in cover:
        piece = V if covered is None else V.difference(covered)
        pieces.append(piece)
        covered = piece if covered is None else covered.union(piece)
    complement = covered.complement()
    report = ocap_limit(sft, complement)
    if not report.value < delta:
        raise PreconditionError("peeled complement capacity not below delta")
    return pieces, complement, report


# ---------------------------------------------------------------------------
# the dyadic odometer tower
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OdometerTower:
    """Level-k tower of the 2-adic adding machine over the clopen base set of
    residue 0 mod 2^k: return times are exactly 2^k, and only the residue of a
    point matters for its return-time set."""

    level: int

    def __post_init__(self):
        if self.level < 1:
            raise PreconditionError("level must be positive")

    @property
    def period(self) -> int:
        return 2**self.level

    @property
    def L(self) -> int:
        return self.period - 1

    @property
    def L_prime(self) -> int:
        return self.period + 1


def odometer_E(tower: OdometerTower, residue: int, lo: int, hi: int) -> list:
    """Return times to the base set within [lo, hi): the arithmetic
    progression of gap 2^k through -residue."""
    if not 0 <= residue < tower.period:
        raise PreconditionError("residue out of range")
    first = lo + ((-residue - lo) % tower.period)
    return list(range(first, hi, tower.period))


# ---------------------------------------------------------------------------
# window sequences and shift metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowSeq:
    """Finitely many consecutive coordinates of a bi-infinite sequence."""

    start: int
    values: tuple

    @property
    def end(self) -> int:
        return self.start + len(self.values)

    def __getitem__(self, n: int):
        if not self.start <= n < self.end:
            raise InsufficientWindowError("coordinate outside window", (n, n + 1))
        return self.values[n - self.start]

    def covers(self, lo: int, hi: int) -> bool:
        return self.start <= lo and hi <= self.end

    def restrict(self, lo: int, hi: int) -> tuple:
        if not self.covers(lo, hi):
            raise InsufficientWindowError("window too small", (lo, hi))
        return self.values[lo - self.start : hi - self.start]


def dyadic_weight_interval(lo: int, hi: int) -> Fraction:
    """Sum of 2^-|n| over integer n in [lo, hi)."""
    if hi <= lo:
        return Fraction(0)

    def tail(u):  # sum over n >= u of 2^-n, u >= 0
        return Fraction(2, 2**u)

    total = Fraction(0)
    if lo < 0:
        neg_hi = min(hi, 0)  # n in [lo, neg_hi): |n| in [|neg_hi|+.., |lo|]
        total += tail(-neg_hi + 1) - tail(-lo + 1)
    if hi > 0:
        pos_lo = max(lo, 0)
        total += tail(pos_lo) - tail(hi)
    return total


@dataclass(frozen=True)
class ShiftMetric:
    """Geometric-weight metric on window sequences: sum of 2^-|n| times a
    bounded per-coordinate distance (coordinate n of the shifted points)."""

    coord_dist: object

    def truncated(self, x: WindowSeq, y: WindowSeq, shift: int = 0):
        """(exact value over the common window, exact bound on the unseen tail)."""
        lo = max(x.start, y.start)
        hi = min(x.end, y.end)
        value = Fraction(0)
        for c in range(lo, hi):
            d = self.coord_dist(x[c], y[c])
            if d:
                value += Fraction(1, 2 ** abs(c - shift)) * d
        tail = TOTAL_DYADIC_WEIGHT - dyadic_weight_interval(lo - shift, hi - shift)
        return value, tail


HILBERT_METRIC = ShiftMetric(lambda a, b: abs(Fraction(a) - Fraction(b)))
SYMBOL_METRIC = ShiftMetric(lambda a, b: Fraction(int(a != b)))


def d_N(metric: ShiftMetric, N: int, x: WindowSeq, y: WindowSeq) -> Fraction:
    """Exact maximum of the shifted window metric over the first N iterates.

    The value is computed on the common window; it is a lower bound for the
    bi-infinite metric, exact up to the reported tail of d_N_bounds.
    """
    return d_N_bounds(metric, N, x, y)[0]


def d_N_bounds(metric: ShiftMetric, N: int, x: WindowSeq, y: WindowSeq):
    if N < 1:
        raise PreconditionError("N must be positive")
    lo = max(x.start, y.start)
    hi = min(x.end, y.end)
    if not (lo <= 0 and N <= hi):
        raise InsufficientWindowError("window does not cover the orbit segment", (0, N))
    best = Fraction(0)
    best_hi = Fraction(0)
    for j in range(N):
        value, tail = metric.truncated(x, y, shift=j)
        if value > best:
            best = value
        if value + tail > best_hi:
            best_hi = value + tail
    return best, best_hi


@dataclass(frozen=True)
class HilbertShiftWindow:
    """Sampler of rational-valued window sequences on a fixed horizon."""

    start: int
    stop: int
    resolution: int

    def __post_init__(self):
        if self.stop <= self.start or self.resolution < 1:
            raise PreconditionError("bad window parameters")

    def sample(self, rng: random.Random) -> WindowSeq:
        return WindowSeq(
            self.start,
            tuple(
                Fraction(rng.randint(0, self.resolution), self.resolution)
                for _ in range(self.stop - self.start)
            ),
        )
