"""Evaluable maps bundled with machine-checkable discharge obligations.

A certificate asserts an upper bound on the width dimension of its domain at
scale epsilon: the bundled evaluator is claimed to be an epsilon-embedding
into a complex of the stated dimension. Obligations come in two kinds:

* STRUCTURAL: an exact premise (rational arithmetic or a named combinatorial
  fact), re-checkable from serialized data alone. Premises use strict
  inequalities throughout.
* SAMPLED: a randomized near-collision test. Sampling corroborates but never
  proves; in particular a sampled check cannot distinguish a strict fiber
  bound from a non-strict one, and no certificate ever asserts a lower bound
  (finite samples are zero-dimensional).

Certificates are immutable; sampling derives one seed per trial from the
root seed, so results do not depend on execution order or thread count.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from fractions import Fraction

from .errors import ObligationFailedError, PreconditionError
from .serialize import format_fraction, parse_fraction, to_jsonable

STRUCTURAL = "STRUCTURAL"
SAMPLED = "SAMPLED"

DISCHARGED = "discharged"
SAMPLED_ONLY = "sampled-only"
FAILED = "failed"


@dataclass(frozen=True)
class DischargeRecord:
    name: str
    kind: str
    status: str
    data: tuple = ()
    witness: tuple | None = None

    def __post_init__(self):
        if self.kind not in (STRUCTURAL, SAMPLED):
            raise PreconditionError(f"unknown record kind {self.kind!r}")
        if self.status not in (DISCHARGED, SAMPLED_ONLY, FAILED):
            raise PreconditionError(f"unknown record status {self.status!r}")
        if self.status == FAILED and self.witness is None:
            raise PreconditionError("failed records must carry a witness")

    @property
    def data_dict(self) -> dict:
        return dict(self.data)

    def to_json_dict(self) -> dict:
        out = {
            "name": self.name,
            "kind": self.kind,
            "status": self.status,
            "data": {k: v for k, v in self.data},
        }
        if self.witness is not None:
            out["witness"] = to_jsonable(self.witness)
        return out

    @classmethod
    def from_json_dict(cls, d: dict) -> "DischargeRecord":
        witness = d.get("witness")
        return cls(
            name=d["name"],
            kind=d["kind"],
            status=d["status"],
            data=tuple(sorted((str(k), str(v)) for k, v in d.get("data", {}).items())),
            witness=tuple(witness) if isinstance(witness, list) else witness,
        )


def _canon_data(data: dict) -> tuple:
    items = []
    for k, v in data.items():
        if isinstance(v, Fraction):
            v = format_fraction(v)
        elif isinstance(v, bool):
            v = str(v).lower()
        else:
            v = str(v)
        items.append((str(k), v))
    return tuple(sorted(items))


def structural_record(name: str, status: str = DISCHARGED, witness=None, **data) -> DischargeRecord:
    return DischargeRecord(name, STRUCTURAL, status, _canon_data(data), witness)


def sampled_record(name: str, status: str, witness=None, **data) -> DischargeRecord:
    return DischargeRecord(name, SAMPLED, status, _canon_data(data), witness)


# ---------------------------------------------------------------------------
# structural re-checks: name -> callable(data_dict) -> bool
#
# Names in _CITATIONS are recorded combinatorial facts: the construction
# guarantees them and there is nothing arithmetic to recompute, but a
# verifier must still recognize the name.
# ---------------------------------------------------------------------------

_CITATIONS = {
    "retraction-fibers-lie-in-stars",
    "simplicial-by-block-collapse",
    "identity-embedding-fibers-are-points",
    "isometric-inclusion",
    "coordinate-projection",
    "cutoff-dichotomy-zero-dimensional",
    "empty-fiber",
    "degenerate-cutoff-identically-zero",
}


def _check_strictly_below(a_key, b_key):
    def check(data):
        return parse_fraction(data[a_key]) < parse_fraction(data[b_key])

    return check


def _check_sum(data):
    factors = [parse_fraction(x) for x in data["factors"].split(";") if x]
    return sum(factors, Fraction(0)) == parse_fraction(data["total"])


def _check_chain_partition(data):
    lengths = [int(x) for x in data["lengths"].split(";") if x]
    n = int(data["N"])
    partial = 0
    for length in lengths[:-1]:
        partial += length
    return partial < n <= partial + lengths[-1]


def _check_bucket_dimension(data):
    from .complexes import bucket_dimension_bound

    return int(data["dim"]) <= bucket_dimension_bound(
        int(data["source_dim"]), int(data["m"]), int(data["bucket"])
    )


def _check_scale_relaxation(data):
    return parse_fraction(data["from_scale"]) <= parse_fraction(data["to_scale"])


def _check_window_coverage(data):
    a0 = int(data["a0"])
    a_end = int(data["a_end"])
    m_margin = int(data["margin"])
    n = int(data["N"])
    block = int(data["block"])
    if not (a0 <= -m_margin and a_end >= n + m_margin):
        return False
    if (a_end - a0) % block != 0:
        return False
    return a_end - a0 < n + 2 * m_margin + 2 * (block + 1)


def _check_dim_bookkeeping(data):
    return parse_fraction(data["total_dim"]) < parse_fraction(data["bound"])


def _check_tail_rule(data):
    m_margin = int(data["margin"])
    return Fraction(1, 2**m_margin) < parse_fraction(data["threshold"])


def _check_visit_count(data):
    total = int(data["wedge_dim"])
    return total == int(data["n"]) * int(data["cone_dim"]) + int(
        data["count_bound"]
    ) * int(data["global_cone_dim"])


def _check_disjoint(data):
    return data["pairwise_disjoint"] == "true"


def _check_subsampled_visits(data):
    # the subsampled count never beats the full-orbit count, which the best
    # cycle mean bounds up to one traversal of the graph
    horizon = int(data["steps"]) * int(data["step_length"])
    bound = parse_fraction(data["complement_ocap"]) * horizon + int(data["graph_size"])
    return Fraction(int(data["count_bound"])) <= bound


def _check_grid_mesh(data):
    g = int(data["grid"])
    bound = parse_fraction(data["bound"])
    return bound == Fraction(2, g) and bound < parse_fraction(data["scale"])


STRUCTURAL_CHECKS = {
    "star-mesh-below-scale": _check_strictly_below("mesh", "scale"),
    "star-mesh-inherited-bound": _check_strictly_below("parent_mesh", "scale"),
    "star-mesh-grid-bound": _check_grid_mesh,
    "product-dims-additive": _check_sum,
    "chain-itinerary-covers-range": _check_chain_partition,
    "bucket-dimension-bound": _check_bucket_dimension,
    "scale-relaxation": _check_scale_relaxation,
    "window-covers-range": _check_window_coverage,
    "dimension-bookkeeping": _check_dim_bookkeeping,
    "window-tail-rule": _check_tail_rule,
    "wedge-dimension-count": _check_visit_count,
    "windows-pairwise-disjoint": _check_disjoint,
    "subsampled-visits-bound": _check_subsampled_visits,
}


def recheck_structural(record: DischargeRecord) -> bool:
    """Re-discharge a structural obligation from its serialized data alone."""
    if record.kind != STRUCTURAL:
        raise PreconditionError("not a structural record")
    if record.name in _CITATIONS:
        return record.status == DISCHARGED
    check = STRUCTURAL_CHECKS.get(record.name)
    if check is None:
        return False
    try:
        return check(record.data_dict) == (record.status == DISCHARGED)
    except (KeyError, ValueError):
        return False


# ---------------------------------------------------------------------------
# metric space handles and certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MetricSpaceHandle:
    """A point universe with an exact metric and a seeded sampler.

    kind is a short tag ("geometric-complex", "finite-cloud",
    "cylinder-block", "product", ...); dist may return an exact lower bound
    for window-truncated dynamical metrics, which keeps violation reports
    sound (a reported violation is a real one).
    """

    kind: str
    description: str
    dist: object  # (point, point) -> Fraction-comparable
    sample: object  # random.Random -> point

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "description": self.description}


def spot_check_metric(handle: MetricSpaceHandle, trials: int = 32, seed: int = 0):
    rng = random.Random(seed)
    for _ in range(trials):
        x, y = handle.sample(rng), handle.sample(rng)
        dxy, dyx = handle.dist(x, y), handle.dist(y, x)
        if dxy != dyx or dxy < 0 or handle.dist(x, x) != 0:
            raise PreconditionError(f"metric axioms violated on {handle.kind}")


def flat_linf(a, b):
    """Max metric over arbitrarily nested tuples of rationals."""
    if isinstance(a, tuple) and isinstance(b, tuple):
        return max(
            (flat_linf(x, y) for x, y in zip(a, b)), default=Fraction(0)
        )
    return abs(Fraction(a) - Fraction(b))


def one_point_handle(point=()) -> MetricSpaceHandle:
    return MetricSpaceHandle(
        kind="one-point",
        description="single point",
        dist=lambda a, b: Fraction(0),
        sample=lambda rng: point,
    )


def finite_cloud_handle(points, description="finite sample cloud") -> MetricSpaceHandle:
    pts = [tuple(Fraction(c) for c in p) for p in points]
    if not pts:
        raise PreconditionError("empty cloud")
    return MetricSpaceHandle(
        kind="finite-cloud",
        description=description,
        dist=flat_linf,
        sample=lambda rng: pts[rng.randrange(len(pts))],
    )


def product_handle(h1: MetricSpaceHandle, h2: MetricSpaceHandle) -> MetricSpaceHandle:
    """Product space under the max of the factor metrics."""
    return MetricSpaceHandle(
        kind="product",
        description=f"({h1.description}) x ({h2.description})",
        dist=lambda a, b: max(h1.dist(a[0], b[0]), h2.dist(a[1], b[1])),
        sample=lambda rng: (h1.sample(rng), h2.sample(rng)),
    )


@dataclass(frozen=True, eq=False)
class EpsEmbeddingCertificate:
    """Claim: the evaluator is an epsilon-embedding of the domain into a
    complex of dimension target_dim, so the domain's width dimension at scale
    epsilon is at most target_dim. Never a lower bound."""

    domain: MetricSpaceHandle
    target_dim: int
    epsilon: Fraction
    evaluator: object  # point -> target point
    obligations: tuple = ()
    target_dist: object = flat_linf

    def __post_init__(self):
        if self.target_dim < 0:
            raise PreconditionError("target_dim must be nonnegative")
        if Fraction(self.epsilon) <= 0:
            raise PreconditionError("epsilon must be positive")

    @property
    def all_structural_discharged(self) -> bool:
        return all(
            r.status == DISCHARGED for r in self.obligations if r.kind == STRUCTURAL
        )

    @property
    def failed_obligations(self) -> tuple:
        return tuple(r for r in self.obligations if r.status == FAILED)

    def with_records(self, *records) -> "EpsEmbeddingCertificate":
        return replace(self, obligations=self.obligations + tuple(records))

    def to_json_dict(self) -> dict:
        return {
            "kind": "eps-embedding-certificate",
            "domain": self.domain.to_json_dict(),
            "epsilon": format_fraction(self.epsilon),
            "target_dim": self.target_dim,
            "obligations": [r.to_json_dict() for r in self.obligations],
        }


def identity_certificate(domain: MetricSpaceHandle, dim: int, epsilon) -> EpsEmbeddingCertificate:
    """The identity map embeds with point fibers; any scale works."""
    return EpsEmbeddingCertificate(
        domain=domain,
        target_dim=dim,
        epsilon=Fraction(epsilon),
        evaluator=lambda x: x,
        obligations=(structural_record("identity-embedding-fibers-are-points"),),
    )


def _product_factors(cert: EpsEmbeddingCertificate):
    for r in cert.obligations:
        if r.name == "product-dims-additive":
            return [int(parse_fraction(x)) for x in r.data_dict["factors"].split(";") if x]
    return [cert.target_dim]


def product_certificate(
    c1: EpsEmbeddingCertificate, c2: EpsEmbeddingCertificate
) -> EpsEmbeddingCertificate:
    """Combine certificates over the max-product metric; dimensions add.

    The factor list in the bookkeeping record flattens associatively, so
    nesting order does not change the obligation set.
    """
    if Fraction(c1.epsilon) != Fraction(c2.epsilon):
        raise PreconditionError("mismatched epsilon")
    factors = _product_factors(c1) + _product_factors(c2)
    base = tuple(
        r
        for r in c1.obligations + c2.obligations
        if r.name != "product-dims-additive"
    )
    record = structural_record(
        "product-dims-additive",
        factors=";".join(str(f) for f in factors),
        total=str(sum(factors)),
    )
    e1, e2 = c1.evaluator, c2.evaluator
    d1, d2 = c1.target_dist, c2.target_dist
    return EpsEmbeddingCertificate(
        domain=product_handle(c1.domain, c2.domain),
        target_dim=c1.target_dim + c2.target_dim,
        epsilon=Fraction(c1.epsilon),
        evaluator=lambda xy: (e1(xy[0]), e2(xy[1])),
        obligations=base + (record,),
        target_dist=lambda a, b: max(d1(a[0], b[0]), d2(a[1], b[1])),
    )


def pullback_certificate(
    cert: EpsEmbeddingCertificate,
    new_domain: MetricSpaceHandle,
    phi,
    witness: str | None = None,
    trials: int = 1000,
    seed: int = 0,
) -> EpsEmbeddingCertificate:
    """Compose with a distance non-decreasing map into the certificate's domain.

    `witness` names the structural reason phi cannot shrink distances
    (e.g. "isometric-inclusion"); with no name given, random pairs are tested
    instead and a violating pair turns into a failed record on the result.
    """
    if witness is not None:
        if witness not in _CITATIONS:
            raise PreconditionError(f"unknown structural witness {witness!r}")
        record = structural_record(witness)
    else:
        rng = random.Random(seed)
        violation = None
        for i in range(trials):
            x, y = new_domain.sample(rng), new_domain.sample(rng)
            if new_domain.dist(x, y) > cert.domain.dist(phi(x), phi(y)):
                violation = (to_jsonable_point(x), to_jsonable_point(y))
                break
        if violation is None:
            record = sampled_record(
                "distance-non-decreasing-sampled",
                SAMPLED_ONLY,
                trials=trials,
                seed=seed,
            )
        else:
            record = sampled_record(
                "distance-non-decreasing-sampled",
                FAILED,
                witness=violation,
                trials=trials,
                seed=seed,
            )
    evaluator = cert.evaluator
    return EpsEmbeddingCertificate(
        domain=new_domain,
        target_dim=cert.target_dim,
        epsilon=Fraction(cert.epsilon),
        evaluator=lambda x: evaluator(phi(x)),
        obligations=cert.obligations + (record,),
        target_dist=cert.target_dist,
    )


def relax_scale(cert: EpsEmbeddingCertificate, new_epsilon, **extra) -> EpsEmbeddingCertificate:
    """Weaken the claim to a larger scale (fibers below the old scale stay
    below the new one). Extra data rides along on the record."""
    new_epsilon = Fraction(new_epsilon)
    if new_epsilon < Fraction(cert.epsilon):
        raise PreconditionError("can only relax toward a larger scale")
    record = structural_record(
        "scale-relaxation",
        from_scale=format_fraction(Fraction(cert.epsilon)),
        to_scale=format_fraction(new_epsilon),
        **extra,
    )
    return replace(
        cert, epsilon=new_epsilon, obligations=cert.obligations + (record,)
    )


def chain_fiber_certificate(
    domain: MetricSpaceHandle,
    shift,
    block_certs,
    itinerary,
    N: int,
) -> EpsEmbeddingCertificate:
    """Cover the first N time steps by consecutive blocks and embed the domain
    into the product of the per-block targets.

    block_certs is a list of (certificate, block_length); itinerary indexes
    into it. The blocks laid end to end must cover [0, N): every partial sum
    before the last stays below N, and the full sum reaches it. shift(x, t)
    is the time-t iterate of x.
    """
    if not itinerary:
        raise PreconditionError("empty itinerary")
    certs = []
    lengths = []
    offsets = []
    total = 0
    for j, idx in enumerate(itinerary):
        try:
            cert, length = block_certs[idx]
        except (IndexError, TypeError):
            raise PreconditionError(f"itinerary index {idx!r} out of range") from None
        if j < len(itinerary) - 1 and total + length >= N:
            raise PreconditionError("itinerary offsets inconsistent with block lengths")
        certs.append(cert)
        lengths.append(length)
        offsets.append(total)
        total += length
    if not (total - lengths[-1] < N <= total):
        raise PreconditionError("itinerary offsets inconsistent with block lengths")
    eps = Fraction(certs[0].epsilon)
    for c in certs[1:]:
        if Fraction(c.epsilon) != eps:
            raise PreconditionError("mismatched epsilon")
    chain_record = structural_record(
        "chain-itinerary-covers-range",
        lengths=";".join(str(l) for l in lengths),
        N=str(N),
    )
    dim_record = structural_record(
        "product-dims-additive",
        factors=";".join(str(c.target_dim) for c in certs),
        total=str(sum(c.target_dim for c in certs)),
    )
    base = tuple(
        r
        for c in certs
        for r in c.obligations
        if r.name != "product-dims-additive"
    )
    evaluators = [c.evaluator for c in certs]
    dists = [c.target_dist for c in certs]

    def evaluate(x):
        return tuple(
            ev(shift(x, off)) for ev, off in zip(evaluators, offsets)
        )

    def target_dist(a, b):
        return max(d(p, q) for d, p, q in zip(dists, a, b))

    return EpsEmbeddingCertificate(
        domain=domain,
        target_dim=sum(c.target_dim for c in certs),
        epsilon=eps,
        evaluator=evaluate,
        obligations=base + (chain_record, dim_record),
        target_dist=target_dist,
    )


def to_jsonable_point(pt):
    try:
        return to_jsonable(pt)
    except PreconditionError:
        return repr(pt)


def _trial_seed(root: int, index: int) -> int:
    return (root + 0x9E3779B97F4A7C15 * (index + 1)) % 2**64


def sample_fiber_check(
    evaluator,
    domain: MetricSpaceHandle,
    eps,
    eta=None,
    trials: int = 10_000,
    seed: int = 0,
    target_dist=flat_linf,
    threads: int | None = None,
) -> DischargeRecord:
    """Sampled necessary condition for an epsilon-embedding: whenever two
    sampled points land within eta of each other in the target, they must be
    within eps in the domain. A violating pair produces a failed record with
    the pair as witness; otherwise the record stays sampled-only with counts.
    """
    eps = Fraction(eps)
    eta = Fraction(eta) if eta is not None else eps / 100
    if eta <= 0 or trials < 1:
        raise PreconditionError("eta must be positive and trials >= 1")

    def run_trial(i):
        rng = random.Random(_trial_seed(seed, i))
        x, y = domain.sample(rng), domain.sample(rng)
        if target_dist(evaluator(x), evaluator(y)) <= eta:
            if domain.dist(x, y) >= eps:
                return ("violation", x, y)
            return ("near", None, None)
        return ("far", None, None)

    from .parallel import deterministic_map

    results = deterministic_map(run_trial, range(trials), threads)
    near = 0
    for tag, x, y in results:
        if tag == "violation":
            return sampled_record(
                "fiber-sample-check",
                FAILED,
                witness=(to_jsonable_point(x), to_jsonable_point(y)),
                trials=trials,
                seed=seed,
                eta=format_fraction(eta),
                epsilon=format_fraction(eps),
            )
        if tag == "near":
            near += 1
    return sampled_record(
        "fiber-sample-check",
        SAMPLED_ONLY,
        trials=trials,
        near_pairs=near,
        violations=0,
        seed=seed,
        eta=format_fraction(eta),
        epsilon=format_fraction(eps),
    )


def check_certificate(
    cert: EpsEmbeddingCertificate, trials: int = 10_000, seed: int = 0, eta=None
) -> DischargeRecord:
    return sample_fiber_check(
        cert.evaluator,
        cert.domain,
        cert.epsilon,
        eta=eta,
        trials=trials,
        seed=seed,
        target_dist=cert.target_dist,
    )


def require_discharged(cert: EpsEmbeddingCertificate):
    for r in cert.obligations:
        if r.status == FAILED:
            raise ObligationFailedError(r)
