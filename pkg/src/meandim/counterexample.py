"""The finite-horizon factor map with small image dimension and small fiber
dimension, and the wedge-of-cones embedding over zero-dimensional bases.

The factor map sends a sequence of cube coordinates through a shared padded
width map block by block, with blocks cut by the dyadic odometer's return
times. Two quantitative bounds are certified exactly at every finite horizon:
the count of nonzero image entries per window, and the fiber-dimension
bookkeeping through block products.

The wedge-cone embedding composes per-piece fiber embeddings with a global
embedding through a {0,1}-valued cutoff; over a zero-dimensional base every
case split is exact, and the number of time steps where the global factor is
live is bounded by an exact orbit-count dynamic program.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .certificates import (
    EpsEmbeddingCertificate,
    MetricSpaceHandle,
    product_certificate,
    pullback_certificate,
    relax_scale,
    structural_record,
)
from .errors import PreconditionError
from .serialize import format_fraction
from .symbolic import (
    HILBERT_METRIC,
    SYMBOL_METRIC,
    CylinderSet,
    OdometerTower,
    Sft,
    WindowSeq,
    d_N,
    max_subsampled_visits,
    ocap_limit,
    odometer_E,
    sbp_cover_refine,
)
from .widthmaps import PaddedBlockMap, padded_block_map

F = Fraction

SAMPLE_RESOLUTION = 64  # denominator grid for sampled cube coordinates


def derive_m(delta: Fraction) -> int:
    m = 2
    while F(1, m) >= delta:
        m += 1
    return m


def derive_level(delta: Fraction, m: int) -> int:
    """Smallest level whose block length keeps the nonzero-count bound valid
    for every horizon: 2^k - 1 > m and (m-1)/2^k <= delta/2."""
    k = 1
    while not (2**k - 1 > m and F(m - 1, 2**k) <= delta / 2):
        k += 1
        if k > 40:
            raise PreconditionError("no feasible block level below 2^40")
    return k


def derive_margin(eps: Fraction) -> int:
    """Smallest window margin M with 2^-M below half the scale."""
    margin = 1
    while not F(1, 2**margin) < eps / 2:
        margin += 1
    return margin


def two_sided_tail(margin: int) -> Fraction:
    """Exact sum of 2^-|n| over |n| >= margin."""
    return F(4, 2**margin)


@dataclass(frozen=True)
class CounterexampleParams:
    """Parameters of the factor-map instance; inequalities are checked on
    construction and reported with exact values by report()."""

    delta: Fraction
    eps: Fraction
    m: int
    level: int
    grid: int
    horizon: int
    margin: int
    seed: int = 0

    def __post_init__(self):
        for name, ok in self.core_checks():
            if not ok:
                raise PreconditionError(f"parameter inequality violated: {name}")

    @property
    def period(self) -> int:
        return 2**self.level

    @property
    def L(self) -> int:
        return self.period - 1

    @property
    def L_prime(self) -> int:
        return self.period + 1

    def core_checks(self):
        return [
            ("1/m < delta", F(1, self.m) < self.delta),
            ("L > m", self.L > self.m),
            ("block length >= m", self.period >= self.m),
            ("(m-1)/2^k <= delta/2", F(self.m - 1, self.period) <= self.delta / 2),
            ("grid mesh 2/g < eps/4", F(2, self.grid) < self.eps / 4),
            ("2^-M < eps/2", F(1, 2**self.margin) < self.eps / 2),
            ("horizon >= 1", self.horizon >= 1),
        ]

    def report(self):
        """Every inequality with its exact value, including the advisory
        asymptotic one (m/L < delta/2) that finite horizons do not need."""
        rows = [
            (name, "holds" if ok else "fails", "required") for name, ok in self.core_checks()
        ]
        rows.append(
            (
                "m/L < delta/2",
                "holds" if F(self.m, self.L) < self.delta / 2 else "fails",
                "advisory",
            )
        )
        rows.append(
            (
                "two-sided tail",
                format_fraction(two_sided_tail(self.margin)),
                "reported",
            )
        )
        return rows

    @classmethod
    def derive(cls, delta, eps, horizon: int, seed: int = 0) -> "CounterexampleParams":
        delta, eps = F(delta), F(eps)
        if delta <= 0 or eps <= 0:
            raise PreconditionError("delta and eps must be positive")
        m = derive_m(delta)
        level = derive_level(delta, m)
        margin = derive_margin(eps)
        from .widthmaps import grid_for_mesh

        grid = grid_for_mesh(eps / 4)
        return cls(
            delta=delta,
            eps=eps,
            m=m,
            level=level,
            grid=grid,
            horizon=horizon,
            margin=margin,
            seed=seed,
        )

    def to_json_dict(self) -> dict:
        return {
            "delta": format_fraction(self.delta),
            "eps": format_fraction(self.eps),
            "m": self.m,
            "level": self.level,
            "grid": self.grid,
            "horizon": self.horizon,
            "margin": self.margin,
            "seed": self.seed,
        }


@dataclass(eq=False)
class FactorMapInstance:
    """The factor map at a finite horizon: cube-sequence windows are pushed
    through the shared padded block map over the odometer's return blocks;
    the zero-dimensional coordinate passes through unchanged."""

    params: CounterexampleParams
    tower: OdometerTower
    block_map: PaddedBlockMap

    @property
    def window_lo(self) -> int:
        return -(self.params.margin + self.params.L_prime)

    @property
    def window_hi(self) -> int:
        return self.params.horizon + self.params.margin + self.params.L_prime

    def block_starts(self, residue: int):
        """Starts of complete blocks inside the represented window."""
        starts = odometer_E(self.tower, residue, self.window_lo, self.window_hi)
        return [a for a in starts if a + self.params.period <= self.window_hi]

    def evaluate_f(self, x: WindowSeq, residue: int) -> WindowSeq:
        starts = self.block_starts(residue)
        values = []
        for a in starts:
            values.extend(
                self.block_map.evaluate(x.restrict(a, a + self.params.period))
            )
        return WindowSeq(starts[0], tuple(values))

    def pi(self, x: WindowSeq, residue: int):
        return self.evaluate_f(x, residue), residue

    def sample_state(self, rng: random.Random):
        values = tuple(
            F(rng.randint(0, SAMPLE_RESOLUTION), SAMPLE_RESOLUTION)
            for _ in range(self.window_hi - self.window_lo)
        )
        return WindowSeq(self.window_lo, values), rng.randrange(self.params.period)


def build_counterexample(params: CounterexampleParams) -> FactorMapInstance:
    return FactorMapInstance(
        params=params,
        tower=OdometerTower(params.level),
        block_map=padded_block_map(params.period, params.m, params.eps),
    )


@dataclass(frozen=True)
class CountReport:
    samples: int
    horizon: int
    max_count: int
    bound: Fraction
    block_bound: int
    hull_max: int
    violations: tuple

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json_dict(self) -> dict:
        return {
            "samples": self.samples,
            "N": self.horizon,
            "max_count": self.max_count,
            "bound": format_fraction(self.bound),
            "block_bound": self.block_bound,
            "hull_max": self.hull_max,
            "violations": len(self.violations),
        }


def nonzero_count_check(
    inst: FactorMapInstance, samples: int, N: int, seed: int = 0
) -> CountReport:
    """Count nonzero image entries over [0, N) for sampled states; each count
    must stay strictly below delta*N/2 + 2m and below the exact block form
    (ceil(N/block)+1)(m-1). Also reports the per-residue coordinate hull."""
    p = inst.params
    if N > p.horizon:
        raise PreconditionError("N exceeds the instance horizon")
    bound = p.delta * N / 2 + 2 * p.m
    blocks_touching = -((-N) // p.period) + 1  # ceil(N/block) + 1
    block_bound = blocks_touching * (p.m - 1)
    rng = random.Random(seed)
    max_count = 0
    hulls = {r: set() for r in range(p.period)}
    violations = []
    for _ in range(samples):
        x, r = inst.sample_state(rng)
        fx = inst.evaluate_f(x, r)
        nonzero = [n for n in range(N) if fx[n] != 0]
        count = len(nonzero)
        hulls[r].update(nonzero)
        max_count = max(max_count, count)
        if not (count < bound and count <= block_bound):
            violations.append((r, count))
    for r, hull in hulls.items():
        allowed = {
            n for n in range(N) if (n + r) % p.period < p.m - 1
        }
        if not hull <= allowed:
            violations.append((r, "hull outside padded positions"))
    hull_max = max(len(h) for h in hulls.values())
    return CountReport(
        samples=samples,
        horizon=N,
        max_count=max_count,
        bound=bound,
        block_bound=block_bound,
        hull_max=hull_max,
        violations=tuple(violations),
    )


def fiber_dimension_certificate(
    inst: FactorMapInstance, state, N: int
) -> EpsEmbeddingCertificate:
    """Certificate for the fiber of the factor map through `state` at horizon
    N: the product of per-block width-map fiber certificates, pulled back
    along the window projection, with exact dimension bookkeeping strictly
    below (N + 2M + 2L')/m."""
    p = inst.params
    if N > p.horizon:
        raise PreconditionError("N exceeds the instance horizon")
    x, residue = state
    y_window, _ = inst.pi(x, residue)
    period = p.period
    all_starts = inst.block_starts(residue)
    cert_starts = [a for a in all_starts if a + period > -p.margin and a < N + p.margin]
    a0 = cert_starts[0]
    a_end = cert_starts[-1] + period
    if not (a0 <= -p.margin and a_end >= N + p.margin):
        raise PreconditionError("window margins too small for the requested horizon")

    block_certs = []
    for a in cert_starts:
        target = y_window.restrict(a, a + period)
        known = inst.block_map.pipeline.locate_flag(x.restrict(a, a + period))
        block_certs.append(inst.block_map.fiber_certificate(target, known=known))

    combined = block_certs[0]
    for cert in block_certs[1:]:
        combined = product_certificate(combined, cert)

    # fiber points: every complete block in the window is constrained to its
    # own width-map fiber; coordinates outside complete blocks are free
    samplers = []
    for a in all_starts:
        target = y_window.restrict(a, a + period)
        known = inst.block_map.pipeline.locate_flag(x.restrict(a, a + period))
        samplers.append((a, inst.block_map.fiber_certificate(target, known=known)))
    grid = inst.block_map.grid
    lo, hi = inst.window_lo, inst.window_hi
    covered_lo, covered_hi = all_starts[0], all_starts[-1] + period

    def sample(rng):
        values = {}
        for n in range(lo, covered_lo):
            values[n] = F(rng.randint(0, SAMPLE_RESOLUTION), SAMPLE_RESOLUTION)
        for a, cert in samplers:
            flag = cert.domain.sample(rng)
            for offset, v in enumerate(flag.realize(grid)):
                values[a + offset] = v
        for n in range(covered_hi, hi):
            values[n] = F(rng.randint(0, SAMPLE_RESOLUTION), SAMPLE_RESOLUTION)
        return WindowSeq(lo, tuple(values[n] for n in range(lo, hi)))

    fiber_domain = MetricSpaceHandle(
        kind="factor-map-fiber",
        description=f"fiber at horizon {N}, residue {residue}",
        dist=lambda u, v: d_N(HILBERT_METRIC, N, u, v),
        sample=sample,
    )

    pipeline = inst.block_map.pipeline

    def project(x_point: WindowSeq):
        nested = None
        for a in cert_starts:
            flag = pipeline.locate_flag(x_point.restrict(a, a + period))
            nested = flag if nested is None else (nested, flag)
        return nested

    pulled = pullback_certificate(
        combined, fiber_domain, project, witness="coordinate-projection"
    )
    total_dim = pulled.target_dim
    bound = F(N + 2 * p.margin + 2 * p.L_prime, p.m)
    final = relax_scale(
        pulled,
        p.eps,
        block_scale=format_fraction(p.eps / 2),
        mesh_scale=format_fraction(p.eps / 4),
        two_sided_tail=format_fraction(two_sided_tail(p.margin)),
    )
    return final.with_records(
        structural_record(
            "window-tail-rule",
            margin=p.margin,
            threshold=format_fraction(p.eps / 2),
            two_sided_tail=format_fraction(two_sided_tail(p.margin)),
        ),
        structural_record(
            "window-covers-range",
            a0=a0,
            a_end=a_end,
            margin=p.margin,
            N=N,
            block=period,
        ),
        structural_record(
            "dimension-bookkeeping",
            total_dim=total_dim,
            window_length=a_end - a0,
            bound=format_fraction(bound),
            m=p.m,
        ),
    )


@dataclass(frozen=True)
class ReportRow:
    eps: Fraction
    N: int
    fiber_dim: int
    fiber_dim_over_N: Fraction
    image_dim_over_N: Fraction

    def to_csv(self) -> str:
        return ",".join(
            [
                format_fraction(self.eps),
                str(self.N),
                format_fraction(self.fiber_dim_over_N),
                format_fraction(self.image_dim_over_N),
            ]
        )


CSV_HEADER = "eps,N,fiber_dim_over_N,image_dim_over_N"


def mdim_report(delta, N_values, eps_values, samples: int = 3, seed: int = 0):
    """Ratio table: certified fiber dimension per step and image dimension
    bound per step, for each scale and horizon."""
    delta = F(delta)
    rows = []
    for eps in eps_values:
        eps = F(eps)
        for N in N_values:
            params = CounterexampleParams.derive(delta, eps, N, seed)
            inst = build_counterexample(params)
            rng = random.Random(seed)
            fiber_dim = 0
            for _ in range(samples):
                state = inst.sample_state(rng)
                cert = fiber_dimension_certificate(inst, state, N)
                fiber_dim = max(fiber_dim, cert.target_dim)
            rows.append(
                ReportRow(
                    eps=eps,
                    N=N,
                    fiber_dim=fiber_dim,
                    fiber_dim_over_N=F(fiber_dim, N),
                    image_dim_over_N=(delta * N / 2 + 2 * params.m) / N,
                )
            )
    return rows


def stacked_report(delta, depth: int, N: int, samples: int = 2, seed: int = 0):
    """Finite truncation of the stacked family: depth-n uses scale 1/n and
    budget delta/2^n; the stacked fiber refines every single-map fiber, so at
    scale 1/n the depth-n certificate applies."""
    delta = F(delta)
    rows = []
    for n in range(1, depth + 1):
        eps_n = F(1, n)
        delta_n = delta / 2**n
        params = CounterexampleParams.derive(delta_n, eps_n, N, seed)
        inst = build_counterexample(params)
        rng = random.Random(seed + n)
        fiber_dim = 0
        for _ in range(samples):
            cert = fiber_dimension_certificate(inst, inst.sample_state(rng), N)
            fiber_dim = max(fiber_dim, cert.target_dim)
        rows.append(
            {
                "depth": n,
                "eps": eps_n,
                "delta": delta_n,
                "fiber_dim": fiber_dim,
                "fiber_dim_over_N": F(fiber_dim, N),
            }
        )
    return rows


# ---------------------------------------------------------------------------
# wedge-of-cones embedding over a zero-dimensional base
# ---------------------------------------------------------------------------

APEX = ("*", F(0), None)


def cone_point(branch, height, payload):
    height = F(height)
    if height == 0:
        return APEX
    return (branch, height, payload)


def cone_distance(dist_for_branch):
    """Metric on a wedge of cones: through the apex across branches, height
    difference plus scaled payload distance along one branch."""

    def dist(p, q):
        bp, tp, xp = p
        bq, tq, xq = q
        if tp == 0 and tq == 0:
            return F(0)
        if tp == 0 or tq == 0:
            return tp + tq
        if bp != bq:
            return tp + tq  # through the apex
        return abs(tp - tq) + min(tp, tq) * dist_for_branch(bp)(xp, xq)

    return dist


@dataclass(eq=False)
class SbpEmbeddingInstance:
    """Zero-dimensional-base data for the wedge-cone embedding.

    The cutoff is the indicator of the union of the refined pieces: it is 1
    on every piece, supported inside the (pairwise disjoint) windows, and
    {0,1}-valued because everything is clopen.
    """

    base: Sft
    cover: tuple
    pieces: tuple  # E_i, disjoint
    windows: tuple  # W_i, disjoint, E_i <= W_i <= V_i
    complement: CylinderSet  # leftover after peeling
    fiber_certs: tuple  # one per cover element, on the fiber over it
    global_cert: EpsEmbeddingCertificate
    base_span: tuple  # sampling window for base points

    def __post_init__(self):
        eps = F(self.global_cert.epsilon)
        for cert in self.fiber_certs:
            if F(cert.epsilon) != eps:
                raise PreconditionError("mismatched epsilon between certificates")
        for i, Wi in enumerate(self.windows):
            for Wj in self.windows[i + 1 :]:
                if not Wi.intersection(Wj).is_empty:
                    raise PreconditionError("windows are not pairwise disjoint")
        for Ei, Wi, Vi in zip(self.pieces, self.windows, self.cover):
            if not Ei.difference(Wi).is_empty or not Wi.difference(Vi).is_empty:
                raise PreconditionError("need piece inside window inside cover element")

    @property
    def epsilon(self) -> Fraction:
        return F(self.global_cert.epsilon)

    def sample_base(self, rng: random.Random) -> WindowSeq:
        lo, hi = self.base_span
        symbols = []
        prev = None
        order = sorted(self.base.alphabet, key=repr)
        for _ in range(hi - lo):
            choices = (
                order
                if prev is None
                else [b for b in order if (prev, b) in self.base.transitions]
            )
            prev = choices[rng.randrange(len(choices))]
            symbols.append(prev)
        return WindowSeq(lo, tuple(symbols))


def build_sbp_instance(
    base: Sft,
    cover,
    delta,
    fiber_certs,
    global_cert: EpsEmbeddingCertificate,
    base_span,
    pieces=None,
) -> SbpEmbeddingInstance:
    """Refine the cover into disjoint pieces (exactly, the base being
    zero-dimensional) and assemble the embedding data. Passing `pieces`
    directly allows deliberately punctured families."""
    cover = tuple(cover)
    if pieces is None:
        refined, complement, _ = sbp_cover_refine(base, cover, delta)
        pieces = tuple(refined)
    else:
        pieces = tuple(pieces)
        union = pieces[0]
        for piece in pieces[1:]:
            union = union.union(piece)
        complement = union.complement()
    return SbpEmbeddingInstance(
        base=base,
        cover=cover,
        pieces=pieces,
        windows=pieces,
        complement=complement,
        fiber_certs=tuple(fiber_certs),
        global_cert=global_cert,
        base_span=tuple(base_span),
    )


def wedge_cone_embedding(
    inst: SbpEmbeddingInstance, N: int, n: int
) -> EpsEmbeddingCertificate:
    """Certificate on (X, d_{nN}) built from n time steps of the glued map.

    Each step contributes a wedge-of-cones coordinate (the live piece's fiber
    embedding at full cone height, or the apex) and a global-cone coordinate
    that leaves the apex only while the orbit sits outside every piece; the
    number of such steps is bounded by an exact dynamic program over the
    base. Dimension: n * (wedge dim) + (live-step bound) * (global cone dim).
    """
    if N < 1 or n < 1:
        raise PreconditionError("N and n must be positive")
    eps = inst.epsilon
    lo, hi = inst.base_span
    span_needed = (n - 1) * N + max(
        (W.offset + W.length for W in inst.windows if W.length), default=1
    )
    if not (lo <= 0 and hi >= max(span_needed, n * N)):
        raise PreconditionError("base span too small for the requested horizon")

    cone_dims = [cert.target_dim + 1 for cert in inst.fiber_certs]
    wedge_dim = max(cone_dims) if cone_dims else 0
    global_cone_dim = inst.global_cert.target_dim + 1

    count_bound = max_subsampled_visits(inst.base, inst.complement, n, N)
    complement_ocap = ocap_limit(inst.base, inst.complement)

    degenerate = all(W.is_empty for W in inst.windows)
    k_contrib = 0 if degenerate else n * wedge_dim
    target_dim = k_contrib + count_bound * global_cone_dim

    records = [
        structural_record(
            "windows-pairwise-disjoint",
            pairwise_disjoint=True,
            count=len(inst.windows),
        ),
        structural_record("cutoff-dichotomy-zero-dimensional"),
        structural_record(
            "subsampled-visits-bound",
            count_bound=count_bound,
            steps=n,
            step_length=N,
            complement_ocap=format_fraction(complement_ocap.value),
            graph_size=complement_ocap.graph_size,
        ),
        structural_record(
            "wedge-dimension-count",
            n=n,
            cone_dim=0 if degenerate else wedge_dim,
            count_bound=count_bound,
            global_cone_dim=global_cone_dim,
            wedge_dim=target_dim,
        ),
    ]
    if degenerate:
        records.append(structural_record("degenerate-cutoff-identically-zero"))

    pieces = inst.pieces
    windows = inst.windows
    fiber_evals = [cert.evaluator for cert in inst.fiber_certs]
    global_eval = inst.global_cert.evaluator

    def evaluate(point):
        base_window, payload = point
        out = []
        for k in range(n):
            t = k * N
            shifted = (WindowSeq(base_window.start - t, base_window.values), payload)
            rho = any(E.contains_point(base_window, shift=t) for E in pieces)
            branch = next(
                (
                    i
                    for i, W in enumerate(windows)
                    if W.contains_point(base_window, shift=t)
                ),
                None,
            )
            if branch is None or not rho:
                f_part = APEX
            else:
                f_part = cone_point(branch, 1, fiber_evals[branch](shifted))
            if rho:
                g_part = APEX
            else:
                g_part = cone_point("g", 1, global_eval(shifted))
            out.append((f_part, g_part))
        return tuple(out)

    fiber_target_dists = [cert.target_dist for cert in inst.fiber_certs]
    f_cone_dist = cone_distance(lambda branch: fiber_target_dists[branch])
    g_cone_dist = cone_distance(lambda branch: inst.global_cert.target_dist)

    def target_dist(a, b):
        return max(
            max(f_cone_dist(fa, fb), g_cone_dist(ga, gb))
            for (fa, ga), (fb, gb) in zip(a, b)
        )

    global_domain = inst.global_cert.domain

    def sample(rng):
        base_window = inst.sample_base(rng)
        _, payload = global_domain.sample(rng)
        return (base_window, payload)

    def dist(pq1, pq2):
        b1, u1 = pq1
        b2, u2 = pq2
        base_part = d_N(SYMBOL_METRIC, n * N, b1, b2)
        fiber_part = global_domain.dist((b1, u1), (b2, u2))
        return max(base_part, fiber_part)

    domain = MetricSpaceHandle(
        kind="product",
        description=f"base x fiber at horizon {n}x{N}",
        dist=dist,
        sample=sample,
    )
    base_obligations = tuple(
        r for cert in inst.fiber_certs for r in cert.obligations
    ) + tuple(inst.global_cert.obligations)
    return EpsEmbeddingCertificate(
        domain=domain,
        target_dim=target_dim,
        epsilon=eps,
        evaluator=evaluate,
        obligations=base_obligations + tuple(records),
        target_dist=target_dist,
    )
