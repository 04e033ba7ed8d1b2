"""Tests for the certificate algebra."""

import random
from fractions import Fraction

import pytest

from meandim.certificates import (
    FAILED,
    SAMPLED_ONLY,
    DischargeRecord,
    MetricSpaceHandle,
    chain_fiber_certificate,
    check_certificate,
    finite_cloud_handle,
    flat_linf,
    identity_certificate,
    one_point_handle,
    product_certificate,
    pullback_certificate,
    recheck_structural,
    relax_scale,
    sample_fiber_check,
    spot_check_metric,
    structural_record,
)
from meandim.errors import PreconditionError

F = Fraction


def grid_cloud(side=5, dim=2, scale=F(1, 4)):
    pts = [()]
    for _ in range(dim):
        pts = [p + (i * scale,) for p in pts for i in range(side)]
    return finite_cloud_handle(pts)


class TestProduct:
    def test_zero_dims(self):
        c1 = identity_certificate(grid_cloud(), 0, F(1, 2))
        c2 = identity_certificate(grid_cloud(), 0, F(1, 2))
        assert product_certificate(c1, c2).target_dim == 0

    def test_dims_add(self):
        c1 = identity_certificate(grid_cloud(), 1, F(1, 2))
        c2 = identity_certificate(grid_cloud(), 2, F(1, 2))
        assert product_certificate(c1, c2).target_dim == 3

    def test_one_point_factor_keeps_dim(self):
        c = identity_certificate(grid_cloud(), 3, F(1, 2))
        p = identity_certificate(one_point_handle(), 0, F(1, 2))
        assert product_certificate(c, p).target_dim == 3
        assert product_certificate(p, c).target_dim == 3

    def test_mismatched_epsilon(self):
        c1 = identity_certificate(grid_cloud(), 1, F(1, 2))
        c2 = identity_certificate(grid_cloud(), 1, F(1, 3))
        with pytest.raises(PreconditionError, match="mismatched epsilon"):
            product_certificate(c1, c2)

    def test_associativity_of_obligations(self):
        c1 = identity_certificate(grid_cloud(), 1, F(1, 2))
        c2 = identity_certificate(grid_cloud(), 2, F(1, 2))
        c3 = identity_certificate(grid_cloud(), 3, F(1, 2))
        left = product_certificate(product_certificate(c1, c2), c3)
        right = product_certificate(c1, product_certificate(c2, c3))
        assert left.target_dim == right.target_dim == 6
        assert sorted(r.to_json_dict()["data"].get("factors", "") for r in left.obligations) == sorted(
            r.to_json_dict()["data"].get("factors", "") for r in right.obligations
        )
        assert sorted(r.name for r in left.obligations) == sorted(
            r.name for r in right.obligations
        )

    def test_product_evaluator_and_metric(self):
        c1 = identity_certificate(grid_cloud(), 1, F(1, 2))
        c2 = identity_certificate(grid_cloud(), 1, F(1, 2))
        prod = product_certificate(c1, c2)
        rng = random.Random(0)
        x = prod.domain.sample(rng)
        y = prod.domain.sample(rng)
        assert prod.evaluator(x) == x
        assert prod.domain.dist(x, y) == max(
            flat_linf(x[0], y[0]), flat_linf(x[1], y[1])
        )


class TestPullback:
    def test_identity_pullback(self):
        c = identity_certificate(grid_cloud(), 2, F(1, 2))
        pulled = pullback_certificate(
            c, c.domain, lambda x: x, witness="isometric-inclusion"
        )
        assert pulled.target_dim == c.target_dim
        assert pulled.epsilon == c.epsilon

    def test_isometric_slice_into_product(self):
        c = identity_certificate(grid_cloud(), 2, F(1, 2))
        prod = product_certificate(c, identity_certificate(one_point_handle(), 0, F(1, 2)))
        slice_domain = grid_cloud()
        pulled = pullback_certificate(
            prod, slice_domain, lambda x: (x, ()), witness="isometric-inclusion"
        )
        assert pulled.target_dim == prod.target_dim
        assert pulled.epsilon == prod.epsilon

    def test_shrinking_map_fails_sampled_witness(self):
        c = identity_certificate(grid_cloud(), 2, F(1, 2))
        halved = pullback_certificate(
            c, grid_cloud(), lambda x: tuple(v / 2 for v in x), trials=500, seed=1
        )
        failed = [r for r in halved.obligations if r.status == FAILED]
        assert len(failed) == 1
        assert failed[0].witness is not None

    def test_sampled_witness_passes_for_true_expansion(self):
        c = identity_certificate(grid_cloud(), 2, F(1, 2))
        doubled_domain = grid_cloud()
        pulled = pullback_certificate(
            c, doubled_domain, lambda x: tuple(2 * v for v in x), trials=300, seed=2
        )
        assert all(r.status != FAILED for r in pulled.obligations)


class TestChain:
    def make_block(self, dim, eps=F(1, 2)):
        return identity_certificate(grid_cloud(dim=1), dim, eps)

    @staticmethod
    def shift(x, t):
        return x

    def test_single_block(self):
        block = self.make_block(2)
        cert = chain_fiber_certificate(
            grid_cloud(dim=1), self.shift, [(block, 8)], [0], 8
        )
        assert cert.target_dim == block.target_dim

    def test_two_blocks(self):
        blocks = [(self.make_block(1), 4), (self.make_block(1), 4)]
        cert = chain_fiber_certificate(
            grid_cloud(dim=1), self.shift, blocks, [0, 1], 8
        )
        assert cert.target_dim == 2

    def test_inconsistent_offsets(self):
        blocks = [(self.make_block(1), 4)]
        with pytest.raises(PreconditionError, match="inconsistent"):
            chain_fiber_certificate(grid_cloud(dim=1), self.shift, blocks, [0, 0, 0], 8)

    def test_overrun_bookkeeping(self):
        # itinerary may overshoot N by less than the longest block
        rng = random.Random(11)
        for _ in range(100):
            k = rng.randint(1, 5)
            blocks = [
                (self.make_block(rng.randint(0, 3)), rng.randint(1, 6))
                for _ in range(k)
            ]
            total = sum(length for _, length in blocks)
            longest = max(length for _, length in blocks)
            N = rng.randint(max(1, total - blocks[-1][1] + 1), total)
            cert = chain_fiber_certificate(
                grid_cloud(dim=1), self.shift, blocks, list(range(k)), N
            )
            assert cert.target_dim == sum(b.target_dim for b, _ in blocks)
            a = max(F(b.target_dim + 1, length) for b, length in blocks)
            assert cert.target_dim < a * (N + longest)


class TestSampleFiberCheck:
    def test_identity_never_violates(self):
        record = sample_fiber_check(
            lambda x: x, grid_cloud(), F(1, 2), trials=500, seed=3
        )
        assert record.status == SAMPLED_ONLY
        assert record.data_dict["violations"] == "0"

    def test_constant_map_on_wide_domain_fails(self):
        record = sample_fiber_check(
            lambda x: (F(0),), grid_cloud(), F(1, 2), trials=500, seed=4
        )
        assert record.status == FAILED
        assert record.witness is not None

    def test_structurally_discharged_certificate_passes(self):
        cert = identity_certificate(grid_cloud(), 2, F(1, 2))
        assert cert.all_structural_discharged
        record = check_certificate(cert, trials=400, seed=5)
        assert record.status == SAMPLED_ONLY

    def test_determinism(self):
        a = sample_fiber_check(lambda x: x, grid_cloud(), F(1, 2), trials=200, seed=9)
        b = sample_fiber_check(lambda x: x, grid_cloud(), F(1, 2), trials=200, seed=9)
        assert a == b

    def test_thread_count_does_not_change_result(self):
        a = sample_fiber_check(
            lambda x: x, grid_cloud(), F(1, 2), trials=200, seed=9, threads=4
        )
        b = sample_fiber_check(lambda x: x, grid_cloud(), F(1, 2), trials=200, seed=9)
        assert a == b


class TestRecords:
    def test_relax_scale(self):
        cert = identity_certificate(grid_cloud(), 1, F(1, 4))
        relaxed = relax_scale(cert, F(1, 2))
        assert relaxed.epsilon == F(1, 2)
        assert relaxed.target_dim == cert.target_dim
        with pytest.raises(PreconditionError):
            relax_scale(cert, F(1, 8))

    def test_failed_record_requires_witness(self):
        with pytest.raises(PreconditionError):
            DischargeRecord("x", "SAMPLED", "failed")

    def test_recheck_structural_roundtrip(self):
        record = structural_record(
            "star-mesh-below-scale", mesh=F(2, 17), scale=F(1, 8)
        )
        assert recheck_structural(record)
        tampered = DischargeRecord(
            record.name,
            record.kind,
            record.status,
            tuple(
                (k, "1/3") if k == "mesh" else (k, v) for k, v in record.data
            ),
        )
        assert not recheck_structural(tampered)

    def test_unknown_structural_name_fails_recheck(self):
        record = structural_record("made-up-fact", value="1")
        assert not recheck_structural(record)

    def test_json_roundtrip(self):
        record = structural_record(
            "product-dims-additive", factors="1;2;3", total="6"
        )
        back = DischargeRecord.from_json_dict(record.to_json_dict())
        assert back == record
        assert recheck_structural(back)


def test_metric_spot_check():
    spot_check_metric(grid_cloud(), trials=16, seed=0)
    bad = MetricSpaceHandle(
        kind="broken",
        description="asymmetric",
        dist=lambda a, b: F(1) if a < b else F(0),
        sample=lambda rng: (F(rng.randrange(3)),),
    )
    with pytest.raises(PreconditionError, match="metric axioms"):
        spot_check_metric(bad, trials=64, seed=1)
