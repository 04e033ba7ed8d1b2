"""Batch command-line frontend.

Every artifact is a JSON document {"kind", "recipe", "payload"} where the
payload is a pure function of the recipe: `verify` re-runs arithmetic checks
on every structural obligation it finds, then rebuilds the payload from the
recipe and requires byte-identical canonical JSON (sampled records re-run at
their recorded seeds). Exit codes: 0 success, 2 precondition or parse
failure, 3 obligation failure (with a witness file), 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .certificates import (
    FAILED,
    STRUCTURAL,
    DischargeRecord,
    check_certificate,
    recheck_structural,
)
from .complexes import (
    SimplicialComplex,
    barycentric_subdivide,
    dimension_buckets,
    full_subcomplex,
)
from .counterexample import (
    CSV_HEADER,
    CounterexampleParams,
    build_counterexample,
    fiber_dimension_certificate,
    mdim_report,
    nonzero_count_check,
)
from .errors import (
    BudgetExceededError,
    MeanDimError,
    ObligationFailedError,
    PreconditionError,
)
from .serialize import canonical_json, format_fraction, parse_fraction, to_jsonable
from .symbolic import CylinderSet, Sft, ocap_finite_N, ocap_limit, sbp_cover_refine
from .widthmaps import cube_width_map

SAMPLE_RESOLUTION = 64


def _rational(text: str) -> Fraction:
    try:
        return parse_fraction(text)
    except PreconditionError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


@dataclass(frozen=True)
class RunConfig:
    """A parsed invocation: subcommand plus its exact-rational parameters."""

    subcommand: str
    options: argparse.Namespace

    @classmethod
    def from_argv(cls, argv) -> "RunConfig":
        ns = _parser().parse_args(argv)
        return cls(subcommand=ns.command, options=ns)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meandim",
        description="width-reducing maps, embedding certificates, orbit capacity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cx = sub.add_parser("complex", help="simplicial complex utilities")
    cx_sub = cx.add_subparsers(dest="action", required=True)
    cx_info = cx_sub.add_parser("info")
    cx_info.add_argument("file")
    cx_div = cx_sub.add_parser("subdivide")
    cx_div.add_argument("file")
    cx_div.add_argument("--out")
    cx_buckets = cx_sub.add_parser("buckets")
    cx_buckets.add_argument("file")
    cx_buckets.add_argument("--m", type=int, required=True)

    gr = sub.add_parser("gromov", help="width maps on triangulated cubes")
    gr_sub = gr.add_subparsers(dest="action", required=True)
    gr_build = gr_sub.add_parser("build")
    gr_build.add_argument("--cube", type=int, required=True)
    gr_build.add_argument("--m", type=int, required=True)
    gr_build.add_argument("--eps", type=_rational, required=True)
    gr_build.add_argument("--mesh-scale", type=_rational, default=None)
    gr_build.add_argument("--out", required=True)
    gr_check = gr_sub.add_parser("fiber-check")
    gr_check.add_argument("map_file")
    gr_check.add_argument("--samples", type=int, default=10)
    gr_check.add_argument("--seed", type=int, default=0)
    gr_check.add_argument("--trials", type=int, default=1000)
    gr_check.add_argument("--eta", type=_rational, default=None)
    gr_check.add_argument("--out")

    oc = sub.add_parser("ocap", help="orbit capacity of a cylinder set")
    oc.add_argument("--sft", required=True)
    oc.add_argument("--set", dest="set_file", required=True)
    group = oc.add_mutually_exclusive_group(required=True)
    group.add_argument("--N", type=int)
    group.add_argument("--limit", action="store_true")
    oc.add_argument("--out")

    sb = sub.add_parser("sbp", help="disjoint refinement of clopen covers")
    sb_sub = sb.add_subparsers(dest="action", required=True)
    sb_ref = sb_sub.add_parser("refine")
    sb_ref.add_argument("--sft", required=True)
    sb_ref.add_argument("--cover", nargs="+", required=True)
    sb_ref.add_argument("--delta", type=_rational, required=True)
    sb_ref.add_argument("--out")

    cx2 = sub.add_parser("counterexample", help="the factor-map construction")
    cx2_sub = cx2.add_subparsers(dest="action", required=True)
    for name in ("build", "check-counts", "fiber-cert", "report"):
        p = cx2_sub.add_parser(name)
        p.add_argument("--delta", type=_rational, required=True)
        p.add_argument("--eps", type=_rational, nargs="+", required=True)
        p.add_argument("--N", type=int, nargs="+", required=True)
        p.add_argument("--samples", type=int, default=20)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=200)
        p.add_argument("--eta", type=_rational, default=None)
        p.add_argument("--out")

    ver = sub.add_parser("verify", help="re-check a serialized artifact")
    ver.add_argument("file")

    return parser


# ---------------------------------------------------------------------------
# payload builders: the verifier rebuilds through these same functions
# ---------------------------------------------------------------------------


def _sample_cube_point(rng, dims):
    return tuple(
        Fraction(rng.randint(0, SAMPLE_RESOLUTION), SAMPLE_RESOLUTION)
        for _ in range(dims)
    )


def _certificate_payload(cert, record=None) -> dict:
    data = cert.to_json_dict()
    if record is not None:
        data["obligations"].append(record.to_json_dict())
    return data


def _payload_cube_width_map(recipe: dict) -> dict:
    wm = cube_width_map(
        int(recipe["n"]),
        int(recipe["m"]),
        parse_fraction(recipe["eps"]),
        mesh_scale=parse_fraction(recipe["mesh_scale"]) if recipe.get("mesh_scale") else None,
    )
    return wm.to_json_dict()


def _payload_gromov_fiber_batch(recipe: dict) -> dict:
    wm = cube_width_map(
        int(recipe["n"]),
        int(recipe["m"]),
        parse_fraction(recipe["eps"]),
        mesh_scale=parse_fraction(recipe["mesh_scale"]) if recipe.get("mesh_scale") else None,
    )
    rng = random.Random(int(recipe["seed"]))
    certs = []
    for _ in range(int(recipe["samples"])):
        p = _sample_cube_point(rng, wm.m - 1)
        cert = wm.fiber_certificate(p)
        eta = parse_fraction(recipe["eta"]) if recipe.get("eta") else None
        record = check_certificate(
            cert, trials=int(recipe["trials"]), seed=rng.randint(0, 2**32), eta=eta
        )
        entry = _certificate_payload(cert, record)
        entry["p"] = [format_fraction(c) for c in p]
        certs.append(entry)
    return {
        "fiber_bound": format_fraction(wm.fiber_bound),
        "certificates": certs,
    }


def _payload_ocap(recipe: dict) -> dict:
    sft = Sft.from_json_dict(recipe["sft"])
    A = CylinderSet.from_constraint_json(sft, recipe["set"])
    if recipe["mode"] == "limit":
        result = ocap_limit(sft, A)
        return {
            "value": format_fraction(result.value),
            "witness": list(result.witness),
            "graph_size": result.graph_size,
        }
    value = ocap_finite_N(sft, A, int(recipe["N"]))
    return {"value": format_fraction(value), "N": int(recipe["N"])}


def _payload_sbp(recipe: dict) -> dict:
    sft = Sft.from_json_dict(recipe["sft"])
    cover = [CylinderSet.from_constraint_json(sft, c) for c in recipe["cover"]]
    pieces, complement, report = sbp_cover_refine(
        sft, cover, parse_fraction(recipe["delta"])
    )
    return {
        "pieces": [p.to_json() for p in pieces],
        "complement": complement.to_json(),
        "complement_ocap": format_fraction(report.value),
        "witness": list(report.witness),
    }


def _payload_counterexample_build(recipe: dict) -> dict:
    params = CounterexampleParams.derive(
        parse_fraction(recipe["delta"]),
        parse_fraction(recipe["eps"]),
        int(recipe["N"]),
        int(recipe["seed"]),
    )
    inst = build_counterexample(params)
    return {
        "params": params.to_json_dict(),
        "window": [inst.window_lo, inst.window_hi],
        "checks": [[name, value, kind] for name, value, kind in params.report()],
    }


def _payload_count_report(recipe: dict) -> dict:
    params = CounterexampleParams.derive(
        parse_fraction(recipe["delta"]),
        parse_fraction(recipe["eps"]),
        int(recipe["N"]),
        int(recipe["seed"]),
    )
    inst = build_counterexample(params)
    report = nonzero_count_check(
        inst, int(recipe["samples"]), int(recipe["N"]), int(recipe["seed"])
    )
    payload = report.to_json_dict()
    payload["params"] = params.to_json_dict()
    return payload


def _payload_fiber_batch(recipe: dict) -> dict:
    params = CounterexampleParams.derive(
        parse_fraction(recipe["delta"]),
        parse_fraction(recipe["eps"]),
        int(recipe["N"]),
        int(recipe["seed"]),
    )
    inst = build_counterexample(params)
    rng = random.Random(int(recipe["seed"]))
    bound = Fraction(
        int(recipe["N"]) + 2 * params.margin + 2 * params.L_prime, params.m
    )
    certs = []
    for _ in range(int(recipe["samples"])):
        state = inst.sample_state(rng)
        cert = fiber_dimension_certificate(inst, state, int(recipe["N"]))
        eta = parse_fraction(recipe["eta"]) if recipe.get("eta") else None
        record = check_certificate(
            cert, trials=int(recipe["trials"]), seed=rng.randint(0, 2**32), eta=eta
        )
        entry = _certificate_payload(cert, record)
        entry["residue"] = state[1]
        entry["below_bound"] = bool(Fraction(cert.target_dim) < bound)
        certs.append(entry)
    return {"bound": format_fraction(bound), "certificates": certs}


def _payload_mdim_report(recipe: dict) -> dict:
    rows = mdim_report(
        parse_fraction(recipe["delta"]),
        [int(n) for n in recipe["N"]],
        [parse_fraction(e) for e in recipe["eps"]],
        samples=int(recipe["samples"]),
        seed=int(recipe["seed"]),
    )
    return {
        "header": CSV_HEADER,
        "rows": [row.to_csv() for row in rows],
    }


PAYLOAD_BUILDERS = {
    "cube-width-map": _payload_cube_width_map,
    "gromov-fiber-batch": _payload_gromov_fiber_batch,
    "ocap-report": _payload_ocap,
    "sbp-refine": _payload_sbp,
    "counterexample-instance": _payload_counterexample_build,
    "count-report": _payload_count_report,
    "counterexample-fiber-batch": _payload_fiber_batch,
    "mdim-report": _payload_mdim_report,
}


def write_artifact(path: str, kind: str, recipe: dict) -> dict:
    payload = PAYLOAD_BUILDERS[kind](recipe)
    artifact = {"kind": kind, "recipe": recipe, "payload": payload}
    Path(path).write_text(canonical_json(artifact) + "\n")
    return artifact


def _raise_on_failed_obligations(artifact: dict):
    for entry in _iter_obligation_dicts(artifact.get("payload")):
        if entry.get("status") == FAILED:
            raise ObligationFailedError(DischargeRecord.from_json_dict(entry))


def _iter_obligation_dicts(node):
    if isinstance(node, dict):
        for key, value in node.items():
            if key == "obligations" and isinstance(value, list):
                for entry in value:
                    yield entry
            else:
                yield from _iter_obligation_dicts(value)
    elif isinstance(node, list):
        for entry in node:
            yield from _iter_obligation_dicts(entry)


def verify_artifact(path: str):
    """Re-discharge structural obligations arithmetically, then rebuild the
    payload from the recipe and require byte-identical canonical JSON."""
    try:
        artifact = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise PreconditionError(f"cannot read artifact: {exc}") from exc
    kind = artifact.get("kind")
    if kind not in PAYLOAD_BUILDERS:
        raise PreconditionError(f"unknown artifact kind {kind!r}")
    for entry in _iter_obligation_dicts(artifact.get("payload")):
        record = DischargeRecord.from_json_dict(entry)
        if record.kind == STRUCTURAL and not recheck_structural(record):
            raise ObligationFailedError(record)
        if record.status == FAILED:
            raise ObligationFailedError(record)
    rebuilt = PAYLOAD_BUILDERS[kind](artifact["recipe"])
    original = canonical_json(artifact["payload"])
    recomputed = canonical_json(rebuilt)
    if original != recomputed:
        raise ObligationFailedError(
            DischargeRecord(
                name="artifact-reproduction",
                kind="STRUCTURAL",
                status=FAILED,
                data=(("path", str(path)),),
                witness=("payload does not match recompute from recipe",),
            )
        )


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------


def _load_complex(path: str) -> SimplicialComplex:
    return SimplicialComplex.from_json_dict(json.loads(Path(path).read_text()))


def _cmd_complex(ns) -> int:
    if ns.action == "info":
        K = _load_complex(ns.file)
        print(f"vertices: {len(K.vertices)}")
        print(f"simplices: {len(K.simplices)}")
        print(f"dimension: {K.dim}")
        return 0
    if ns.action == "subdivide":
        K = barycentric_subdivide(_load_complex(ns.file))
        text = json.dumps(K.to_json_dict(), sort_keys=True) + "\n"
        if ns.out:
            Path(ns.out).write_text(text)
        else:
            sys.stdout.write(text)
        return 0
    K = _load_complex(ns.file)
    P = dimension_buckets(K, ns.m)
    Kp = barycentric_subdivide(K)
    for i, block in enumerate(P.blocks, start=1):
        print(f"bucket {i}: {len(block)} vertices, dim {full_subcomplex(Kp, block).dim}")
    return 0


def _cmd_gromov(ns) -> int:
    if ns.action == "build":
        recipe = {
            "n": ns.cube,
            "m": ns.m,
            "eps": format_fraction(ns.eps),
            "mesh_scale": format_fraction(ns.mesh_scale) if ns.mesh_scale else None,
        }
        artifact = write_artifact(ns.out, "cube-width-map", recipe)
        print(f"wrote {ns.out}: grid {artifact['payload']['grid']}, "
              f"fiber bound {artifact['payload']['fiber_bound']}")
        return 0
    map_artifact = json.loads(Path(ns.map_file).read_text())
    if map_artifact.get("kind") != "cube-width-map":
        raise PreconditionError("fiber-check expects a cube-width-map artifact")
    recipe = dict(map_artifact["recipe"])
    recipe.update(
        samples=ns.samples,
        seed=ns.seed,
        trials=ns.trials,
        eta=format_fraction(ns.eta) if ns.eta else None,
    )
    out = ns.out or (ns.map_file + ".fibers.json")
    artifact = write_artifact(out, "gromov-fiber-batch", recipe)
    dims = [c["target_dim"] for c in artifact["payload"]["certificates"]]
    print(f"wrote {out}: {len(dims)} fibers, max dim {max(dims)}, "
          f"bound {artifact['payload']['fiber_bound']}")
    _raise_on_failed_obligations(artifact)
    return 0


def _cmd_ocap(ns) -> int:
    sft_data = json.loads(Path(ns.sft).read_text())
    set_data = json.loads(Path(ns.set_file).read_text())
    recipe = {
        "sft": sft_data,
        "set": set_data,
        "mode": "limit" if ns.limit else "finite",
        "N": ns.N,
    }
    payload = _payload_ocap(recipe)
    print(payload["value"])
    if ns.out:
        artifact = {"kind": "ocap-report", "recipe": recipe, "payload": payload}
        Path(ns.out).write_text(canonical_json(artifact) + "\n")
    return 0


def _cmd_sbp(ns) -> int:
    recipe = {
        "sft": json.loads(Path(ns.sft).read_text()),
        "cover": [json.loads(Path(c).read_text()) for c in ns.cover],
        "delta": format_fraction(ns.delta),
    }
    payload = _payload_sbp(recipe)
    for i, piece in enumerate(payload["pieces"], start=1):
        print(f"piece {i}: offset {piece['offset']}, {len(piece['words'])} words")
    print(f"complement ocap: {payload['complement_ocap']}")
    if ns.out:
        artifact = {"kind": "sbp-refine", "recipe": recipe, "payload": payload}
        Path(ns.out).write_text(canonical_json(artifact) + "\n")
    return 0


def _cmd_counterexample(ns) -> int:
    base = {
        "delta": format_fraction(ns.delta),
        "samples": ns.samples,
        "seed": ns.seed,
        "trials": ns.trials,
        "eta": format_fraction(ns.eta) if ns.eta else None,
    }
    if ns.action == "report":
        recipe = dict(
            base,
            eps=[format_fraction(e) for e in ns.eps],
            N=[int(n) for n in ns.N],
        )
        payload = _payload_mdim_report(recipe)
        print(payload["header"])
        for row in payload["rows"]:
            print(row)
        if ns.out:
            artifact = {"kind": "mdim-report", "recipe": recipe, "payload": payload}
            Path(ns.out).write_text(canonical_json(artifact) + "\n")
        return 0
    if len(ns.eps) != 1 or len(ns.N) != 1:
        raise PreconditionError(f"{ns.action} takes exactly one --eps and one --N")
    recipe = dict(base, eps=format_fraction(ns.eps[0]), N=int(ns.N[0]))
    kinds = {
        "build": "counterexample-instance",
        "check-counts": "count-report",
        "fiber-cert": "counterexample-fiber-batch",
    }
    kind = kinds[ns.action]
    out = ns.out or f"counterexample-{ns.action}.json"
    artifact = write_artifact(out, kind, recipe)
    payload = artifact["payload"]
    if kind == "count-report":
        print(
            f"max nonzero count {payload['max_count']} < bound {payload['bound']} "
            f"(block form {payload['block_bound']}); violations: {payload['violations']}"
        )
        if payload["violations"]:
            raise ObligationFailedError(
                DischargeRecord(
                    "nonzero-count-bound", "STRUCTURAL", FAILED,
                    (("max_count", str(payload["max_count"])),),
                    witness=("count bound violated",),
                )
            )
    elif kind == "counterexample-fiber-batch":
        dims = [c["target_dim"] for c in payload["certificates"]]
        print(f"{len(dims)} fiber certificates, max dim {max(dims)}, bound {payload['bound']}")
        if not all(c["below_bound"] for c in payload["certificates"]):
            raise ObligationFailedError(
                DischargeRecord(
                    "dimension-bookkeeping", "STRUCTURAL", FAILED,
                    (("bound", payload["bound"]),),
                    witness=("fiber dimension bound violated",),
                )
            )
        _raise_on_failed_obligations(artifact)
    else:
        print(f"wrote {out}")
        for name, value, kind_tag in (
            (row[0], row[1], row[2]) for row in payload["checks"]
        ):
            print(f"  [{kind_tag}] {name}: {value}")
    return 0


def _cmd_verify(ns) -> int:
    verify_artifact(ns.file)
    print(f"{ns.file}: verified")
    return 0


def run(config: RunConfig) -> int:
    ns = config.options
    handlers = {
        "complex": _cmd_complex,
        "gromov": _cmd_gromov,
        "ocap": _cmd_ocap,
        "sbp": _cmd_sbp,
        "counterexample": _cmd_counterexample,
        "verify": _cmd_verify,
    }
    return handlers[config.subcommand](ns)


def _write_witness(exc: ObligationFailedError):
    record = exc.record
    witness_path = Path("meandim-witness.json")
    witness_path.write_text(
        canonical_json(
            {
                "obligation": record.name,
                "status": record.status,
                "data": {k: v for k, v in record.data},
                "witness": to_jsonable(record.witness),
            }
        )
        + "\n"
    )
    return witness_path


def main(argv=None) -> int:
    try:
        config = RunConfig.from_argv(argv)
        return run(config)
    except ObligationFailedError as exc:
        path = _write_witness(exc)
        print(f"obligation failed: {exc.record.name} (witness in {path})", file=sys.stderr)
        return 3
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 4
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MeanDimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
