"""Command-line front end.

Every command prints one JSON report (sorted keys, rationals as ``"p/q"``)
and exits with 0 on success or a positive verdict, 1 on a violation or a
failed precondition (the certificate is part of the report) and 2 on bad
input or an exceeded resource limit.
"""

from __future__ import annotations

import argparse
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import distance, diversity, domination, realtree, tightspan
from .distance import Certificate, DistanceSpace
from .errors import InputError, PreconditionError, ResourceLimitError, TspanError
from .io import dumps, parse_distance, parse_diversity, parse_diversity_table, parse_vector, read_source

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2


def _pair(text: str) -> tuple[str, str]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2 or not all(parts):
        raise InputError(f"expected a pair 'a,b', got {text!r}")
    return parts[0], parts[1]


def _rational_arg(text: str) -> Fraction:
    (value,) = parse_vector(text, 1)
    return value


def _load_distance(path: str) -> tuple[DistanceSpace, str]:
    text, digest = read_source(path)
    return parse_distance(text), digest


def _point_dict(d: DistanceSpace, f) -> dict:
    return {label: v for label, v in zip(d.labels, f)}


def _certificate_code(cert: Certificate) -> int:
    return EXIT_OK if cert.ok else EXIT_VIOLATION


# --------------------------------------------------------------------------
# check


_CHECKS = {
    "metric": distance.check_metric,
    "4pt": distance.check_four_point,
    "ext4pt": distance.check_extended_four_point,
}
_TERMS = {
    "metric": (distance.triangle_terms, 3, distance.METRIC_VIOLATION),
    "4pt": (distance.four_point_terms, 4, distance.FOURPOINT_VIOLATION),
    "ext4pt": (distance.ext_four_point_terms, 4, distance.EXT_FOURPOINT_VIOLATION),
}


def cmd_check(args) -> tuple[dict, int, str]:
    text, digest = read_source(args.path)
    if args.kind == "diversity":
        if args.witness:
            raise InputError("--witness is not supported for --kind diversity")
        elements, values = parse_diversity_table(text)
        cert = diversity.check_diversity_axioms(elements, values)
        return {"kind": args.kind, "certificate": cert}, _certificate_code(cert), digest
    d = parse_distance(text)
    if args.witness:
        terms, arity, kind = _TERMS[args.kind]
        names = [w.strip() for w in args.witness.split(",")]
        if len(names) != arity:
            raise InputError(f"--witness for {args.kind} needs {arity} labels")
        lhs, rhs = terms(d, *names)
        cert = Certificate(kind, tuple(names), lhs, rhs) if lhs > rhs else distance.OK_CERTIFICATE
        result = {"kind": args.kind, "witness": names, "lhs": lhs, "rhs": rhs, "certificate": cert}
        return result, _certificate_code(cert), digest
    cert = _CHECKS[args.kind](d)
    return {"kind": args.kind, "certificate": cert}, _certificate_code(cert), digest


# --------------------------------------------------------------------------
# tightspan


def cmd_tightspan(args) -> tuple[dict, int, str]:
    d, digest = _load_distance(args.path)
    op = args.op
    if op == "member":
        f = tightspan.as_point(d, parse_vector(args.point, d.n))
        in_pd = tightspan.in_Pd(d, f)
        in_td = in_pd and tightspan.in_Td(d, f)
        result = {"point": _point_dict(d, f), "in_Pd": in_pd, "in_Td": in_td}
        bad = tightspan.pd_violation(d, f)
        if bad is not None:
            result["violated_pair"] = list(bad)
        else:
            result["f_sharp"] = _point_dict(d, tightspan.f_sharp(d, f))
        return result, EXIT_OK if in_td else EXIT_VIOLATION, digest
    if op == "retract":
        f0 = parse_vector(args.point, d.n)
        if args.method == "lp":
            g = tightspan.retract_to_Td(d, f0).values
            result = {"method": "lp", "exact": True}
        else:
            tol = _rational_arg(args.tol) if args.tol else tightspan.DEFAULT_TOL
            res = tightspan.contraction_retract(d, f0, tol=tol)
            g = res.point
            result = {"method": "contraction", "exact": res.exact, "iterations": res.iterations}
        result.update(start=_point_dict(d, f0), point=_point_dict(d, g), vector=list(g))
        return result, EXIT_OK, digest
    if op == "geodesic":
        x, y = _pair(args.pair)
        t = _rational_arg(args.t)
        p = tightspan.geodesic_point(d, x, y, t, method=args.method)
        result = {"pair": [x, y], "t": t, "point": _point_dict(d, p.values), "vector": list(p.values)}
        return result, EXIT_OK, digest
    if op == "kappa":
        if args.point:
            f = parse_vector(args.point, d.n)
            g = tightspan.nearest_kappa_point(d, f, args.label)
            result = {
                "label": args.label,
                "point": _point_dict(d, f),
                "nearest": _point_dict(d, g.values),
                "distance": tightspan.d_inf(f, g.values),
            }
        else:
            gates = tightspan.kappa_gates(d, args.label)
            i = d.index(args.label)
            toward = [y for j, y in enumerate(d.labels) if d.table[i][j] > 0]
            result = {
                "label": args.label,
                "gates": {y: _point_dict(d, g.values) for y, g in zip(toward, gates)},
            }
        return result, EXIT_OK, digest
    if op == "dist":
        if args.pair:
            x, y = _pair(args.pair)
            w = tightspan.verify_kappa_distance(d, x, y)
            result = {
                "pair": [x, y],
                "distance": w.distance,
                "d": d(x, y),
                "witness_x": _point_dict(d, w.f),
                "witness_y": _point_dict(d, w.g),
            }
            return result, EXIT_OK, digest
        if not (args.point and args.other):
            raise InputError("dist needs --pair or both --point and --other")
        f = parse_vector(args.point, d.n)
        g = parse_vector(args.other, d.n)
        result = {"distance": tightspan.d_inf(f, g)}
        if tightspan.in_Td(d, f) and tightspan.in_Td(d, g):
            result["distance_by_formula"] = tightspan.d_inf_by_formula(d, f, g)
        return result, EXIT_OK, digest
    raise InputError(f"unknown tightspan operation {op!r}")


# --------------------------------------------------------------------------
# subtree


def cmd_subtree(args) -> tuple[dict, int, str]:
    d, digest = _load_distance(args.path)
    cert = distance.check_extended_four_point(d)
    if not cert.ok:
        return {"certificate": cert}, EXIT_VIOLATION, digest
    rep = realtree.build_subtree_representation(d, rule=args.rule)
    verification = realtree.verify_subtree_representation(rep, d)
    data = realtree.representation_to_json(rep)
    result = {"certificate": cert, "verification": verification, "newick": realtree.to_newick(rep)}
    if args.out:
        Path(args.out).write_text(dumps(data), encoding="utf-8")
        result["written"] = str(args.out)
    else:
        result["representation"] = data
    return result, _certificate_code(verification), digest


# --------------------------------------------------------------------------
# dominate


def _load_dominating(args, d: DistanceSpace) -> domination.DominatingMetric:
    if not args.metric:
        return domination.some_dominating_metric(d)
    rho, _ = _load_distance(args.metric)
    if rho.labels != d.labels:
        raise InputError("--metric must use the same labels, in the same order, as the distance file")
    return domination.DominatingMetric(rho, d)


def cmd_dominate(args) -> tuple[dict, int, str]:
    d, digest = _load_distance(args.path)
    op = args.op
    if op == "any":
        rho = domination.some_dominating_metric(d)
        return {"metric": rho.metric}, EXIT_OK, digest
    if op == "pin":
        if not args.pair:
            raise InputError("pin needs --pair")
        x, y = _pair(args.pair)
        p = _load_dominating(args, d)
        rho = domination.pin_pair(p, x, y, force=args.force)
        return {"pair": [x, y], "metric": rho.metric, "unchanged": rho.metric == p.metric}, EXIT_OK, digest
    if op == "minimize":
        order = None
        if args.order:
            order = [_pair(p) for p in args.order.split(";") if p.strip()]
        rho = domination.minimal_dominating_metric(d, order)
        smaller = domination.smaller_dominating_metric(rho)
        result = {"metric": rho.metric, "minimal": smaller is None}
        return result, EXIT_OK if smaller is None else EXIT_VIOLATION, digest
    if op == "verify":
        rho = _load_dominating(args, d)
        smaller = domination.smaller_dominating_metric(rho)
        result = {"minimal": smaller is None}
        if smaller is not None:
            result["smaller"] = smaller
        return result, EXIT_OK if smaller is None else EXIT_VIOLATION, digest
    if op == "embed":
        rho = _load_dominating(args, d) if args.metric else domination.minimal_dominating_metric(d)
        emb = domination.embed_minimal_metric(d, rho)
        result = {
            "metric": rho.metric,
            "exact": emb.exact,
            "points": {x: _point_dict(d, f) for x, f in emb.points.items()},
        }
        return result, EXIT_OK, digest
    raise InputError(f"unknown dominate operation {op!r}")


# --------------------------------------------------------------------------
# diversity


def cmd_diversity(args) -> tuple[dict, int, str]:
    text, digest = read_source(args.path)
    delta = parse_diversity(text)
    op = args.op
    if op == "ddelta":
        return {"d_delta": diversity.d_delta(delta)}, EXIT_OK, digest
    if op == "arboreal":
        cert = diversity.is_arboreal(delta)
        return {"arboreal": cert.ok, "certificate": cert}, _certificate_code(cert), digest
    if op == "phylo":
        res = diversity.is_phylogenetic(delta)
        result = {"phylogenetic": res.verdict}
        if res.witness is not None:
            result.update(witness=list(res.witness), delta_value=res.delta_value, hull_value=res.hull_value)
        if res.certificate is not None:
            result["certificate"] = res.certificate
        if res.tree is not None:
            result["tree"] = [[u, v, l] for u, v, l in res.tree.edges]
            result["anchors"] = dict(sorted(res.tree.anchors.items()))
        return result, EXIT_OK if res.verdict else EXIT_VIOLATION, digest
    if op == "nice":
        res = diversity.check_nice(delta, method=args.method)
        result = {"nice": res.P_eq_P2}
        if not res.P_eq_P2:
            result.update(
                collection=list(res.collection),
                lhs=res.lhs,
                rhs=res.rhs,
                witness={delta.subset_label(m): v for m, v in enumerate(res.witness) if m},
            )
        return result, EXIT_OK if res.P_eq_P2 else EXIT_VIOLATION, digest
    if op == "embed":
        D = diversity.d_delta(delta)
        points = {}
        for x in delta.elements:
            g = diversity.g_map(delta, x)
            points[x] = _point_dict(D, diversity.embed_into_TD(delta, g))
        return {"labels": list(D.labels), "points": points}, EXIT_OK, digest
    raise InputError(f"unknown diversity operation {op!r}")


# --------------------------------------------------------------------------
# fuzz


def _fuzz_subtree(rng: random.Random, case: int) -> dict | None:
    seed = rng.getrandbits(64)
    n_points = rng.randint(1, 6)
    size = rng.randint(0, 20)
    d, _ = realtree.random_subtree_distance(seed, n_points, size)
    cert = distance.check_extended_four_point(d)
    if not cert.ok:
        return {"case": case, "seed": seed, "stage": "ext4pt", "certificate": cert}
    rep = realtree.build_subtree_representation(d)
    back = realtree.representation_from_json(realtree.representation_to_json(rep))
    ver = realtree.verify_subtree_representation(back, d)
    if not ver.ok:
        return {"case": case, "seed": seed, "stage": "roundtrip", "certificate": ver}
    return None


def _fuzz_metric(rng: random.Random, case: int) -> dict | None:
    d = distance.random_metric(rng, rng.randint(1, 7))
    four = distance.check_four_point(d).ok
    ext = distance.check_extended_four_point(d).ok
    if four != ext:
        return {"case": case, "stage": "agreement", "four_point": four, "ext_four_point": ext, "d": d}
    return None


def _fuzz_diversity(rng: random.Random, case: int) -> dict | None:
    T = realtree.random_weighted_tree(rng, rng.randint(1, 8))
    # distinct vertices: two labels on one vertex would give a zero pair value
    verts = rng.sample(T.vertices, min(len(T.vertices), rng.randint(1, 5)))
    placement = dict(zip(distance.default_labels(len(verts)), verts))
    delta = diversity.phylogenetic_diversity(T, placement)
    arb = diversity.is_arboreal(delta)
    if not arb.ok:
        return {"case": case, "stage": "arboreal", "certificate": arb}
    phylo = diversity.is_phylogenetic(delta)
    if not phylo.verdict:
        return {"case": case, "stage": "phylogenetic", "witness": phylo.witness}
    return None


_FUZZ = {"subtree": _fuzz_subtree, "metric": _fuzz_metric, "diversity": _fuzz_diversity}


def cmd_fuzz(args) -> tuple[dict, int, str | None]:
    if args.count < 0:
        raise InputError("--count must be nonnegative")
    rng = random.Random(args.seed)
    check = _FUZZ[args.mode]
    failures = []
    for case in range(args.count):
        bad = check(rng, case)
        if bad is not None:
            failures.append(bad)
    result = {
        "mode": args.mode,
        "seed": args.seed,
        "count": args.count,
        "passed": args.count - len(failures),
        "failed": len(failures),
        "failures": failures,
    }
    return result, EXIT_OK if not failures else EXIT_VIOLATION, None


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tspan", description="Exact tight spans, subtree representations and diversities.")
    parser.add_argument("--timing", action="store_true", help="add wall-clock seconds to the report")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="metric, four-point, extended four-point or diversity axioms")
    p.add_argument("path")
    p.add_argument("--kind", choices=["metric", "4pt", "ext4pt", "diversity"], required=True)
    p.add_argument("--witness", help="re-check a single tuple of labels, e.g. w,x,z,y")
    p.set_defaults(handler=cmd_check)

    p = sub.add_parser("tightspan", help="tight-span membership, retraction, geodesics, kappa sets")
    p.add_argument("op", choices=["member", "retract", "geodesic", "kappa", "dist"])
    p.add_argument("path")
    p.add_argument("--point", help="function values in label order, e.g. 0,3,1/2")
    p.add_argument("--other", help="second point for dist")
    p.add_argument("--pair", help="two labels, e.g. x,y")
    p.add_argument("--t", help="geodesic parameter")
    p.add_argument("--label", help="label for kappa")
    p.add_argument("--method", default=None, help="retract: lp|contraction; geodesic: formula|lp")
    p.add_argument("--tol", help="contraction tolerance (default 2^-40)")
    p.set_defaults(handler=cmd_tightspan)

    p = sub.add_parser("subtree", help="build and verify a subtree representation")
    p.add_argument("path")
    p.add_argument("--out", help="write the representation JSON here")
    p.add_argument("--rule", choices=["kappa", "hull"], default="kappa")
    p.set_defaults(handler=cmd_subtree)

    p = sub.add_parser("dominate", help="dominating metrics")
    p.add_argument("op", choices=["any", "pin", "minimize", "verify", "embed"])
    p.add_argument("path")
    p.add_argument("--metric", help="dominating metric file (same labels as PATH)")
    p.add_argument("--pair", help="pair to pin, e.g. x,y")
    p.add_argument("--force", action="store_true", help="pin even if the pair is already pinned")
    p.add_argument("--order", help="pair priority for minimize, e.g. 'x,y;x,z;y,z'")
    p.set_defaults(handler=cmd_dominate)

    p = sub.add_parser("diversity", help="diversity constructions")
    p.add_argument("op", choices=["ddelta", "arboreal", "phylo", "nice", "embed"])
    p.add_argument("path")
    p.add_argument("--method", choices=["lp", "vertices"], default="lp", help="nice: decision method")
    p.set_defaults(handler=cmd_diversity)

    p = sub.add_parser("fuzz", help="run randomised property checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--mode", choices=sorted(_FUZZ), required=True)
    p.set_defaults(handler=cmd_fuzz)
    return parser


def _validate_methods(args):
    if args.command != "tightspan" or args.method is None:
        if args.command == "tightspan":
            args.method = "lp" if args.op == "retract" else "formula"
        return
    allowed = {"retract": ("lp", "contraction"), "geodesic": ("formula", "lp")}.get(args.op, ())
    if args.method not in allowed:
        raise InputError(f"--method {args.method!r} is not valid for {args.op}")


def _required(args):
    if args.command != "tightspan":
        return
    need = {"member": ["point"], "retract": ["point"], "geodesic": ["pair", "t"], "kappa": ["label"]}
    for name in need.get(args.op, []):
        if getattr(args, name) is None:
            raise InputError(f"tightspan {args.op} needs --{name}")


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    report = {"command": args.command}
    if getattr(args, "op", None):
        report["operation"] = args.op
    start = time.perf_counter()
    try:
        _validate_methods(args)
        _required(args)
        result, code, digest = args.handler(args)
    except ResourceLimitError as exc:
        stderr.write(f"tspan: resource limit: {exc}\n")
        return EXIT_INPUT
    except InputError as exc:
        stderr.write(f"tspan: input error: {exc}\n")
        return EXIT_INPUT
    except PreconditionError as exc:
        result, code, digest = {"error": type(exc).__name__, "message": str(exc)}, EXIT_VIOLATION, None
        if exc.certificate is not None:
            result["certificate"] = exc.certificate
    except TspanError as exc:
        stderr.write(f"tspan: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT
    report["ok"] = code == EXIT_OK
    report["result"] = result
    if digest is not None:
        report["input_sha256"] = digest
    if args.timing:
        report["seconds"] = f"{time.perf_counter() - start:.6f}"
    stdout.write(dumps(report))
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
