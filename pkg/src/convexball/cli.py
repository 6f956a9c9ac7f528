"""Command-line front end: certify, verify-image, regmod, optimize, repro."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import reports
from .certifier import SAFETY, certify_sum_map, polyak_radius
from .errors import (ConvexBallError, InconclusiveError, NoCertificateError,
                     PreconditionError, ScalarizationError, ScenarioError)
from .image import defect_curve
from .multifunction import ProductLevelMultifunction, sum_image_of_ball
from .regularity import (REGULARITY_SAMPLER, product_level_witness, refute_product_level,
                         regularity_ratio, sampled_set_certificate, sublinear_certificate)
from .sampling import SamplerSpec
from .scenario import builtin_names, load_expectations, load_scenario
from .setvalued import (dominance_audit, find_efficient_pair, local_boundedness_check,
                        pareto_minimal, scalarize)

log = logging.getLogger("convexball")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_CERT = 2
EXIT_VERIFY = 3


@dataclass
class Outcome:
    code: int
    payload: dict
    writers: list = field(default_factory=list)  # callables taking the output directory


def _sampler(scn, seed):
    return scn.sampler if seed is None else scn.sampler.with_seed(seed)


def _regularity_sampler(scn, seed):
    spec = dict(REGULARITY_SAMPLER.to_dict())
    spec.update({k: scn.regularity[k] for k in ("n_x", "n_y", "seed") if k in scn.regularity})
    if seed is not None:
        spec["seed"] = seed
    return SamplerSpec.from_dict(spec)


def certify(scn, seed=None):
    """ConvexityCertificate for the scenario; raises NoCertificateError."""
    safety = float(scn.overrides.get("safety", SAFETY))
    if isinstance(scn.build_G(), ProductLevelMultifunction):
        raise ScenarioError("certification needs a polyhedral multifunction")
    if scn.single_valued:
        return polyak_radius(scn.build_f(), scn.x0, scn.space, tau=scn.radii.get("tau"),
                             r=scn.radii.get("r"), safety=safety)
    overrides = dict(scn.radii)
    for key in ("regG", "zeta"):
        if key in scn.regularity:
            overrides[key] = scn.regularity[key]
    return certify_sum_map(scn.build_sum(), scn.x0, scn.space,
                           reg_delta=float(scn.regularity.get("delta", 0.5)),
                           reg_zeta=float(scn.regularity.get("zeta", 0.5)),
                           sampler=_regularity_sampler(scn, seed), overrides=overrides,
                           safety=safety)


def _try_certify(scn, seed):
    try:
        cert = certify(scn, seed)
        return cert, {"status": "certified", "certificate": cert.to_dict()}
    except NoCertificateError as exc:
        return None, {"status": "no-certificate", "reason": exc.reason,
                      "details": exc.details}


def cmd_certify(scn, seed=None):
    cert, info = _try_certify(scn, seed)
    code = EXIT_OK if cert is not None else EXIT_NO_CERT
    if cert is not None:
        log.info("eps0 = %.6g (binding: %s)", cert.eps0, cert.binding_term)
    else:
        log.info("no certificate: %s", info["reason"])
    return Outcome(code, {"command": "certify", **info})


def _eps_list(scn, eps, cert):
    if eps is not None:
        return list(eps)
    if "eps" in scn.verify:
        return [float(e) for e in scn.verify["eps"]]
    if cert is not None:
        fr = scn.verify.get("fractions", [0.25, 0.5, 0.75, 1.0])
        return [float(f) * cert.eps0 for f in fr]
    return []


def cmd_verify(scn, eps=None, seed=None):
    cert, info = _try_certify(scn, seed)
    eps_list = _eps_list(scn, eps, cert)
    sampler = _sampler(scn, seed)
    F = scn.build_sum()
    curve = defect_curve(F, scn.x0, eps_list, sampler)
    eps0 = cert.eps0 if cert is not None else None
    failed = [r for r in curve if not r.passed and (eps0 is None or r.eps <= eps0)]
    code = EXIT_VERIFY if failed else EXIT_OK
    payload = {"command": "verify-image", **info, "sampler": sampler.to_dict(),
               "curve": [r.to_dict() for r in curve],
               "failures": [r.eps for r in failed]}
    writers = [lambda out: reports.write_defect_curve(out / "defect_curve.csv", curve)]
    if eps_list:
        cloud = sum_image_of_ball(F, scn.x0, eps_list[-1], sampler)
        writers.append(lambda out: reports.write_image_points(out / "image_points.csv", cloud))
    return Outcome(code, payload, writers)


def cmd_regmod(scn, seed=None):
    G = scn.build_G()
    if G is None:
        raise ScenarioError("scenario has no multifunction")
    if isinstance(G, ProductLevelMultifunction):
        certs = refute_product_level(G)
        checks = []
        for c in certs:
            x, v = product_level_witness(c.kappa, c.delta, c.zeta)
            checks.append({"kappa": c.kappa, "delta": c.delta, "zeta": c.zeta,
                           "witness_x": x, "witness_v": v,
                           "witness_ratio": regularity_ratio(G, x, v), "kind": c.kind})
        refuted = all(c.kind == "refuted" for c in certs)
        payload = {"command": "regmod", "status": "refuted" if refuted else "inconclusive",
                   "checks": checks}
        return Outcome(EXIT_NO_CERT if refuted else EXIT_OK, payload)
    if G.sublinear:
        cert = sublinear_certificate(G, scn.x0)
    else:
        cert = sampled_set_certificate(G, scn.x0, float(scn.regularity.get("delta", 0.5)),
                                       float(scn.regularity.get("zeta", 0.5)),
                                       _regularity_sampler(scn, seed))
    status = "regular" if cert.regular else "refuted"
    code = EXIT_OK if cert.regular else EXIT_NO_CERT
    return Outcome(code, {"command": "regmod", "status": status, "certificate": cert.to_dict()})


def cmd_optimize(scn, eps=None, seed=None):
    cone = scn.build_cone()
    if cone is None:
        raise ScenarioError("scenario has no ordering cone")
    if eps:
        eps_val = float(eps[0])
    elif "eps" in scn.optimize:
        eps_val = float(scn.optimize["eps"])
    else:
        raise ScenarioError("optimize needs --eps or optimize.eps")
    F = scn.build_sum()
    cert, info = _try_certify(scn, seed)
    within = cert is not None and eps_val <= cert.eps0
    if not within:
        log.warning("eps = %g is not covered by a convexity certificate", eps_val)
    bound = local_boundedness_check(F.f, F.G, scn.x0, float(scn.optimize.get("eta", 0.1)))
    sampler = _sampler(scn, seed)
    cloud = sum_image_of_ball(F, scn.x0, eps_val, sampler)
    keep = pareto_minimal(cloud.points, cone)
    payload = {"command": "optimize", "certification": info, "eps": eps_val,
               "eps_within_certificate": within, "local_bound": bound.to_dict(),
               "effective_radius": min(eps_val, bound.radius), "sampler": sampler.to_dict()}
    writers = [lambda out: reports.write_image_points(out / "image_points.csv", cloud),
               lambda out: reports.write_pareto_points(out / "pareto_points.csv",
                                                       cloud.points[keep], cloud.sources[keep])]
    try:
        pair = find_efficient_pair(F, scn.x0, eps_val, cone, cloud=cloud)
        payload["dominators"] = len(dominance_audit(pair.y_eps, cloud.points, cone))
        scalarize(pair, F, cone, cloud, scn.x0,
                  grid_n=int(scn.optimize.get("grid_n", 10_000)),
                  rtol=float(scn.optimize.get("rtol", 1e-4)))
    except (ScalarizationError, InconclusiveError) as exc:
        payload.update(status="failed", reason=str(exc),
                       violating_x=getattr(exc, "x", None))
        return Outcome(EXIT_VERIFY, payload, writers)
    payload.update(status="ok", pair=pair.to_dict())
    return Outcome(EXIT_OK, payload, writers)


COMMANDS = {
    "certify": lambda scn, a: cmd_certify(scn, a.seed),
    "verify-image": lambda scn, a: cmd_verify(scn, a.eps, a.seed),
    "regmod": lambda scn, a: cmd_regmod(scn, a.seed),
    "optimize": lambda scn, a: cmd_optimize(scn, a.eps, a.seed),
}


def _match(case, outcome):
    """Compare an outcome with an expectation row; returns a list of mismatches."""
    bad = []
    p = outcome.payload
    if outcome.code != case["exit"]:
        bad.append(f"exit {outcome.code} != {case['exit']}")
    if "reason" in case and p.get("reason") != case["reason"]:
        bad.append(f"reason {p.get('reason')!r} != {case['reason']!r}")
    if "eps0" in case:
        got = p.get("certificate", {}).get("eps0")
        if got is None or not math.isclose(got, case["eps0"], rel_tol=case.get("rtol", 1e-6)):
            bad.append(f"eps0 {got} != {case['eps0']}")
    if "binding_term" in case:
        got = p.get("certificate", {}).get("binding_term")
        if got != case["binding_term"]:
            bad.append(f"binding_term {got!r} != {case['binding_term']!r}")
    if "kappa" in case:
        got = p.get("certificate", {}).get("kappa")
        if got is None or not math.isclose(got, case["kappa"], rel_tol=case.get("rtol", 1e-6)):
            bad.append(f"kappa {got} != {case['kappa']}")
    if "scalarizer" in case:
        got = p.get("pair", {}).get("scalarizer")
        if got is None or np.linalg.norm(np.subtract(got, case["scalarizer"])) > case.get(
                "atol", 1e-2):
            bad.append(f"scalarizer {got} != {case['scalarizer']}")
    if "x_eps" in case:
        got = p.get("pair", {}).get("x_eps")
        if got is None or np.linalg.norm(np.subtract(got, case["x_eps"])) > case.get(
                "atol", 1e-6):
            bad.append(f"x_eps {got} != {case['x_eps']}")
    return bad


def cmd_repro(out, timestamp=False, seed=None):
    """Run every expectation row against the built-in scenarios."""
    results = []
    for case in load_expectations():
        scn = load_scenario(case["scenario"])
        args = argparse.Namespace(seed=seed, eps=case.get("eps"))
        outcome = COMMANDS[case["command"]](scn, args)
        sub = out / f"{case['scenario']}.{case['command']}"
        _write(sub, scn, outcome, timestamp)
        bad = _match(case, outcome)
        log.info("%-28s %-13s exit=%d %s", case["scenario"], case["command"], outcome.code,
                 "ok" if not bad else "; ".join(bad))
        results.append({"scenario": case["scenario"], "command": case["command"],
                        "exit": outcome.code, "expected_exit": case["exit"],
                        "matched": not bad, "mismatches": bad,
                        "status": outcome.payload.get("status")})
    ok = all(r["matched"] for r in results)
    payload = {"command": "repro", "all_matched": ok, "cases": results}
    reports.write_json(out / "report.json", payload, timestamp)
    return EXIT_OK if ok else EXIT_CONFIG


def _write(out, scn, outcome, timestamp):
    out.mkdir(parents=True, exist_ok=True)
    payload = {"scenario": scn.to_dict(), "exit_code": outcome.code, **outcome.payload}
    reports.write_json(out / "report.json", payload, timestamp)
    for w in outcome.writers:
        w(out)


def _eps_arg(text):
    text = text.strip()
    if not text:
        return []
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad eps list {text!r}") from exc
    if any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise argparse.ArgumentTypeError("eps values must be positive and finite")
    return vals


def build_parser():
    parser = argparse.ArgumentParser(
        prog="convexball",
        description="Certify and check convexity of images of small balls under f + G.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override the sampler seed")
    common.add_argument("--no-timestamp", action="store_true",
                        help="omit the generation time from reports")
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--scenario", required=True,
                       help=f"TOML path or built-in name ({', '.join(builtin_names())})")
        p.add_argument("--eps", type=_eps_arg, default=None,
                       help="comma-separated radii")
    sub.add_parser("repro", parents=[common], help="run all built-in scenarios")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    timestamp = not args.no_timestamp
    try:
        if args.command == "repro":
            code = cmd_repro(args.out, timestamp, args.seed)
            print(f"repro: {'all expectations matched' if code == 0 else 'MISMATCH'}")
            return code
        scn = load_scenario(args.scenario)
        outcome = COMMANDS[args.command](scn, args)
    except (ScenarioError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvexBallError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _write(args.out, scn, outcome, timestamp)
    print(_summary(args.command, outcome))
    return outcome.code


def _summary(command, outcome):
    p = outcome.payload
    if command == "certify":
        if outcome.code == EXIT_OK:
            c = p["certificate"]
            return f"certified: eps0 = {c['eps0']:.6g} (binding: {c['binding_term']})"
        return f"no certificate: {p['reason']}"
    if command == "verify-image":
        n = len(p["curve"])
        return f"verify-image: {n - len(p['failures'])}/{n} radii within threshold" + (
            f"; failing eps {p['failures']}" if p["failures"] else "")
    if command == "regmod":
        if "certificate" in p:
            return f"regmod: {p['status']} (kappa = {p['certificate']['kappa']})"
        return f"regmod: {p['status']} on {len(p['checks'])} (kappa, delta, zeta) triples"
    if p.get("status") == "ok":
        return f"optimize: x_eps = {p['pair']['x_eps']}, y* = {p['pair']['scalarizer']}"
    return f"optimize: {p.get('reason')}"


if __name__ == "__main__":
    sys.exit(main())
