"""Command-line front end.

Exit codes: 0 success, 1 a check or certification failed (the report is
still written), 2 malformed input, 3 dimension mismatch, 4 precondition not
met.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bell import (
    BellRealization,
    bell_operator,
    quantum_classical_bounds,
    scenario_from_json,
    verify_realization,
)
from .certify import certify_realization
from .errors import CommcertError, SchemaError
from .linalg import matrix_to_json, op_norm
from .observables import BinaryObservable
from .optimize import SeesawConfig, falsify_bounds, scan_tradeoff, seesaw_max_violation

MAX_CLI_PARTIES = 10


def _reject_constant(name):
    raise SchemaError(f"non-finite number {name} in input")


def load_json(source: str):
    """Inline JSON (starting with ``{`` or ``[``), ``-`` for stdin, or a file path."""
    text = source
    if source == "-":
        text = sys.stdin.read()
    elif not source.lstrip().startswith(("{", "[")):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise SchemaError(f"cannot read {source}: {exc.strerror}") from None
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None


def _scenario(args):
    scen = scenario_from_json(load_json(args.scenario), party_dims=getattr(args, "dims", None))
    if scen.n_parties > MAX_CLI_PARTIES:
        raise SchemaError(f"at most {MAX_CLI_PARTIES} parties are supported")
    return scen


def _require_seed(args):
    if args.seed is None:
        raise SchemaError(f"'{args.command}' is randomized and needs an explicit --seed")
    return args.seed


def _observable_pairs(doc):
    if isinstance(doc, dict):
        doc = doc.get("observables")
    if not isinstance(doc, list) or not all(isinstance(p, list) and len(p) == 2 for p in doc):
        raise SchemaError("observables must be a list of [A0, A1] pairs")
    return [(BinaryObservable.from_json(p[0]), BinaryObservable.from_json(p[1])) for p in doc]


def cmd_build(args):
    pairs = _observable_pairs(load_json(args.observables))
    scen = scenario_from_json(load_json(args.scenario), party_dims=[p[0].dim for p in pairs])
    w = bell_operator(scen, pairs)
    doc = matrix_to_json(w)
    doc.update({"family": scen.family, "scenario": scen.to_json(), "norm": op_norm(w)})
    return doc, 0


def cmd_verify(args):
    real = BellRealization.from_json(load_json(args.realization))
    res = verify_realization(real, args.tol)
    doc = dict(res)
    doc["operator_checks"] = [c.to_json(include_witness=not c.passed) for c in res["operator_checks"]]
    return doc, 0 if res["passed"] else 1


def cmd_certify(args):
    real = BellRealization.from_json(load_json(args.realization))
    report = certify_realization(real, args.tol)
    return report.to_json(args.include_unitaries), 0 if report.passed else 1


def cmd_scan(args):
    scen = _scenario(args)
    grid = np.linspace(args.gamma_min, args.gamma_max, args.points)
    curve = scan_tradeoff(scen, args.party, grid)
    ok = curve.max_excess() <= args.tol
    if args.format == "csv":
        return curve.to_csv(), 0 if ok else 1
    return curve.to_json(), 0 if ok else 1


def cmd_seesaw(args):
    seed = _require_seed(args)
    scen = _scenario(args)
    cfg = SeesawConfig(args.max_iterations, args.convergence_tol, args.restarts, seed)
    res = seesaw_max_violation(scen, config=cfg)
    beta_l, beta_q = quantum_classical_bounds(scen)
    return {
        "scenario": res.realization.scenario.to_json(),
        "beta": res.beta,
        "beta_local": beta_l,
        "beta_quantum": beta_q,
        "seed": res.seed,
        "iterations": res.iterations,
        "converged": res.converged,
        "realization": res.realization.to_json(),
    }, 0


def cmd_falsify(args):
    seed = _require_seed(args)
    scen = _scenario(args)
    rep = falsify_bounds(scen, args.samples, seed=seed, tol=args.tol)
    return rep.to_json(), 0 if rep.total_violations == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="64-bit seed; required by seesaw and falsify")
    common.add_argument("--tol", type=float, default=1e-8)
    common.add_argument("--output", default="-", help="output path, '-' for stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None)

    p = argparse.ArgumentParser(prog="commcert", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("build", parents=[common], help="build a Bell operator")
    s.add_argument("--scenario", required=True, help="scenario JSON (inline, path, or -)")
    s.add_argument("--observables", required=True, help="list of per-party [A0, A1] pairs")
    s.set_defaults(func=cmd_build)

    s = sub.add_parser("verify", parents=[common], help="check the operator inequalities on a realization")
    s.add_argument("--realization", required=True)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("certify", parents=[common], help="incompatibility, trade-off and rigidity report")
    s.add_argument("--realization", required=True)
    s.add_argument("--include-unitaries", action="store_true")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("scan", parents=[common], help="trade-off curve of the tight family (CSV)")
    s.add_argument("--scenario", required=True)
    s.add_argument("--party", type=int, default=0)
    s.add_argument("--points", type=int, default=51)
    s.add_argument("--gamma-min", type=float, default=0.0)
    s.add_argument("--gamma-max", type=float, default=math.pi / 2)
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("seesaw", parents=[common], help="seesaw search for the maximal violation")
    s.add_argument("--scenario", required=True)
    s.add_argument("--dims", type=int, nargs="+", default=None)
    s.add_argument("--restarts", type=int, default=10)
    s.add_argument("--max-iterations", type=int, default=2000)
    s.add_argument("--convergence-tol", type=float, default=1e-13)
    s.set_defaults(func=cmd_seesaw)

    s = sub.add_parser("falsify", parents=[common], help="random sweep looking for bound violations")
    s.add_argument("--scenario", required=True)
    s.add_argument("--samples", type=int, required=True)
    s.add_argument("--dims", type=int, nargs="+", default=None)
    s.set_defaults(func=cmd_falsify)
    return p


def _emit(payload, path: str):
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=2, allow_nan=False) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.format is None:
        args.format = "csv" if args.command == "scan" else "json"
    try:
        if args.format == "csv" and args.command != "scan":
            raise SchemaError(f"--format csv is only available for 'scan'")
        payload, code = args.func(args)
    except CommcertError as exc:
        print(f"commcert {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    _emit(payload, args.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
