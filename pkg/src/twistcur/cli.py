"""``twistcur`` command line client.

Runs commands in-process by default, or against a running service with
``--server URL``. The JSON report goes to standard output and the exit code
follows the dispatcher contract (0 ok, 2 schema, 3 validation, 4 lift,
5 non-convergent).
"""

from __future__ import annotations

import argparse
import json
import sys

from .commands import COMMANDS, SCHEMA, Options, Result, gen_fixture, run
from .generators import GENERATORS


def _param(text: str):
    key, sep, val = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(val)
    except json.JSONDecodeError:
        return key, val


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twistcur", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("target", nargs="?", help="problem file ('-' for stdin), or generator for gen-fixture")
    p.add_argument("--schedule", help="eps0=...,ratio=...,steps=...[,tol=...]")
    p.add_argument("--mode", choices=("residue", "pv"), default="residue")
    p.add_argument("--phi")
    p.add_argument("--psi")
    p.add_argument("--alpha")
    p.add_argument("--twisting")
    p.add_argument("--morphism")
    p.add_argument("--claim", choices=("member", "nonmember"))
    p.add_argument("--testform", action="append", default=[], dest="testforms",
                   help="test form name (repeatable)")
    p.add_argument("--tol-abs", type=float)
    p.add_argument("--tol-rel", type=float)
    p.add_argument("--degree-bound", type=int)
    p.add_argument("--grid", type=int, help="quadrature nodes per direction")
    p.add_argument("--param", action="append", default=[], type=_param,
                   help="gen-fixture parameter key=value (value parsed as JSON when possible)")
    p.add_argument("--write", help="also write the updated problem file here")
    p.add_argument("--server", help="base URL of a running twistcur service")
    return p


def _remote(server: str, command: str, problem, opts: Options, params: dict) -> Result:
    import httpx

    base = server.rstrip("/")
    if command == "gen-fixture":
        r = httpx.post(f"{base}/gen-fixture", json={"generator": opts.generator, "params": params},
                       timeout=None)
    else:
        body = {k: v for k, v in vars(opts).items() if k not in ("generator", "params")}
        r = httpx.post(f"{base}/run/{command}", json={"problem": problem, "options": body}, timeout=None)
    if r.status_code == 422:
        return Result(SCHEMA, {"error": "schema", "message": r.json().get("detail")})
    r.raise_for_status()
    data = r.json()
    return Result(data["exit_code"], data["report"])


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    params = dict(args.param)
    opts = Options(schedule=args.schedule, mode=args.mode, phi=args.phi, psi=args.psi, alpha=args.alpha,
                   twisting=args.twisting, morphism=args.morphism, claim=args.claim,
                   testforms=args.testforms, tol_abs=args.tol_abs, tol_rel=args.tol_rel,
                   degree_bound=args.degree_bound, grid=args.grid)
    problem = None
    if args.command == "gen-fixture":
        if args.target not in GENERATORS:
            res = Result(SCHEMA, {"error": "schema",
                                  "message": f"generator must be one of {', '.join(GENERATORS)}"})
            return _emit(res, args.write)
        opts.generator, opts.params = args.target, params
    else:
        if not args.target:
            return _emit(Result(SCHEMA, {"error": "schema", "message": "no problem file given"}), None)
        try:
            text = sys.stdin.read() if args.target == "-" else open(args.target).read()
            problem = json.loads(text)
        except (OSError, json.JSONDecodeError) as exc:
            return _emit(Result(SCHEMA, {"error": "schema", "message": str(exc)}), None)
    if args.server:
        res = _remote(args.server, args.command, problem, opts, params)
    elif args.command == "gen-fixture":
        res = gen_fixture(opts.generator, params)
    else:
        res = run(args.command, problem, opts)
    return _emit(res, args.write, args.command == "gen-fixture")


def _emit(res: Result, write: str | None, whole: bool = False) -> int:
    json.dump(res.report, sys.stdout, indent=1, sort_keys=True)
    sys.stdout.write("\n")
    if write:
        doc = res.report if whole else res.report.get("problem")
        if doc is not None:
            with open(write, "w") as fh:
                json.dump(doc, fh, indent=1, sort_keys=True)
    return res.code


if __name__ == "__main__":
    sys.exit(main())
