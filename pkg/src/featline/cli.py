"""Batch command-line front end.

Exit codes are part of the contract: 0 means the command succeeded and the
answer is positive; 1 means the analysis itself came back negative (invalid
model, void model, no solution, nothing optimal); 2 means the invocation or
the model text could not be parsed; 3 is an internal fault. Structured output
goes to stdout (JSON with --json), diagnostics to stderr. Identical
invocations print identical bytes: reports carry no timestamps.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from .analyses import run_analysis
from .compiler import compile_model, emit_csp
from .errors import FeatlineError, UnsatisfiableError
from .model import Diagnostic, FeatureModel
from .parser import parse

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3

DEFAULT_CAP = 10000


def default_cap() -> int:
    raw = os.environ.get("FEATLINE_CAP")
    if raw is None:
        return DEFAULT_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise FeatlineError(f"FEATLINE_CAP must be an integer, got {raw!r}")
    if cap < 1:
        raise FeatlineError("FEATLINE_CAP must be at least 1")
    return cap


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="featline",
        description="Compile, analyze, and solve product-line feature models.")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def model_arg(sp):
        sp.add_argument("model", help="feature model file (.fm), or - for stdin")
        sp.add_argument("--json", action="store_true",
                        help="machine-readable output")

    def strategy_args(sp):
        sp.add_argument("--var-order", choices=("declaration", "first-fail"),
                        default="declaration")
        sp.add_argument("--value-order", choices=("ascending", "descending"),
                        default="ascending")

    sp = sub.add_parser("check", help="parse, validate, and test for voidness")
    model_arg(sp)

    sp = sub.add_parser("count", help="count configurations up to a cap")
    model_arg(sp)
    strategy_args(sp)
    sp.add_argument("--cap", type=int, default=None,
                    help=f"stop counting here (default {DEFAULT_CAP}, "
                         "or FEATLINE_CAP)")
    sp.add_argument("--project", choices=("features",), default=None,
                    help="collapse configurations that differ only in "
                         "attribute values")

    sp = sub.add_parser("enumerate", help="list configurations")
    model_arg(sp)
    strategy_args(sp)
    sp.add_argument("--limit", type=int, default=1)

    sp = sub.add_parser("solve", help="print one configuration")
    model_arg(sp)
    strategy_args(sp)

    sp = sub.add_parser("optimize", help="prove a declared goal optimal")
    model_arg(sp)
    strategy_args(sp)
    sp.add_argument("--goal", required=True)

    sp = sub.add_parser("analyze", help="core and dead features")
    model_arg(sp)

    sp = sub.add_parser("emit-csp", help="print the lowered constraint program")
    model_arg(sp)

    sp = sub.add_parser("serve", help="run the HTTP configuration service")
    sp.add_argument("--port", type=int, default=8000)
    sp.add_argument("--host", default="127.0.0.1")
    return p


def _read_model_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _diag_json(d: Diagnostic) -> dict:
    doc: dict = {"code": d.code, "message": d.message}
    if d.span is not None:
        doc["line"] = d.span.line
        doc["column"] = d.span.column
    return doc


def _print_diags(diags) -> None:
    for d in diags:
        print(str(d), file=sys.stderr)


def _load(path: str) -> tuple[Optional[FeatureModel], list[Diagnostic]]:
    return parse(_read_model_text(path))


def _emit(doc: dict, args, human: str) -> None:
    if args.json:
        print(json.dumps(doc, indent=2))
    else:
        print(human)


def _solution_line(sol: dict) -> str:
    return " ".join(f"{k}={v}" for k, v in sol.items())


def _params(args, **extra) -> dict:
    out = dict(extra)
    if hasattr(args, "var_order"):
        out["var_order"] = args.var_order
        out["value_order"] = args.value_order
    return out


def cmd_check(args) -> int:
    m, diags = _load(args.model)
    if m is None:
        _print_diags(diags)
        _emit({"kind": "check", "valid": False, "void": None,
               "diagnostics": [_diag_json(d) for d in diags]},
              args, "parse error")
        return EXIT_USAGE
    if diags:
        _print_diags(diags)
        _emit({"kind": "check", "valid": False, "void": None,
               "diagnostics": [_diag_json(d) for d in diags]},
              args, "invalid")
        return EXIT_NEGATIVE
    void = run_analysis(m, "void").payload["void"]
    _emit({"kind": "check", "valid": True, "void": void, "diagnostics": []},
          args, "valid, void" if void else "valid, not void")
    return EXIT_NEGATIVE if void else EXIT_OK


def _require_valid(args) -> Optional[FeatureModel]:
    """Shared load step: prints diagnostics and returns None on any defect."""
    m, diags = _load(args.model)
    if diags or m is None:
        _print_diags(diags)
        return None
    return m


def cmd_count(args) -> int:
    m = _require_valid(args)
    if m is None:
        return EXIT_USAGE
    cap = args.cap if args.cap is not None else default_cap()
    report = run_analysis(m, "count", _params(
        args, cap=cap, project_features=args.project == "features"))
    count, exact = report.payload["count"], report.payload["exact"]
    human = f"{count} configurations" if exact \
        else f"at least {count} configurations (cap {cap} hit)"
    _emit(report.to_json(), args, human)
    return EXIT_NEGATIVE if count == 0 else EXIT_OK


def cmd_enumerate(args) -> int:
    m = _require_valid(args)
    if m is None:
        return EXIT_USAGE
    if args.limit < 1:
        print("error: --limit must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    report = run_analysis(m, "enumerate", _params(args, limit=args.limit))
    sols = report.payload["solutions"]
    _emit(report.to_json(), args,
          "\n".join(_solution_line(s) for s in sols) or "no configurations")
    return EXIT_OK if sols else EXIT_NEGATIVE


def cmd_solve(args) -> int:
    m = _require_valid(args)
    if m is None:
        return EXIT_USAGE
    report = run_analysis(m, "enumerate", _params(args, limit=1))
    sols = report.payload["solutions"]
    sol = sols[0] if sols else None
    _emit({"kind": "solve", "solution": sol}, args,
          _solution_line(sol) if sol else "no configuration")
    return EXIT_OK if sol else EXIT_NEGATIVE


def cmd_optimize(args) -> int:
    m = _require_valid(args)
    if m is None:
        return EXIT_USAGE
    try:
        report = run_analysis(m, "optimize", _params(args, goal=args.goal))
    except UnsatisfiableError:
        print(f"goal '{args.goal}': no configuration exists", file=sys.stderr)
        _emit({"kind": "optimize", "goal": args.goal, "value": None,
               "solution": None, "proven": False}, args, "unsatisfiable")
        return EXIT_NEGATIVE
    doc = report.to_json()
    human = (f"{args.goal} = {doc['value']}\n"
             f"{_solution_line(doc['solution'])}")
    _emit(doc, args, human)
    return EXIT_OK


def cmd_analyze(args) -> int:
    m = _require_valid(args)
    if m is None:
        return EXIT_USAGE
    try:
        report = run_analysis(m, "core_dead")
    except FeatlineError as e:
        print(f"error: {e}", file=sys.stderr)
        _emit({"kind": "core_dead", "core": None, "dead": None}, args, "void")
        return EXIT_NEGATIVE
    doc = report.to_json()
    human = ("core: " + (", ".join(doc["core"]) or "-") + "\n"
             + "dead: " + (", ".join(doc["dead"]) or "-"))
    _emit(doc, args, human)
    return EXIT_OK


def cmd_emit_csp(args) -> int:
    m = _require_valid(args)
    if m is None:
        return EXIT_USAGE
    store, _ = compile_model(m)
    text = emit_csp(store)
    if args.json:
        print(json.dumps({"kind": "emit_csp",
                          "constraints": text.splitlines()}, indent=2))
    else:
        print(text, end="")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve

    serve(host=args.host, port=args.port)
    return EXIT_OK


_COMMANDS = {
    "check": cmd_check,
    "count": cmd_count,
    "enumerate": cmd_enumerate,
    "solve": cmd_solve,
    "optimize": cmd_optimize,
    "analyze": cmd_analyze,
    "emit-csp": cmd_emit_csp,
    "serve": cmd_serve,
}


def run(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FeatlineError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001 - the contract demands a code
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
