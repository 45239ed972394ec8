"""Command-line interface.

Exit codes: ``verify`` and ``oracle`` return 0, 1 or 2 for True, False
and Undefined.  Other commands return 0 on success.  Failures use codes
of 10 and above (see ``EXIT_CODES``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import errors
from .core import validate_restricted
from .corpus import load_corpus
from .evaluator import DEFAULT_BUDGET, Evaluator
from .ltl import FairnessSet, TruthVal, parse_formula
from .lts import export_dot, extract_lts, oracle_check
from .syntax import SourceFile, parse_program, pretty_expr, pretty_program
from .transformer import Transformer, bounded_bisim, observations
from .verifier import verify_program

VERDICT_CODES = {TruthVal.TRUE: 0, TruthVal.FALSE: 1, TruthVal.UNDEFINED: 2}

EXIT_CODES = {
    "usage": 10,
    "io": 11,
    "parse": 12,
    "restricted": 13,
    "transform": 14,
    "evaluation": 15,
    "verification": 16,
    "other": 17,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse would exit with 2, which means Undefined here
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CODES["usage"])


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _load(path: str) -> SourceFile:
    return parse_program(_read(path))


def _restricted(src: SourceFile, args, need_transform: bool):
    if need_transform:
        t = Transformer(src, max_functions=args.max_functions)
        return t.run().program
    return validate_restricted(src.main)


def _fairness(args, src: SourceFile) -> FairnessSet:
    try:
        return FairnessSet.parse(args.fair, src.table)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# commands


def cmd_check(args) -> int:
    src = _load(args.program)
    print(f"{args.program}: ok ({len(src.datatypes)} datatypes)")
    if args.restricted:
        p = validate_restricted(src.main)
        print(f"restricted form: ok ({len(p.defs)} functions)")
    return 0


def cmd_eval(args) -> int:
    src = _load(args.program)
    events = [e for e in (args.events or "").split(",") if e]
    if src.main.fv:
        undeclared = [e for e in events if e not in src.table.constructors("Event")]
        if undeclared:
            raise UsageError(f"not declared Event constructors: {', '.join(undeclared)}")
        for i, obs in enumerate(observations(src.main, events, args.budget)):
            print(f"{i}: {pretty_expr(obs)}")
    else:
        v = Evaluator({}, args.budget).ground(src.main)
        print(pretty_expr(v))
    return 0


def cmd_transform(args) -> int:
    src = _load(args.program)
    t = Transformer(src, max_functions=args.max_functions)
    result = t.run()
    text = pretty_program(result.source_file(src))
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    if args.check_bisim:
        r = bounded_bisim(src, result.program, args.depth, args.trials, args.seed)
        status = "ok" if r.ok else f"FAILED at position {r.position} on {' '.join(r.counterexample)}"
        print(f"bounded bisimulation (depth {r.depth}, {r.trials} streams): {status}",
              file=sys.stderr)
        if not r.ok:
            return 1
    return 0


def cmd_verify(args) -> int:
    src = _load(args.program)
    phi = parse_formula(_read(args.property), src.table)
    program = _restricted(src, args, not args.no_transform)
    report = verify_program(program, phi, _fairness(args, src), prop_budget=args.budget,
                            trace=args.trace)
    if args.json:
        data = report.to_json()
        data.update(program=args.program, property=args.property,
                    fairness=sorted(_fairness(args, src).events),
                    transformed=not args.no_transform)
        if not args.trace:
            data.pop("trace")
        print(json.dumps(data, indent=2))
    else:
        if args.trace:
            for t in report.trace:
                fn = f" {t.function}" if t.function else ""
                print(f"rule {t.rule:<3}{fn}  {t.formula}  rho={{{', '.join(t.rho)}}}")
        print(report.verdict.value)
    return VERDICT_CODES[report.verdict]


def cmd_lts(args) -> int:
    src = _load(args.program)
    program = _restricted(src, args, not args.no_transform)
    lts = extract_lts(program, src.table)
    dot = export_dot(lts, args.self_loops)
    if args.dot:
        Path(args.dot).write_text(dot, encoding="utf-8")
        print(f"{len(lts.states)} states, {len(lts.transitions)} transitions -> {args.dot}")
    else:
        print(dot, end="")
    return 0


def cmd_oracle(args) -> int:
    src = _load(args.program)
    phi = parse_formula(_read(args.property), src.table)
    program = _restricted(src, args, not args.no_transform)
    lts = extract_lts(program, src.table)
    v = oracle_check(lts, phi, _fairness(args, src))
    verdict = TruthVal.TRUE if v.holds else TruthVal.FALSE
    if args.json:
        data = {"verdict": verdict.value, "witness": None}
        if v.witness is not None:
            prefix, cycle = v.witness
            data["witness"] = {"prefix": list(prefix), "cycle": list(cycle)}
        print(json.dumps(data, indent=2))
    else:
        print(verdict.value)
        if v.witness is not None:
            prefix, cycle = v.witness
            print(f"prefix: {' '.join(prefix) or '(empty)'}")
            print(f"cycle:  {' '.join(cycle)}")
    return VERDICT_CODES[verdict]


def cmd_corpus_run(args) -> int:
    rows = []
    ok = True
    for entry in load_corpus():
        modes = []
        if args.mode in ("both", "reference"):
            modes.append(("reference", validate_restricted(entry.distilled_reference.main)))
        if args.mode in ("both", "pipeline"):
            t = Transformer(entry.source, max_functions=args.max_functions)
            modes.append(("pipeline", t.run().program))
        fair = FairnessSet.parse(args.fair, entry.source.table)
        for mode, program in modes:
            for case in entry.properties:
                report = verify_program(program, case.formula, fair, prop_budget=args.budget)
                match = report.verdict is case.expected
                ok &= match
                rows.append({"example": entry.name, "property": case.name, "mode": mode,
                             "expected": case.expected.value, "verdict": report.verdict.value,
                             "match": match, "seconds": round(report.seconds, 6)})
    if args.json:
        print(json.dumps({"ok": ok, "results": rows}, indent=2))
    else:
        for r in rows:
            mark = "ok  " if r["match"] else "FAIL"
            print(f"{mark} {r['example']:<9} {r['property']:<11} {r['mode']:<9} "
                  f"expected {r['expected']:<9} got {r['verdict']:<9} {r['seconds']:.4f}s")
    return 0 if ok else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rsverify", description="Transform and verify reactive stream programs.")
    p.add_argument("-v", "--verbose", action="store_true", help="log transformation steps")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, transform=True, budget=True):
        if transform:
            sp.add_argument("--no-transform", action="store_true",
                            help="the input is already in restricted form")
            sp.add_argument("--max-functions", type=int, default=400, metavar="N")
        if budget:
            sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET, metavar="N",
                            help="evaluation step budget")

    sp = sub.add_parser("check", help="parse and check a program")
    sp.add_argument("program")
    sp.add_argument("--restricted", action="store_true", help="also check restricted form")
    sp.set_defaults(run=cmd_check)

    sp = sub.add_parser("eval", help="run a program on a finite event prefix")
    sp.add_argument("program")
    sp.add_argument("--events", default="", help="comma-separated events")
    common(sp, transform=False)
    sp.set_defaults(run=cmd_eval)

    sp = sub.add_parser("transform", help="transform a program into restricted form")
    sp.add_argument("program")
    sp.add_argument("-o", "--output")
    sp.add_argument("--max-functions", type=int, default=400, metavar="N")
    sp.add_argument("--check-bisim", action="store_true",
                    help="compare with the source on random event streams")
    sp.add_argument("--depth", type=int, default=20)
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(run=cmd_transform)

    for name, fn, text in (("verify", cmd_verify, "verify a property"),
                           ("oracle", cmd_oracle, "model-check a property on the LTS")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("program")
        sp.add_argument("property")
        sp.add_argument("--fair", default="all", help="'all', 'none' or a list of events")
        sp.add_argument("--json", action="store_true")
        common(sp)
        if name == "verify":
            sp.add_argument("--trace", action="store_true")
        sp.set_defaults(run=fn)

    sp = sub.add_parser("lts", help="extract the labelled transition system")
    sp.add_argument("program")
    sp.add_argument("--dot", metavar="PATH", help="write Graphviz output to PATH")
    sp.add_argument("--self-loops", action="store_true")
    common(sp, budget=False)
    sp.set_defaults(run=cmd_lts)

    sp = sub.add_parser("corpus", help="bundled examples")
    csub = sp.add_subparsers(dest="corpus_command", required=True, parser_class=_Parser)
    cp = csub.add_parser("run", help="check every golden verdict")
    cp.add_argument("--mode", choices=("both", "reference", "pipeline"), default="both")
    cp.add_argument("--fair", default="all")
    cp.add_argument("--json", action="store_true")
    cp.add_argument("--max-functions", type=int, default=400, metavar="N")
    cp.add_argument("--budget", type=int, default=DEFAULT_BUDGET, metavar="N")
    cp.set_defaults(run=cmd_corpus_run)
    return p


def _exit_code(exc: BaseException) -> int:
    match exc:
        case UsageError() | ValueError():
            return EXIT_CODES["usage"]
        case FileNotFoundError() | OSError():
            return EXIT_CODES["io"]
        case errors.ParseError() | errors.DuplicateDefinition() | errors.ArityMismatch():
            return EXIT_CODES["parse"]
        case errors.RestrictedFormError() | errors.NonCanonicalShape():
            return EXIT_CODES["restricted"]
        case errors.TransformError():
            return EXIT_CODES["transform"]
        case errors.EvaluationError():
            return EXIT_CODES["evaluation"]
        case errors.VerificationError() | errors.AtomUndefinedOnState():
            return EXIT_CODES["verification"]
    return EXIT_CODES["other"]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.run(args)
    except (errors.RsvError, UsageError, OSError, ValueError) as exc:
        kind = getattr(exc, "kind", type(exc).__name__)
        print(f"error [{kind}]: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except RecursionError:
        print("error: expression nesting too deep", file=sys.stderr)
        return EXIT_CODES["other"]


if __name__ == "__main__":
    sys.exit(main())
