"""Command-line front end.

Exit codes: 0 success or True, 1 False, 2 Unknown, 3 usage error, 4 input
error. Results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from atlkctl.formula import classify
from atlkctl.generate import generate_random
from atlkctl.grammar import FormulaSyntaxError, parse, render
from atlkctl.modelio import ModelFormatError, parse_model, serialize_model
from atlkctl.oracle import DEFAULT_BUDGET, Evaluator, OracleError, StrategyBudgetExceeded, Verdict, aggregate
from atlkctl.properties import SUITES, run_on_model, run_suite
from atlkctl.system import DomainError, validate
from atlkctl.translator import Mode, TranslationError, translate

EXIT_OK, EXIT_FALSE, EXIT_UNKNOWN, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3, 4

VERDICT_EXIT = {Verdict.TRUE: EXIT_OK, Verdict.FALSE: EXIT_FALSE, Verdict.UNKNOWN: EXIT_UNKNOWN}


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None


def formula_lines(text: str) -> list[str]:
    """Non-blank lines that are not ``#`` comments."""
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]


def _formulas(text: str, batch: bool) -> list[str]:
    items = formula_lines(text) if batch else [text.strip()]
    if not items or not items[0]:
        raise InputError("no formula in input")
    return items


def _parse(text: str):
    try:
        return parse(text)
    except FormulaSyntaxError as exc:
        raise InputError(f"{text!r}: {exc}") from None


def _load_model(path: str):
    try:
        system = parse_model(_read(path))
    except ModelFormatError as exc:
        raise InputError(f"{path}: {exc}") from None
    violations = validate(system)
    if violations:
        raise InputError("invalid model:\n" + "\n".join(f"  {v}" for v in violations))
    return system


def _emit(args, doc: dict, text: str) -> None:
    if args.json:
        sys.stdout.write(json.dumps(doc, indent=1) + "\n")
    elif text:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


# -- commands ----------------------------------------------------------------------

def cmd_translate(args) -> int:
    results = []
    for text in _formulas(_read(args.input), args.batch):
        f = _parse(text)
        try:
            results.append(translate(f, Mode(args.mode), agents=args.agents or ()))
        except TranslationError as exc:
            raise InputError(str(exc)) from None
    if args.trace:
        for res in results:
            for step in res.trace:
                print(step.describe(), file=sys.stderr)
    rendered = [render(r.formula) for r in results]
    sidecars = [r.sidecar() for r in results]
    if args.dict:
        _write(args.dict, json.dumps(sidecars if args.batch else sidecars[0], indent=1) + "\n")
    if args.json:
        docs = [
            {"formula": s, "fragment": str(classify(r.formula)), "dictionary": d, "trace": [t.describe() for t in r.trace]}
            for s, r, d in zip(rendered, results, sidecars)
        ]
        _write(args.out, json.dumps(docs if args.batch else docs[0], indent=1) + "\n")
    else:
        _write(args.out, "".join(s + "\n" for s in rendered))
    return EXIT_OK


def cmd_check(args) -> int:
    system = _load_model(args.model)
    text = args.expr if args.expr is not None else _read(args.formula)
    f = _parse(text.strip())
    if args.horizon < 0:
        raise InputError("horizon must be nonnegative")
    ev = Evaluator(system, args.horizon, budget=args.budget)
    verdicts = ev.initial_verdicts(f)
    overall = aggregate(verdicts)
    if args.run is not None:
        if not 0 <= args.run < len(verdicts):
            raise InputError(f"run index {args.run} out of range (0..{len(verdicts) - 1})")
        overall = verdicts[args.run]
    runs = [
        {"index": k, "state": list(s), "verdict": str(v)}
        for k, (s, v) in enumerate(zip(system.initial, verdicts))
        if args.run is None or k == args.run
    ]
    lines = [f"run {r['index']} ({','.join(r['state'])}): {r['verdict']}" for r in runs]
    lines.append(f"{'verdict' if args.run is not None else 'aggregate'}: {overall}")
    doc = {"formula": render(f), "fragment": str(classify(f)), "horizon": args.horizon, "runs": runs, "verdict": str(overall)}
    _emit(args, doc, "\n".join(lines))
    return VERDICT_EXIT[overall]


def cmd_classify(args) -> int:
    out = []
    for text in _formulas(_read(args.input), args.batch):
        out.append({"formula": text, "fragment": str(classify(_parse(text)))})
    _emit(args, {"results": out} if args.batch else out[0], "\n".join(r["fragment"] for r in out))
    return EXIT_OK


def cmd_roundtrip(args) -> int:
    out, failed = [], 0
    for text in _formulas(_read(args.input), args.batch):
        f = _parse(text)
        once = render(f)
        again = parse(once)
        ok = again == f and render(again) == once
        failed += not ok
        out.append({"formula": text, "rendered": once, "identical": ok})
    lines = [f"{'ok  ' if r['identical'] else 'FAIL'} {r['rendered']}" for r in out]
    lines.append(f"{len(out) - failed}/{len(out)} round trips identical")
    _emit(args, {"results": out, "failures": failed}, "\n".join(lines))
    return EXIT_OK if not failed else EXIT_FALSE


def cmd_verify(args) -> int:
    if args.property not in SUITES:
        raise InputError(f"unknown property {args.property!r}")
    try:
        if args.model:
            system = _load_model(args.model)
            report = run_on_model(
                args.property, system, args.horizon, faulty=args.inject_fault, budget=args.budget, skip_over_budget=args.skip_over_budget
            )
        else:
            report = run_suite(
                args.property,
                args.gen_seed,
                args.count,
                args.horizon,
                faulty=args.inject_fault,
                jobs=args.jobs,
                budget=args.budget,
                skip_over_budget=args.skip_over_budget,
            )
    except StrategyBudgetExceeded as exc:
        raise InputError(f"strategy enumeration needs {exc.count} strategies; budget is {exc.budget}") from None
    doc = report.to_dict()
    lines = [
        f"property {report.suite}: {'pass' if report.passed else 'FAIL'}",
        f"instances {report.instances}, checks {report.checked}, undecided {report.unknown}, skipped {report.skipped}",
    ]
    if report.premises:
        lines.append(f"premises {report.premises}, undecided premises {report.undecided_premises}")
    for c in report.failures[:5]:
        lines.append("counterexample: " + c.describe())
        lines.append("  model: " + json.dumps(c.model, separators=(",", ":")))
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK if report.passed else EXIT_FALSE


def cmd_gen(args) -> int:
    try:
        system = generate_random(
            args.agents,
            args.states,
            args.actions,
            args.props,
            args.seed,
            env_states=args.env_states,
            env_actions=args.env_actions,
            initial=args.initial,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    violations = validate(system)
    if violations:
        raise InputError("generated model is invalid:\n" + "\n".join(map(str, violations)))
    text = serialize_model(system)
    _write(args.out, text)
    if args.json and args.out not in (None, "-"):
        _emit(args, {"out": args.out, "global_states": len(list(system.global_states()))}, "")
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit one JSON document on stdout")

    parser = _Parser(prog="atlkctl", description="Translate epistemic ATL formulas to CTL with distributed knowledge.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("translate", parents=[common], help="eliminate cooperation modalities")
    p.add_argument("--in", dest="input", default="-", help="formula file (default: stdin)")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.INCOMPLETE.value)
    p.add_argument("--dict", help="write the atom dictionary to this file")
    p.add_argument("--trace", action="store_true", help="print every rewrite step on stderr")
    p.add_argument("--agent", dest="agents", action="append", help="extra agent to include in the action constraint")
    p.add_argument("--batch", action="store_true", help="one formula per line")
    p.set_defaults(handler=cmd_translate)

    p = sub.add_parser("check", parents=[common], help="evaluate a formula at the initial runs of a model")
    p.add_argument("--model", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--formula", help="formula file")
    src.add_argument("--expr", help="formula text")
    p.add_argument("--horizon", type=int, default=3)
    p.add_argument("--run", type=int, help="report only this initial run")
    p.add_argument("--budget", type=_positive, default=DEFAULT_BUDGET)
    p.set_defaults(handler=cmd_check)

    p = sub.add_parser("classify", parents=[common], help="print the fragment of each formula")
    p.add_argument("--in", dest="input", default="-")
    p.add_argument("--batch", action="store_true")
    p.set_defaults(handler=cmd_classify)

    p = sub.add_parser("roundtrip", parents=[common], help="check parse/render identity")
    p.add_argument("--in", dest="input", default="-")
    p.add_argument("--batch", action="store_true")
    p.set_defaults(handler=cmd_roundtrip)

    p = sub.add_parser("verify", parents=[common], help="run a differential property suite")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model")
    src.add_argument("--gen-seed", type=int)
    p.add_argument("--property", required=True, choices=SUITES)
    p.add_argument("--horizon", type=int, default=3)
    p.add_argument("--count", type=_positive, default=1)
    p.add_argument("--jobs", type=_positive, default=1)
    p.add_argument("--budget", type=_positive, default=DEFAULT_BUDGET, help="maximum number of strategies to enumerate")
    p.add_argument("--skip-over-budget", action="store_true", help="skip over-budget checks instead of failing")
    p.add_argument("--inject-fault", action="store_true", help="negate cooperation verdicts to exercise the failure path")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("gen", parents=[common], help="write a random model")
    p.add_argument("--agents", type=_positive, required=True)
    p.add_argument("--states", type=_positive, required=True)
    p.add_argument("--actions", type=_positive, required=True)
    p.add_argument("--props", type=_positive, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--env-states", type=_positive, default=1)
    p.add_argument("--env-actions", type=_positive, default=1)
    p.add_argument("--initial", type=_positive, default=1)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_gen)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (InputError, DomainError, OracleError) as exc:
        print(f"atlkctl: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
