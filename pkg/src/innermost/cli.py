"""Command-line front end.

Subcommands: `complete` runs equational completion and writes the fixpoint
automaton plus its two views; `airr` builds and prints the normal-form
automaton; `member` tests a term against a rendered automaton; `oracle`
cross-checks a completion run against the brute-force rewriting oracle.

Exit codes are a stable contract: 0 fixpoint/success, 1 input error,
2 resource limit, 3 non-member, 4 soundness violation.
"""

from __future__ import annotations

import argparse
import random
import sys
import warnings
from pathlib import Path

from . import completion as comp
from .equations import split_symbols
from .normal_forms import NotLeftLinearError, build_airr
from .rewriting import (
    Strategy,
    bounded_reachable,
    bounded_reachable_modulo,
    is_normal_form,
)
from .terms import TermError, format_term, ground_terms
from .timbuk import TimbukError, parse_spec, parse_term, render_automaton

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_LIMIT = 2
EXIT_NONMEMBER = 3
EXIT_UNSOUND = 4

STRATEGIES = {
    "innermost": Strategy.INNERMOST,
    "leftmost": Strategy.LEFTMOST,
    "rightmost": Strategy.RIGHTMOST,
}


class InputError(Exception):
    pass


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TimbukError, TermError, NotLeftLinearError, comp.ColoredInputError,
            InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="innermost",
        description="Reachability analysis of call-by-value rewriting by tree automata completion",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complete", help="run equational completion on a spec")
    p.add_argument("spec", type=Path)
    p.add_argument("--trs", required=True)
    p.add_argument("--automaton", required=True)
    p.add_argument("--equations", default=None)
    p.add_argument("--strategy", choices=sorted(STRATEGIES), default="innermost")
    p.add_argument("--max-steps", type=int, default=100)
    p.add_argument("--max-states", type=int, default=20000)
    p.add_argument("--enum-size", type=int, default=8)
    p.add_argument("--out", default=None, help="prefix for written automata files")
    p.add_argument("--report", choices=["text", "lines"], default="text")
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("airr", help="build the normal-form automaton of a TRS")
    p.add_argument("spec", type=Path)
    p.add_argument("--trs", required=True)
    p.add_argument("--check", action="store_true",
                   help="differential test against the brute-force normal-form oracle")
    p.add_argument("--check-size", type=int, default=8)
    p.add_argument("--check-count", type=int, default=500)
    p.set_defaults(func=cmd_airr)

    p = sub.add_parser("member", help="test membership of a term in an automaton file")
    p.add_argument("automaton", type=Path)
    p.add_argument("term")
    p.set_defaults(func=cmd_member)

    p = sub.add_parser("oracle", help="compare completion against the rewriting oracle")
    p.add_argument("spec", type=Path)
    p.add_argument("--trs", required=True)
    p.add_argument("--automaton", required=True)
    p.add_argument("--equations", default=None)
    p.add_argument("--strategy", choices=sorted(STRATEGIES), default="innermost")
    p.add_argument("--max-steps", type=int, default=100)
    p.add_argument("--max-states", type=int, default=20000)
    p.add_argument("--enum-size", type=int, default=8)
    p.add_argument("--oracle-steps", type=int, default=20)
    p.add_argument("--oracle-size", type=int, default=7)
    p.add_argument("--automaton-file", type=Path, default=None,
                   help="check a pre-computed reachable-view automaton instead of completing")
    p.set_defaults(func=cmd_oracle)

    return parser


def _load(args):
    spec = parse_spec(args.spec.read_text(encoding="utf-8"))
    if args.trs not in spec.trss:
        raise InputError(f"no TRS named {args.trs!r} in {args.spec}")
    trs = spec.trss[args.trs]
    a_init = None
    if getattr(args, "automaton", None) is not None:
        if args.automaton not in spec.automata:
            raise InputError(f"no automaton named {args.automaton!r} in {args.spec}")
        a_init = spec.automata[args.automaton]
    equations = ()
    if getattr(args, "equations", None) is not None:
        if args.equations not in spec.equation_sets:
            raise InputError(f"no equation set named {args.equations!r} in {args.spec}")
        equations = spec.equation_sets[args.equations]
    return spec, trs, a_init, equations


def cmd_complete(args) -> int:
    _, trs, a_init, equations = _load(args)
    strategy = STRATEGIES[args.strategy]
    result = comp.run(a_init, trs, equations, strategy,
                      max_steps=args.max_steps, max_states=args.max_states)
    for line in result.state.trace:
        print(line)
    stats = result.stats
    if args.report == "lines":
        for key, value in stats.items():
            print(f"{key}={value}")
    else:
        print(f"steps={stats['steps']} states={stats['states']} "
              f"transitions={stats['transitions']} cp-solved={stats['cp-solved']} "
              f"eq-applied={stats['eq-applied']}")
    fixpoint = result.outcome is comp.Outcome.FIXPOINT
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        reach = comp.reachable_view(result)
        norm = comp.normalized_view(result)
    if args.out is not None:
        for suffix, automaton in (
            (".fixpoint.tbk", result.automaton),
            (".reachable.tbk", reach),
            (".normalized.tbk", norm),
        ):
            Path(args.out + suffix).write_text(render_automaton(automaton), encoding="utf-8")
    if fixpoint:
        print("FIXPOINT")
        return EXIT_OK
    print(f"LIMIT ({result.outcome.value}: partial automaton, no soundness guarantee)")
    return EXIT_LIMIT


def cmd_airr(args) -> int:
    _, trs, _, _ = _load(args)
    airr = build_airr(trs)
    sys.stdout.write(render_automaton(airr.automaton))
    if args.check:
        terms = ground_terms(trs.signature, args.check_size)
        if len(terms) > args.check_count:
            rng = random.Random(0)
            terms = rng.sample(terms, args.check_count)
        for t in terms:
            red = airr.eval_term(t) == airr.red
            if red == is_normal_form(trs, t):
                print(f"error: normal-form disagreement on {format_term(t)}",
                      file=sys.stderr)
                return EXIT_INPUT
        print(f"check ok ({len(terms)} terms)")
    return EXIT_OK


def cmd_member(args) -> int:
    spec = parse_spec(args.automaton.read_text(encoding="utf-8"))
    if not spec.automata:
        raise InputError(f"no automaton found in {args.automaton}")
    name = sorted(spec.automata)[0]
    automaton = spec.automata[name]
    term = parse_term(args.term, spec.signature)
    if automaton.member(term):
        print("yes")
        return EXIT_OK
    print("no")
    return EXIT_NONMEMBER


def cmd_oracle(args) -> int:
    spec, trs, a_init, equations = _load(args)
    strategy = STRATEGIES[args.strategy]
    seeds = a_init.enumerate_language(a_init.finals, args.enum_size)
    if equations:
        oracle_set, saturated = bounded_reachable_modulo(
            trs, equations, seeds, strategy, args.oracle_steps, args.oracle_size)
    else:
        oracle_set, saturated = bounded_reachable(
            trs, seeds, strategy, args.oracle_steps, args.oracle_size)

    if args.automaton_file is not None:
        view_spec = parse_spec(args.automaton_file.read_text(encoding="utf-8"))
        if not view_spec.automata:
            raise InputError(f"no automaton found in {args.automaton_file}")
        view = view_spec.automata[sorted(view_spec.automata)[0]]
        outcome = "external"
    else:
        result = comp.run(a_init, trs, equations, strategy,
                          max_steps=args.max_steps, max_states=args.max_states)
        outcome = result.outcome.value
        if result.outcome is not comp.Outcome.FIXPOINT:
            print(f"outcome={outcome}")
            print("LIMIT (no comparison: partial automaton)")
            return EXIT_LIMIT
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            view = comp.reachable_view(result)

    missing = sorted(
        (t for t in oracle_set if not view.member(t)),
        key=format_term,
    )
    extra = []
    if saturated:
        # terms beyond the oracle size bound cannot be judged either way
        recognized = view.enumerate_language(
            view.finals, min(args.enum_size, args.oracle_size))
        extra = [t for t in recognized if t not in oracle_set]
    print(f"outcome={outcome}")
    print(f"oracle-terms={len(oracle_set)} saturated={str(saturated).lower()}")
    print(f"missing={len(missing)}")
    for t in missing:
        print(f"missing-term={format_term(t)}")
    print(f"extra={len(extra)}")
    for t in sorted(extra, key=format_term):
        print(f"extra-term={format_term(t)}")
    if missing:
        print("UNSOUND")
        return EXIT_UNSOUND
    print("SOUND")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
