"""Rewrite relations, strategies, and bounded brute-force oracles.

The oracles here (`bounded_reachable`, `bounded_normal_forms`,
`bounded_class`, `bounded_reachable_modulo`) are the ground truth the test
suite compares the completion engine against.  They enumerate rewriting
naively and must stay independent of the automata machinery.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .terms import (
    App,
    ArityError,
    Signature,
    Symbol,
    TermError,
    Var,
    apply_substitution,
    ground_terms,
    is_ground,
    is_linear,
    match,
    positions,
    replace_at,
    size,
    subterm_at,
    var_names,
)


class RuleError(TermError):
    pass


class VariableLeftHandSideError(RuleError):
    pass


class Strategy(Enum):
    """General innermost, or innermost restricted to one redex order."""

    INNERMOST = "innermost"
    LEFTMOST = "leftmost"
    RIGHTMOST = "rightmost"


@dataclass(frozen=True)
class Rule:
    lhs: object
    rhs: object

    def __post_init__(self):
        # Variable left-hand sides make every term a redex and defeat the
        # normal-form automaton construction; reject them at load time.
        if isinstance(self.lhs, Var):
            raise VariableLeftHandSideError(f"rule lhs is a variable: {self.lhs}")
        extra = var_names(self.rhs) - var_names(self.lhs)
        if extra:
            raise RuleError(f"rhs variables {sorted(extra)} not bound by lhs")

    @property
    def left_linear(self) -> bool:
        return is_linear(self.lhs)

    def __repr__(self):
        return f"{self.lhs!r} -> {self.rhs!r}"


@dataclass(frozen=True)
class Equation:
    lhs: object
    rhs: object

    def __repr__(self):
        return f"{self.lhs!r} = {self.rhs!r}"


class TRS:
    def __init__(self, signature: Signature, rules: Iterable[Rule]):
        self.signature = signature
        self.rules: tuple[Rule, ...] = tuple(rules)
        for rule in self.rules:
            signature.check_term(rule.lhs)
            signature.check_term(rule.rhs)

    @property
    def left_linear(self) -> bool:
        return all(r.left_linear for r in self.rules)

    def __repr__(self):
        return f"TRS({len(self.rules)} rules)"


def redexes(trs: TRS, t) -> list[tuple[tuple, int, dict]]:
    """All (position, rule index, substitution) triples with a match."""
    out = []
    for pos in sorted(positions(t)):
        sub = subterm_at(t, pos)
        for i, rule in enumerate(trs.rules):
            sigma = match(rule.lhs, sub)
            if sigma is not None:
                out.append((pos, i, sigma))
    return out


def is_normal_form(trs: TRS, t) -> bool:
    for pos in positions(t):
        sub = subterm_at(t, pos)
        for rule in trs.rules:
            if match(rule.lhs, sub) is not None:
                return False
    return True


def one_step(trs: TRS, t) -> set:
    return {
        replace_at(t, pos, apply_substitution(trs.rules[i].rhs, sigma))
        for pos, i, sigma in redexes(trs, t)
    }


def innermost_one_step(trs: TRS, t, strategy: Strategy = Strategy.INNERMOST) -> set:
    """One innermost step; the ordered variants keep a single redex position.

    A redex is innermost when every strict subterm of it is a normal form
    (it suffices to check its immediate children).  Among innermost redex
    positions no one is a prefix of another, so comparing position words
    lexicographically is total: rightmost takes the maximum, leftmost the
    minimum.
    """
    inner = []
    for pos, i, sigma in redexes(trs, t):
        redex = subterm_at(t, pos)
        children = redex.args if isinstance(redex, App) else ()
        if all(is_normal_form(trs, c) for c in children):
            inner.append((pos, i, sigma))
    if not inner:
        return set()
    if strategy is Strategy.RIGHTMOST:
        chosen = max(p for p, _, _ in inner)
        inner = [r for r in inner if r[0] == chosen]
    elif strategy is Strategy.LEFTMOST:
        chosen = min(p for p, _, _ in inner)
        inner = [r for r in inner if r[0] == chosen]
    return {
        replace_at(t, pos, apply_substitution(trs.rules[i].rhs, sigma))
        for pos, i, sigma in inner
    }


def bounded_reachable(
    trs: TRS,
    seeds: Iterable,
    strategy: Optional[Strategy],
    max_steps: int,
    max_size: int,
) -> tuple[set, bool]:
    """BFS closure under the chosen step relation, discarding oversized terms.

    `strategy=None` means strategy-free rewriting.  Returns (terms, saturated);
    saturated is True iff the frontier emptied before `max_steps` and no term
    was thrown away for exceeding `max_size`.
    """

    def step(t):
        if strategy is None:
            return one_step(trs, t)
        return innermost_one_step(trs, t, strategy)

    seen = set()
    discarded = False
    frontier = []
    for s in seeds:
        if size(s) > max_size:
            discarded = True
        elif s not in seen:
            seen.add(s)
            frontier.append(s)
    steps = 0
    while frontier and steps < max_steps:
        nxt = []
        for t in frontier:
            for u in step(t):
                if size(u) > max_size:
                    discarded = True
                elif u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
        steps += 1
    saturated = not frontier and not discarded
    return seen, saturated


def bounded_normal_forms(
    trs: TRS,
    seeds: Iterable,
    strategy: Optional[Strategy],
    max_steps: int,
    max_size: int,
) -> set:
    reached, _ = bounded_reachable(trs, seeds, strategy, max_steps, max_size)
    return {t for t in reached if is_normal_form(trs, t)}


def _infer_signature(equations: Iterable[Equation], terms: Iterable) -> Signature:
    sig = Signature()

    def walk(t):
        if isinstance(t, App):
            sig.add(t.symbol)
            for c in t.args:
                walk(c)

    for eq in equations:
        walk(eq.lhs)
        walk(eq.rhs)
    for t in terms:
        walk(t)
    return sig


def equation_single_steps(
    equations: Iterable[Equation],
    t,
    max_size: int,
    signature: Optional[Signature] = None,
) -> set:
    """Terms one equation application away (both orientations, any position).

    Variables occurring only in the replacing side are instantiated with all
    ground terms that keep the result within `max_size`.
    """
    sig = signature or _infer_signature(equations, [t])
    out = set()
    oriented = []
    for eq in equations:
        oriented.append((eq.lhs, eq.rhs))
        oriented.append((eq.rhs, eq.lhs))
    for pos in positions(t):
        sub = subterm_at(t, pos)
        for left, right in oriented:
            sigma = match(left, sub)
            if sigma is None:
                continue
            missing = sorted(var_names(right) - {v.name for v in sigma})
            if not missing:
                u = replace_at(t, pos, apply_substitution(right, sigma))
                if size(u) <= max_size:
                    out.add(u)
                continue
            # Budget for the fresh variables: whatever room the skeleton
            # leaves under max_size, split across all their occurrences.
            skeleton = apply_substitution(right, sigma)
            base = size(t) - size(sub) + size(skeleton) - len(
                [v for v in _var_occurrences(skeleton) if v.name in missing]
            )
            budget = max_size - base
            if budget < len(missing):
                continue
            for extra in _assignments(missing, budget, sig):
                full = dict(sigma)
                full.update({Var(n): v for n, v in extra.items()})
                u = replace_at(t, pos, apply_substitution(right, full))
                if size(u) <= max_size:
                    out.add(u)
    return out


def _var_occurrences(t):
    if isinstance(t, Var):
        return [t]
    if isinstance(t, App):
        out = []
        for c in t.args:
            out.extend(_var_occurrences(c))
        return out
    return []


def _assignments(names: list[str], budget: int, sig: Signature):
    if not names:
        yield {}
        return
    head, rest = names[0], names[1:]
    for candidate in ground_terms(sig, budget - len(rest)):
        for tail in _assignments(rest, budget - size(candidate), sig):
            combo = {head: candidate}
            combo.update(tail)
            yield combo


def bounded_class(
    equations: Iterable[Equation],
    t,
    max_size: int,
    signature: Optional[Signature] = None,
) -> set:
    """Size-bounded approximation of the congruence class of `t`."""
    equations = tuple(equations)
    sig = signature or _infer_signature(equations, [t])
    seen = {t}
    frontier = [t]
    while frontier:
        nxt = []
        for cur in frontier:
            for u in equation_single_steps(equations, cur, max_size, sig):
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    return seen


def bounded_reachable_modulo(
    trs: TRS,
    equations: Iterable[Equation],
    seeds: Iterable,
    strategy: Optional[Strategy],
    max_steps: int,
    max_size: int,
) -> tuple[set, bool]:
    """Closure under the union of equation steps and strategy rewrite steps."""
    equations = tuple(equations)
    sig = trs.signature

    def step(t):
        if strategy is None:
            rew = one_step(trs, t)
        else:
            rew = innermost_one_step(trs, t, strategy)
        return rew | equation_single_steps(equations, t, max_size, sig)

    seen = set()
    discarded = False
    frontier = []
    for s in seeds:
        if size(s) > max_size:
            discarded = True
        elif s not in seen:
            seen.add(s)
            frontier.append(s)
    steps = 0
    while frontier and steps < max_steps:
        nxt = []
        for t in frontier:
            for u in step(t):
                if size(u) > max_size:
                    discarded = True
                elif u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
        steps += 1
    return seen, (not frontier and not discarded)
