"""Approximation-equation generation for functional rewrite systems.

The generated set is the union of one equation per rewrite rule, one
reflexivity equation per signature symbol, and user-supplied contraction
equations over constructor terms.  The census estimates whether the
contraction equations collapse the constructor terms into finitely many
classes, which is what makes completion terminate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .rewriting import TRS, Equation, equation_single_steps
from .terms import App, Signature, Var, ground_terms, sort_key


@dataclass(frozen=True)
class SymbolSplit:
    defined: frozenset
    constructors: frozenset

    def constructor_signature(self) -> Signature:
        return Signature(self.constructors)


@dataclass(frozen=True)
class CensusResult:
    representatives: tuple
    stable: bool


def split_symbols(trs: TRS) -> SymbolSplit:
    """Defined symbols are the root symbols of left-hand sides."""
    defined = frozenset(rule.lhs.symbol for rule in trs.rules)
    constructors = frozenset(s for s in trs.signature if s not in defined)
    return SymbolSplit(defined, constructors)


def generate_equations(trs: TRS, contraction=()) -> list[Equation]:
    """E = {l = r per rule} + {f(x1..xn) = f(x1..xn) per symbol} + contraction."""
    split = split_symbols(trs)
    defined_names = {s.name for s in split.defined}
    out: list[Equation] = []
    for rule in trs.rules:
        out.append(Equation(rule.lhs, rule.rhs))
    for sym in trs.signature:
        args = tuple(Var(f"v{i + 1}") for i in range(sym.arity))
        side = App(sym, args)
        out.append(Equation(side, side))
    for eq in contraction:
        used = _symbol_names(eq.lhs) | _symbol_names(eq.rhs)
        if used & defined_names:
            warnings.warn(
                f"contraction equation {eq!r} mentions defined symbols "
                f"{sorted(used & defined_names)}; expected constructor terms only",
                stacklevel=2,
            )
        out.append(eq)
    seen = set()
    unique = []
    for eq in out:
        if eq not in seen:
            seen.add(eq)
            unique.append(eq)
    return unique


def _symbol_names(t) -> set[str]:
    if isinstance(t, App):
        names = {t.symbol.name}
        for c in t.args:
            names |= _symbol_names(c)
        return names
    return set()


def class_census(split: SymbolSplit, contraction, max_size: int) -> CensusResult:
    """Partition constructor terms up to `max_size` by the contraction
    equations and report canonical (smallest) class representatives.

    The census is flagged stable when the representative set did not change
    from the previous size, or when no constructor terms above `max_size`
    exist at all; a growing census suggests infinitely many classes.
    """
    reps = _representatives(split, contraction, max_size)
    if max_size >= 2:
        stable = reps == _representatives(split, contraction, max_size - 1)
    else:
        stable = False
    if not stable:
        sig = split.constructor_signature()
        max_arity = max((s.arity for s in sig), default=0)
        probe = range(max_size + 1, max_size + max_arity + 2)
        if all(not _has_terms_of_size(sig, k) for k in probe):
            stable = True  # the constructor language itself is exhausted
    return CensusResult(tuple(reps), stable)


def _representatives(split: SymbolSplit, contraction, max_size: int) -> list:
    sig = split.constructor_signature()
    universe = ground_terms(sig, max_size)
    index = {t: i for i, t in enumerate(universe)}
    parent = list(range(len(universe)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for t in universe:
        for u in equation_single_steps(contraction, t, max_size, sig):
            if u in index:
                a, b = find(index[t]), find(index[u])
                if a != b:
                    parent[max(a, b)] = min(a, b)

    classes: dict[int, list] = {}
    for t in universe:
        classes.setdefault(find(index[t]), []).append(t)
    reps = [min(members, key=sort_key) for members in classes.values()]
    reps.sort(key=sort_key)
    return reps


def _has_terms_of_size(sig: Signature, k: int) -> bool:
    return _size_counts(sig, k)[k] > 0


def _size_counts(sig: Signature, max_size: int) -> list[int]:
    counts = [0] * (max_size + 1)
    for k in range(1, max_size + 1):
        for sym in sig:
            if sym.arity == 0:
                if k == 1:
                    counts[k] += 1
                continue
            total = 0
            for parts in _compositions(k - 1, sym.arity):
                prod = 1
                for p in parts:
                    prod *= counts[p]
                total += prod
            counts[k] += total
    return counts


def _compositions(total: int, parts: int):
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest
