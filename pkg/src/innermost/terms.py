"""First-order terms: signatures, variables, positions, substitution, matching.

Terms are immutable values with structural equality and a total ordering
(`sort_key`), so every set the engine iterates over can be walked in a
reproducible order.  Leaves are `Var`s or opaque constants (the automata
layer drops its states in as leaves, turning terms into configurations);
internal nodes are `App`s of a `Symbol`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional


class TermError(Exception):
    """Malformed term or misuse of a term operation."""


class InvalidPositionError(TermError):
    pass


class NonLinearPatternError(TermError):
    pass


class UnknownSymbolError(TermError):
    pass


class ArityError(TermError):
    pass


class NameClashError(TermError):
    pass


@dataclass(frozen=True)
class Symbol:
    name: str
    arity: int = 0

    def __post_init__(self):
        if not self.name:
            raise TermError("symbol name must be non-empty")
        if self.arity < 0:
            raise TermError(f"symbol {self.name!r} has negative arity")

    def __repr__(self):
        return f"{self.name}/{self.arity}"


class Signature:
    """Finite set of function symbols with pairwise distinct names."""

    def __init__(self, symbols: Iterable[Symbol] = ()):
        self._by_name: dict[str, Symbol] = {}
        for sym in symbols:
            self.add(sym)

    def add(self, symbol: Symbol) -> Symbol:
        old = self._by_name.get(symbol.name)
        if old is not None and old != symbol:
            raise NameClashError(
                f"symbol {symbol.name} declared with arity {symbol.arity}, "
                f"already has arity {old.arity}"
            )
        self._by_name[symbol.name] = symbol
        return symbol

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __iter__(self) -> Iterator[Symbol]:
        return iter(sorted(self._by_name.values(), key=lambda s: s.name))

    def __len__(self) -> int:
        return len(self._by_name)

    def __eq__(self, other) -> bool:
        return isinstance(other, Signature) and self._by_name == other._by_name

    def __repr__(self):
        return f"Signature({sorted(self._by_name)})"

    def get(self, name: str) -> Optional[Symbol]:
        return self._by_name.get(name)

    def symbol(self, name: str) -> Symbol:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownSymbolError(f"unknown symbol {name!r}") from None

    def constants(self) -> list[Symbol]:
        return [s for s in self if s.arity == 0]

    def check_term(self, t, variables: Optional[frozenset] = None) -> None:
        """Raise unless every symbol of `t` is declared with the right arity."""
        if isinstance(t, Var):
            if variables is not None and t.name not in variables:
                raise UnknownSymbolError(f"undeclared variable {t.name!r}")
            return
        if isinstance(t, App):
            declared = self.symbol(t.symbol.name)
            if declared.arity != t.symbol.arity:
                raise ArityError(
                    f"symbol {t.symbol.name} used with arity {t.symbol.arity}, "
                    f"declared {declared.arity}"
                )
            for child in t.args:
                self.check_term(child, variables)


@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class App:
    symbol: Symbol
    args: tuple = ()

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) != self.symbol.arity:
            raise ArityError(
                f"{self.symbol.name} expects {self.symbol.arity} arguments, "
                f"got {len(self.args)}"
            )

    def __repr__(self):
        if not self.args:
            return self.symbol.name
        return f"{self.symbol.name}({','.join(map(repr, self.args))})"


# A Term is a Var or an App; a configuration additionally allows opaque
# leaves (automaton states).  Position = tuple of 1-based child indices.
Term = object
Position = tuple


def app(symbol: Symbol, *args) -> App:
    return App(symbol, tuple(args))


def size(t) -> int:
    if isinstance(t, App):
        return 1 + sum(size(c) for c in t.args)
    return 1


def positions(t) -> set[Position]:
    out = {()}
    if isinstance(t, App):
        for i, child in enumerate(t.args, start=1):
            out.update((i,) + p for p in positions(child))
    return out


def subterm_at(t, pos: Position):
    for i in pos:
        if not isinstance(t, App) or not 1 <= i <= len(t.args):
            raise InvalidPositionError(f"position {pos} not in term")
        t = t.args[i - 1]
    return t


def replace_at(t, pos: Position, s):
    if not pos:
        return s
    i = pos[0]
    if not isinstance(t, App) or not 1 <= i <= len(t.args):
        raise InvalidPositionError(f"position {pos} not in term")
    new_args = list(t.args)
    new_args[i - 1] = replace_at(new_args[i - 1], pos[1:], s)
    return App(t.symbol, tuple(new_args))


def variables(t) -> list[Var]:
    """All variable occurrences, left to right (with duplicates)."""
    if isinstance(t, Var):
        return [t]
    if isinstance(t, App):
        out = []
        for child in t.args:
            out.extend(variables(child))
        return out
    return []


def var_names(t) -> frozenset[str]:
    return frozenset(v.name for v in variables(t))


def is_ground(t) -> bool:
    return not variables(t)


def is_linear(t) -> bool:
    occ = variables(t)
    return len(occ) == len(set(occ))


def apply_substitution(t, sigma: Mapping):
    """Homomorphic application; unbound variables map to themselves."""
    if isinstance(t, Var):
        return sigma.get(t, t)
    if isinstance(t, App):
        return App(t.symbol, tuple(apply_substitution(c, sigma) for c in t.args))
    return t


def match(pattern, subject) -> Optional[dict]:
    """First-order matching with consistent bindings (non-linear allowed)."""
    bindings: dict = {}

    def go(p, s) -> bool:
        if isinstance(p, Var):
            if p in bindings:
                return bindings[p] == s
            bindings[p] = s
            return True
        if isinstance(p, App):
            return (
                isinstance(s, App)
                and s.symbol == p.symbol
                and all(go(pc, sc) for pc, sc in zip(p.args, s.args))
            )
        return p == s  # opaque leaf: matches only itself

    return bindings if go(pattern, subject) else None


def match_pattern(pattern, subject) -> Optional[dict]:
    """Linear matching; rejects non-linear patterns outright."""
    if not is_linear(pattern):
        raise NonLinearPatternError(f"pattern {pattern!r} is not linear")
    return match(pattern, subject)


def sort_key(t):
    """Total order: size first, then symbol names, then children."""
    if isinstance(t, Var):
        return (0, t.name)
    if isinstance(t, App):
        return (2, size(t), t.symbol.name, tuple(sort_key(c) for c in t.args))
    return (1, repr(t))


def format_term(t) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, App):
        if not t.args:
            return t.symbol.name
        return f"{t.symbol.name}({','.join(format_term(c) for c in t.args)})"
    return str(t)


def ground_terms(signature: Signature, max_size: int) -> list:
    """All ground terms of size <= max_size, sorted by `sort_key`."""
    by_size: list[list] = [[] for _ in range(max_size + 1)]
    for k in range(1, max_size + 1):
        for sym in signature:
            if sym.arity == 0:
                if k == 1:
                    by_size[k].append(App(sym))
                continue
            for parts in _compositions(k - 1, sym.arity):
                if any(p < 1 for p in parts):
                    continue
                for combo in _product([by_size[p] for p in parts]):
                    by_size[k].append(App(sym, tuple(combo)))
    out = [t for bucket in by_size for t in bucket]
    out.sort(key=sort_key)
    return out


def _compositions(total: int, parts: int):
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _product(pools):
    if not pools:
        yield ()
        return
    for head in pools[0]:
        for rest in _product(pools[1:]):
            yield (head,) + rest
