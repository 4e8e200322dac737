"""Bottom-up tree automata with colored epsilon transitions.

States may carry a pair structure (approximation state, normal-form state);
the product construction creates those.  Epsilon transitions are always
colored R or E: the inputs of the engine are epsilon-free and completion
only ever adds colored ones.

An automaton value that is shared is treated as immutable; the completion
engine mutates only the private working copy returned by `copy()`.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional

from .terms import (
    App,
    Signature,
    Symbol,
    UnknownSymbolError,
    Var,
    sort_key,
)

COLOR_R = "R"
COLOR_E = "E"
COLORS = (COLOR_R, COLOR_E)


class AutomatonError(Exception):
    pass


class SignatureMismatchError(AutomatonError):
    pass


class NotPairAutomatonError(AutomatonError):
    pass


@dataclass(frozen=True)
class State:
    name: str
    pair: Optional[tuple] = None

    @property
    def left(self) -> "State":
        if self.pair is None:
            raise NotPairAutomatonError(f"state {self.name} has no pair structure")
        return self.pair[0]

    @property
    def right(self) -> "State":
        if self.pair is None:
            raise NotPairAutomatonError(f"state {self.name} has no pair structure")
        return self.pair[1]

    def __repr__(self):
        if self.pair is None:
            return self.name
        return f"<{self.pair[0]!r},{self.pair[1]!r}>"


def pair_state(left: State, right: State) -> State:
    return State(f"{left.name}.{right.name}", (left, right))


def state_key(s: State):
    if s.pair is None:
        return (0, s.name)
    return (1, state_key(s.pair[0]), state_key(s.pair[1]))


@dataclass(frozen=True)
class Delta:
    symbol: Symbol
    args: tuple
    target: State

    def __repr__(self):
        if not self.args:
            return f"{self.symbol.name} -> {self.target!r}"
        inner = ",".join(repr(a) for a in self.args)
        return f"{self.symbol.name}({inner}) -> {self.target!r}"


@dataclass(frozen=True)
class Epsilon:
    source: State
    target: State
    color: str

    def __repr__(self):
        return f"{self.source!r} ->{self.color} {self.target!r}"


def delta_key(d: Delta):
    return (d.symbol.name, tuple(state_key(a) for a in d.args), state_key(d.target))


def eps_key(e: Epsilon):
    return (state_key(e.source), state_key(e.target), e.color)


def config_key(c):
    """Sort key for configurations (terms whose leaves may be states)."""
    if isinstance(c, State):
        return (1, state_key(c))
    if isinstance(c, Var):
        return (0, c.name)
    return (2, c.symbol.name, tuple(config_key(x) for x in c.args))


class TreeAutomaton:
    def __init__(
        self,
        signature: Signature,
        states: Iterable[State] = (),
        finals: Iterable[State] = (),
        deltas: Iterable[Delta] = (),
        epsilons: Iterable[Epsilon] = (),
    ):
        self.signature = signature
        self._states: set[State] = set()
        self._finals: set[State] = set()
        self._deltas: set[Delta] = set()
        self._eps: set[Epsilon] = set()
        self._deltas_by_symbol: dict[str, set[Delta]] = defaultdict(set)
        self._targets_by_lhs: dict[tuple, set[State]] = defaultdict(set)
        self._deltas_by_arg: dict[State, set[Delta]] = defaultdict(set)
        self._eps_by_source: dict[State, set[Epsilon]] = defaultdict(set)
        self._closure_cache: dict[State, frozenset] = {}
        for s in states:
            self.add_state(s)
        for d in deltas:
            self.add_delta(d.symbol, d.args, d.target)
        for e in epsilons:
            self.add_epsilon(e.source, e.target, e.color)
        for f in finals:
            self.make_final(f)

    # -- construction ------------------------------------------------------

    def add_state(self, s: State) -> bool:
        if s in self._states:
            return False
        self._states.add(s)
        return True

    def make_final(self, s: State) -> None:
        self.add_state(s)
        self._finals.add(s)

    def add_delta(self, symbol: Symbol, args: tuple, target: State) -> tuple[Delta, bool]:
        if symbol.name not in self.signature:
            raise UnknownSymbolError(f"unknown symbol {symbol.name!r}")
        if len(args) != symbol.arity:
            raise AutomatonError(f"{symbol!r} applied to {len(args)} states")
        d = Delta(symbol, tuple(args), target)
        if d in self._deltas:
            return d, False
        for s in d.args:
            self.add_state(s)
        self.add_state(target)
        self._deltas.add(d)
        self._deltas_by_symbol[symbol.name].add(d)
        self._targets_by_lhs[(symbol.name, d.args)].add(target)
        for s in set(d.args):
            self._deltas_by_arg[s].add(d)
        return d, True

    def add_epsilon(self, source: State, target: State, color: str) -> tuple[Epsilon, bool]:
        if color not in COLORS:
            raise AutomatonError(f"epsilon transitions must be colored R or E, got {color!r}")
        if source == target:
            raise AutomatonError("self-loop epsilon transition")
        e = Epsilon(source, target, color)
        if e in self._eps:
            return e, False
        self.add_state(source)
        self.add_state(target)
        self._eps.add(e)
        self._eps_by_source[source].add(e)
        self._closure_cache.clear()
        return e, True

    def copy(self) -> "TreeAutomaton":
        return TreeAutomaton(self.signature, self._states, self._finals, self._deltas, self._eps)

    # -- views -------------------------------------------------------------

    @property
    def states(self) -> frozenset:
        return frozenset(self._states)

    @property
    def finals(self) -> frozenset:
        return frozenset(self._finals)

    @property
    def deltas(self) -> frozenset:
        return frozenset(self._deltas)

    @property
    def epsilons(self) -> frozenset:
        return frozenset(self._eps)

    @property
    def transition_count(self) -> int:
        return len(self._deltas) + len(self._eps)

    def deltas_of(self, symbol_name: str) -> set[Delta]:
        return self._deltas_by_symbol.get(symbol_name, set())

    def delta_targets(self, symbol_name: str, args: tuple) -> set[State]:
        return self._targets_by_lhs.get((symbol_name, args), set())

    def deltas_with_arg(self, s: State) -> set[Delta]:
        return self._deltas_by_arg.get(s, set())

    def eps_from(self, s: State) -> set[Epsilon]:
        return self._eps_by_source.get(s, set())

    def __repr__(self):
        return (
            f"TreeAutomaton({len(self._states)} states, {len(self._finals)} final, "
            f"{len(self._deltas)} delta, {len(self._eps)} epsilon)"
        )

    # -- recognition -------------------------------------------------------

    def closure(self, s: State, color: Optional[str] = None) -> frozenset:
        """Epsilon closure of a state (restricted to one color if given),
        including the state itself."""
        key = (s, color)
        cached = self._closure_cache.get(key)
        if cached is not None:
            return cached
        visited = {s}
        stack = [s]
        while stack:
            cur = stack.pop()
            for e in self._eps_by_source.get(cur, ()):
                if color is not None and e.color != color:
                    continue
                if e.target not in visited:
                    visited.add(e.target)
                    stack.append(e.target)
        out = frozenset(visited)
        self._closure_cache[key] = out
        return out

    def inverse_closure(self, s: State, color: Optional[str] = None) -> frozenset:
        return frozenset(q for q in self._states if s in self.closure(q, color))

    def derive_states(self, config) -> frozenset:
        """All states recognizing `config`, bottom-up with epsilon closure."""
        memo: dict = {}

        def go(c) -> frozenset:
            res = memo.get(c)
            if res is not None:
                return res
            if isinstance(c, State):
                if c not in self._states:
                    raise AutomatonError(f"state {c!r} not in automaton")
                res = self.closure(c)
            elif isinstance(c, Var):
                raise AutomatonError(f"configuration contains variable {c.name}")
            else:
                if c.symbol.name not in self.signature:
                    raise UnknownSymbolError(f"unknown symbol {c.symbol.name!r}")
                child = [go(x) for x in c.args]
                acc: set = set()
                for d in self._deltas_by_symbol.get(c.symbol.name, ()):
                    if d.target not in acc and all(
                        d.args[i] in child[i] for i in range(len(child))
                    ):
                        acc.update(self.closure(d.target))
                res = frozenset(acc)
            memo[c] = res
            return res

        return go(config)

    def recognizes(self, t, state: State) -> bool:
        return state in self.derive_states(t)

    def recognizes_any(self, t, states: Iterable[State]) -> bool:
        derived = self.derive_states(t)
        return any(s in derived for s in states)

    def member(self, t) -> bool:
        return self.recognizes_any(t, self._finals)

    # -- language queries ----------------------------------------------------

    def _language_table(self, max_size: int) -> dict:
        """state -> size -> set of terms, by bottom-up dynamic programming."""
        table: dict[State, dict[int, set]] = {s: defaultdict(set) for s in self._states}
        for k in range(1, max_size + 1):
            for d in self._deltas:
                n = d.symbol.arity
                if n == 0:
                    if k == 1:
                        table[d.target][1].add(App(d.symbol))
                    continue
                for parts in _compositions(k - 1, n):
                    pools = [sorted(table[d.args[i]][parts[i]], key=sort_key) for i in range(n)]
                    if any(not p for p in pools):
                        continue
                    for combo in _cartesian(pools):
                        table[d.target][k].add(App(d.symbol, tuple(combo)))
            # propagate along epsilon transitions at this size
            changed = True
            while changed:
                changed = False
                for e in self._eps:
                    src = table[e.source][k]
                    if src - table[e.target][k]:
                        table[e.target][k] |= src
                        changed = True
        return table

    def enumerate_language(self, targets: Iterable[State], max_size: int) -> list:
        table = self._language_table(max_size)
        out: set = set()
        for s in targets:
            if s in table:
                for bucket in table[s].values():
                    out |= bucket
        return sorted(out, key=sort_key)

    def accessible_states(self) -> frozenset:
        acc: set = set()
        changed = True
        while changed:
            changed = False
            for d in self._deltas:
                if d.target not in acc and all(a in acc for a in d.args):
                    acc.add(d.target)
                    changed = True
            for e in self._eps:
                if e.source in acc and e.target not in acc:
                    acc.add(e.target)
                    changed = True
        return frozenset(acc)

    def shortest_witness(self, targets: Iterable[State]):
        """A smallest term recognized by any target state, or None."""
        targets = [s for s in targets if s in self._states]
        dist: dict[State, int] = {}
        changed = True
        while changed:
            changed = False
            for d in self._deltas:
                if all(a in dist for a in d.args):
                    cand = 1 + sum(dist[a] for a in d.args)
                    if cand < dist.get(d.target, 1 << 30):
                        dist[d.target] = cand
                        changed = True
            for e in self._eps:
                if e.source in dist and dist[e.source] < dist.get(e.target, 1 << 30):
                    dist[e.target] = dist[e.source]
                    changed = True
        reachable = [s for s in targets if s in dist]
        if not reachable:
            return None
        best = min(dist[s] for s in reachable)
        terms = self.enumerate_language(reachable, best)
        return terms[0]

    def language_empty(self, targets: Iterable[State]) -> bool:
        return self.shortest_witness(targets) is None

    def prune_inaccessible(self) -> "TreeAutomaton":
        acc = self.accessible_states()
        return TreeAutomaton(
            self.signature,
            states=[s for s in self._states if s in acc],
            finals=[s for s in self._finals if s in acc],
            deltas=[d for d in self._deltas if d.target in acc and all(a in acc for a in d.args)],
            epsilons=[e for e in self._eps if e.source in acc and e.target in acc],
        )

    # -- structural predicates ----------------------------------------------

    def is_deterministic(self) -> bool:
        if self._eps:
            return False
        return all(len(ts) == 1 for ts in self._targets_by_lhs.values())

    def is_complete(self) -> bool:
        states = sorted(self._states, key=state_key)
        for sym in self.signature:
            for args in _tuples(states, sym.arity):
                if not self._targets_by_lhs.get((sym.name, args)):
                    return False
        return True

    def e_equivalent(self, q1: State, q2: State) -> bool:
        """Mutual single-step E-transitions (reflexive by convention)."""
        if q1 == q2:
            return True
        fwd = any(e.target == q2 and e.color == COLOR_E for e in self.eps_from(q1))
        bwd = any(e.target == q1 and e.color == COLOR_E for e in self.eps_from(q2))
        return fwd and bwd

    # -- derived automata -----------------------------------------------------

    def strip_color(self, color: str) -> "TreeAutomaton":
        return TreeAutomaton(
            self.signature,
            states=self._states,
            finals=self._finals,
            deltas=self._deltas,
            epsilons=[e for e in self._eps if e.color != color],
        )

    def project_left(self) -> "TreeAutomaton":
        for s in self._states:
            if s.pair is None:
                raise NotPairAutomatonError(f"state {s.name} is not a pair state")
        out = TreeAutomaton(self.signature)
        for s in self._states:
            out.add_state(s.left)
        for d in self._deltas:
            out.add_delta(d.symbol, tuple(a.left for a in d.args), d.target.left)
        for e in self._eps:
            if e.source.left != e.target.left:
                out.add_epsilon(e.source.left, e.target.left, e.color)
        for f in self._finals:
            out.make_final(f.left)
        return out

    def quotient(self, color: str = COLOR_E) -> "TreeAutomaton":
        """Merge states linked by mutual same-colored epsilon transitions."""
        parent: dict[State, State] = {s: s for s in self._states}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                lo, hi = sorted((ra, rb), key=state_key)
                parent[hi] = lo

        for e in self._eps:
            if e.color == color and any(
                b.target == e.source and b.color == color for b in self.eps_from(e.target)
            ):
                union(e.source, e.target)

        out = TreeAutomaton(self.signature)
        for s in self._states:
            out.add_state(find(s))
        for d in self._deltas:
            out.add_delta(d.symbol, tuple(find(a) for a in d.args), find(d.target))
        for e in self._eps:
            src, tgt = find(e.source), find(e.target)
            if src != tgt:
                out.add_epsilon(src, tgt, e.color)
        for f in self._finals:
            out.make_final(find(f))
        return out


def product(a: TreeAutomaton, b: TreeAutomaton) -> TreeAutomaton:
    """Product automaton; epsilon transitions pair with every opposite state."""
    if a.signature != b.signature:
        raise SignatureMismatchError("product requires identical signatures")
    out = TreeAutomaton(a.signature)
    for q in a.states:
        for p in b.states:
            out.add_state(pair_state(q, p))
    for sym in a.signature:
        for da in a.deltas_of(sym.name):
            for db in b.deltas_of(sym.name):
                args = tuple(pair_state(x, y) for x, y in zip(da.args, db.args))
                out.add_delta(da.symbol, args, pair_state(da.target, db.target))
    for e in a.epsilons:
        for p in b.states:
            out.add_epsilon(pair_state(e.source, p), pair_state(e.target, p), e.color)
    for e in b.epsilons:
        for q in a.states:
            out.add_epsilon(pair_state(q, e.source), pair_state(q, e.target), e.color)
    for qf in a.finals:
        for pf in b.finals:
            out.make_final(pair_state(qf, pf))
    return out


def _compositions(total: int, parts: int):
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _cartesian(pools):
    if not pools:
        yield ()
        return
    for head in pools[0]:
        for rest in _cartesian(pools[1:]):
            yield (head,) + rest


def _tuples(states, arity: int):
    if arity == 0:
        yield ()
        return
    for s in states:
        for rest in _tuples(states, arity - 1):
            yield (s,) + rest
