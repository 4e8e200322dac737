"""Deterministic complete recognizer for the irreducible terms of a TRS.

The construction is a subset automaton over left-hand-side fragments: the
state of an irreducible term is the set of proper non-variable lhs subterms
(canonicalized modulo variable renaming) that the term matches.  A term
matching a full left-hand side collapses into the unique non-final absorbing
state `red`; the empty fragment set recognizes terms that can only
contribute to a redex through a variable position.

Only left-linear systems are supported: matching a linear pattern is then a
function of the children's fragment sets, which is what makes the subset
construction deterministic.
"""

from __future__ import annotations

from itertools import product as iter_product

from .automata import State, TreeAutomaton
from .rewriting import TRS
from .terms import App, Var, positions, subterm_at


class NotLeftLinearError(Exception):
    pass


class NormalFormAutomaton:
    """Wraps the automaton with the deterministic transition table."""

    def __init__(self, automaton: TreeAutomaton, red: State, table: dict, fragments: dict):
        self.automaton = automaton
        self.red = red
        self._table = table
        self.fragments = fragments  # state -> frozenset of fragment patterns

    def next_state(self, symbol_name: str, args: tuple) -> State:
        return self._table[(symbol_name, args)]

    def eval_term(self, t) -> State:
        """The unique state a ground term (or state-leaved config) reaches."""
        if isinstance(t, State):
            return t
        if isinstance(t, Var):
            raise ValueError("cannot evaluate a term with variables")
        args = tuple(self.eval_term(c) for c in t.args)
        return self.next_state(t.symbol.name, args)

    @property
    def finals(self) -> frozenset:
        return self.automaton.finals


def _canonical(t):
    """Rename variables in order of first occurrence: _1, _2, ..."""
    mapping: dict[str, Var] = {}

    def go(u):
        if isinstance(u, Var):
            if u.name not in mapping:
                mapping[u.name] = Var(f"_{len(mapping) + 1}")
            return mapping[u.name]
        return App(u.symbol, tuple(go(c) for c in u.args))

    return go(t)


def _descriptor(pattern: App):
    """(symbol, per-child entry): None for a variable child, else the child
    pattern canonicalized standalone.  Valid because patterns are linear."""
    entries = tuple(
        None if isinstance(c, Var) else _canonical(c) for c in pattern.args
    )
    return pattern.symbol.name, entries


def build_airr(trs: TRS) -> NormalFormAutomaton:
    if not trs.left_linear:
        raise NotLeftLinearError("normal-form automaton requires a left-linear TRS")

    fragments: set = set()
    for rule in trs.rules:
        for pos in positions(rule.lhs):
            if pos == ():
                continue
            sub = subterm_at(rule.lhs, pos)
            if isinstance(sub, App):
                fragments.add(_canonical(sub))
    frag_desc = {f: _descriptor(f) for f in fragments}
    lhs_desc = [_descriptor(rule.lhs) for rule in trs.rules]

    red = State("p_red")
    states: dict[frozenset, State] = {}
    frag_sets: dict[State, frozenset] = {red: frozenset()}
    order: list[State] = []

    def state_for(fragset: frozenset) -> State:
        s = states.get(fragset)
        if s is None:
            s = State(f"p{len(states)}")
            states[fragset] = s
            frag_sets[s] = fragset
            order.append(s)
        return s

    def entry_matches(entry, arg: State) -> bool:
        return entry is None or entry in frag_sets[arg]

    table: dict[tuple, State] = {}
    red_live = False
    changed = True
    while changed:
        changed = False
        pool = list(order) + ([red] if red_live else [])
        for sym in trs.signature:
            for args in iter_product(pool, repeat=sym.arity):
                key = (sym.name, args)
                if key in table:
                    continue
                if any(a is red for a in args):
                    target = red
                elif any(
                    name == sym.name and all(map(entry_matches, entries, args))
                    for name, entries in lhs_desc
                ):
                    target = red
                else:
                    matched = frozenset(
                        f
                        for f, (name, entries) in frag_desc.items()
                        if name == sym.name and all(map(entry_matches, entries, args))
                    )
                    target = state_for(matched)
                table[key] = target
                if target is red:
                    red_live = True
                changed = True

    automaton = TreeAutomaton(trs.signature)
    for s in order:
        automaton.add_state(s)
        automaton.make_final(s)
    if red_live:
        automaton.add_state(red)
    for (name, args), target in table.items():
        automaton.add_delta(trs.signature.symbol(name), args, target)
    return NormalFormAutomaton(automaton, red, table, frag_sets)


def airr_state_of(airr: NormalFormAutomaton, t) -> State:
    return airr.eval_term(t)
