"""Equational tree-automata completion specialized to call-by-value rewriting.

The engine works on a product automaton whose states pair an approximation
state with a state of the normal-form automaton, so recognition paths carry
reducibility information.  One completion step resolves every critical pair
found at step entry, then saturates the approximation equations.  Critical
pair resolution closes the rewrite square with a fresh state and an
R-colored epsilon transition, then propagates the newly irreducible state
into every embedding context via supplementary transition copies; the
rightmost/leftmost variants restrict those copies to contexts whose
remaining sibling arguments can be instantiated irreducibly.

The working automaton is private to the run; all published views are copies.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

from .automata import (
    COLOR_E,
    COLOR_R,
    Delta,
    Epsilon,
    State,
    TreeAutomaton,
    delta_key,
    eps_key,
    pair_state,
    product,
    state_key,
)
from .normal_forms import NormalFormAutomaton, build_airr
from .rewriting import TRS, Equation, Strategy
from .terms import App, Var, apply_substitution, var_names


class CompletionError(Exception):
    pass


class ColoredInputError(CompletionError):
    pass


class StateLimitError(CompletionError):
    pass


class Outcome(Enum):
    FIXPOINT = "fixpoint"
    STEP_LIMIT = "step-limit"
    STATE_LIMIT = "state-limit"


@dataclass(frozen=True)
class CriticalPair:
    rule_index: int
    rule: object
    sigma: tuple  # sorted (variable name, pair state) bindings
    target: State
    witness: tuple  # depth-1 child states of one qualifying recognition path

    def substitution(self) -> dict:
        return {Var(name): state for name, state in self.sigma}


@dataclass(frozen=True)
class EquationSituation:
    equation_index: int
    equation: Equation
    theta: tuple
    left: State
    right: State


@dataclass
class CompletionState:
    automaton: TreeAutomaton
    airr: NormalFormAutomaton
    trs: TRS
    init_finals: frozenset
    original_states: frozenset
    left_names: set = field(default_factory=set)
    fresh_counter: int = 0
    steps: int = 0
    cp_solved: int = 0
    eq_applied: int = 0
    trace: list = field(default_factory=list)

    def log(self, line: str) -> None:
        self.trace.append(line)


@dataclass
class CompletionResult:
    outcome: Outcome
    state: CompletionState

    @property
    def automaton(self) -> TreeAutomaton:
        return self.state.automaton

    @property
    def stats(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "steps": self.state.steps,
            "states": len(self.state.automaton.states),
            "transitions": self.state.automaton.transition_count,
            "cp-solved": self.state.cp_solved,
            "eq-applied": self.state.eq_applied,
        }


# ---------------------------------------------------------------------------
# initialisation


def init(a_init: TreeAutomaton, trs: TRS) -> CompletionState:
    """Pruned product of the initial automaton with the normal-form automaton."""
    if a_init.epsilons:
        raise ColoredInputError("initial automaton must not have epsilon transitions")
    airr = build_airr(trs)
    prod = product(a_init, airr.automaton).prune_inaccessible()
    state = CompletionState(
        automaton=prod,
        airr=airr,
        trs=trs,
        init_finals=frozenset(a_init.finals),
        original_states=frozenset(prod.states),
    )
    state.left_names = {s.left.name for s in prod.states} | {q.name for q in a_init.states}
    return state


def _fresh_left(state: CompletionState) -> State:
    while True:
        state.fresh_counter += 1
        name = f"n{state.fresh_counter}"
        if name not in state.left_names:
            state.left_names.add(name)
            return State(name)


def _right_projection(config):
    if isinstance(config, State):
        return config.right
    return App(config.symbol, tuple(_right_projection(c) for c in config.args))


# ---------------------------------------------------------------------------
# workspace: transition insertion plus supplementary closure

class _Workspace:
    """Buffers insertions and saturates the supplementary-transition closure.

    Whenever a state <q,p'> appears where <q,p_red> already exists, every
    transition mentioning <q,p_red> (as delta argument or epsilon source)
    must get a copy with the new right component, the copy's target right
    component recomputed through the normal-form automaton.  Symmetrically,
    a newly added transition that mentions some <z,p_red> must be copied for
    every already-existing counterpart <z,p'>.  Copies recurse until no new
    pair or transition remains.
    """

    def __init__(self, state: CompletionState, strategy: Strategy, max_states: Optional[int] = None):
        self.state = state
        self.automaton = state.automaton
        self.red = state.airr.red
        self.strategy = strategy
        self.max_states = max_states
        self.pending_states: deque = deque()
        self.pending_trans: deque = deque()
        self._by_left: dict[State, set[State]] = {}
        for s in self.automaton.states:
            self._by_left.setdefault(s.left, set()).add(s)

    # -- primitive insertions ------------------------------------------------

    def ensure_state(self, q_left: State, p_right: State) -> State:
        s = pair_state(q_left, p_right)
        if self.automaton.add_state(s):
            self._by_left.setdefault(q_left, set()).add(s)
            if q_left in self.state.init_finals and p_right != self.red:
                self.automaton.make_final(s)
            self.pending_states.append(s)
            if self.max_states is not None and len(self.automaton.states) > self.max_states:
                raise StateLimitError(f"more than {self.max_states} states")
        return s

    def add_delta(self, symbol, args: tuple, target: State) -> None:
        d, created = self.automaton.add_delta(symbol, args, target)
        if created:
            self.pending_trans.append(d)

    def add_epsilon(self, source: State, target: State, color: str) -> None:
        if source == target:
            return
        e, created = self.automaton.add_epsilon(source, target, color)
        if created:
            self.pending_trans.append(e)

    # -- closure ---------------------------------------------------------------

    def variants_of(self, q_left: State) -> list[State]:
        """Existing pair states of this left component with irreducible right."""
        return sorted(
            (s for s in self._by_left.get(q_left, ()) if s.right != self.red),
            key=state_key,
        )

    def drain(self) -> None:
        # E-colored transitions are deliberately left out of the copy
        # closure: equation application adds its own supplementary edges
        # between states existing at application time, and nothing more.
        while self.pending_states or self.pending_trans:
            if self.pending_states:
                s = self.pending_states.popleft()
                if s.right == self.red:
                    continue
                twin = pair_state(s.left, self.red)
                if twin not in self.automaton.states:
                    continue
                for d in sorted(self.automaton.deltas_with_arg(twin), key=delta_key):
                    self._copy_delta(d, twin, s)
                for e in sorted(self.automaton.eps_from(twin), key=eps_key):
                    if e.color == COLOR_R:
                        self._copy_epsilon(e, s)
                continue
            tr = self.pending_trans.popleft()
            if isinstance(tr, Delta):
                for i, a in enumerate(tr.args):
                    if a.right == self.red:
                        for twin in self.variants_of(a.left):
                            self._copy_delta_at(tr, i, twin)
            else:
                if tr.color == COLOR_R and tr.source.right == self.red:
                    for twin in self.variants_of(tr.source.left):
                        self._copy_epsilon(tr, twin)

    def _copy_delta(self, d: Delta, old: State, new: State) -> None:
        for i, a in enumerate(d.args):
            if a == old:
                self._copy_delta_at(d, i, new)

    def _copy_delta_at(self, d: Delta, i: int, replacement: State) -> None:
        base = list(d.args)
        base[i] = replacement
        if self.strategy is Strategy.RIGHTMOST:
            spans = range(i + 1, len(base))
        elif self.strategy is Strategy.LEFTMOST:
            spans = range(0, i)
        else:
            spans = ()
        pools = []
        for j in spans:
            options = self.variants_of(d.args[j].left)
            if not options:
                return  # no irreducible instantiation for a required sibling
            pools.append((j, options))
        for combo in _choices(pools):
            args = list(base)
            for j, s in combo:
                args[j] = s
            rights = tuple(a.right for a in args)
            p_target = self.state.airr.next_state(d.symbol.name, rights)
            target = self.ensure_state(d.target.left, p_target)
            self.add_delta(d.symbol, tuple(args), target)

    def _copy_epsilon(self, e: Epsilon, replacement_source: State) -> None:
        p = replacement_source.right
        target = self.ensure_state(e.target.left, p)
        self.add_epsilon(replacement_source, target, e.color)


def _choices(pools):
    if not pools:
        yield ()
        return
    j, options = pools[0]
    for s in options:
        for rest in _choices(pools[1:]):
            yield ((j, s),) + rest


# ---------------------------------------------------------------------------
# critical pairs


def _make_matcher(automaton: TreeAutomaton, color: Optional[str] = None):
    """Memoized bottom-up matcher: substitutions sending a pattern into a state.

    `color` restricts which epsilon transitions recognition may traverse:
    None means all (used for critical pairs, which must see through earlier
    rewrite steps), COLOR_E means only already-merged equational classes
    (used for equation situations; traversing R-transitions there would
    identify a term with its rewrite descendants).
    """
    inverse: dict[State, list[State]] = {}
    for z in sorted(automaton.states, key=state_key):
        for t in automaton.closure(z, color):
            inverse.setdefault(t, []).append(z)
    memo: dict = {}

    def match_into(pattern, target: State) -> tuple:
        key = (pattern, target)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(pattern, Var):
            result = tuple({pattern.name: z} for z in inverse.get(target, ()))
        else:
            found = []
            for d in automaton.deltas_of(pattern.symbol.name):
                if target not in automaton.closure(d.target, color):
                    continue
                partial = [{}]
                for child, arg in zip(pattern.args, d.args):
                    child_matches = match_into(child, arg)
                    if not child_matches:
                        partial = []
                        break
                    partial = _merge_all(partial, child_matches)
                found.extend(partial)
            result = _dedup(found)
        memo[key] = result
        return result

    return match_into


def _merge_all(acc: list, extensions: tuple) -> list:
    out = []
    for base in acc:
        for ext in extensions:
            merged = dict(base)
            ok = True
            for k, v in ext.items():
                if merged.get(k, v) != v:
                    ok = False
                    break
                merged[k] = v
            if ok:
                out.append(merged)
    return out


def _dedup(sigmas: list) -> tuple:
    seen = set()
    out = []
    for s in sigmas:
        key = tuple(sorted((k, state_key(v)) for k, v in s.items()))
        if key not in seen:
            seen.add(key)
            out.append(s)
    return tuple(out)


def _sigma_tuple(sigma: dict) -> tuple:
    return tuple(sorted(sigma.items(), key=lambda kv: kv[0]))


def find_critical_pairs(state: CompletionState) -> list[CriticalPair]:
    """All innermost critical pairs of the current automaton, in canonical order.

    A pair qualifies if some recognition path of the instantiated left-hand
    side has only irreducible right components at depth 1 (condition 3 is
    existential over paths) and the right-hand side is not yet recognized at
    any pairing of the target's approximation state (condition 2).
    """
    automaton = state.automaton
    red = state.airr.red
    match_into = _make_matcher(automaton)
    candidates: dict = {}
    for idx, rule in enumerate(state.trs.rules):
        lhs = rule.lhs
        for d in sorted(automaton.deltas_of(lhs.symbol.name), key=delta_key):
            sigmas = [{}]
            for child, arg in zip(lhs.args, d.args):
                child_matches = match_into(child, arg)
                if not child_matches:
                    sigmas = []
                    break
                sigmas = _merge_all(sigmas, child_matches)
            if not sigmas:
                continue
            irr_children = all(a.right != red for a in d.args)
            for sigma in _dedup(sigmas):
                st = _sigma_tuple(sigma)
                for target in automaton.closure(d.target):
                    rec = candidates.setdefault((idx, st, target), [False, d.args])
                    if irr_children and not rec[0]:
                        rec[0] = True
                        rec[1] = d.args
    out = []
    for (idx, st, target), (cond3, witness) in candidates.items():
        if not cond3 or target.right != red:
            continue
        rule = state.trs.rules[idx]
        rhs_config = apply_substitution(rule.rhs, {Var(k): v for k, v in st})
        derived = automaton.derive_states(rhs_config)
        if any(s.left == target.left for s in derived):
            continue  # condition 2: already recognized at this approximation state
        out.append(CriticalPair(idx, rule, st, target, tuple(witness)))
    out.sort(
        key=lambda cp: (
            cp.rule_index,
            tuple((k, state_key(v)) for k, v in cp.sigma),
            state_key(cp.target),
        )
    )
    return out


def _still_unsolved(state: CompletionState, cp: CriticalPair) -> bool:
    rhs_config = apply_substitution(cp.rule.rhs, cp.substitution())
    derived = state.automaton.derive_states(rhs_config)
    return not any(s.left == cp.target.left for s in derived)


def resolve_critical_pair(
    state: CompletionState,
    cp: CriticalPair,
    strategy: Strategy = Strategy.INNERMOST,
    max_states: Optional[int] = None,
) -> None:
    """Close the rewrite square for one critical pair and saturate copies."""
    ws = _Workspace(state, strategy, max_states)
    rhs_config = apply_substitution(cp.rule.rhs, cp.substitution())
    if isinstance(rhs_config, State):
        target = ws.ensure_state(cp.target.left, rhs_config.right)
        ws.add_epsilon(rhs_config, target, COLOR_R)
    else:
        p_rhs = state.airr.eval_term(_right_projection(rhs_config))
        fresh = ws.ensure_state(_fresh_left(state), p_rhs)
        _normalize_into(ws, rhs_config, fresh)
        target = ws.ensure_state(cp.target.left, p_rhs)
        ws.add_epsilon(fresh, target, COLOR_R)
    ws.drain()
    state.cp_solved += 1


def _normalize_into(ws: _Workspace, config: App, target: State) -> None:
    """Bottom-up normalisation reusing existing transitions where possible."""

    def norm_sub(c):
        if isinstance(c, State):
            return c
        args = tuple(norm_sub(x) for x in c.args)
        existing = ws.automaton.delta_targets(c.symbol.name, args)
        if existing:
            return min(existing, key=state_key)
        p = ws.state.airr.next_state(c.symbol.name, tuple(a.right for a in args))
        q = ws.ensure_state(_fresh_left(ws.state), p)
        ws.add_delta(c.symbol, args, q)
        return q

    args = tuple(norm_sub(x) for x in config.args)
    ws.add_delta(config.symbol, args, target)


def normalize(state: CompletionState, config: App, target: State,
              strategy: Strategy = Strategy.INNERMOST) -> set[Delta]:
    """Public normalisation entry point; returns the delta transitions added."""
    before = state.automaton.deltas
    ws = _Workspace(state, strategy)
    state.automaton.add_state(target)
    _normalize_into(ws, config, target)
    ws.drain()
    return state.automaton.deltas - before


# ---------------------------------------------------------------------------
# equations


def find_equation_situations(
    state: CompletionState, equations: Sequence[Equation]
) -> list[EquationSituation]:
    """Situations of application: both sides recognized with a common
    substitution, identical right components, states not yet E-linked.

    Recognition here traverses delta transitions and E-colored epsilon
    transitions only; see `_make_matcher`.
    """
    automaton = state.automaton
    match_into = _make_matcher(automaton, COLOR_E)

    def side_matches(side) -> list[tuple[State, dict]]:
        out = []
        if isinstance(side, Var):
            for z in sorted(automaton.states, key=state_key):
                for tgt in automaton.closure(z, COLOR_E):
                    out.append((tgt, {side.name: z}))
            return out
        for d in sorted(automaton.deltas_of(side.symbol.name), key=delta_key):
            sigmas = [{}]
            for child, arg in zip(side.args, d.args):
                child_matches = match_into(child, arg)
                if not child_matches:
                    sigmas = []
                    break
                sigmas = _merge_all(sigmas, child_matches)
            for sigma in _dedup(sigmas):
                for tgt in automaton.closure(d.target, COLOR_E):
                    out.append((tgt, sigma))
        return out

    found = []
    seen = set()
    for idx, eq in enumerate(equations):
        shared = sorted(var_names(eq.lhs) & var_names(eq.rhs))
        left_matches = side_matches(eq.lhs)
        right_index: dict = {}
        for s2, sigma2 in side_matches(eq.rhs):
            key = tuple((v, state_key(sigma2[v])) for v in shared)
            right_index.setdefault(key, []).append((s2, sigma2))
        for s1, sigma1 in left_matches:
            key = tuple((v, state_key(sigma1[v])) for v in shared)
            for s2, sigma2 in right_index.get(key, ()):
                if s1 == s2 or s1.right != s2.right:
                    continue
                if automaton.e_equivalent(s1, s2):
                    continue
                theta = dict(sigma1)
                theta.update(sigma2)
                ident = (idx, _sigma_tuple(theta), s1, s2)
                if ident in seen:
                    continue
                seen.add(ident)
                found.append(EquationSituation(idx, eq, _sigma_tuple(theta), s1, s2))
    found.sort(
        key=lambda sit: (
            sit.equation_index,
            state_key(sit.left),
            state_key(sit.right),
            tuple((k, state_key(v)) for k, v in sit.theta),
        )
    )
    return found


def apply_equation(
    state: CompletionState,
    situation: EquationSituation,
    strategy: Strategy = Strategy.INNERMOST,
    max_states: Optional[int] = None,
) -> None:
    """Link the two states with E-transitions, in every shared right component."""
    ws = _Workspace(state, strategy, max_states)
    q1, q2 = situation.left.left, situation.right.left
    shared_rights = sorted(
        {s.right for s in ws._by_left.get(q1, ())}
        & {s.right for s in ws._by_left.get(q2, ())},
        key=state_key,
    )
    for p in shared_rights:
        a, b = pair_state(q1, p), pair_state(q2, p)
        ws.add_epsilon(a, b, COLOR_E)
        ws.add_epsilon(b, a, COLOR_E)
    ws.drain()
    state.eq_applied += 1


# ---------------------------------------------------------------------------
# the completion loop


def step(
    state: CompletionState,
    equations: Sequence[Equation] = (),
    strategy: Strategy = Strategy.INNERMOST,
    max_states: Optional[int] = None,
    _pairs: Optional[list] = None,
    _first_situations: Optional[list] = None,
) -> dict:
    """Resolve all critical pairs found at entry, then saturate equations."""
    pairs = find_critical_pairs(state) if _pairs is None else _pairs
    solved = 0
    for cp in pairs:
        if not _still_unsolved(state, cp):
            continue
        resolve_critical_pair(state, cp, strategy, max_states)
        solved += 1
    eq_found = None
    applied = 0
    while True:
        if _first_situations is not None and eq_found is None and solved == 0:
            situations = _first_situations
        else:
            situations = find_equation_situations(state, equations)
        if eq_found is None:
            eq_found = len(situations)
        acted = 0
        for sit in situations:
            if state.automaton.e_equivalent(sit.left, sit.right):
                continue
            apply_equation(state, sit, strategy, max_states)
            acted += 1
        applied += acted
        if acted == 0:
            break
    state.steps += 1
    state.log(
        f"step={state.steps} cp-solved={solved} eq-applied={applied} "
        f"states={len(state.automaton.states)} transitions={state.automaton.transition_count}"
    )
    return {"cp_found": len(pairs), "cp_solved": solved, "eq_found": eq_found, "eq_applied": applied}


def run(
    a_init: TreeAutomaton,
    trs: TRS,
    equations: Sequence[Equation] = (),
    strategy: Strategy = Strategy.INNERMOST,
    max_steps: int = 100,
    max_states: int = 20000,
) -> CompletionResult:
    """Iterate completion steps until fixpoint or a resource limit trips."""
    state = init(a_init, trs)
    outcome = Outcome.STEP_LIMIT
    try:
        while True:
            pairs = find_critical_pairs(state)
            situations = find_equation_situations(state, equations)
            if not pairs and not situations:
                outcome = Outcome.FIXPOINT
                break
            if state.steps >= max_steps:
                outcome = Outcome.STEP_LIMIT
                break
            step(
                state,
                equations,
                strategy,
                max_states,
                _pairs=pairs,
                _first_situations=situations,
            )
            if len(state.automaton.states) > max_states:
                outcome = Outcome.STATE_LIMIT
                break
    except StateLimitError:
        outcome = Outcome.STATE_LIMIT
    return CompletionResult(outcome, state)


# ---------------------------------------------------------------------------
# result views and checks


def _warn_if_partial(result: CompletionResult) -> None:
    if result.outcome is not Outcome.FIXPOINT:
        warnings.warn(
            "completion stopped at a limit: this is not a fixpoint and the "
            "views carry no soundness guarantee",
            stacklevel=3,
        )


def reachable_view(result: CompletionResult) -> TreeAutomaton:
    """The pair automaton with finals widened to every pairing of an initial
    final state.

    The recognized language is the union over all right components, which is
    what the correctness theorem bounds.  Projecting the left components
    instead would conflate the right components of sibling arguments and can
    recognize strictly more than the pair automaton does (visible under the
    rightmost strategy), so membership is answered on the pair level.
    """
    _warn_if_partial(result)
    aut = result.automaton
    out = TreeAutomaton(aut.signature, states=aut.states, deltas=aut.deltas, epsilons=aut.epsilons)
    for s in aut.states:
        if s.left in result.state.init_finals:
            out.make_final(s)
    return out


def normalized_view(result: CompletionResult) -> TreeAutomaton:
    """The pair automaton with finals restricted to irreducible components."""
    _warn_if_partial(result)
    aut = result.automaton
    red = result.state.airr.red
    out = TreeAutomaton(aut.signature, states=aut.states, deltas=aut.deltas, epsilons=aut.epsilons)
    for s in aut.states:
        if s.left in result.state.init_finals and s.right != red:
            out.make_final(s)
    return out


def check_consistency(state: CompletionState) -> bool:
    """Every delta agrees with the normal-form automaton on right components;
    epsilon transitions never change the right component."""
    airr = state.airr
    for d in state.automaton.deltas:
        rights = tuple(a.right for a in d.args)
        if airr.next_state(d.symbol.name, rights) != d.target.right:
            return False
    for e in state.automaton.epsilons:
        if e.source.right != e.target.right:
            return False
    return True
