"""Regular over-approximation of call-by-value reachable terms.

Given a left-linear term rewriting system and a tree automaton describing a
set of start terms, the completion engine computes a tree automaton that
over-approximates every term reachable under the innermost (call-by-value)
strategy, together with the subset of reachable normal forms.  Leftmost- and
rightmost-innermost variants restrict the approximation further.
"""

from .automata import (
    COLOR_E,
    COLOR_R,
    Delta,
    Epsilon,
    State,
    TreeAutomaton,
    pair_state,
    product,
)
from .completion import (
    CompletionResult,
    CompletionState,
    CriticalPair,
    EquationSituation,
    Outcome,
    apply_equation,
    check_consistency,
    find_critical_pairs,
    find_equation_situations,
    init,
    normalize,
    normalized_view,
    reachable_view,
    resolve_critical_pair,
    run,
    step,
)
from .equations import CensusResult, SymbolSplit, class_census, generate_equations, split_symbols
from .normal_forms import NormalFormAutomaton, NotLeftLinearError, airr_state_of, build_airr
from .rewriting import (
    TRS,
    Equation,
    Rule,
    Strategy,
    bounded_class,
    bounded_normal_forms,
    bounded_reachable,
    bounded_reachable_modulo,
    innermost_one_step,
    is_normal_form,
    one_step,
    redexes,
)
from .terms import (
    App,
    Signature,
    Symbol,
    Var,
    app,
    apply_substitution,
    ground_terms,
    is_linear,
    match_pattern,
    positions,
    replace_at,
    subterm_at,
)
from .timbuk import Specification, parse_spec, parse_term, render_automaton

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
