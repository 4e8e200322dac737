"""Reader and writer for the Timbuk specification format.

Grammar (whitespace-insensitive between tokens, `#` comments to end of line):

    spec     := section+
    section  := "Ops" (name ":" nat)+
              | "Vars" name+
              | "TRS" name rule+
              | "Automaton" name "States" statedecl+ "Final" "States" name+
                "Transitions" trans+
              | "Equations" name "Rules" eq+
    statedecl:= name (":" nat)?          -- the arity suffix is ignored
    rule     := term "->" term
    eq       := term "=" term
    trans    := term "->" name | name "->R" name | name "->E" name
    term     := name | name "(" term ("," term)* ")"

Colored arrows are an extension for the engine's epsilon transitions so
rendered automata round-trip.  A file may omit the "Ops" section (the
published result automata do); the signature is then inferred from use.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .automata import COLOR_E, COLOR_R, State, TreeAutomaton, delta_key, eps_key, state_key
from .rewriting import TRS, Equation, Rule
from .terms import App, Signature, Symbol, Var

SECTION_KEYWORDS = ("Ops", "Vars", "TRS", "Automaton", "Equations")
KEYWORDS = SECTION_KEYWORDS + ("States", "Final", "Transitions", "Rules")


class TimbukError(Exception):
    pass


class SpecSyntaxError(TimbukError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class UndeclaredStateError(TimbukError):
    pass


class UndeclaredSymbolError(TimbukError):
    pass


class SpecArityError(TimbukError):
    pass


@dataclass
class Specification:
    signature: Signature
    variables: frozenset
    trss: dict = field(default_factory=dict)
    automata: dict = field(default_factory=dict)
    equation_sets: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# scanner

@dataclass(frozen=True)
class _Token:
    kind: str  # NAME ARROW ARROW_R ARROW_E EQ LPAR RPAR COMMA COLON EOF
    value: str
    line: int
    col: int


def _is_name_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def _scan(text: str) -> list[_Token]:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch == "-" and i + 1 < n and text[i + 1] == ">":
            kind, value, width = "ARROW", "->", 2
            if i + 2 < n and text[i + 2] in "RE":
                after = text[i + 3] if i + 3 < n else " "
                if not _is_name_char(after):
                    kind = "ARROW_R" if text[i + 2] == "R" else "ARROW_E"
                    value += text[i + 2]
                    width = 3
            tokens.append(_Token(kind, value, start_line, start_col))
            i += width
            col += width
            continue
        simple = {"=": "EQ", "(": "LPAR", ")": "RPAR", ",": "COMMA", ":": "COLON"}
        if ch in simple:
            tokens.append(_Token(simple[ch], ch, start_line, start_col))
            i += 1
            col += 1
            continue
        if _is_name_char(ch):
            j = i
            while j < n and _is_name_char(text[j]):
                j += 1
            tokens.append(_Token("NAME", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        raise SpecSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# parser

# Raw term tree before name resolution: (name, children, line, col)
_Raw = tuple


class _Parser:
    def __init__(self, text: str):
        self.tokens = _scan(text)
        self.pos = 0

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            raise SpecSyntaxError(f"expected {what}, found {tok.value!r}", tok.line, tok.col)
        return tok

    def expect_keyword(self, word: str) -> _Token:
        tok = self.next()
        if tok.kind != "NAME" or tok.value != word:
            raise SpecSyntaxError(f"expected {word!r}, found {tok.value!r}", tok.line, tok.col)
        return tok

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "NAME" and tok.value in words

    def parse_raw_term(self) -> _Raw:
        tok = self.expect("NAME", "a term")
        children: list = []
        if self.peek().kind == "LPAR":
            self.next()
            children.append(self.parse_raw_term())
            while self.peek().kind == "COMMA":
                self.next()
                children.append(self.parse_raw_term())
            self.expect("RPAR", "')'")
        return (tok.value, children, tok.line, tok.col)


class _Resolver:
    """Turns raw trees into terms, inferring the signature when allowed."""

    def __init__(self, signature: Optional[Signature], variables: frozenset):
        self.inferring = signature is None
        self.signature = signature if signature is not None else Signature()
        self.variables = variables

    def term(self, raw: _Raw):
        name, children, line, col = raw
        if name in self.variables:
            if children:
                raise SpecSyntaxError(f"variable {name} applied to arguments", line, col)
            return Var(name)
        sym = self.signature.get(name)
        if sym is None:
            if not self.inferring:
                raise UndeclaredSymbolError(
                    f"undeclared symbol {name!r} (line {line}, column {col})"
                )
            sym = self.signature.add(Symbol(name, len(children)))
        if sym.arity != len(children):
            raise SpecArityError(
                f"symbol {name} has arity {sym.arity}, applied to {len(children)} "
                f"arguments (line {line}, column {col})"
            )
        return App(sym, tuple(self.term(c) for c in children))


def parse_spec(text: str) -> Specification:
    parser = _Parser(text)
    signature: Optional[Signature] = None
    variables: frozenset = frozenset()
    raw_trss: dict = {}
    raw_automata: dict = {}
    raw_equations: dict = {}

    # A bare automaton body (as rendered by `render_automaton`) starts with
    # "States"; wrap it as an anonymous Automaton section.
    bare_automaton = parser.at_keyword("States")

    while parser.peek().kind != "EOF":
        tok = parser.peek()
        if bare_automaton:
            raw_automata["main"] = _parse_automaton_body(parser)
            bare_automaton = False
            continue
        if tok.kind != "NAME" or tok.value not in SECTION_KEYWORDS:
            raise SpecSyntaxError(
                f"expected a section keyword, found {tok.value!r}", tok.line, tok.col
            )
        parser.next()
        if tok.value == "Ops":
            signature = Signature() if signature is None else signature
            while parser.peek().kind == "NAME" and parser.peek(1).kind == "COLON":
                name = parser.next().value
                parser.next()
                arity_tok = parser.expect("NAME", "an arity")
                if not arity_tok.value.isdigit():
                    raise SpecSyntaxError(
                        f"arity must be a number, found {arity_tok.value!r}",
                        arity_tok.line,
                        arity_tok.col,
                    )
                signature.add(Symbol(name, int(arity_tok.value)))
        elif tok.value == "Vars":
            names = []
            while parser.peek().kind == "NAME" and not parser.at_keyword(*SECTION_KEYWORDS):
                names.append(parser.next().value)
            variables = variables | frozenset(names)
        elif tok.value == "TRS":
            name = parser.expect("NAME", "a TRS name").value
            rules = []
            while parser.peek().kind == "NAME" and not parser.at_keyword(*SECTION_KEYWORDS):
                lhs = parser.parse_raw_term()
                parser.expect("ARROW", "'->'")
                rhs = parser.parse_raw_term()
                rules.append((lhs, rhs))
            raw_trss[name] = rules
        elif tok.value == "Automaton":
            name = parser.expect("NAME", "an automaton name").value
            raw_automata[name] = _parse_automaton_body(parser)
        elif tok.value == "Equations":
            name = parser.expect("NAME", "an equation set name").value
            parser.expect_keyword("Rules")
            eqs = []
            while parser.peek().kind == "NAME" and not parser.at_keyword(*SECTION_KEYWORDS):
                lhs = parser.parse_raw_term()
                parser.expect("EQ", "'='")
                rhs = parser.parse_raw_term()
                eqs.append((lhs, rhs))
            raw_equations[name] = eqs

    resolver = _Resolver(signature, variables)
    for name in variables:
        if signature is not None and name in signature:
            raise TimbukError(f"name {name!r} declared both as symbol and variable")

    spec = Specification(signature=resolver.signature, variables=variables)
    for name, raw_rules in raw_trss.items():
        rules = [Rule(resolver.term(l), resolver.term(r)) for l, r in raw_rules]
        spec.trss[name] = TRS(resolver.signature, rules)
    for name, raw_eqs in raw_equations.items():
        spec.equation_sets[name] = tuple(
            Equation(resolver.term(l), resolver.term(r)) for l, r in raw_eqs
        )
    for name, body in raw_automata.items():
        spec.automata[name] = _build_automaton(body, resolver)
    return spec


def _parse_automaton_body(parser: _Parser) -> dict:
    parser.expect_keyword("States")
    states = []
    while parser.peek().kind == "NAME" and not parser.at_keyword("Final"):
        states.append(parser.next().value)
        if parser.peek().kind == "COLON":  # optional arity suffix, ignored
            parser.next()
            parser.expect("NAME", "an arity")
    parser.expect_keyword("Final")
    parser.expect_keyword("States")
    finals = []
    while parser.peek().kind == "NAME" and not parser.at_keyword("Transitions"):
        finals.append(parser.next().value)
    parser.expect_keyword("Transitions")
    transitions = []
    while parser.peek().kind == "NAME" and not parser.at_keyword(*SECTION_KEYWORDS):
        lhs = parser.parse_raw_term()
        arrow = parser.next()
        if arrow.kind not in ("ARROW", "ARROW_R", "ARROW_E"):
            raise SpecSyntaxError(
                f"expected an arrow, found {arrow.value!r}", arrow.line, arrow.col
            )
        target = parser.expect("NAME", "a target state")
        transitions.append((lhs, arrow.kind, target.value, arrow.line, arrow.col))
    return {"states": states, "finals": finals, "transitions": transitions}


def _build_automaton(body: dict, resolver: _Resolver) -> TreeAutomaton:
    state_names = set(body["states"])
    for name in state_names:
        if name in resolver.signature or name in resolver.variables:
            raise TimbukError(f"name {name!r} used both as state and as symbol/variable")
    states = {name: State(name) for name in body["states"]}
    automaton = TreeAutomaton(resolver.signature)
    for name in body["states"]:
        automaton.add_state(states[name])
    for name in body["finals"]:
        if name not in states:
            raise UndeclaredStateError(f"final state {name!r} not declared")
        automaton.make_final(states[name])
    for lhs, arrow_kind, target_name, line, col in body["transitions"]:
        if target_name not in states:
            raise UndeclaredStateError(
                f"target state {target_name!r} not declared (line {line})"
            )
        target = states[target_name]
        root, children, tline, tcol = lhs
        if root in states:
            if children:
                raise SpecSyntaxError(f"state {root} applied to arguments", tline, tcol)
            if arrow_kind == "ARROW":
                raise SpecSyntaxError(
                    "epsilon transitions must be colored (use ->R or ->E)", line, col
                )
            color = COLOR_R if arrow_kind == "ARROW_R" else COLOR_E
            automaton.add_epsilon(states[root], target, color)
            continue
        if arrow_kind != "ARROW":
            raise SpecSyntaxError("colored arrows are only for epsilon transitions", line, col)
        arg_states = []
        for child in children:
            cname, cchildren, cline, ccol = child
            if cchildren:
                raise SpecSyntaxError(
                    "transition left-hand sides must be elementary", cline, ccol
                )
            if cname not in states:
                raise UndeclaredStateError(
                    f"state {cname!r} not declared (line {cline})"
                )
            arg_states.append(states[cname])
        sym = resolver.signature.get(root)
        if sym is None:
            if not resolver.inferring:
                raise UndeclaredSymbolError(f"undeclared symbol {root!r} (line {tline})")
            sym = resolver.signature.add(Symbol(root, len(arg_states)))
        if sym.arity != len(arg_states):
            raise SpecArityError(
                f"symbol {root} has arity {sym.arity}, applied to {len(arg_states)} "
                f"states (line {tline})"
            )
        automaton.add_delta(sym, tuple(arg_states), target)
    return automaton


def parse_term(text: str, signature: Signature, variables: frozenset = frozenset()):
    parser = _Parser(text)
    raw = parser.parse_raw_term()
    tok = parser.peek()
    if tok.kind != "EOF":
        raise SpecSyntaxError(f"trailing input {tok.value!r}", tok.line, tok.col)
    return _Resolver(signature, variables).term(raw)


# ---------------------------------------------------------------------------
# rendering


def _flat_names(automaton: TreeAutomaton) -> dict:
    def flatten(s: State) -> str:
        if s.pair is None:
            return s.name
        return f"{flatten(s.pair[0])}_{flatten(s.pair[1])}"

    names: dict = {}
    used: set = set()
    for s in sorted(automaton.states, key=state_key):
        base = flatten(s)
        name = base
        k = 1
        while name in used:
            k += 1
            name = f"{base}__{k}"
        used.add(name)
        names[s] = name
    return names


def render_automaton(automaton: TreeAutomaton) -> str:
    names = _flat_names(automaton)
    ordered = sorted(automaton.states, key=state_key)
    lines = []
    lines.append("States " + " ".join(names[s] for s in ordered))
    lines.append(
        "Final States "
        + " ".join(names[s] for s in ordered if s in automaton.finals)
    )
    lines.append("Transitions")
    for d in sorted(automaton.deltas, key=delta_key):
        if d.args:
            inner = ",".join(names[a] for a in d.args)
            lines.append(f"{d.symbol.name}({inner})->{names[d.target]}")
        else:
            lines.append(f"{d.symbol.name}->{names[d.target]}")
    for e in sorted(automaton.epsilons, key=eps_key):
        lines.append(f"{names[e.source]} ->{e.color} {names[e.target]}")
    return "\n".join(lines) + "\n"
