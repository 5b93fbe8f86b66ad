"""Finite-trace linear temporal logic: AST, prefix-syntax parser, evaluator.

Formulas are immutable trees built from atoms and the operators
``! & | X U F G``.  The concrete syntax is prefix: ``| a (& b c)`` is
"a or (b and c)".  Operands of a binary operator are parenthesized
unless they are atoms; unary operators may chain (``F ! a``) or take a
parenthesized operand (``F (& a b)``).

Evaluation is over finite traces of proposition valuations.  ``True``
and ``False`` are reserved atoms with constant value.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterator

StateVector = dict[str, bool]


class LtlfError(Exception):
    pass


class ParseError(LtlfError):
    """Syntax error with the offending position and what was expected."""

    def __init__(self, message: str, position: int, expected: str = ""):
        super().__init__(f"{message} at position {position}"
                         + (f" (expected {expected})" if expected else ""))
        self.position = position
        self.expected = expected


class UnknownAtom(LtlfError):
    def __init__(self, name: str):
        super().__init__(f"atom {name!r} is not in the declared alphabet")
        self.name = name


class TraceIndexError(LtlfError, IndexError):
    pass


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Formula:
    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    child: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Finally(Formula):
    child: Formula


@dataclass(frozen=True)
class Globally(Formula):
    child: Formula


TRUE = Atom("True")
FALSE = Atom("False")

_UNARY = {Not: "!", Next: "X", Finally: "F", Globally: "G"}
_BINARY = {Or: "|", And: "&", Until: "U"}
TEMPORAL_OPS = (Next, Until, Finally, Globally)


def atoms_of(formula: Formula) -> set[str]:
    """All atom names occurring in the formula, reserved constants included."""
    if isinstance(formula, Atom):
        return {formula.name}
    if isinstance(formula, (Not, Next, Finally, Globally)):
        return atoms_of(formula.child)
    return atoms_of(formula.left) | atoms_of(formula.right)


def subformulas(formula: Formula) -> Iterator[Formula]:
    yield formula
    if isinstance(formula, (Not, Next, Finally, Globally)):
        yield from subformulas(formula.child)
    elif isinstance(formula, (And, Or, Until)):
        yield from subformulas(formula.left)
        yield from subformulas(formula.right)


def is_propositional(formula: Formula) -> bool:
    return not any(isinstance(f, TEMPORAL_OPS) for f in subformulas(formula))


# ---------------------------------------------------------------------------
# Traces

@dataclass
class Trace:
    """Finite sequence of total proposition valuations.

    Every state must assign exactly the declared alphabet.  ``True`` and
    ``False`` are implicit and need not appear.  Empty traces are
    rejected, as are traces longer than ``max_len``.
    """

    states: list[StateVector]
    alphabet: frozenset[str]
    max_len: int = 0

    def __post_init__(self):
        if self.max_len <= 0:
            self.max_len = len(self.states)
        if not self.states:
            raise ValueError("empty trace")
        if len(self.states) > self.max_len:
            raise ValueError(f"trace length {len(self.states)} exceeds bound {self.max_len}")
        for i, state in enumerate(self.states):
            if set(state) != self.alphabet:
                missing = self.alphabet - set(state)
                extra = set(state) - self.alphabet
                raise ValueError(f"state {i} does not match alphabet "
                                 f"(missing {sorted(missing)}, extra {sorted(extra)})")

    def __len__(self) -> int:
        return len(self.states)


def evaluate(formula: Formula, trace: Trace, index: int = 0) -> bool:
    """Truth of the formula on the trace suffix starting at ``index``.

    Temporal operators quantify over the realized trace positions
    ``index .. len(trace)-1``.  Recursion is memoized on
    (subformula identity, position), giving O(|formula| * |trace|).
    """
    if not 0 <= index < len(trace):
        raise TraceIndexError(f"index {index} outside trace of length {len(trace)}")
    memo: dict[tuple[int, int], bool] = {}
    return _eval(formula, trace, index, memo)


def next_beyond_trace() -> bool:
    """Truth of X(psi) at the final position: strong-next convention."""
    return False


def _eval(f: Formula, trace: Trace, i: int, memo: dict) -> bool:
    key = (id(f), i)
    cached = memo.get(key)
    if cached is not None:
        return cached
    states = trace.states
    last = len(states) - 1
    if isinstance(f, Atom):
        if f.name == "True":
            value = True
        elif f.name == "False":
            value = False
        elif f.name not in trace.alphabet:
            raise UnknownAtom(f.name)
        else:
            value = states[i][f.name]
    elif isinstance(f, Not):
        value = not _eval(f.child, trace, i, memo)
    elif isinstance(f, And):
        value = _eval(f.left, trace, i, memo) and _eval(f.right, trace, i, memo)
    elif isinstance(f, Or):
        value = _eval(f.left, trace, i, memo) or _eval(f.right, trace, i, memo)
    elif isinstance(f, Next):
        value = _eval(f.child, trace, i + 1, memo) if i < last else next_beyond_trace()
    elif isinstance(f, Until):
        # rhs now, or lhs now and Until from the next position
        if _eval(f.right, trace, i, memo):
            value = True
        elif i < last and _eval(f.left, trace, i, memo):
            value = _eval(f, trace, i + 1, memo)
        else:
            value = False
    elif isinstance(f, Finally):
        if _eval(f.child, trace, i, memo):
            value = True
        else:
            value = _eval(f, trace, i + 1, memo) if i < last else False
    elif isinstance(f, Globally):
        if not _eval(f.child, trace, i, memo):
            value = False
        else:
            value = _eval(f, trace, i + 1, memo) if i < last else True
    else:
        raise TypeError(f"not a formula: {f!r}")
    memo[key] = value
    return value


def eval_prop(formula: Formula, state: StateVector) -> bool:
    """Evaluate a propositional (temporal-free) formula on a single state."""
    if isinstance(formula, Atom):
        if formula.name == "True":
            return True
        if formula.name == "False":
            return False
        try:
            return state[formula.name]
        except KeyError:
            raise UnknownAtom(formula.name) from None
    if isinstance(formula, Not):
        return not eval_prop(formula.child, state)
    if isinstance(formula, And):
        return eval_prop(formula.left, state) and eval_prop(formula.right, state)
    if isinstance(formula, Or):
        return eval_prop(formula.left, state) or eval_prop(formula.right, state)
    raise ValueError(f"temporal operator in propositional context: {formula}")


def compile_prop(formula: Formula) -> Callable[[StateVector], bool]:
    """Build a closure evaluating a propositional formula on a state dict."""
    if isinstance(formula, Atom):
        name = formula.name
        if name == "True":
            return lambda s: True
        if name == "False":
            return lambda s: False
        return lambda s: s[name]
    if isinstance(formula, Not):
        f = compile_prop(formula.child)
        return lambda s: not f(s)
    if isinstance(formula, And):
        l, r = compile_prop(formula.left), compile_prop(formula.right)
        return lambda s: l(s) and r(s)
    if isinstance(formula, Or):
        l, r = compile_prop(formula.left), compile_prop(formula.right)
        return lambda s: l(s) or r(s)
    raise ValueError(f"temporal operator in propositional context: {formula}")


# ---------------------------------------------------------------------------
# Concrete syntax

_TOKEN_RE = re.compile(r"""
      (?P<ws>\s+|\#[^\n]*)
    | (?P<op>[|&!()=,])
    | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
""", re.VERBOSE)

RESERVED_WORDS = frozenset({"U", "F", "G", "X"})


@dataclass
class Token:
    kind: str  # 'op', 'word', 'temporal', 'end'
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup == "op":
            tokens.append(Token("op", m.group(), pos))
        elif m.lastgroup == "word":
            word = m.group()
            kind = "temporal" if word in RESERVED_WORDS else "word"
            tokens.append(Token(kind, word, pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Cursor:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def take(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.take()
        if tok.text != text:
            raise ParseError(f"unexpected {tok.text!r}", tok.pos, expected=repr(text))
        return tok


def parse_ltlf(text: str, alphabet: set[str] | frozenset[str]) -> Formula:
    """Parse prefix-syntax LTLf text into a Formula.

    Precedence from loosest to tightest: ``|``, ``&``, ``U``, then the
    unary operators; binary operators are left associative (the left
    operand of an operator re-enters the same precedence level).
    Atoms outside ``alphabet`` raise UnknownAtom; ``True``/``False``
    are always admitted.
    """
    cur = _Cursor(tokenize(text))
    formula = _parse_or(cur, frozenset(alphabet))
    end = cur.peek()
    if end.kind != "end":
        raise ParseError(f"trailing input {end.text!r}", end.pos)
    return formula


def _parse_or(cur: _Cursor, alphabet: frozenset[str]) -> Formula:
    if cur.peek().text == "|":
        cur.take()
        left = _parse_or(cur, alphabet)
        right = _parse_and(cur, alphabet)
        return Or(left, right)
    return _parse_and(cur, alphabet)


def _parse_and(cur: _Cursor, alphabet: frozenset[str]) -> Formula:
    if cur.peek().text == "&":
        cur.take()
        left = _parse_and(cur, alphabet)
        right = _parse_until(cur, alphabet)
        return And(left, right)
    return _parse_until(cur, alphabet)


def _parse_until(cur: _Cursor, alphabet: frozenset[str]) -> Formula:
    if cur.peek().text == "U":
        cur.take()
        left = _parse_until(cur, alphabet)
        right = _parse_unary(cur, alphabet)
        return Until(left, right)
    return _parse_unary(cur, alphabet)


def _parse_unary(cur: _Cursor, alphabet: frozenset[str]) -> Formula:
    tok = cur.peek()
    if tok.text in ("!", "X", "F", "G"):
        cur.take()
        child = _parse_unary(cur, alphabet)
        return {"!": Not, "X": Next, "F": Finally, "G": Globally}[tok.text](child)
    return _parse_leaf(cur, alphabet)


def _parse_leaf(cur: _Cursor, alphabet: frozenset[str]) -> Formula:
    tok = cur.take()
    if tok.text == "(":
        inner = _parse_or(cur, alphabet)
        cur.expect(")")
        return inner
    if tok.kind == "word":
        if tok.text not in ("True", "False") and tok.text not in alphabet:
            raise UnknownAtom(tok.text)
        return Atom(tok.text)
    raise ParseError(f"unexpected {tok.text!r}", tok.pos, expected="atom or '('")


def format_formula(formula: Formula) -> str:
    """Canonical prefix text: every non-atomic operand is parenthesized."""
    def wrap(f: Formula) -> str:
        return f.name if isinstance(f, Atom) else f"({format_formula(f)})"

    if isinstance(formula, Atom):
        return formula.name
    for cls, op in _UNARY.items():
        if isinstance(formula, cls):
            return f"{op} {wrap(formula.child)}"
    for cls, op in _BINARY.items():
        if isinstance(formula, cls):
            return f"{op} {wrap(formula.left)} {wrap(formula.right)}"
    raise TypeError(f"not a formula: {formula!r}")


# ---------------------------------------------------------------------------
# JSON export

_JSON_OPS = {Atom: "atom", Not: "not", And: "and", Or: "or",
             Next: "next", Until: "until", Finally: "finally", Globally: "globally"}


def formula_to_json(formula: Formula) -> dict:
    if isinstance(formula, Atom):
        return {"op": "atom", "name": formula.name}
    op = _JSON_OPS[type(formula)]
    if isinstance(formula, (Not, Next, Finally, Globally)):
        return {"op": op, "child": formula_to_json(formula.child)}
    return {"op": op,
            "lhs": formula_to_json(formula.left),
            "rhs": formula_to_json(formula.right)}


def formula_from_json(data: dict) -> Formula:
    op = data["op"]
    if op == "atom":
        return Atom(data["name"])
    unary = {"not": Not, "next": Next, "finally": Finally, "globally": Globally}
    if op in unary:
        return unary[op](formula_from_json(data["child"]))
    binary = {"and": And, "or": Or, "until": Until}
    if op in binary:
        return binary[op](formula_from_json(data["lhs"]), formula_from_json(data["rhs"]))
    raise ValueError(f"unknown formula op {op!r}")
