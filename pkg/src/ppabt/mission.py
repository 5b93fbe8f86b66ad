"""Mission language front-end: PPA task literals composed with | & U F.

A mission file is prefix-notation text over parenthesized sub-missions
and ``task(...)`` literals, ``#`` starts a comment::

    U (F task(cheese, post=Cheese, pre=True, gc=!Fire, tc=True, action=cheese))
      (F task(home,   post=Home,   pre=Cheese, gc=!Fire, tc=True, action=home))

Precedence, loosest first: ``|``, ``&``, ``U``, ``F``; binary operators
are left associative.  Task condition fields hold infix propositional
expressions (``! & | ( )``).  Each task expands to the goal formula

    (G gc & poc)  |  ((G gc & F pre) & (tc U (action & G gc)))

where ``action`` is the reserved proposition ``__action_<name>`` that
tracks whether the task's postcondition currently holds.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import ltlf
from .ltlf import (
    Formula, ParseError, UnknownAtom, _Cursor, is_propositional, tokenize,
)

ACTION_PREFIX = "__action_"

TASK_FIELDS = ("post", "pre", "gc", "tc", "action")


class MissionError(Exception):
    pass


class TemporalOperatorInCondition(MissionError):
    pass


class DuplicateTaskName(MissionError):
    pass


class ReservedAtom(MissionError):
    """User conditions may not mention reserved action propositions."""


# ---------------------------------------------------------------------------
# Mission expression tree

@dataclass(frozen=True)
class PpaTaskSpec:
    name: str
    poc: Formula
    prc: Formula
    gc: Formula
    tc: Formula
    action: str

    def __post_init__(self):
        for label, cond in (("post", self.poc), ("pre", self.prc),
                            ("gc", self.gc), ("tc", self.tc)):
            if not is_propositional(cond):
                raise TemporalOperatorInCondition(
                    f"task {self.name!r}: field {label} contains a temporal operator")
            for atom in ltlf.atoms_of(cond):
                if atom.startswith(ACTION_PREFIX):
                    raise ReservedAtom(
                        f"task {self.name!r}: {atom} is reserved for action tracking")

    @property
    def action_atom(self) -> str:
        return ACTION_PREFIX + self.action


@dataclass(frozen=True)
class MissionExpr:
    pass


@dataclass(frozen=True)
class Task(MissionExpr):
    spec: PpaTaskSpec


@dataclass(frozen=True)
class Or(MissionExpr):
    left: MissionExpr
    right: MissionExpr


@dataclass(frozen=True)
class And(MissionExpr):
    left: MissionExpr
    right: MissionExpr


@dataclass(frozen=True)
class Until(MissionExpr):
    left: MissionExpr
    right: MissionExpr


@dataclass(frozen=True)
class Finally(MissionExpr):
    child: MissionExpr


@dataclass
class MissionConfig:
    t_task_max: int
    theta: int
    alphabet: frozenset[str]

    def __post_init__(self):
        if self.t_task_max < 1:
            raise ValueError("t_task_max must be at least 1")
        if self.theta < 0:
            raise ValueError("theta must be nonnegative")
        self.alphabet = frozenset(self.alphabet)


def tasks_of(expr: MissionExpr) -> list[PpaTaskSpec]:
    if isinstance(expr, Task):
        return [expr.spec]
    if isinstance(expr, Finally):
        return tasks_of(expr.child)
    return tasks_of(expr.left) + tasks_of(expr.right)


def mission_alphabet(expr: MissionExpr, base: frozenset[str]) -> frozenset[str]:
    """Base alphabet plus the reserved action proposition of every task."""
    return frozenset(base) | {spec.action_atom for spec in tasks_of(expr)}


# ---------------------------------------------------------------------------
# Expansion to LTLf

def expand_task(spec: PpaTaskSpec) -> Formula:
    """Goal formula of one PPA task.

    Left disjunct: the postcondition already holds under the global
    constraint.  Right disjunct: the precondition is eventually seen and
    the task constraint holds until the action proposition comes true,
    still under the global constraint.
    """
    g_gc = ltlf.Globally(spec.gc)
    return ltlf.Or(
        ltlf.And(g_gc, spec.poc),
        ltlf.And(
            ltlf.And(g_gc, ltlf.Finally(spec.prc)),
            ltlf.Until(spec.tc, ltlf.And(ltlf.Atom(spec.action_atom), g_gc)),
        ),
    )


def expand_mission(expr: MissionExpr) -> Formula:
    if isinstance(expr, Task):
        return expand_task(expr.spec)
    if isinstance(expr, Or):
        return ltlf.Or(expand_mission(expr.left), expand_mission(expr.right))
    if isinstance(expr, And):
        return ltlf.And(expand_mission(expr.left), expand_mission(expr.right))
    if isinstance(expr, Until):
        return ltlf.Until(expand_mission(expr.left), expand_mission(expr.right))
    if isinstance(expr, Finally):
        return ltlf.Finally(expand_mission(expr.child))
    raise TypeError(f"not a mission expression: {expr!r}")


# ---------------------------------------------------------------------------
# Infix propositional expressions (task condition fields)

def parse_prop(text: str, alphabet: set[str] | frozenset[str]) -> Formula:
    """Parse an infix propositional expression such as ``!a & (b | c)``."""
    cur = _Cursor(tokenize(text))
    formula = _parse_prop_or(cur, frozenset(alphabet))
    end = cur.peek()
    if end.kind != "end":
        raise ParseError(f"trailing input {end.text!r}", end.pos)
    return formula


def _parse_prop_or(cur: _Cursor, alphabet: frozenset[str]) -> Formula:
    left = _parse_prop_and(cur, alphabet)
    while cur.peek().text == "|":
        cur.take()
        left = ltlf.Or(left, _parse_prop_and(cur, alphabet))
    return left


def _parse_prop_and(cur: _Cursor, alphabet: frozenset[str]) -> Formula:
    left = _parse_prop_not(cur, alphabet)
    while cur.peek().text == "&":
        cur.take()
        left = ltlf.And(left, _parse_prop_not(cur, alphabet))
    return left


def _parse_prop_not(cur: _Cursor, alphabet: frozenset[str]) -> Formula:
    tok = cur.peek()
    if tok.text == "!":
        cur.take()
        return ltlf.Not(_parse_prop_not(cur, alphabet))
    if tok.text == "(":
        cur.take()
        inner = _parse_prop_or(cur, alphabet)
        cur.expect(")")
        return inner
    if tok.kind == "word":
        cur.take()
        if tok.text.startswith(ACTION_PREFIX):
            raise ReservedAtom(f"{tok.text} is reserved for action tracking")
        if tok.text not in ("True", "False") and tok.text not in alphabet:
            raise UnknownAtom(tok.text)
        return ltlf.Atom(tok.text)
    raise ParseError(f"unexpected {tok.text!r}", tok.pos, expected="atom, '!' or '('")


def render_prop(formula: Formula) -> str:
    """Infix text for a propositional formula, nested operators parenthesized."""
    def wrap(f: Formula) -> str:
        return f.name if isinstance(f, ltlf.Atom) else f"({render_prop(f)})"

    if isinstance(formula, ltlf.Atom):
        return formula.name
    if isinstance(formula, ltlf.Not):
        return "!" + wrap(formula.child)
    if isinstance(formula, ltlf.And):
        return f"{wrap(formula.left)} & {wrap(formula.right)}"
    if isinstance(formula, ltlf.Or):
        return f"{wrap(formula.left)} | {wrap(formula.right)}"
    raise ValueError(f"not propositional: {formula}")


def ppa_task(name: str, post: str, pre: str = "True", gc: str = "True",
             tc: str = "True", action: str | None = None,
             alphabet: set[str] | frozenset[str] = frozenset()) -> PpaTaskSpec:
    """Convenience builder parsing the condition fields from infix text."""
    alpha = frozenset(alphabet)
    return PpaTaskSpec(
        name=name,
        poc=parse_prop(post, alpha),
        prc=parse_prop(pre, alpha),
        gc=parse_prop(gc, alpha),
        tc=parse_prop(tc, alpha),
        action=action if action is not None else name,
    )


# ---------------------------------------------------------------------------
# Mission parser

def parse_mission(text: str, alphabet: set[str] | frozenset[str]) -> MissionExpr:
    """Parse mission text into a MissionExpr tree.

    Raises ParseError on malformed input, UnknownAtom for condition
    atoms outside the alphabet, DuplicateTaskName if two task literals
    share a name.
    """
    cur = _Cursor(tokenize(text))
    seen: set[str] = set()
    expr = _parse_m_or(cur, frozenset(alphabet), seen)
    end = cur.peek()
    if end.kind != "end":
        raise ParseError(f"trailing input {end.text!r}", end.pos)
    return expr


def _parse_m_or(cur, alphabet, seen) -> MissionExpr:
    if cur.peek().text == "|":
        cur.take()
        left = _parse_m_or(cur, alphabet, seen)
        right = _parse_m_and(cur, alphabet, seen)
        return Or(left, right)
    return _parse_m_and(cur, alphabet, seen)


def _parse_m_and(cur, alphabet, seen) -> MissionExpr:
    if cur.peek().text == "&":
        cur.take()
        left = _parse_m_and(cur, alphabet, seen)
        right = _parse_m_until(cur, alphabet, seen)
        return And(left, right)
    return _parse_m_until(cur, alphabet, seen)


def _parse_m_until(cur, alphabet, seen) -> MissionExpr:
    if cur.peek().text == "U":
        cur.take()
        left = _parse_m_until(cur, alphabet, seen)
        right = _parse_m_leaf(cur, alphabet, seen)
        return Until(left, right)
    return _parse_m_leaf(cur, alphabet, seen)


def _parse_m_leaf(cur, alphabet, seen) -> MissionExpr:
    tok = cur.peek()
    if tok.text == "F":
        cur.take()
        return Finally(_parse_m_operand(cur, alphabet, seen))
    if tok.text == "task":
        return _parse_task_literal(cur, alphabet, seen)
    if tok.text == "(":
        cur.take()
        inner = _parse_m_or(cur, alphabet, seen)
        cur.expect(")")
        return inner
    raise ParseError(f"unexpected {tok.text!r}", tok.pos,
                     expected="'F', 'task(' or '('")


def _parse_m_operand(cur, alphabet, seen) -> MissionExpr:
    tok = cur.peek()
    if tok.text == "task":
        return _parse_task_literal(cur, alphabet, seen)
    if tok.text == "(":
        cur.take()
        inner = _parse_m_or(cur, alphabet, seen)
        cur.expect(")")
        return inner
    raise ParseError(f"unexpected {tok.text!r}", tok.pos,
                     expected="'task(' or '('")


def _parse_task_literal(cur, alphabet, seen) -> Task:
    cur.expect("task")
    cur.expect("(")
    name_tok = cur.take()
    if name_tok.kind != "word":
        raise ParseError(f"unexpected {name_tok.text!r}", name_tok.pos,
                         expected="task name")
    name = name_tok.text
    if name in seen:
        raise DuplicateTaskName(f"task {name!r} declared twice")
    seen.add(name)

    fields: dict[str, object] = {}
    while cur.peek().text == ",":
        cur.take()
        key_tok = cur.take()
        if key_tok.text not in TASK_FIELDS:
            raise ParseError(f"unknown task field {key_tok.text!r}", key_tok.pos,
                             expected="one of " + "/".join(TASK_FIELDS))
        if key_tok.text in fields:
            raise ParseError(f"duplicate field {key_tok.text!r}", key_tok.pos)
        cur.expect("=")
        if key_tok.text == "action":
            val_tok = cur.take()
            if val_tok.kind != "word":
                raise ParseError(f"unexpected {val_tok.text!r}", val_tok.pos,
                                 expected="action identifier")
            fields["action"] = val_tok.text
        else:
            fields[key_tok.text] = _parse_field_prop(cur, alphabet)
    cur.expect(")")

    if "post" not in fields:
        raise ParseError(f"task {name!r} is missing its post field", name_tok.pos)
    spec = PpaTaskSpec(
        name=name,
        poc=fields["post"],
        prc=fields.get("pre", ltlf.TRUE),
        gc=fields.get("gc", ltlf.TRUE),
        tc=fields.get("tc", ltlf.TRUE),
        action=fields.get("action", name),
    )
    return Task(spec)


def _parse_field_prop(cur, alphabet) -> Formula:
    # Field values stop at the comma or closing paren of the task literal,
    # so the infix parser runs on the cursor directly; its own parentheses
    # are balanced and cannot consume the literal's closer.
    return _parse_prop_or(cur, alphabet)


# ---------------------------------------------------------------------------
# Rendering and JSON

def render_mission(expr: MissionExpr) -> str:
    """Canonical mission text; parse_mission inverts it."""
    def wrap(e: MissionExpr) -> str:
        return render_mission(e) if isinstance(e, Task) else f"({render_mission(e)})"

    if isinstance(expr, Task):
        s = expr.spec
        return (f"task({s.name}, post={render_prop(s.poc)}, pre={render_prop(s.prc)}, "
                f"gc={render_prop(s.gc)}, tc={render_prop(s.tc)}, action={s.action})")
    if isinstance(expr, Finally):
        return f"F {wrap(expr.child)}"
    op = {Or: "|", And: "&", Until: "U"}[type(expr)]
    return f"{op} {wrap(expr.left)} {wrap(expr.right)}"


def mission_to_json(expr: MissionExpr) -> dict:
    if isinstance(expr, Task):
        s = expr.spec
        return {"op": "task", "name": s.name, "post": render_prop(s.poc),
                "pre": render_prop(s.prc), "gc": render_prop(s.gc),
                "tc": render_prop(s.tc), "action": s.action}
    if isinstance(expr, Finally):
        return {"op": "finally", "child": mission_to_json(expr.child)}
    op = {Or: "or", And: "and", Until: "until"}[type(expr)]
    return {"op": op,
            "lhs": mission_to_json(expr.left),
            "rhs": mission_to_json(expr.right)}


def mission_from_json(data: dict, alphabet: frozenset[str]) -> MissionExpr:
    op = data["op"]
    if op == "task":
        return Task(ppa_task(data["name"], data["post"], data["pre"], data["gc"],
                             data["tc"], data["action"], alphabet))
    if op == "finally":
        return Finally(mission_from_json(data["child"], alphabet))
    binary = {"or": Or, "and": And, "until": Until}
    return binary[op](mission_from_json(data["lhs"], alphabet),
                      mission_from_json(data["rhs"], alphabet))
