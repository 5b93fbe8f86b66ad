"""Bounded empirical soundness checking for compiled mission trees.

The claim under test: whenever a compiled tree reports Success, the
recorded trace satisfies the mission's goal formula.  ``check_inclusion``
drives a tree through every proposition stream up to a length bound
(actions replaced by scripted proposition evolution, with the reserved
action propositions derived from each task's postcondition) and audits
every successful run.

``evaluate_reference`` is a second, deliberately naive evaluator written
straight from the satisfaction relation with explicit quantifier loops
and no sharing; agreement between the two evaluators is part of the test
suite's trust chain.

Soundness boundary: the goal formula's G-constraints range over the whole
trace, but a subtree is only watched while it is ticked.  A task used
directly as an ``or``/``until`` operand can start late, pause while a
sibling runs, or fail and silently recover, leaving constraint windows
nobody checked.  Wrapping the operand in ``F`` re-anchors satisfaction at
the tick its decorator (re)starts the subtree, which closes those gaps as
long as conjunctions stay over plain tasks.  ``random_sound_mission``
fuzzes within that fragment (the shape of every mission the experiments
use); ``counterexample_mission`` builds a grammar-legal mission outside
it whose violations the checker demonstrably finds.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from random import Random

from . import bt, ltlf, mission as ms
from .compiler import bind_scripted, compile_mission
from .ltlf import Atom, Formula, Trace, evaluate


class BoundTooLarge(Exception):
    pass


# ---------------------------------------------------------------------------
# Independent reference evaluator (quantifier form, no memoization)

def evaluate_reference(formula: Formula, trace: Trace, index: int = 0) -> bool:
    states = trace.states
    last = len(states) - 1
    if not 0 <= index <= last:
        raise ltlf.TraceIndexError(f"index {index} outside trace")

    def ref(f: Formula, i: int) -> bool:
        if isinstance(f, Atom):
            if f.name == "True":
                return True
            if f.name == "False":
                return False
            if f.name not in trace.alphabet:
                raise ltlf.UnknownAtom(f.name)
            return states[i][f.name]
        if isinstance(f, ltlf.Not):
            return not ref(f.child, i)
        if isinstance(f, ltlf.And):
            return ref(f.left, i) and ref(f.right, i)
        if isinstance(f, ltlf.Or):
            return ref(f.left, i) or ref(f.right, i)
        if isinstance(f, ltlf.Next):
            return i < last and ref(f.child, i + 1)
        if isinstance(f, ltlf.Until):
            return any(
                ref(f.right, j) and all(ref(f.left, k) for k in range(i, j))
                for j in range(i, last + 1))
        if isinstance(f, ltlf.Finally):
            return any(ref(f.child, k) for k in range(i, last + 1))
        if isinstance(f, ltlf.Globally):
            return all(ref(f.child, k) for k in range(i, last + 1))
        raise TypeError(f"not a formula: {f!r}")

    return ref(formula, index)


# ---------------------------------------------------------------------------
# Trace auditing and language enumeration

def audit_trace(formula: Formula, trace: Trace, status: bt.Status) -> bool:
    """Success must imply satisfaction; failed runs carry no obligation."""
    if status is bt.SUCCESS:
        return evaluate(formula, trace, 0)
    return True


def _guard(alphabet, max_len: int) -> list[str]:
    names = sorted(alphabet)
    if len(names) > 5 or max_len > 6:
        raise BoundTooLarge(
            f"{len(names)} atoms x length {max_len} is past the enumeration guard")
    return names


def enumerate_language(formula: Formula, alphabet, max_len: int,
                       evaluator=evaluate) -> set[tuple]:
    """All traces over the alphabet, length 1..max_len, satisfying the formula.

    Traces are returned as tuples of valuation tuples in sorted-atom
    order.  Guarded to |alphabet| <= 5 and max_len <= 6.
    """
    names = _guard(alphabet, max_len)
    alpha = frozenset(names)
    rows = list(itertools.product((False, True), repeat=len(names)))
    found = set()
    for length in range(1, max_len + 1):
        for combo in itertools.product(rows, repeat=length):
            states = [dict(zip(names, row)) for row in combo]
            if evaluator(formula, Trace(states, alpha), 0):
                found.add(combo)
    return found


# ---------------------------------------------------------------------------
# Exhaustive stream checking of a compiled tree

@dataclass
class InclusionReport:
    bound: int
    alphabet_size: int
    n_bt_success_traces: int = 0
    n_violations: int = 0
    counterexamples: list[list[dict]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "bound": self.bound,
            "alphabet_size": self.alphabet_size,
            "n_bt_success_traces": self.n_bt_success_traces,
            "n_violations": self.n_violations,
            "counterexamples": self.counterexamples,
        }

    def counterexamples_csv_rows(self) -> list[list]:
        rows = []
        for i, trace in enumerate(self.counterexamples):
            for t, state in enumerate(trace):
                rows.append([i, t, json.dumps(state, sort_keys=True)])
        return rows


def check_inclusion(tree: bt.BtNode, formula: Formula, alphabet, bound: int,
                    max_counterexamples: int = 25) -> InclusionReport:
    """Run the tree on every proposition stream up to the length bound.

    Action nodes must be bound to scripted runners; the reserved action
    propositions are derived from postconditions, not enumerated.  Every
    Success outcome's trace must satisfy the formula.
    """
    names = _guard(alphabet, bound)
    valuations = [dict(zip(names, row))
                  for row in itertools.product((False, True), repeat=len(names))]
    report = InclusionReport(bound=bound, alphabet_size=len(names))
    runner = bt.MissionRunner(tree)
    trace_alpha = None

    def visit(depth: int) -> None:
        nonlocal trace_alpha
        for valuation in valuations:
            snap = runner.snapshot()
            status = runner.tick_once(valuation)
            if status is bt.SUCCESS:
                report.n_bt_success_traces += 1
                states = [dict(s) for s in runner.trace_states]
                if trace_alpha is None:
                    trace_alpha = frozenset(states[0])
                trace = Trace(states, trace_alpha)
                if not evaluate(formula, trace, 0):
                    report.n_violations += 1
                    if len(report.counterexamples) < max_counterexamples:
                        report.counterexamples.append(states)
            elif status is bt.RUNNING and depth + 1 < bound:
                visit(depth + 1)
            runner.restore(snap)

    visit(0)
    return report


def check_mission(expr: ms.MissionExpr, alphabet, bound: int,
                  theta: int = 1) -> InclusionReport:
    """Compile, bind scripted runners, and exhaustively check one mission."""
    cfg = ms.MissionConfig(t_task_max=bound, theta=theta,
                           alphabet=frozenset(alphabet))
    tree = bind_scripted(compile_mission(expr, cfg), expr, cfg)
    formula = ms.expand_mission(expr)
    return check_inclusion(tree, formula, alphabet, bound)


# ---------------------------------------------------------------------------
# Tree mutation (for validating the checker itself)

def strip_conditions(tree: bt.BtNode, prop: Formula) -> int:
    """Replace every condition node testing ``prop`` with constant truth.

    Returns how many nodes were rewritten.  Used to demonstrate that the
    inclusion checker detects an unsound tree.
    """
    count = 0
    for node in bt.iter_nodes(tree):
        if isinstance(node, bt.Condition) and node.prop == prop:
            node.prop = ltlf.TRUE
            node._fn = ltlf.compile_prop(ltlf.TRUE)
            count += 1
    return count


# ---------------------------------------------------------------------------
# Mission fuzzing

def _random_prop(rng: Random, atoms: list[str], easy: bool) -> Formula:
    if easy and rng.random() < 0.5:
        return ltlf.TRUE
    a = Atom(rng.choice(atoms))
    roll = rng.random()
    if roll < 0.45:
        return a
    if roll < 0.7:
        return ltlf.Not(a)
    b = Atom(rng.choice(atoms))
    return ltlf.And(a, b) if roll < 0.85 else ltlf.Or(a, b)


def _random_task(rng: Random, atoms: list[str], index: int) -> ms.Task:
    name = f"t{index}"
    return ms.Task(ms.PpaTaskSpec(
        name=name,
        poc=_random_prop(rng, atoms, easy=False),
        prc=_random_prop(rng, atoms, easy=True),
        gc=_random_prop(rng, atoms, easy=True),
        tc=_random_prop(rng, atoms, easy=True),
        action=name,
    ))


def random_sound_mission(rng: Random, atoms: list[str],
                         max_tasks: int = 3) -> ms.MissionExpr:
    """Random mission within the verified-sound fragment.

    Every ``or``/``until`` operand is either F-wrapped or a compound of
    such operands, so each task subtree runs in one gap-free window that
    an F in the formula can anchor to.  Conjunctions hold bare tasks
    only, which the parallel node re-checks on every tick.  Bare tasks
    and bare conjunctions may also sit at the root, where their window
    is the whole trace.
    """
    counter = itertools.count(1)

    def task() -> tuple[ms.MissionExpr, int]:
        return _random_task(rng, atoms, next(counter)), 1

    def and_block(budget: int) -> tuple[ms.MissionExpr, int]:
        if budget <= 1:
            return task()
        left, lu = task()
        right, ru = and_block(budget - 1) if rng.random() < 0.3 else task()
        return ms.And(left, right), lu + ru

    def certifying(budget: int) -> tuple[ms.MissionExpr, int]:
        roll = rng.random()
        if budget >= 2 and roll < 0.25:
            left, lu = certifying(rng.randint(1, budget - 1))
            right, ru = certifying(budget - lu)
            return ms.Until(left, right), lu + ru
        if budget >= 2 and roll < 0.4:
            left, lu = certifying(rng.randint(1, budget - 1))
            right, ru = certifying(budget - lu)
            return ms.Or(left, right), lu + ru
        child, used = under_f(budget)
        return ms.Finally(child), used

    def under_f(budget: int) -> tuple[ms.MissionExpr, int]:
        roll = rng.random()
        if budget >= 2 and roll < 0.25:
            return and_block(budget)
        if budget >= 2 and roll < 0.6:
            return certifying(budget)
        return task()

    budget = rng.randint(1, max_tasks)
    expr, _ = under_f(budget) if rng.random() < 0.4 else certifying(budget)
    return expr


def counterexample_mission(atoms: list[str]) -> ms.MissionExpr:
    """A grammar-legal mission outside the sound fragment.

    The or's right task carries a task constraint; if the left task runs
    for a while and then fails, the right task starts late and can
    succeed on a stream whose early ticks already broke that constraint.
    """
    a, b, c = atoms[0], atoms[1], atoms[2]
    left = ms.Task(ms.PpaTaskSpec(
        name="left", poc=Atom(a), prc=ltlf.TRUE, gc=Atom(b), tc=ltlf.TRUE,
        action="left"))
    right = ms.Task(ms.PpaTaskSpec(
        name="right", poc=Atom(c), prc=ltlf.TRUE, gc=ltlf.TRUE, tc=Atom(a),
        action="right"))
    return ms.Or(left, right)


def fuzz_corpus_report(n_missions: int, seed: int, bound: int = 5,
                       atoms: tuple[str, ...] = ("a", "b", "c")) -> dict:
    """Check a corpus of fuzzed missions; aggregate the reports."""
    rng = Random(seed)
    total_success = 0
    total_violations = 0
    worst: InclusionReport | None = None
    for _ in range(n_missions):
        expr = random_sound_mission(rng, list(atoms))
        report = check_mission(expr, set(atoms), bound,
                               theta=rng.choice([0, 1, 2]))
        total_success += report.n_bt_success_traces
        total_violations += report.n_violations
        if report.n_violations and worst is None:
            worst = report
    return {
        "n_missions": n_missions,
        "bound": bound,
        "total_bt_success_traces": total_success,
        "total_violations": total_violations,
        "first_violating_report": worst.to_json() if worst else None,
    }
