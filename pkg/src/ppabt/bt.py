"""Behavior-tree engine: tri-state nodes, blackboard memory, tick loop.

Control nodes are reactive: sequence and selector re-evaluate their
children from the left on every tick, parallel ticks all children.
Conditions never return Running.  Per-node memory (latches, reset
counters, success history) lives in the blackboard keyed by node id so
a whole execution can be snapshotted and restored.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from random import Random
from typing import Callable, Iterator

from .ltlf import (
    Formula, StateVector, compile_prop, format_formula, formula_from_json,
    formula_to_json,
)
from .mission import ACTION_PREFIX


class Status(Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    RUNNING = "running"


SUCCESS = Status.SUCCESS
FAILURE = Status.FAILURE
RUNNING = Status.RUNNING


class BtError(Exception):
    pass


class UnboundAction(BtError):
    def __init__(self, binding: str):
        super().__init__(f"action {binding!r} has no registered runner")
        self.binding = binding


class ConcurrentActionConflict(BtError):
    """Two action nodes tried to drive the environment in one tick."""


_ids = itertools.count()


class Blackboard:
    """Global key-value store plus per-node memory keyed by node id."""

    def __init__(self):
        self.entries: dict = {}
        self.node_memory: dict[int, dict] = {}

    def mem(self, node_id: int) -> dict:
        mem = self.node_memory.get(node_id)
        if mem is None:
            mem = self.node_memory[node_id] = {}
        return mem

    def snapshot(self) -> dict:
        return {
            "entries": dict(self.entries),
            "node_memory": {nid: dict(m) for nid, m in self.node_memory.items()},
        }

    def restore(self, snap: dict) -> None:
        self.entries = dict(snap["entries"])
        self.node_memory = {nid: dict(m) for nid, m in snap["node_memory"].items()}


class TickContext:
    __slots__ = ("state", "t", "blackboard", "rng", "pending", "resets", "statuses")

    def __init__(self, state: StateVector, t: int, blackboard: Blackboard,
                 rng: Random | None = None, statuses: dict | None = None):
        self.state = state
        self.t = t
        self.blackboard = blackboard
        self.rng = rng
        self.pending: tuple[str, object] | None = None
        self.resets: list[int] = []
        self.statuses = statuses

    def request_action(self, binding: str, env_action) -> None:
        if self.pending is not None:
            raise ConcurrentActionConflict(
                f"{binding!r} and {self.pending[0]!r} both fired at tick {self.t}")
        self.pending = (binding, env_action)


# ---------------------------------------------------------------------------
# Nodes

class BtNode:
    kind = "node"

    def __init__(self):
        self.id = next(_ids)

    def tick(self, ctx: TickContext) -> Status:
        raise NotImplementedError

    def children_nodes(self) -> list["BtNode"]:
        return []

    def _record(self, status: Status, ctx: TickContext) -> Status:
        if ctx.statuses is not None:
            ctx.statuses[self.id] = status
        return status


class Sequence(BtNode):
    kind = "sequence"

    def __init__(self, children: list[BtNode]):
        super().__init__()
        assert children, "control node needs at least one child"
        self.children = list(children)

    def children_nodes(self):
        return self.children

    def tick(self, ctx):
        for child in self.children:
            status = child.tick(ctx)
            if status is not SUCCESS:
                return self._record(status, ctx)
        return self._record(SUCCESS, ctx)


class Selector(BtNode):
    kind = "selector"

    def __init__(self, children: list[BtNode]):
        super().__init__()
        assert children, "control node needs at least one child"
        self.children = list(children)

    def children_nodes(self):
        return self.children

    def tick(self, ctx):
        for child in self.children:
            status = child.tick(ctx)
            if status is not FAILURE:
                return self._record(status, ctx)
        return self._record(FAILURE, ctx)


class Parallel(BtNode):
    kind = "parallel"

    def __init__(self, children: list[BtNode]):
        super().__init__()
        assert children, "control node needs at least one child"
        self.children = list(children)

    def children_nodes(self):
        return self.children

    def tick(self, ctx):
        statuses = [child.tick(ctx) for child in self.children]
        if any(s is FAILURE for s in statuses):
            return self._record(FAILURE, ctx)
        if all(s is SUCCESS for s in statuses):
            return self._record(SUCCESS, ctx)
        return self._record(RUNNING, ctx)


class Condition(BtNode):
    """Propositional check on the current state; never returns Running."""

    kind = "condition"

    def __init__(self, prop: Formula):
        super().__init__()
        self.prop = prop
        self._fn = compile_prop(prop)

    def tick(self, ctx):
        return self._record(SUCCESS if self._fn(ctx.state) else FAILURE, ctx)


class Action(BtNode):
    kind = "action"

    def __init__(self, binding: str):
        super().__init__()
        self.binding = binding
        self.runner = None

    def tick(self, ctx):
        if self.runner is None:
            raise UnboundAction(self.binding)
        return self._record(self.runner.tick(ctx, self.id), ctx)


class Negation(BtNode):
    kind = "negation"

    def __init__(self, child: BtNode):
        super().__init__()
        self.child = child

    def children_nodes(self):
        return [self.child]

    def tick(self, ctx):
        status = self.child.tick(ctx)
        if status is SUCCESS:
            status = FAILURE
        elif status is FAILURE:
            status = SUCCESS
        return self._record(status, ctx)


class PreconditionLatch(BtNode):
    """Sticks at Success once its child has succeeded within the attempt."""

    kind = "precondition_latch"

    def __init__(self, child: BtNode):
        super().__init__()
        self.child = child

    def children_nodes(self):
        return [self.child]

    def tick(self, ctx):
        mem = ctx.blackboard.mem(self.id)
        if mem.get("latched"):
            return self._record(SUCCESS, ctx)
        status = self.child.tick(ctx)
        if status is SUCCESS:
            mem["latched"] = True
        return self._record(status, ctx)


class FinallyReset(BtNode):
    """Mission Finally decorator.

    Latches child success.  On child failure it resets the descendant
    decorators and reports Running, up to ``theta`` times; once the
    reset budget is spent a child failure is final.
    """

    kind = "finally_reset"

    def __init__(self, child: BtNode, theta: int):
        super().__init__()
        assert theta >= 0
        self.child = child
        self.theta = theta

    def children_nodes(self):
        return [self.child]

    def tick(self, ctx):
        mem = ctx.blackboard.mem(self.id)
        if mem.get("succeeded"):
            return self._record(SUCCESS, ctx)
        status = self.child.tick(ctx)
        if status is SUCCESS:
            mem["succeeded"] = True
            return self._record(SUCCESS, ctx)
        if status is FAILURE:
            used = mem.get("resets", 0)
            if used < self.theta:
                mem["resets"] = used + 1
                reset_descendant_decorators(self.child, ctx.blackboard)
                ctx.resets.append(self.id)
                return self._record(RUNNING, ctx)
            return self._record(FAILURE, ctx)
        return self._record(RUNNING, ctx)


class MissionRoot(BtNode):
    """Passes its child's status through and fails once time is up."""

    kind = "mission_root"

    def __init__(self, child: BtNode, t_task_max: int):
        super().__init__()
        assert t_task_max >= 1
        self.child = child
        self.t_task_max = t_task_max

    def children_nodes(self):
        return [self.child]

    def tick(self, ctx):
        status = self.child.tick(ctx)
        if status is not SUCCESS and ctx.t >= self.t_task_max:
            status = FAILURE
        return self._record(status, ctx)


class TaskBoundary(BtNode):
    """Separates one task's subtree from the rest of the mission."""

    kind = "task_boundary"

    def __init__(self, child: BtNode):
        super().__init__()
        self.child = child

    def children_nodes(self):
        return [self.child]

    def tick(self, ctx):
        return self._record(self.child.tick(ctx), ctx)


def iter_nodes(tree: BtNode) -> Iterator[BtNode]:
    yield tree
    for child in tree.children_nodes():
        yield from iter_nodes(child)


def assign_ids(tree: BtNode) -> BtNode:
    """Relabel the tree with deterministic preorder node ids."""
    for i, node in enumerate(iter_nodes(tree)):
        node.id = i
    return tree


def reset_descendant_decorators(node: BtNode, blackboard: Blackboard) -> None:
    """Clear latches, success history and action progress in a subtree.

    Reset counters are lifetime memory and survive: a Finally decorator
    never issues more than its theta resets no matter how often an
    ancestor resets it.
    """
    for n in iter_nodes(node):
        mem = blackboard.node_memory.get(n.id)
        if mem is None:
            continue
        if isinstance(n, PreconditionLatch):
            mem.pop("latched", None)
        elif isinstance(n, FinallyReset):
            mem.pop("succeeded", None)
        elif isinstance(n, Action):
            mem.clear()


# ---------------------------------------------------------------------------
# Execution

@dataclass
class EpisodeLog:
    records: list[dict] = field(default_factory=list)
    reset_counts: dict[int, int] = field(default_factory=dict)

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(rec) for rec in self.records)

    def total_resets(self) -> int:
        return sum(self.reset_counts.values())


class MissionRunner:
    """Owns one execution: blackboard, tick counter, recorded trace.

    Each tick evaluates the whole tree against one state vector.  The
    reserved ``__action_*`` propositions are appended to the state from
    the bound runners' postconditions before the tree sees it.
    """

    def __init__(self, tree: BtNode, rng: Random | None = None,
                 record_statuses: bool = False):
        self.tree = tree
        self.rng = rng if rng is not None else Random(0)
        self.blackboard = Blackboard()
        self.t = 0
        self.trace_states: list[StateVector] = []
        self.log = EpisodeLog()
        self.record_statuses = record_statuses
        self.pending: tuple[str, object] | None = None
        self._action_props: list[tuple[str, Callable[[StateVector], bool]]] = []
        seen = set()
        for node in iter_nodes(tree):
            if isinstance(node, Action) and node.runner is not None:
                name = ACTION_PREFIX + node.binding
                if name not in seen:
                    seen.add(name)
                    self._action_props.append((name, node.runner.post_fn))

    def augment(self, env_state: StateVector) -> StateVector:
        state = dict(env_state)
        for name, post_fn in self._action_props:
            state[name] = post_fn(env_state)
        return state

    def tick_once(self, env_state: StateVector) -> Status:
        state = self.augment(env_state)
        self.trace_states.append(state)
        statuses = {} if self.record_statuses else None
        ctx = TickContext(state, self.t, self.blackboard, self.rng, statuses)
        status = self.tree.tick(ctx)
        self.pending = ctx.pending
        for nid in ctx.resets:
            self.log.reset_counts[nid] = self.log.reset_counts.get(nid, 0) + 1
        self.log.records.append({
            "t": self.t,
            "status": status.value,
            "action": list(ctx.pending) if ctx.pending else None,
            "resets": list(ctx.resets),
            **({"statuses": {k: v.value for k, v in statuses.items()}}
               if statuses is not None else {}),
        })
        self.t += 1
        return status

    def snapshot(self) -> dict:
        return {
            "bb": self.blackboard.snapshot(),
            "t": self.t,
            "n_states": len(self.trace_states),
            "n_records": len(self.log.records),
            "resets": dict(self.log.reset_counts),
        }

    def restore(self, snap: dict) -> None:
        self.blackboard.restore(snap["bb"])
        self.t = snap["t"]
        del self.trace_states[snap["n_states"]:]
        del self.log.records[snap["n_records"]:]
        self.log.reset_counts = dict(snap["resets"])


def run_to_completion(tree: BtNode, env, max_trace: int,
                      rng: Random | None = None,
                      record_statuses: bool = False,
                      runner: MissionRunner | None = None):
    """Run the tree against an environment until it halts.

    Per tick: read the environment state, record it on the trace, tick
    the root, then apply the env transition requested by the active
    action node (None when no action fired).  Stops on Success/Failure
    or when the trace reaches ``max_trace`` states (reported as
    Failure: the formula was not satisfied within the bound).

    Returns (status, trace_states, episode_log).
    """
    if runner is None:
        runner = MissionRunner(tree, rng=rng, record_statuses=record_statuses)
    while True:
        status = runner.tick_once(env.propositions())
        if status is not RUNNING:
            break
        if len(runner.trace_states) >= max_trace:
            status = FAILURE
            break
        env.apply(runner.pending[1] if runner.pending else None)
    return status, runner.trace_states, runner.log


# ---------------------------------------------------------------------------
# Structure helpers, DOT and JSON export

def structurally_equal(a: BtNode, b: BtNode) -> bool:
    """Equality up to node ids and bound runners."""
    if type(a) is not type(b):
        return False
    if isinstance(a, Condition):
        return a.prop == b.prop
    if isinstance(a, Action):
        return a.binding == b.binding
    if isinstance(a, FinallyReset) and a.theta != b.theta:
        return False
    if isinstance(a, MissionRoot) and a.t_task_max != b.t_task_max:
        return False
    ca, cb = a.children_nodes(), b.children_nodes()
    return len(ca) == len(cb) and all(
        structurally_equal(x, y) for x, y in zip(ca, cb))


def node_count(tree: BtNode) -> int:
    return sum(1 for _ in iter_nodes(tree))


_DOT_SYMBOLS = {
    "sequence": "→",          # ->
    "selector": "?",
    "parallel": "⇉",          # =>=>
    "negation": "◇ !",
    "precondition_latch": "◇ latch",
    "finally_reset": "◇ F",
    "mission_root": "◇ root",
    "task_boundary": "◇ task",
}


def export_dot(tree: BtNode) -> str:
    """Graphviz text, one node per tree node with the usual BT symbols."""
    lines = ["digraph bt {", "  node [shape=box];"]
    for node in iter_nodes(tree):
        if isinstance(node, Condition):
            label = f"◯ {format_formula(node.prop)}"
            shape = "ellipse"
        elif isinstance(node, Action):
            label = f"□ {node.binding}"
            shape = "box"
        else:
            label = _DOT_SYMBOLS[node.kind]
            if isinstance(node, FinallyReset):
                label += f" (theta={node.theta})"
            if isinstance(node, MissionRoot):
                label += f" (t_max={node.t_task_max})"
            shape = "diamond" if "◇" in label else "box"
        escaped = label.replace('"', '\\"')
        lines.append(f'  n{node.id} [label="{escaped}", shape={shape}];')
    for node in iter_nodes(tree):
        for child in node.children_nodes():
            lines.append(f"  n{node.id} -> n{child.id};")
    lines.append("}")
    return "\n".join(lines)


def bt_to_json(tree: BtNode) -> dict:
    data: dict = {"kind": tree.kind, "id": tree.id}
    if isinstance(tree, Condition):
        data["prop"] = formula_to_json(tree.prop)
    elif isinstance(tree, Action):
        data["binding"] = tree.binding
    elif isinstance(tree, FinallyReset):
        data["theta"] = tree.theta
    elif isinstance(tree, MissionRoot):
        data["t_task_max"] = tree.t_task_max
    children = tree.children_nodes()
    if children:
        data["children"] = [bt_to_json(c) for c in children]
    return data


def bt_from_json(data: dict) -> BtNode:
    kind = data["kind"]
    children = [bt_from_json(c) for c in data.get("children", [])]
    if kind == "condition":
        node = Condition(formula_from_json(data["prop"]))
    elif kind == "action":
        node = Action(data["binding"])
    elif kind == "sequence":
        node = Sequence(children)
    elif kind == "selector":
        node = Selector(children)
    elif kind == "parallel":
        node = Parallel(children)
    elif kind == "negation":
        node = Negation(children[0])
    elif kind == "precondition_latch":
        node = PreconditionLatch(children[0])
    elif kind == "finally_reset":
        node = FinallyReset(children[0], data["theta"])
    elif kind == "mission_root":
        node = MissionRoot(children[0], data["t_task_max"])
    elif kind == "task_boundary":
        node = TaskBoundary(children[0])
    else:
        raise ValueError(f"unknown node kind {kind!r}")
    node.id = data["id"]
    return node
