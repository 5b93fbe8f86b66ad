"""Action-node policies: exact policy iteration and BT-feedback learning.

Policy iteration solves the known grid MDP per task phase (C: reach the
cheese, H: return home) by alternating exact evaluation (linear solve)
with greedy improvement, ties broken in the fixed order Up, Down, Left,
Right.

The feedback learner keeps a stochastic table p(a | s, phase),
initialized uniform.  After each episode every state-action pair in a
trace segment is nudged by mu^(m - t) * b, where m is the segment's
final index and b is +1 on success and -1 on failure; rows are clamped
to a small floor and renormalized so they stay proper distributions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from random import Random

import numpy as np

from . import bt, gridworld as gw
from .compiler import ActionRunner, bind_actions, compile_mission
from .ltlf import Trace
from .mission import (
    Finally, MissionConfig, MissionExpr, Task, Until, expand_mission,
    mission_alphabet,
)
from .verify import audit_trace

PHASES = ("C", "H")


class PlannerError(Exception):
    pass


class NonStochasticKernel(PlannerError):
    pass


class NoConvergence(PlannerError):
    pass


# ---------------------------------------------------------------------------
# Policies

def cell_key(cell: tuple[int, int]) -> str:
    return f"{cell[0]},{cell[1]}"


@dataclass
class Policy:
    """Per-phase conditional action distribution p(a | s)."""

    tables: dict[str, dict[str, list[float]]] = field(
        default_factory=lambda: {p: {} for p in PHASES})
    kind: str = "stochastic"

    def row(self, key: str, phase: str) -> list[float]:
        table = self.tables[phase]
        row = table.get(key)
        if row is None:
            row = table[key] = [0.25, 0.25, 0.25, 0.25]
        return row

    def sample(self, key: str, phase: str, rng: Random) -> int:
        row = self.row(key, phase)
        u = rng.random()
        acc = 0.0
        for i in range(3):
            acc += row[i]
            if u < acc:
                return i
        return 3

    def best(self, key: str, phase: str) -> int:
        row = self.row(key, phase)
        return max(range(4), key=lambda i: (row[i], -i))

    def validate(self, tol: float = 1e-9) -> None:
        for phase, table in self.tables.items():
            for key, row in table.items():
                if len(row) != 4 or min(row) < 0 or abs(sum(row) - 1.0) > tol:
                    raise ValueError(f"invalid row {row} at ({phase}, {key})")

    def to_json(self) -> dict:
        return {"kind": self.kind, "tables": self.tables}

    @classmethod
    def from_json(cls, data: dict) -> "Policy":
        policy = cls(tables={p: {k: list(map(float, row))
                                 for k, row in t.items()}
                             for p, t in data["tables"].items()},
                     kind=data.get("kind", "stochastic"))
        policy.validate(tol=1e-6)
        return policy


# ---------------------------------------------------------------------------
# Exact dynamic programming

def greedy_from_q(q: np.ndarray, tie_tol: float = 1e-9) -> np.ndarray:
    """First action within tie_tol of the row maximum (fixed action order)."""
    best = q.max(axis=1)
    return np.argmax(q >= (best - tie_tol)[:, None], axis=1)


def policy_iteration(P: np.ndarray, r: np.ndarray, gamma: float,
                     tol: float = 1e-10, max_iters: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """Exact policy iteration; returns (greedy action per state, values).

    Evaluation solves (I - gamma * P_pi) v = r_pi directly, so ``tol``
    only guards the stochasticity check on the kernel rows.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if not np.allclose(P.sum(axis=2), 1.0, atol=1e-9):
        raise NonStochasticKernel("transition rows must sum to 1")
    n = P.shape[0]
    pi = np.zeros(n, dtype=int)
    identity = np.eye(n)
    for _ in range(max_iters):
        P_pi = P[np.arange(n), pi]
        r_pi = r[np.arange(n), pi]
        v = np.linalg.solve(identity - gamma * P_pi, r_pi)
        q = r + gamma * (P @ v)
        new_pi = greedy_from_q(q)
        if np.array_equal(new_pi, pi):
            return pi, v
        pi = new_pi
    raise NoConvergence(f"no fixed point after {max_iters} improvement sweeps")


def plan_grid_policies(cfg: gw.GridConfig, gamma: float = 0.9) -> Policy:
    """Deterministic per-phase policies for the grid via policy iteration."""
    policy = Policy(kind="deterministic")
    for phase in PHASES:
        P, r = gw.build_phase_mdp(cfg, phase)
        pi, _ = policy_iteration(P, r, gamma)
        for cell in cfg.cells():
            row = [0.0, 0.0, 0.0, 0.0]
            row[int(pi[cfg.cell_index(cell)])] = 1.0
            policy.tables[phase][cell_key(cell)] = row
    return policy


# ---------------------------------------------------------------------------
# Feedback learning (episode records and the update rule)

@dataclass
class EpisodeRecord:
    """State-action pairs of one episode with the terminal feedback.

    ``phase_split`` is the number of leading pairs that belong to the
    cheese phase when that subtree succeeded, or None when it never did
    (then the whole trace is cheese-phase with the mission's feedback).
    """

    pairs: list[tuple[str, int]]
    b: int
    phase_split: int | None = None

    def __post_init__(self):
        if self.b not in (1, -1):
            raise ValueError("b must be +1 or -1")
        if self.phase_split is not None and self.phase_split > len(self.pairs):
            raise ValueError("phase_split beyond the recorded pairs")

    def segments(self) -> list[tuple[str, list[tuple[str, int]], int]]:
        if self.phase_split is None:
            return [("C", self.pairs, self.b)]
        head = self.pairs[:self.phase_split]
        tail = self.pairs[self.phase_split:]
        out = []
        if head:
            out.append(("C", head, 1))  # the cheese subtree itself succeeded
        if tail:
            out.append(("H", tail, self.b))
        return out


def feedback_update(policy: Policy, record: EpisodeRecord, mu: float = 0.9,
                    floor: float = 1e-3) -> Policy:
    """Apply the terminal-status update to every recorded pair.

    Within a segment of final index m, the pair at position t receives
    mu^(m - t) * b; touched rows are clamped to ``floor`` and
    renormalized.  Returns the same policy object.
    """
    for phase, pairs, b in record.segments():
        if not pairs:
            continue
        m = len(pairs) - 1
        touched = set()
        for t, (key, action) in enumerate(pairs):
            row = policy.row(key, phase)
            row[action] += (mu ** (m - t)) * b
            touched.add(key)
        for key in touched:
            row = policy.row(key, phase)
            for i in range(4):
                if row[i] < floor:
                    row[i] = floor
            total = row[0] + row[1] + row[2] + row[3]
            for i in range(4):
                row[i] /= total
    return policy


@dataclass
class LearnerConfig:
    episodes: int = 200
    max_trace: int = 50
    mu: float = 0.9
    floor: float = 1e-3
    seed: int = 0
    audit: bool = True

    def __post_init__(self):
        if self.episodes < 0 or self.max_trace < 1:
            raise ValueError("episodes must be >= 0 and max_trace >= 1")
        if not 0.0 < self.mu <= 1.0:
            raise ValueError("mu must lie in (0, 1]")


class SoundnessViolation(PlannerError):
    """A successful episode produced a trace that falsifies the mission goal."""

    def __init__(self, trace_states):
        super().__init__("successful episode violates the mission formula")
        self.trace_states = trace_states


def _c2h_parts(expr: MissionExpr) -> tuple[Task, Task]:
    if (isinstance(expr, Until)
            and isinstance(expr.left, Finally) and isinstance(expr.right, Finally)
            and isinstance(expr.left.child, Task) and isinstance(expr.right.child, Task)):
        return expr.left.child, expr.right.child
    raise ValueError("learner needs a two-phase mission: U (F task) (F task)")


class C2hRuntime:
    """Compiled two-phase mission bound to a shared policy.

    The first task's action samples from phase C, the second from phase
    H; each sampled (state, action) pair is recorded for the end-of-
    episode update.
    """

    def __init__(self, expr: MissionExpr, grid_cfg: gw.GridConfig,
                 policy: Policy, max_trace: int, theta: int = 0,
                 sample_mode: str = "sample"):
        first, second = _c2h_parts(expr)
        self.expr = expr
        self.grid_cfg = grid_cfg
        self.policy = policy
        self.max_trace = max_trace
        self.sample_mode = sample_mode
        self.formula = expand_mission(expr)
        self.alphabet = mission_alphabet(expr, gw.grid_alphabet(grid_cfg))
        mcfg = MissionConfig(t_task_max=max_trace, theta=theta,
                             alphabet=self.alphabet)
        self.tree = compile_mission(expr, mcfg)
        self._env_slot: dict = {"env": None}
        self.pairs: list[tuple[str, int, str]] = []
        runners = {
            first.spec.action: self._runner(first.spec, "C", mcfg),
            second.spec.action: self._runner(second.spec, "H", mcfg),
        }
        bind_actions(self.tree, runners)
        # the cheese-phase Finally decorator, for success detection
        self._first_finally = self.tree.child.children[0]
        assert isinstance(self._first_finally, bt.FinallyReset)

    def _runner(self, spec, phase: str, mcfg: MissionConfig) -> ActionRunner:
        policy = self.policy
        slot = self._env_slot
        pairs = self.pairs
        sample_mode = self.sample_mode

        def choose(state, mem, rng):
            key = cell_key(slot["env"].state.mouse_cell)
            if sample_mode == "best":
                action = policy.best(key, phase)
            else:
                action = policy.sample(key, phase, rng)
            pairs.append((key, action, phase))
            return action

        return ActionRunner(spec.action, spec.poc, mcfg.t_task_max, choose)

    def run_episode(self, seed: int, start_cell=None) -> tuple[bt.Status, list, EpisodeRecord]:
        rng = Random(seed)
        env = gw.GridEnv(self.grid_cfg, rng, start_cell=start_cell)
        self._env_slot["env"] = env
        self.pairs.clear()
        runner = bt.MissionRunner(self.tree, rng=rng)
        status, trace_states, _ = bt.run_to_completion(
            self.tree, env, self.max_trace, runner=runner)
        cheese_mem = runner.blackboard.node_memory.get(self._first_finally.id, {})
        b = 1 if status is bt.SUCCESS else -1
        pairs = [(key, action) for key, action, _ in self.pairs]
        split = None
        if cheese_mem.get("succeeded"):
            split = sum(1 for _, _, phase in self.pairs if phase == "C")
        record = EpisodeRecord(pairs, b, split)
        return status, trace_states, record

    def audit(self, status: bt.Status, trace_states) -> bool:
        trace = Trace(trace_states, self.alphabet, max_len=self.max_trace)
        return audit_trace(self.formula, trace, status)


def learn(expr: MissionExpr, grid_cfg: gw.GridConfig, lcfg: LearnerConfig,
          policy: Policy | None = None) -> tuple[Policy, list[dict]]:
    """Run feedback-learning episodes on the two-phase mission.

    Returns the learned policy and a per-episode curve of dicts with
    episode index, status, trace length and the episode seed.
    """
    policy = policy if policy is not None else Policy()
    runtime = C2hRuntime(expr, grid_cfg, policy, lcfg.max_trace)
    master = Random(lcfg.seed)
    curve = []
    for episode in range(lcfg.episodes):
        ep_seed = master.randrange(2 ** 62)
        status, trace_states, record = runtime.run_episode(ep_seed)
        if lcfg.audit and not runtime.audit(status, trace_states):
            raise SoundnessViolation(trace_states)
        feedback_update(policy, record, lcfg.mu, lcfg.floor)
        curve.append({"episode": episode, "status": status.value,
                      "trace_len": len(trace_states), "seed": ep_seed})
    return policy, curve


def evaluate_policy(expr: MissionExpr, grid_cfg: gw.GridConfig, policy: Policy,
                    n_trials: int, randomize_start: bool = True,
                    seed: int = 0, max_trace: int = 50,
                    sample_mode: str = "sample",
                    audit: bool = True) -> dict:
    """Success fraction and mean trace length over independent episodes."""
    runtime = C2hRuntime(expr, grid_cfg, policy, max_trace,
                         sample_mode=sample_mode)
    master = Random(seed)
    start_choices = [c for c in grid_cfg.cells() if c != grid_cfg.fire_cell]
    successes = 0
    lengths = []
    for _ in range(n_trials):
        ep_seed = master.randrange(2 ** 62)
        start = None
        if randomize_start:
            start = start_choices[Random(ep_seed).randrange(len(start_choices))]
        status, trace_states, _ = runtime.run_episode(ep_seed, start_cell=start)
        if audit and not runtime.audit(status, trace_states):
            raise SoundnessViolation(trace_states)
        successes += status is bt.SUCCESS
        lengths.append(len(trace_states))
    return {
        "n_trials": n_trials,
        "success_probability": successes / n_trials if n_trials else 0.0,
        "mean_trace_len": float(np.mean(lengths)) if lengths else 0.0,
    }
