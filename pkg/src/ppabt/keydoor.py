"""Scripted key-door scenario with perturbations, in two control modes.

The world is symbolic: three scripted plans (stack the key on the door,
move the stack to the passive zone, retrieve the prize), each needing a
fixed number of progress steps.  A perturbation destroys the active
plan's physical progress and knocks down one stage-specific proposition;
a reversible perturbation settles back one step later, an irreversible
one does not.

Baseline mode chains the three plans with if-else checks and no retry.
BT mode compiles the key-door mission with a retry budget and lets the
Finally decorators reset the failed task.  At most one perturbation
fires per trial.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import bt
from .compiler import ActionRunner, bind_actions, compile_mission
from .ltlf import Trace, evaluate
from .mission import MissionConfig, expand_mission, mission_alphabet
from .missions import KEYDOOR_ATOMS, build_keydoor

STAGES = ("key", "door", "prize")

POSTCONDITION = {"key": "KeyStacked", "door": "KeyDoorPassive",
                 "prize": "PrizePassive"}

# which proposition a disturbance knocks down, per stage
DISTURBED_PROP = {"key": "VisibleKeyDoor", "door": "KeyStacked",
                  "prize": "KeyDoorPassive"}

INITIAL_PROPS = {
    "NoErr": True,
    "KeyStacked": False,
    "IsKeyDoor": True,
    "VisibleKeyDoor": True,
    "KeyDoorPassive": False,
    "PrizePassive": False,
    "PrizeVisible": True,
}


@dataclass
class Perturbation:
    stage: str
    at_progress: int = 1
    reversible: bool = True

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")
        if self.at_progress < 1:
            raise ValueError("perturbation must hit mid-plan (progress >= 1)")


@dataclass
class ScenarioScript:
    theta: int = 1
    durations: dict = field(default_factory=lambda: {s: 3 for s in STAGES})
    perturbation: Perturbation | None = None
    t_task_max: int = 60
    max_trace: int = 60

    def __post_init__(self):
        if self.perturbation is not None:
            limit = self.durations[self.perturbation.stage]
            if self.perturbation.at_progress >= limit:
                raise ValueError("perturbation must land before the plan finishes")


class KeyDoorWorld:
    """Symbolic block world driven by plan-progress steps."""

    def __init__(self, script: ScenarioScript):
        self.script = script
        self.props = dict(INITIAL_PROPS)
        self.progress = {s: 0 for s in STAGES}
        self.perturbation_fired = False
        self._restore: list[tuple[str, bool]] = []
        self.alphabet = KEYDOOR_ATOMS

    def propositions(self) -> dict[str, bool]:
        return dict(self.props)

    def apply(self, action) -> None:
        # transient effects settle one step after they appeared
        for prop, value in self._restore:
            self.props[prop] = value
        self._restore.clear()
        if action is None:
            return
        stage = action
        self.progress[stage] += 1
        pert = self.script.perturbation
        if (pert is not None and not self.perturbation_fired
                and pert.stage == stage
                and self.progress[stage] == pert.at_progress):
            self.perturbation_fired = True
            self.progress[stage] = 0
            prop = DISTURBED_PROP[stage]
            if pert.reversible:
                self._restore.append((prop, self.props[prop]))
            self.props[prop] = False
            return
        if self.progress[stage] >= self.script.durations[stage]:
            self._finish(stage)

    def _finish(self, stage: str) -> None:
        self.props[POSTCONDITION[stage]] = True
        if stage == "door":
            self.props["VisibleKeyDoor"] = False
        elif stage == "prize":
            self.props["PrizeVisible"] = False


def run_baseline_trial(script: ScenarioScript) -> dict:
    """Chain the three plans with if-else postcondition checks, no retry."""
    world = KeyDoorWorld(script)
    ticks = 0
    for stage in STAGES:
        for _ in range(script.durations[stage]):
            world.apply(stage)
            ticks += 1
        if not world.props[POSTCONDITION[stage]]:
            return {"mode": "baseline", "success": False, "ticks": ticks,
                    "failed_stage": stage, "resets": 0}
    return {"mode": "baseline", "success": True, "ticks": ticks,
            "failed_stage": None, "resets": 0}


def run_bt_trial(script: ScenarioScript, audit: bool = True) -> dict:
    """Compile the key-door mission and run it against the scripted world."""
    expr = build_keydoor()
    cfg = MissionConfig(t_task_max=script.t_task_max, theta=script.theta,
                        alphabet=KEYDOOR_ATOMS)
    tree = compile_mission(expr, cfg)
    runners = {}
    for task in _task_specs(expr):
        def choose(state, mem, rng, _stage=task.action):
            return _stage
        runners[task.action] = ActionRunner(task.action, task.poc,
                                            cfg.t_task_max, choose)
    bind_actions(tree, runners)
    world = KeyDoorWorld(script)
    status, trace_states, log = bt.run_to_completion(tree, world,
                                                     script.max_trace)
    success = status is bt.SUCCESS
    sound = True
    if audit and success:
        alphabet = mission_alphabet(expr, KEYDOOR_ATOMS)
        trace = Trace(trace_states, alphabet)
        sound = evaluate(expand_mission(expr), trace, 0)
    return {"mode": "bt", "success": success, "ticks": len(trace_states),
            "failed_stage": None if success else _failed_stage(world),
            "resets": log.total_resets(), "sound": sound}


def _task_specs(expr):
    from .mission import tasks_of
    return tasks_of(expr)


def _failed_stage(world: KeyDoorWorld) -> str:
    for stage in STAGES:
        if not world.props[POSTCONDITION[stage]]:
            return stage
    return "unknown"


def run_experiment(mode: str, theta: int = 1, n_normal: int = 10,
                   n_disturbed_per_stage: int = 5, reversible: bool = True,
                   durations: dict | None = None) -> dict:
    """Paper-shaped trial block: normal trials plus per-stage disturbances."""
    run_trial = run_baseline_trial if mode == "baseline" else run_bt_trial

    def script(pert=None):
        kwargs = {"theta": theta, "perturbation": pert}
        if durations is not None:
            kwargs["durations"] = dict(durations)
        return ScenarioScript(**kwargs)

    trials = []
    for i in range(n_normal):
        result = run_trial(script())
        result.update(trial=len(trials), disturbed=None)
        trials.append(result)
    for stage in STAGES:
        for i in range(n_disturbed_per_stage):
            pert = Perturbation(stage, at_progress=1 + i % 2,
                                reversible=reversible)
            result = run_trial(script(pert))
            result.update(trial=len(trials), disturbed=stage)
            trials.append(result)

    summary = {
        "mode": mode,
        "normal_successes": sum(t["success"] for t in trials
                                if t["disturbed"] is None),
        "normal_trials": n_normal,
        "disturbed_successes": {
            stage: sum(t["success"] for t in trials if t["disturbed"] == stage)
            for stage in STAGES
        },
        "disturbed_trials_per_stage": n_disturbed_per_stage,
    }
    return {"summary": summary, "trials": trials}
