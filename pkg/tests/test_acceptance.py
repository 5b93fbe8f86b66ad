"""Acceptance suite: one test per exit criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as
they complete.  Tolerances and workloads are pinned here, not tuned at
runtime.
"""

import random
import time

import numpy as np
import pytest

from vi_oracle import value_iteration

from ppabt import gridworld as gw
from ppabt import mission as ms
from ppabt.compiler import bind_scripted, compile_mission
from ppabt.ltlf import (
    Finally, Globally, Not, Until, evaluate, format_formula, parse_ltlf,
)
from ppabt.keydoor import Perturbation, ScenarioScript, run_bt_trial, run_experiment
from ppabt.mission import MissionConfig, expand_mission, ppa_task
from ppabt.missions import build_c2h
from ppabt.planners import (
    EpisodeRecord, LearnerConfig, Policy, evaluate_policy, feedback_update,
    learn, plan_grid_policies, policy_iteration,
)
from ppabt.verify import check_inclusion, fuzz_corpus_report, strip_conditions
from test_ltlf import random_formula, random_trace


def verdict(criterion: str, ok: bool, detail: str, started: float) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {criterion}: {status} ({detail}, "
          f"{time.time() - started:.1f}s)")
    assert ok, f"{criterion}: {detail}"


class TestCriterion1Soundness:
    def test_exhaustive_scripted_enumeration(self):
        t0 = time.time()
        result = fuzz_corpus_report(n_missions=50, seed=20260808, bound=5)
        verdict(
            "1a soundness by exhaustive enumeration",
            result["total_violations"] == 0
            and result["total_bt_success_traces"] > 0,
            f"50 fuzzed missions, {result['total_bt_success_traces']} successful "
            f"traces audited, {result['total_violations']} violations",
            t0)

    def test_grid_world_episode_audits(self):
        t0 = time.time()
        episodes = 0
        # uniform random policies across slip levels, randomized starts
        for i, p_in in enumerate((0.4, 0.6, 0.8, 0.95)):
            cfg = gw.GridConfig(p_in=p_in, seed=100 + i)
            evaluate_policy(build_c2h(cfg), cfg, Policy(), n_trials=1000,
                            randomize_start=True, seed=100 + i, audit=True)
            episodes += 1000
        # policy-iteration policies, benign and adversarial rewards
        for i, (r_other, p_in) in enumerate(
                [(-0.04, 0.9), (-0.04, 0.6), (-1.5, 0.9), (-1.5, 0.6)]):
            cfg = gw.GridConfig(p_in=p_in, r_other=r_other, r_good=1.0,
                                r_fire=-1.0, seed=200 + i)
            policy = plan_grid_policies(cfg)
            evaluate_policy(build_c2h(cfg), cfg, policy, n_trials=1000,
                            randomize_start=True, seed=200 + i, audit=True)
            episodes += 1000
        # feedback-learned policies (the learning episodes audit themselves)
        for i, p_in in enumerate((0.9, 0.7)):
            cfg = gw.GridConfig(p_in=p_in, start_cell=(4, 1), seed=300 + i)
            policy, curve = learn(build_c2h(cfg), cfg,
                                  LearnerConfig(episodes=30, seed=300 + i))
            episodes += len(curve)
            evaluate_policy(build_c2h(cfg), cfg, policy, n_trials=970,
                            randomize_start=True, seed=300 + i, audit=True)
            episodes += 970
        verdict("1b soundness over seeded grid episodes", episodes == 10_000,
                f"{episodes} audited episodes, 0 violations", t0)

    def test_mutation_detects_unsoundness(self):
        t0 = time.time()
        spec = ppa_task("t", post="a", gc="!b", alphabet={"a", "b", "c"})
        expr = ms.Task(spec)
        cfg = MissionConfig(t_task_max=4, theta=0,
                            alphabet=frozenset({"a", "b", "c"}))
        tree = bind_scripted(compile_mission(expr, cfg), expr, cfg)
        strip_conditions(tree, spec.gc)
        report = check_inclusion(tree, expand_mission(expr),
                                 {"a", "b", "c"}, bound=4)
        verdict("1 mutation check (GC removed)", report.n_violations >= 1,
                f"{report.n_violations} violations detected", t0)


class TestCriterion2ParserSemantics:
    def test_roundtrip_identity_10k(self):
        t0 = time.time()
        rng = random.Random(2)
        names = ["a", "b", "c", "d"]
        bad = 0
        for _ in range(10_000):
            f = random_formula(rng, names, depth=8)
            if parse_ltlf(format_formula(f), set(names)) != f:
                bad += 1
        verdict("2 round-trip identity", bad == 0,
                f"10000 formulas, {bad} mismatches", t0)

    def test_unrolling_identities_1k(self):
        t0 = time.time()
        rng = random.Random(3)
        names = ["a", "b"]
        checked = 0
        bad = 0
        for _ in range(1000):
            tr = random_trace(rng, names, 6)
            psi = random_formula(rng, names, 3)
            p1 = random_formula(rng, names, 3)
            p2 = random_formula(rng, names, 3)
            if evaluate(Not(Finally(psi)), tr) != evaluate(Globally(Not(psi)), tr):
                bad += 1
            if evaluate(Not(Globally(psi)), tr) != evaluate(Finally(Not(psi)), tr):
                bad += 1
            g, u = Globally(psi), Until(p1, p2)
            for i in range(len(tr) - 1):
                if evaluate(g, tr, i) != (evaluate(psi, tr, i)
                                          and evaluate(g, tr, i + 1)):
                    bad += 1
                if evaluate(u, tr, i) != (evaluate(p2, tr, i)
                                          or (evaluate(p1, tr, i)
                                              and evaluate(u, tr, i + 1))):
                    bad += 1
            checked += 1
        verdict("2 temporal unrolling identities", bad == 0,
                f"{checked} formula/trace pairs, {bad} mismatches", t0)


class TestCriterion3PolicyIteration:
    def test_agreement_with_oracle_20_settings(self):
        t0 = time.time()
        rng = random.Random(4)
        settings = 0
        disagreements = 0
        while settings < 20:
            cfg = gw.GridConfig(
                p_in=rng.uniform(0.4, 0.999),
                r_other=rng.uniform(-1.5, -0.01),
                r_good=rng.choice([0.1, 0.5, 1.0, 2.0, 5.0, 10.0]),
                r_fire=rng.choice([-10.0, -5.0, -2.0, -1.0, -0.5, -0.1]),
            )
            gamma = rng.uniform(0.5, 0.99)
            for phase in ("C", "H"):
                P, r = gw.build_phase_mdp(cfg, phase)
                pi, _ = policy_iteration(P, r, gamma)
                pi_ref, _ = value_iteration(P, r, gamma, tol=1e-10)
                disagreements += int(not np.array_equal(pi, pi_ref))
            settings += 1
        verdict("3 policy iteration vs value-iteration oracle",
                disagreements == 0,
                f"{settings} random settings x2 phases, "
                f"{disagreements} disagreements", t0)


class TestCriterion4SweepTrend:
    def test_reward_structure_trend(self):
        t0 = time.time()
        results = {}
        for r_other in (-0.04, -1.5):
            cfg = gw.GridConfig(p_in=0.9, r_other=r_other, r_good=1.0,
                                r_fire=-1.0, seed=40)
            policy = plan_grid_policies(cfg, gamma=0.9)
            results[r_other] = evaluate_policy(
                build_c2h(cfg), cfg, policy, n_trials=500,
                randomize_start=False, seed=40, audit=True)
        gap = (results[-0.04]["success_probability"]
               - results[-1.5]["success_probability"])
        shorter = (results[-1.5]["mean_trace_len"]
                   < results[-0.04]["mean_trace_len"])
        verdict("4 reward-sweep trend", gap >= 0.2 and shorter,
                f"success gap {gap:.3f} (need >= 0.2), trace lengths "
                f"{results[-1.5]['mean_trace_len']:.1f} vs "
                f"{results[-0.04]['mean_trace_len']:.1f}", t0)


@pytest.fixture(scope="module")
def learning_runs():
    stats = {}
    for p_in in (0.6, 0.8, 0.95):
        rows = []
        for run in range(50):
            seed = 5000 + run
            cfg = gw.GridConfig(p_in=p_in, start_cell=(4, 1), seed=seed)
            policy, curve = learn(
                build_c2h(cfg), cfg,
                LearnerConfig(episodes=200, max_trace=50, mu=0.9, seed=seed))
            infer = evaluate_policy(build_c2h(cfg), cfg, policy,
                                    n_trials=50, randomize_start=True,
                                    seed=seed + 1, max_trace=50)
            rows.append({
                "learn_succ": sum(r["status"] == "success"
                                  for r in curve) / len(curve),
                "learn_len": sum(r["trace_len"] for r in curve) / len(curve),
                "infer_succ": infer["success_probability"],
            })
        stats[p_in] = {
            "learn_succ": np.mean([r["learn_succ"] for r in rows]),
            "learn_len": np.mean([r["learn_len"] for r in rows]),
            "infer_succ": np.mean([r["infer_succ"] for r in rows]),
        }
    return stats


class TestCriterion5LearningProperties:
    def test_inference_beats_learning(self, learning_runs):
        t0 = time.time()
        ok = all(learning_runs[p]["infer_succ"] >= learning_runs[p]["learn_succ"]
                 for p in (0.6, 0.8, 0.95))
        detail = ", ".join(
            f"p_in={p}: infer {learning_runs[p]['infer_succ']:.3f} vs "
            f"learn {learning_runs[p]['learn_succ']:.3f}"
            for p in (0.6, 0.8, 0.95))
        verdict("5a inference >= learning success", ok, detail, t0)

    def test_trace_length_grows_as_p_in_drops(self, learning_runs):
        t0 = time.time()
        lo, hi = learning_runs[0.6]["learn_len"], learning_runs[0.95]["learn_len"]
        verdict("5b learning trace length, p_in 0.6 vs 0.95", lo > hi,
                f"{lo:.1f} vs {hi:.1f}", t0)

    def test_inference_floor_at_high_p_in(self, learning_runs):
        t0 = time.time()
        value = learning_runs[0.95]["infer_succ"]
        verdict("5c inference success floor at p_in=0.95", value >= 0.8,
                f"{value:.3f} (need >= 0.8)", t0)


class TestCriterion6KeyDoor:
    def test_table_reproduction(self):
        t0 = time.time()
        baseline = run_experiment("baseline")["summary"]
        bt_mode = run_experiment("bt", theta=1, reversible=True)["summary"]
        bt_disturbed = sum(bt_mode["disturbed_successes"].values())
        base_disturbed = sum(baseline["disturbed_successes"].values())
        ok = (baseline["normal_successes"] == 10
              and bt_mode["normal_successes"] == 10
              and base_disturbed == 0
              and bt_disturbed >= 12)
        verdict("6 key-door qualitative reproduction", ok,
                f"normal 10/10 both; disturbed baseline {base_disturbed}/15, "
                f"bt {bt_disturbed}/15 (need >= 12)", t0)

    def test_irreversible_flag_demonstrates_failure(self):
        t0 = time.time()
        failures = 0
        for stage in ("key", "door", "prize"):
            script = ScenarioScript(
                theta=1, perturbation=Perturbation(stage, reversible=False))
            failures += int(not run_bt_trial(script)["success"])
        verdict("6 irreversible perturbation failure path", failures == 3,
                f"{failures}/3 irreversible disturbances end in failure", t0)


class TestCriterion7FeedbackRule:
    def test_three_unit_examples(self):
        t0 = time.time()
        tol = 1e-12
        ok = True

        policy = Policy()
        feedback_update(policy, EpisodeRecord([("s", 0)], b=1))
        expected = [0.625, 0.125, 0.125, 0.125]
        ok &= all(abs(x - y) <= tol
                  for x, y in zip(policy.tables["C"]["s"], expected))

        policy = Policy()
        feedback_update(policy, EpisodeRecord([("s", 0)], b=-1), floor=1e-3)
        total = 0.001 + 0.75
        expected = [0.001 / total, 0.25 / total, 0.25 / total, 0.25 / total]
        ok &= all(abs(x - y) <= tol
                  for x, y in zip(policy.tables["C"]["s"], expected))

        policy = Policy()
        feedback_update(policy,
                        EpisodeRecord([("s0", 0), ("s1", 1), ("s2", 2)], b=1),
                        mu=0.9)
        ok &= abs(policy.tables["C"]["s0"][0] - 1.06 / 1.81) <= tol
        ok &= abs(policy.tables["C"]["s1"][1] - 1.15 / 1.90) <= tol
        ok &= abs(policy.tables["C"]["s2"][2] - 1.25 / 2.00) <= tol

        verdict("7 feedback-update unit conformance", ok,
                "three examples at 1e-12", t0)
