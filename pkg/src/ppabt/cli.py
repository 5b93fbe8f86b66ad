"""Command-line interface: parse, compile, sweep, learn, infer, verify, keydoor.

Exit codes: 0 on success, 1 on usage or input errors, 2 when a
verification check finds a soundness violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import gridworld as gw
from .bt import bt_to_json, export_dot
from .compiler import compile_mission
from .keydoor import run_experiment
from .ltlf import ParseError, UnknownAtom, format_formula, formula_to_json, tokenize
from .mission import (
    DuplicateTaskName, MissionConfig, TASK_FIELDS, expand_mission,
    mission_to_json, parse_mission,
)
from .missions import C2H_TEXT
from .planners import (
    LearnerConfig, Policy, SoundnessViolation, evaluate_policy, learn,
    plan_grid_policies,
)
from .verify import check_mission, fuzz_corpus_report

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2

_KEYWORDS = {"task", "True", "False"} | set(TASK_FIELDS)

# paper-style sweep value sets
SWEEP_DEFAULTS = {
    "r_other": [round(-1.5 + 0.1 * i, 10) for i in range(15)] + [-0.04],
    "r_good": [0.1, 0.5, 1.0, 2.0, 5.0, 10.0],
    "r_fire": [-10.0, -5.0, -2.0, -1.0, -0.5, -0.1],
    "p_in": [round(0.4 + 0.05 * i, 10) for i in range(12)],
    "n_trials": 20,
    "seed": 0,
    "gamma": 0.9,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def infer_alphabet(text: str) -> set[str]:
    """Every identifier in the text is admitted as an atom.

    Over-approximating (task names included) is harmless: the alphabet
    only gates which atoms conditions may mention.
    """
    return {tok.text for tok in tokenize(text)
            if tok.kind == "word" and tok.text not in _KEYWORDS}


def _load_mission(args):
    text = Path(args.mission).read_text() if args.mission else C2H_TEXT
    if args.alphabet:
        alphabet = set(args.alphabet.split(","))
    else:
        alphabet = infer_alphabet(text)
    return parse_mission(text, alphabet), alphabet


def _write_json(data, out: str | None) -> None:
    payload = json.dumps(data, indent=2)
    if out:
        Path(out).write_text(payload + "\n")
    else:
        print(payload)


SWEEP_FIELDS = ["cell", "r_other", "r_good", "r_fire", "p_in", "n_trials",
                "seed", "success_probability", "mean_trace_len"]


def _write_csv(rows: list[dict], out: str | None,
               fieldnames: list[str] | None = None) -> None:
    header = fieldnames if fieldnames is not None else (list(rows[0]) if rows else [])
    if out:
        with open(out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=header)
            writer.writeheader()
            writer.writerows(rows)
    else:
        writer = csv.DictWriter(sys.stdout, fieldnames=header)
        writer.writeheader()
        writer.writerows(rows)


def cmd_parse(args) -> int:
    expr, alphabet = _load_mission(args)
    formula = expand_mission(expr)
    _write_json({
        "mission": mission_to_json(expr),
        "alphabet": sorted(alphabet),
        "formula": format_formula(formula),
        "formula_json": formula_to_json(formula),
    }, args.out)
    return EXIT_OK


def cmd_compile(args) -> int:
    expr, alphabet = _load_mission(args)
    cfg = MissionConfig(t_task_max=args.max_trace, theta=args.theta,
                        alphabet=frozenset(alphabet))
    tree = compile_mission(expr, cfg)
    if args.dot:
        Path(args.dot).write_text(export_dot(tree) + "\n")
    _write_json(bt_to_json(tree), args.out)
    return EXIT_OK


def _sweep_config(args) -> dict:
    cfg = dict(SWEEP_DEFAULTS)
    if args.config:
        cfg.update(json.loads(Path(args.config).read_text()))
    if args.trials is not None:
        cfg["n_trials"] = args.trials
    if args.seed is not None:
        cfg["seed"] = args.seed
    return cfg


def cmd_sweep(args) -> int:
    from .missions import build_c2h

    cfg = _sweep_config(args)
    rows = []
    cell_index = 0
    if cfg["n_trials"] == 0:
        _write_csv(rows, args.out, fieldnames=SWEEP_FIELDS)
        return EXIT_OK
    for r_other in cfg["r_other"]:
        for r_good in cfg["r_good"]:
            for r_fire in cfg["r_fire"]:
                for p_in in cfg["p_in"]:
                    cell_seed = cfg["seed"] * 1_000_003 + cell_index
                    grid = gw.GridConfig(p_in=p_in, r_other=r_other,
                                         r_good=r_good, r_fire=r_fire,
                                         seed=cell_seed)
                    policy = plan_grid_policies(grid, gamma=cfg["gamma"])
                    result = evaluate_policy(
                        build_c2h(grid), grid, policy, cfg["n_trials"],
                        randomize_start=False, seed=cell_seed,
                        max_trace=args.max_trace)
                    rows.append({
                        "cell": cell_index, "r_other": r_other,
                        "r_good": r_good, "r_fire": r_fire, "p_in": p_in,
                        "n_trials": cfg["n_trials"], "seed": cell_seed,
                        "success_probability": result["success_probability"],
                        "mean_trace_len": result["mean_trace_len"],
                    })
                    cell_index += 1
    _write_csv(rows, args.out, fieldnames=SWEEP_FIELDS)
    return EXIT_OK


def cmd_learn(args) -> int:
    from .missions import build_c2h

    p_ins = [float(x) for x in args.p_in.split(",")]
    curves = []
    summary = []
    policy_out = None
    for p_in in p_ins:
        for run in range(args.runs):
            run_seed = args.seed * 7_919 + run
            grid = gw.GridConfig(p_in=p_in, start_cell=tuple(args.start),
                                 seed=run_seed)
            lcfg = LearnerConfig(episodes=args.episodes,
                                 max_trace=args.max_trace,
                                 mu=args.discount, seed=run_seed)
            policy, curve = learn(build_c2h(grid), grid, lcfg)
            if policy_out is None:
                policy_out = policy
            learning_success = (sum(r["status"] == "success" for r in curve)
                                / len(curve)) if curve else 0.0
            infer = evaluate_policy(build_c2h(grid), grid, policy,
                                    n_trials=args.trials,
                                    randomize_start=True,
                                    seed=run_seed + 1,
                                    max_trace=args.max_trace)
            for rec in curve:
                curves.append({"p_in": p_in, "run": run, **rec})
            summary.append({
                "p_in": p_in, "run": run, "seed": run_seed,
                "learning_success": learning_success,
                "mean_learning_trace_len":
                    (sum(r["trace_len"] for r in curve) / len(curve))
                    if curve else 0.0,
                "inference_success": infer["success_probability"],
                "mean_inference_trace_len": infer["mean_trace_len"],
            })
    if args.out:
        _write_csv(curves, args.out + ".curves.csv")
        _write_csv(summary, args.out + ".summary.csv")
        if policy_out is not None:
            _write_json(policy_out.to_json(), args.out + ".policy.json")
    else:
        _write_csv(summary, None)
    return EXIT_OK


def cmd_infer(args) -> int:
    from .missions import build_c2h

    policy = Policy.from_json(json.loads(Path(args.policy).read_text()))
    grid = gw.GridConfig(p_in=args.p_in_single, seed=args.seed)
    result = evaluate_policy(build_c2h(grid), grid, policy,
                             n_trials=args.trials, randomize_start=True,
                             seed=args.seed, max_trace=args.max_trace)
    _write_json({"p_in": args.p_in_single, "seed": args.seed, **result},
                args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.mission:
        expr, alphabet = _load_mission(args)
        report = check_mission(expr, alphabet, bound=args.bound,
                               theta=args.theta)
        data = report.to_json()
        violations = report.n_violations
        if violations and args.out:
            rows = [{"counterexample": i, "tick": t, "state": state}
                    for i, t, state in report.counterexamples_csv_rows()]
            _write_csv(rows, args.out + ".counterexamples.csv")
    else:
        data = fuzz_corpus_report(args.missions, seed=args.seed,
                                  bound=args.bound)
        violations = data["total_violations"]
    _write_json(data, args.out)
    if violations:
        print(f"verification FAILED: {violations} violating traces",
              file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_keydoor(args) -> int:
    modes = ["baseline", "bt"] if args.mode == "both" else [args.mode]
    reports = {}
    for mode in modes:
        reports[mode] = run_experiment(mode, theta=args.theta,
                                       reversible=not args.irreversible)
    _write_json(reports, args.out)
    for mode, report in reports.items():
        s = report["summary"]
        print(f"{mode}: normal {s['normal_successes']}/{s['normal_trials']}, "
              f"disturbed {s['disturbed_successes']}", file=sys.stderr)
    bad = any(not t.get("sound", True)
              for report in reports.values() for t in report["trials"])
    return EXIT_VIOLATION if bad else EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="ppabt")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mission=True):
        if mission:
            p.add_argument("--mission", help="mission file (default: built-in C2H)")
            p.add_argument("--alphabet", help="comma-separated atoms")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output path")

    p = sub.add_parser("parse", help="mission file to AST and formula JSON")
    common(p)
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("compile", help="mission file to BT JSON and DOT")
    common(p)
    p.add_argument("--theta", type=int, default=1)
    p.add_argument("--max-trace", type=int, default=50)
    p.add_argument("--dot", help="write Graphviz text here")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("sweep", help="reward/p_in sweep with policy iteration")
    common(p, mission=False)
    p.add_argument("--config", help="JSON overriding the sweep value sets")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--max-trace", type=int, default=50)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("learn", help="BT-feedback learning runs plus inference")
    common(p, mission=False)
    p.add_argument("--p-in", default="0.95", help="comma-separated p_in values")
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--episodes", type=int, default=200)
    p.add_argument("--trials", type=int, default=50,
                   help="inference trials per learned policy")
    p.add_argument("--max-trace", type=int, default=50)
    p.add_argument("--discount", type=float, default=0.9)
    p.add_argument("--start", type=int, nargs=2, default=(4, 1),
                   help="learning start cell (column row)")
    p.set_defaults(fn=cmd_learn)

    p = sub.add_parser("infer", help="evaluate a stored policy")
    common(p, mission=False)
    p.add_argument("--policy", required=True, help="policy JSON path")
    p.add_argument("--p-in", dest="p_in_single", type=float, default=0.95)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--max-trace", type=int, default=50)
    p.set_defaults(fn=cmd_infer)

    p = sub.add_parser("verify", help="bounded soundness check")
    common(p)
    p.add_argument("--missions", type=int, default=50,
                   help="fuzzed corpus size when no mission file is given")
    p.add_argument("--bound", type=int, default=5)
    p.add_argument("--theta", type=int, default=1)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("keydoor", help="scripted key-door trials")
    common(p, mission=False)
    p.add_argument("--mode", choices=["both", "baseline", "bt"], default="both")
    p.add_argument("--theta", type=int, default=1)
    p.add_argument("--irreversible", action="store_true")
    p.set_defaults(fn=cmd_keydoor)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, UnknownAtom, DuplicateTaskName, FileNotFoundError,
            json.JSONDecodeError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except SoundnessViolation as err:
        print(f"verification FAILED: {err}", file=sys.stderr)
        for t, state in enumerate(err.trace_states):
            print(f"  tick {t}: {json.dumps(state, sort_keys=True)}",
                  file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
