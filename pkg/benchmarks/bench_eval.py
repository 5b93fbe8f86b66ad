"""Benchmark the memoized trace evaluator against the reference evaluator.

The package ships two implementations of trace satisfaction: the
memoized fixpoint recursion used everywhere, and the quantifier-literal
reference evaluator the verifier cross-checks against.  This script
measures both on the same random workload.

Run:  python3 benchmarks/bench_eval.py [n_formulas] [trace_len]
"""

import random
import sys
import time

from ppabt.ltlf import Atom, And, Or, Not, Next, Until, Finally, Globally, Trace, evaluate
from ppabt.verify import evaluate_reference


def random_formula(rng, names, depth):
    if depth <= 0 or rng.random() < 0.3:
        return Atom(rng.choice(names))
    kind = rng.randrange(8)
    if kind < 1:
        return Not(random_formula(rng, names, depth - 1))
    if kind < 2:
        return Next(random_formula(rng, names, depth - 1))
    if kind < 3:
        return Finally(random_formula(rng, names, depth - 1))
    if kind < 4:
        return Globally(random_formula(rng, names, depth - 1))
    left = random_formula(rng, names, depth - 1)
    right = random_formula(rng, names, depth - 1)
    return [And, Or, Until, Until][kind - 4](left, right)


def bench(fn, cases):
    start = time.perf_counter()
    outcomes = [fn(formula, trace) for formula, trace in cases]
    elapsed = time.perf_counter() - start
    return outcomes, elapsed


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 200
    length = int(sys.argv[2]) if len(sys.argv) > 2 else 50
    rng = random.Random(0)
    names = ["a", "b", "c"]
    alphabet = frozenset(names)
    cases = []
    for _ in range(n):
        formula = random_formula(rng, names, depth=7)
        states = [{x: rng.random() < 0.5 for x in names} for _ in range(length)]
        cases.append((formula, Trace(states, alphabet)))

    memo_out, memo_s = bench(lambda f, t: evaluate(f, t, 0), cases)
    ref_out, ref_s = bench(lambda f, t: evaluate_reference(f, t, 0), cases)
    assert memo_out == ref_out, "evaluators disagree"

    print(f"{n} formulas x {length}-state traces")
    print(f"  memoized evaluator:  {memo_s:.3f}s  ({1e6 * memo_s / n:.1f} us/eval)")
    print(f"  reference evaluator: {ref_s:.3f}s  ({1e6 * ref_s / n:.1f} us/eval)")
    print(f"  speedup: {ref_s / memo_s:.1f}x")


if __name__ == "__main__":
    main()
