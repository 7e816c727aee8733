"""Time the JIT-compiled search kernel against the interpreted fallback.

The backend is chosen at import time from the FMPSAT_PURE environment
variable, so each measurement runs in a fresh subprocess. The workload
is a set of membership encodings over random classifiers plus random
3-CNFs near the satisfiability threshold.

Usage: python benchmarks/compare_backends.py [--quick]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import textwrap

WORKER = textwrap.dedent(
    """
    import json
    import sys
    import time

    import numpy as np

    from fmpsat.encode import CnfFormula, encode_xpg_onestep, encode_xpg_twostep
    from fmpsat.fmp import generate_random_classifier, random_instance
    from fmpsat.sat import JIT_ENABLED, solve, warm_up

    quick = sys.argv[1] == "quick"

    def random_3cnf(rng, num_vars, num_clauses):
        clauses = []
        for _ in range(num_clauses):
            variables = rng.choice(num_vars, size=3, replace=False) + 1
            signs = rng.integers(0, 2, 3) * 2 - 1
            clauses.append([int(v * s) for v, s in zip(variables, signs)])
        return CnfFormula(num_vars=num_vars, clauses=clauses)

    warm_up()  # compile (or no-op) outside the timed region
    rng = np.random.default_rng(7)
    results = {"jit": JIT_ENABLED}

    # membership encodings on one mid-sized classifier
    m, budget = (40, 400) if quick else (60, 900)
    clf = generate_random_classifier("obdd", m, budget, seed=1)
    inst = random_instance(clf, rng)
    graph = clf.xpg_for(inst)
    for label, encoder in (("one-step", encode_xpg_onestep),
                           ("two-step", encode_xpg_twostep)):
        cnfs = [encoder(graph, t)[0] for t in range(1, (6 if quick else 11))]
        started = time.perf_counter()
        verdicts = [solve(c).satisfiable for c in cnfs]
        results[f"membership {label} (m={m})"] = time.perf_counter() - started
        results.setdefault("verdicts", []).append(verdicts)

    # random 3-CNFs near the threshold
    n = 60 if quick else 120
    cnfs = [random_3cnf(rng, n, int(4.2 * n)) for _ in range(10 if quick else 30)]
    started = time.perf_counter()
    verdicts = [solve(c).satisfiable for c in cnfs]
    results[f"random 3-CNF (n={n})"] = time.perf_counter() - started
    results["verdicts"].append(verdicts)

    # deletion-based witness extraction (graph activation kernel)
    from fmpsat.explain import find_axp

    rounds = 3 if quick else 10
    started = time.perf_counter()
    witnesses = [
        sorted(find_axp(clf, inst, range(1, m + 1))) for _ in range(rounds)
    ]
    results[f"witness extraction (m={m})"] = time.perf_counter() - started
    results["verdicts"].append(witnesses[0])

    print(json.dumps(results))
    """
)


def run_mode(pure: bool, quick: bool) -> dict:
    env = dict(os.environ)
    if pure:
        env["FMPSAT_PURE"] = "1"
    else:
        env.pop("FMPSAT_PURE", None)
    proc = subprocess.run(
        [sys.executable, "-c", WORKER, "quick" if quick else "full"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(proc.stdout.splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller workload")
    args = parser.parse_args()

    print("running JIT backend...", file=sys.stderr)
    jit = run_mode(pure=False, quick=args.quick)
    print("running interpreted fallback (FMPSAT_PURE=1)...", file=sys.stderr)
    pure = run_mode(pure=True, quick=args.quick)

    assert jit.pop("jit") is True, "JIT backend did not engage; is numba installed?"
    assert pure.pop("jit") is False
    assert jit.pop("verdicts") == pure.pop("verdicts"), "backends disagree!"

    width = max(len(k) for k in jit)
    print(f"{'workload'.ljust(width)}  {'jit s':>9}  {'pure s':>9}  {'speedup':>8}")
    for key in jit:
        ratio = pure[key] / jit[key] if jit[key] > 0 else float("inf")
        print(f"{key.ljust(width)}  {jit[key]:9.3f}  {pure[key]:9.3f}  {ratio:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
