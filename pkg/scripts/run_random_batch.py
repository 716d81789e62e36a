#!/usr/bin/env python3
"""Non-derivative sampling on a batch of random 3-state instances.

Generates single-input instances by the standard recipe (A = I + U[0,1],
B ~ U[0,1], Q = (1+U[0,0.1]) I, R ~ U[1,1.5], K0 by positive-entry
rejection), runs NS on each, and certifies the reached optimum by Riccati
bisection at the final gain.
"""

import argparse
from pathlib import Path

from hinfsearch import (
    NsConfig,
    gen_random_problem,
    hinf_norm_bisect,
    solve_ns,
)

# seeds whose positive-entry rejection finds a stabilizing start
DEFAULT_SEEDS = [0, 1, 3, 4, 5, 8, 9, 10]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/random_ns")
    ap.add_argument("--seeds", nargs="+", type=int, default=DEFAULT_SEEDS)
    ap.add_argument("--max-iters", type=int, default=400)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for seed in args.seeds:
        problem, attempts = gen_random_problem(3, 1, seed=seed)
        policy, trace = solve_ns(problem.plant, problem.K0,
                                 NsConfig(m=4, max_iters=args.max_iters),
                                 seed=seed)
        certified = hinf_norm_bisect(problem.plant, policy.K, tol=1e-8).value
        trace.write_csv(out / f"seed{seed}.csv")
        print(f"seed {seed:3d}: J_final={trace.final_J:.6f} "
              f"bisect={certified:.6f} "
              f"gap={(trace.final_J - certified) / certified:.2e} "
              f"(K0 after {attempts} draws)")


if __name__ == "__main__":
    main()
