#!/usr/bin/env python3
"""Model-free NS across simulation window lengths.

Sweeps the power-iteration horizon N and reports the terminal relative
error of model-free NS on the bundled 3-state instance; shorter windows
give a noisier zeroth-order oracle and degrade the convergence.
"""

import argparse
from pathlib import Path

from hinfsearch import EstimatorConfig, NsConfig, load_problem, solve_ns_modelfree


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/modelfree_sweep")
    ap.add_argument("--horizons", nargs="+", type=int,
                    default=[100, 50, 20, 10])
    ap.add_argument("--max-iters", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    problem = load_problem("example13")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for N in args.horizons:
        _pol, trace = solve_ns_modelfree(
            problem.plant, problem.K0,
            NsConfig(m=4, max_iters=args.max_iters),
            EstimatorConfig(horizon=N), seed=args.seed)
        trace.write_csv(out / f"N{N}.csv")
        rel = (trace.final_J - problem.J_star) / problem.J_star
        print(f"N={N:4d}: final J={trace.final_J:.6f} rel_err={rel:.3e}")


if __name__ == "__main__":
    main()
