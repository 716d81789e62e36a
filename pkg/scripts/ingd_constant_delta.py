#!/usr/bin/env python3
"""INGD with a constant radius: stationarity without near-optimality.

Runs INGD at fixed (delta, eps) = (0.01, 1e-8) on the bundled 3-state
instance.  The run certifies a (delta, eps)-stationary point within a few
outer steps while the cost typically stays visibly above the optimum,
illustrating that small-radius stationarity does not imply a near-optimal
value.
"""

import argparse
from pathlib import Path

from hinfsearch import IngdConfig, load_problem, solve_ingd


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/ingd_constant")
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    problem = load_problem("example13")
    cfg = IngdConfig(delta=0.01, eps=1e-8, max_iters=100, mode="constant")
    _pol, trace = solve_ingd(problem.plant, problem.K0, cfg, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace.write_csv(out / "trace.csv")
    rel = (trace.final_J - problem.J_star) / problem.J_star
    print(f"status={trace.status} after {len(trace.records)} outer steps")
    print(f"||F|| at exit = {trace.records[-1].Fnorm:.2e}")
    print(f"final J = {trace.final_J:.6f}  rel err vs reference = {rel:.3e}")


if __name__ == "__main__":
    main()
