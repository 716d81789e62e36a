#!/usr/bin/env python3
"""Run all solvers on the bundled 3-state instance and write traces.

Reproduces the solver-comparison experiment at desk scale: Goldstein
descent, gradient sampling, non-derivative sampling, annealed INGD, and
model-free NS, all from the same starting gain, each into its own output
directory with trace.csv / relerr.csv / summary.json.
"""

import argparse
import json
from pathlib import Path

from hinfsearch import ExperimentConfig, run_experiment

RUNS = {
    "goldstein": {"mode": "constant", "delta": 0.01, "m": 4,
                  "max_iters": 300, "tol_F": 1e-8},
    "gs": {"m": 4, "max_iters": 400},
    "ns": {"m": 4, "max_iters": 400},
    "ingd": {"delta": 0.01, "eps": 1e-5, "mode": "anneal", "max_iters": 400},
    "ns-modelfree": {"m": 4, "max_iters": 400},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/example13")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = Path(args.out)
    for algo, overrides in RUNS.items():
        cfg = ExperimentConfig(
            algorithm=algo, seed=args.seed, out_dir=out / algo,
            problem="example13", algo_config=overrides,
            estimator_config={"horizon": 100} if algo == "ns-modelfree" else {})
        run_experiment(cfg)
        summary = json.loads((out / algo / "summary.json").read_text())
        print(f"{algo:12s} J={summary['final_J']:.6f} "
              f"rel_err={summary.get('rel_err', float('nan')):.3e} "
              f"iters={summary['iterations']} status={summary['status']}")


if __name__ == "__main__":
    main()
