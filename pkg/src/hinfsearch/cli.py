"""Command-line front end.

Subcommands:

    solve      run one solver on one problem, writing trace/summary files
    eval       print the exact cost at a gain (grid and bisection routes)
    certify    bisection-certified norm plus bounded-real residual
    estimate   simulation-based power-iteration estimate
    gen        generate a random instance file
    bench      batch runs over problems x algorithms x seeds

The environment variable HINFSEARCH_THREADS caps bench worker parallelism.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import HinfSearchError, ProblemFormatError, UnstablePolicyError
from .estimation import EstimatorConfig, power_iteration_norm
from .experiment import ALGORITHMS, ExperimentConfig, run_experiment
from .norms import hinf_feasible, hinf_norm_bisect, hinf_norm_grid, verify_bounded_real
from .problems import gen_random_problem, load_problem, save_problem
from .systems import assemble_closed_loop, spectral_radius


def _load_gain(problem, gain_path):
    if gain_path is None:
        if problem.K0 is None:
            raise ProblemFormatError(
                f"problem {problem.name!r} has no K0; pass --gain")
        return problem.K0
    doc = json.loads(Path(gain_path).read_text())
    return np.array(doc, dtype=float)


def _check_stabilizing(problem, K) -> float:
    rho = spectral_radius(problem.plant.A - problem.plant.B @ K)
    if rho >= 1.0:
        raise UnstablePolicyError(rho)
    return rho


def _cmd_solve(args) -> int:
    overrides = {}
    est_overrides = {}
    if args.config:
        doc = json.loads(Path(args.config).read_text())
        est_overrides = doc.pop("estimator", {})
        overrides = doc
    cfg = ExperimentConfig(
        algorithm=args.algo, seed=args.seed, out_dir=Path(args.out),
        problem=args.problem, algo_config=overrides,
        estimator_config=est_overrides, j_star=args.jstar)
    status = run_experiment(cfg)
    summary = json.loads((Path(args.out) / "summary.json").read_text())
    print(json.dumps(summary, indent=1))
    return status


def _cmd_eval(args) -> int:
    problem = load_problem(args.problem)
    K = _load_gain(problem, args.gain)
    _check_stabilizing(problem, K)
    cl = assemble_closed_loop(problem.plant, K)
    grid = hinf_norm_grid(cl)
    bis = hinf_norm_bisect(problem.plant, K, tol=args.tol)
    print(f"grid      {grid.value:.12g}  (peak omega {grid.peak_frequency:.9g})")
    print(f"bisection {bis.value:.12g}")
    print(f"|difference| {abs(grid.value - bis.value):.3e}")
    return 0


def _cmd_certify(args) -> int:
    problem = load_problem(args.problem)
    K = _load_gain(problem, args.gain)
    _check_stabilizing(problem, K)
    res = hinf_norm_bisect(problem.plant, K, tol=args.tol)
    gamma = res.value + args.tol
    cert = hinf_feasible(problem.plant, K, gamma)
    if not cert.feasible:
        print(f"bisection value {res.value:.12g} but gamma={gamma:.12g} "
              f"not certified", file=sys.stderr)
        return 1
    cl = assemble_closed_loop(problem.plant, K)
    residual = verify_bounded_real(cl, gamma, cert.P)
    print(f"value     {res.value:.12g}  (bisection, tol {args.tol:g})")
    print(f"gamma     {gamma:.12g}  certified feasible")
    print(f"riccati residual      {cert.residual:.3e}")
    print(f"bounded-real residual {residual:.3e}")
    return 0


def _cmd_estimate(args) -> int:
    problem = load_problem(args.problem)
    K = _load_gain(problem, args.gain)
    _check_stabilizing(problem, K)
    cfg = EstimatorConfig(horizon=args.horizon, power_iters=args.power_iters,
                          init_seed=args.seed)
    cl = assemble_closed_loop(problem.plant, K)
    est = power_iteration_norm(cl, cfg)
    print(f"estimate  {est:.12g}  (horizon N={args.horizon})")
    return 0


def _cmd_gen(args) -> int:
    problem, attempts = gen_random_problem(args.nx, args.nu, args.seed)
    save_problem(problem, args.out)
    rho = spectral_radius(problem.plant.A - problem.plant.B @ problem.K0)
    print(f"wrote {args.out}  (K0 after {attempts} draws, rho={rho:.4f})")
    return 0


def _bench_worker(cfg: ExperimentConfig):
    status = run_experiment(cfg)
    summary = json.loads((cfg.out_dir / "summary.json").read_text())
    summary["exit"] = status
    return summary


def _cmd_bench(args) -> int:
    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)
    overrides = {}
    est_overrides = {}
    if args.config:
        doc = json.loads(Path(args.config).read_text())
        est_overrides = doc.pop("estimator", {})
        overrides = doc
    jobs = []
    for prob in args.problem:
        for algo in args.algo:
            for seed in args.seeds:
                name = f"{Path(str(prob)).stem}-{algo}-seed{seed}"
                jobs.append(ExperimentConfig(
                    algorithm=algo, seed=seed, out_dir=out_root / name,
                    problem=prob, algo_config=dict(overrides),
                    estimator_config=dict(est_overrides),
                    j_star=args.jstar))
    workers = int(os.environ.get("HINFSEARCH_THREADS", "0")) or None
    results = []
    if workers == 1 or len(jobs) == 1:
        results = [_bench_worker(c) for c in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_bench_worker, jobs))
    # gnuplot-friendly aggregate: whitespace-separated, '#' comment header
    lines = ["# problem algorithm seed final_J rel_err iterations "
             "oracle_calls wall_time_s status"]
    rc = 0
    for s in results:
        rel = s.get("rel_err", float("nan"))
        lines.append(
            f"{s['problem']} {s['algorithm']} {s['seed']} "
            f"{s['final_J']:.17g} {rel:.17g} {s['iterations']} "
            f"{s['oracle_calls']} {s['wall_time_s']:.3f} {s['status']}")
        rc = max(rc, s["exit"])
    (out_root / "bench.dat").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return rc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hinfsearch",
        description="Direct policy search for discrete-time H-infinity "
                    "state-feedback synthesis")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="run one solver on one problem")
    sp.add_argument("--problem", required=True,
                    help="problem file path or bundled name "
                         "(example13, exampleD1)")
    sp.add_argument("--algo", required=True, choices=ALGORITHMS)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--config", help="JSON file overriding solver defaults")
    sp.add_argument("--jstar", type=float, default=None,
                    help="reference optimum for relative-error output")
    sp.set_defaults(func=_cmd_solve)

    ev = sub.add_parser("eval", help="exact cost at a gain")
    ev.add_argument("--problem", required=True)
    ev.add_argument("--gain", help="JSON file with the gain matrix "
                                   "(defaults to the problem's K0)")
    ev.add_argument("--tol", type=float, default=1e-8)
    ev.set_defaults(func=_cmd_eval)

    ce = sub.add_parser("certify", help="bisection value plus certificate")
    ce.add_argument("--problem", required=True)
    ce.add_argument("--gain")
    ce.add_argument("--tol", type=float, default=1e-8)
    ce.set_defaults(func=_cmd_certify)

    es = sub.add_parser("estimate", help="power-iteration estimate")
    es.add_argument("--problem", required=True)
    es.add_argument("--gain")
    es.add_argument("--horizon", type=int, default=100)
    es.add_argument("--power-iters", type=int, default=50)
    es.add_argument("--seed", type=int, default=0)
    es.set_defaults(func=_cmd_estimate)

    ge = sub.add_parser("gen", help="generate a random instance")
    ge.add_argument("--nx", type=int, required=True)
    ge.add_argument("--nu", type=int, required=True)
    ge.add_argument("--seed", type=int, required=True)
    ge.add_argument("--out", required=True, help="output problem file")
    ge.set_defaults(func=_cmd_gen)

    be = sub.add_parser("bench", help="batch runs over problems/algos/seeds")
    be.add_argument("--problem", nargs="+", required=True)
    be.add_argument("--algo", nargs="+", required=True, choices=ALGORITHMS)
    be.add_argument("--seeds", nargs="+", type=int, required=True)
    be.add_argument("--out", required=True)
    be.add_argument("--config")
    be.add_argument("--jstar", type=float, default=None)
    be.set_defaults(func=_cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UnstablePolicyError as exc:
        print(f"policy not stabilizing: rho={exc.rho:.6g}", file=sys.stderr)
        return 3
    except ProblemFormatError as exc:
        print(f"problem error: {exc}", file=sys.stderr)
        return 2
    except (HinfSearchError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
