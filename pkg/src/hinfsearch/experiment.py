"""Experiment orchestration: resolve a config, run a solver, emit files.

Each run writes into its output directory:

    trace.csv     per-iteration schema n,J,Fnorm,delta,eps,t,oracle_calls,
                  elapsed_s with a trailing ``# status=...`` comment line
    relerr.csv    n,rel_err relative-error companion column, only when a
                  reference value J_star is available
    summary.json  final cost, relative error, iterations, oracle calls,
                  wall time, terminal status
    config.json   the fully resolved configuration actually used

Exit status is 0 for converged/stationary_target and nonzero otherwise.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ProblemFormatError
from .estimation import EstimatorConfig, solve_ns_modelfree
from .problems import Problem, gen_random_problem, load_problem, problem_to_dict
from .solvers import (
    GoldsteinConfig,
    GsConfig,
    IngdConfig,
    NsConfig,
    solve_goldstein,
    solve_gs,
    solve_ingd,
    solve_ns,
)

ALGORITHMS = ("goldstein", "gs", "ns", "ingd", "ns-modelfree")

_CONFIG_TYPES = {
    "goldstein": GoldsteinConfig,
    "gs": GsConfig,
    "ns": NsConfig,
    "ingd": IngdConfig,
    "ns-modelfree": NsConfig,
}


@dataclass
class ExperimentConfig:
    """One solver run on one problem: exactly one problem source, a seed,
    an algorithm with optional config overrides, and an output directory."""

    algorithm: str
    seed: int
    out_dir: Path
    problem: str | Path | None = None
    generator: dict | None = None  # {"n_x": ..., "n_u": ..., "seed": ...}
    algo_config: dict = field(default_factory=dict)
    estimator_config: dict = field(default_factory=dict)
    j_star: float | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; "
                             f"choose from {ALGORITHMS}")
        if (self.problem is None) == (self.generator is None):
            raise ValueError("exactly one problem source required "
                             "(problem path or generator spec)")
        if self.seed is None:
            raise ValueError("seed is mandatory")
        self.out_dir = Path(self.out_dir)


def _build_config(algorithm: str, overrides: dict):
    cls = _CONFIG_TYPES[algorithm]
    known = {f.name for f in dataclasses.fields(cls)}
    bad = set(overrides) - known
    if bad:
        raise ValueError(f"unknown {cls.__name__} fields: {sorted(bad)}")
    return cls(**overrides)


def resolve_problem(cfg: ExperimentConfig) -> Problem:
    if cfg.problem is not None:
        return load_problem(cfg.problem)
    gen = dict(cfg.generator)
    problem, _attempts = gen_random_problem(
        int(gen["n_x"]), int(gen["n_u"]), int(gen.get("seed", cfg.seed)))
    return problem


def run_solver(problem: Problem, algorithm: str, algo_cfg, seed: int,
               est_cfg: EstimatorConfig | None = None):
    if problem.K0 is None:
        raise ValueError(f"problem {problem.name!r} carries no starting "
                         f"gain K0")
    plant, K0 = problem.plant, problem.K0
    if algorithm == "goldstein":
        return solve_goldstein(plant, K0, algo_cfg, seed=seed)
    if algorithm == "gs":
        return solve_gs(plant, K0, algo_cfg, seed=seed)
    if algorithm == "ns":
        return solve_ns(plant, K0, algo_cfg, seed=seed)
    if algorithm == "ingd":
        return solve_ingd(plant, K0, algo_cfg, seed=seed)
    if algorithm == "ns-modelfree":
        return solve_ns_modelfree(plant, K0, algo_cfg,
                                  est_cfg or EstimatorConfig(), seed=seed)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def run_experiment(cfg: ExperimentConfig) -> int:
    """Run one experiment and write trace/summary/config files.

    Returns the process exit status: 0 when the run ended converged or on
    a stationarity target, 1 otherwise.
    """
    problem = resolve_problem(cfg)
    algo_cfg = _build_config(cfg.algorithm, cfg.algo_config)
    est_cfg = (EstimatorConfig(**cfg.estimator_config)
               if cfg.algorithm == "ns-modelfree" else None)
    j_star = cfg.j_star if cfg.j_star is not None else problem.J_star

    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    policy, trace = run_solver(problem, cfg.algorithm, algo_cfg, cfg.seed,
                               est_cfg)
    wall = time.perf_counter() - t0

    trace.write_csv(out / "trace.csv")
    if j_star is not None:
        lines = ["n,rel_err"]
        for r in trace.records:
            lines.append(f"{r.n},{(r.J - j_star) / j_star:.17g}")
        (out / "relerr.csv").write_text("\n".join(lines) + "\n")

    summary = {
        "problem": problem.name,
        "algorithm": cfg.algorithm,
        "seed": cfg.seed,
        "final_J": trace.final_J,
        "iterations": len(trace.records),
        "oracle_calls": (trace.records[-1].oracle_calls
                         if trace.records else 0),
        "wall_time_s": wall,
        "status": trace.status,
    }
    if j_star is not None:
        summary["J_star"] = j_star
        summary["rel_err"] = (trace.final_J - j_star) / j_star
    (out / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")

    resolved = {
        "algorithm": cfg.algorithm,
        "seed": cfg.seed,
        "problem": str(cfg.problem) if cfg.problem is not None else None,
        "generator": cfg.generator,
        "algo_config": dataclasses.asdict(algo_cfg),
        "j_star": j_star,
        "final_K": np.asarray(policy.K).tolist(),
    }
    if est_cfg is not None:
        resolved["estimator_config"] = dataclasses.asdict(est_cfg)
    (out / "config.json").write_text(json.dumps(resolved, indent=1) + "\n")

    return 0 if trace.status in ("converged", "stationary_target") else 1
