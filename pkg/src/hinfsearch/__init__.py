"""Direct policy search for discrete-time H-infinity state-feedback synthesis."""

from .bundle import Bundle, ball_point, min_norm_point, sample_bundle
from .errors import (
    GenerationError,
    HinfSearchError,
    InfeasibleBallError,
    NondifferentiablePointError,
    OracleError,
    ProblemFormatError,
    UnstablePolicyError,
)
from .estimation import (
    EstimatorConfig,
    PowerIterationCost,
    noisy_cost_oracle,
    power_iteration_norm,
    solve_ns_modelfree,
)
from .experiment import ExperimentConfig, run_experiment
from .gradients import AnalyticGradient, grad_analytic, grad_fd, gupal_chi
from .norms import (
    ExactHinfCost,
    FeasibilityCertificate,
    NormResult,
    frequency_gain,
    hinf_feasible,
    hinf_norm_bisect,
    hinf_norm_grid,
    refined_peaks,
    verify_bounded_real,
)
from .problems import (
    Problem,
    gen_random_problem,
    load_problem,
    problem_from_dict,
    problem_to_dict,
    save_problem,
)
from .solvers import (
    GoldsteinConfig,
    GsConfig,
    IngdConfig,
    IterationRecord,
    IterationTrace,
    NsConfig,
    estimate_lipschitz,
    ingd_min_norm,
    solve_goldstein,
    solve_gs,
    solve_ingd,
    solve_ns,
)
from .systems import (
    ClosedLoop,
    Plant,
    Policy,
    assemble_closed_loop,
    is_stabilizing,
    simulate,
    spectral_radius,
    sqrt_psd,
)

__all__ = [
    "AnalyticGradient",
    "Bundle",
    "ClosedLoop",
    "EstimatorConfig",
    "ExactHinfCost",
    "ExperimentConfig",
    "FeasibilityCertificate",
    "GenerationError",
    "GoldsteinConfig",
    "GsConfig",
    "HinfSearchError",
    "InfeasibleBallError",
    "IngdConfig",
    "IterationRecord",
    "IterationTrace",
    "NondifferentiablePointError",
    "NormResult",
    "NsConfig",
    "OracleError",
    "Plant",
    "Policy",
    "PowerIterationCost",
    "Problem",
    "ProblemFormatError",
    "UnstablePolicyError",
    "assemble_closed_loop",
    "ball_point",
    "estimate_lipschitz",
    "frequency_gain",
    "gen_random_problem",
    "grad_analytic",
    "grad_fd",
    "gupal_chi",
    "hinf_feasible",
    "hinf_norm_bisect",
    "hinf_norm_grid",
    "ingd_min_norm",
    "is_stabilizing",
    "load_problem",
    "min_norm_point",
    "noisy_cost_oracle",
    "power_iteration_norm",
    "problem_from_dict",
    "problem_to_dict",
    "refined_peaks",
    "run_experiment",
    "sample_bundle",
    "save_problem",
    "simulate",
    "solve_goldstein",
    "solve_gs",
    "solve_ingd",
    "solve_ns",
    "solve_ns_modelfree",
    "spectral_radius",
    "sqrt_psd",
]

__version__ = "0.1.0"
