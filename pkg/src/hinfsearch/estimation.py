"""Zeroth-order H-infinity estimation from simulated trajectories.

The finite-horizon input-output operator T_N of a stable closed loop (the
block-Toeplitz map from N disturbance blocks to N performance blocks) is
never materialized; its largest singular value is estimated by power
iteration on T_N^T T_N, where the forward pass is a plain simulation and
the adjoint pass simulates the transposed system on the time-reversed
signal.  sigma_max(T_N) never exceeds the true H-infinity norm and is
nondecreasing in N, so the estimate is a certifiable lower bound up to
power-iteration stall.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnstablePolicyError
from .solvers import IterationTrace, NsConfig, solve_ns
from .systems import ClosedLoop, Plant, assemble_closed_loop, spectral_radius, _gain


@dataclass(frozen=True)
class EstimatorConfig:
    """Power-iteration estimator settings.

    `horizon` is the finite time window length N over which the closed loop
    is approximated; estimation quality improves as N grows.
    """

    horizon: int = 100
    power_iters: int = 50
    init_seed: int = 0
    rel_tol: float = 1e-6

    def __post_init__(self):
        if self.horizon < 2:
            raise ValueError("horizon must be >= 2")
        if self.power_iters < 1:
            raise ValueError("power_iters must be >= 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")


def _forward_batch(A, C, W):
    """Simulate z = T_N w for a stack of systems: (B,n,n),(B,n,n),(B,N,n)."""
    Bq, N, n = W.shape
    Z = np.empty_like(W)
    x = np.zeros((Bq, n, 1))
    for t in range(N):
        Z[:, t] = (C @ x)[..., 0]
        x = A @ x + W[:, t][..., None]
    return Z


def _adjoint_batch(A, C, V):
    """Apply T_N^T: simulate the transposed system on the reversed signal.

    (T_N^T v)_s = sum_{t>s} (A^T)^(t-1-s) C^T v_t, realized by running
    y <- A^T y + C^T v_reversed and reversing the collected states.
    """
    Bq, N, n = V.shape
    At = np.swapaxes(A, -1, -2)
    Ct = np.swapaxes(C, -1, -2)
    R = V[:, ::-1]
    Y = np.empty_like(V)
    y = np.zeros((Bq, n, 1))
    for t in range(N):
        Y[:, t] = y[..., 0]
        y = At @ y + Ct @ R[:, t][..., None]
    return Y[:, ::-1]


def _power_iteration_batch(A_stack, C_stack, cfg: EstimatorConfig) -> np.ndarray:
    """Largest-singular-value estimates of T_N for a stack of closed loops.

    The initial direction is drawn once from `init_seed` and shared across
    the stack, so an estimate depends only on (system, cfg).
    """
    Bq, n = A_stack.shape[0], A_stack.shape[-1]
    N = cfg.horizon
    rng = np.random.default_rng(cfg.init_seed)
    w0 = rng.standard_normal((N, n))
    w = np.broadcast_to(w0, (Bq, N, n)).copy()
    w /= np.linalg.norm(w.reshape(Bq, -1), axis=1)[:, None, None]
    est_prev = np.zeros(Bq)
    est = np.zeros(Bq)
    for _ in range(cfg.power_iters):
        z = _forward_batch(A_stack, C_stack, w)
        est = np.linalg.norm(z.reshape(Bq, -1), axis=1)
        if np.all(np.abs(est - est_prev) < cfg.rel_tol * np.maximum(est, 1e-300)):
            break
        est_prev = est
        u = _adjoint_batch(A_stack, C_stack, z)
        norms = np.linalg.norm(u.reshape(Bq, -1), axis=1)
        norms[norms == 0.0] = 1.0
        w = u / norms[:, None, None]
    return est


def power_iteration_norm(cl: ClosedLoop, cfg: EstimatorConfig) -> float:
    """Finite-horizon H-infinity estimate of a stable closed loop."""
    rho = spectral_radius(cl.A_cl)
    if rho >= 1.0:
        raise UnstablePolicyError(rho)
    return float(_power_iteration_batch(cl.A_cl[None], cl.C_cl[None], cfg)[0])


def noisy_cost_oracle(plant: Plant, K, cfg: EstimatorConfig) -> float:
    """Model-free cost estimate at a gain; raises on unstable policies."""
    cl = assemble_closed_loop(plant, K)
    return power_iteration_norm(cl, cfg)


class PowerIterationCost:
    """Callable model-free cost oracle backed by simulated rollouts.

    Deterministic given (K, init_seed, cfg).  `evaluate_many` shares the
    time-stepping loops across policies, which is what makes the
    derivative-free solvers affordable in the model-free setting.
    """

    def __init__(self, plant: Plant, cfg: EstimatorConfig):
        self.plant = plant
        self.cfg = cfg

    def __call__(self, K) -> float:
        return float(self.evaluate_many([K])[0])

    def evaluate_many(self, Ks) -> np.ndarray:
        A_cls = np.stack([self.plant.A - self.plant.B @ np.asarray(K, dtype=float)
                          for K in Ks])
        rho = np.abs(np.linalg.eigvals(A_cls)).max(axis=1)
        if np.any(rho >= 1.0):
            raise UnstablePolicyError(rho.max())
        C_cls = np.stack([assemble_closed_loop(self.plant, K).C_cl for K in Ks])
        return _power_iteration_batch(A_cls, C_cls, self.cfg)


def solve_ns_modelfree(plant: Plant, K0, ns_cfg: NsConfig,
                       est_cfg: EstimatorConfig, seed: int = 0):
    """Non-derivative sampling on the simulated-rollout cost oracle."""
    cost = PowerIterationCost(plant, est_cfg)
    policy, trace = solve_ns(plant, K0, ns_cfg, cost_oracle=cost, seed=seed)
    trace.metadata["algorithm"] = "ns-modelfree"
    trace.metadata["horizon"] = est_cfg.horizon
    return policy, trace
