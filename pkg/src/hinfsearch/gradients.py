"""Gradient oracles for the H-infinity cost.

Three routes are provided:

* ``grad_fd``         central finite differences of an arbitrary cost oracle,
* ``grad_analytic``   closed-form gradient at differentiable points via the
                      SVD of the transfer matrix at the peak frequency,
* ``gupal_chi``       the randomized two-point estimate of the gradient of
                      the mollified (Steklov-averaged) cost, needing only
                      function values.

The cost is differentiable at K when the gain peak is attained at a single
frequency and the top singular value there is simple; ``grad_analytic``
enforces both with a relative gap test and raises
NondifferentiablePointError otherwise so that samplers can redraw.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import NondifferentiablePointError
from .norms import _check_stable, _peaks_many, refined_peaks
from .systems import Plant, assemble_closed_loop, sqrt_psd, _gain


def grad_fd(cost, K, h: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of a scalar cost over gain matrices.

    Entry (i, j) is (J(K + h V_ij) - J(K - h V_ij)) / (2 h) with V_ij the
    (i, j)-th elementary matrix.  Any instability raised by the cost oracle
    propagates; the caller is expected to shrink h.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    K = np.asarray(K, dtype=float)
    points = []
    for i in range(K.shape[0]):
        for j in range(K.shape[1]):
            for sign in (+1.0, -1.0):
                P = K.copy()
                P[i, j] += sign * h
                points.append(P)
    if hasattr(cost, "evaluate_many"):
        vals = np.asarray(cost.evaluate_many(points), dtype=float)
    else:
        vals = np.array([cost(P) for P in points])
    vals = vals.reshape(K.shape[0], K.shape[1], 2)
    return (vals[:, :, 0] - vals[:, :, 1]) / (2.0 * h)


def gupal_chi(cost, K, alpha: float, z) -> np.ndarray:
    """Gupal estimate of the mollified-cost gradient from function values.

    Entry (i, j) is (J(B + V_ij^+) - J(B + V_ij^-)) / alpha where
    B = K + alpha z and V_ij^+/- reset the (i, j) entry of B to
    K_ij +/- alpha/2.  Exactly 2 * n_u * n_x cost evaluations are issued;
    an unstable probe raises through the cost oracle.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    K = np.asarray(K, dtype=float)
    z = np.asarray(z, dtype=float)
    if z.shape != K.shape:
        raise ValueError(f"z must have shape {K.shape}, got {z.shape}")
    base = K + alpha * z
    points = []
    for i in range(K.shape[0]):
        for j in range(K.shape[1]):
            for sign in (+1.0, -1.0):
                P = base.copy()
                P[i, j] = K[i, j] + sign * alpha / 2.0
                points.append(P)
    if hasattr(cost, "evaluate_many"):
        vals = np.asarray(cost.evaluate_many(points), dtype=float)
    else:
        vals = np.array([cost(P) for P in points])
    vals = vals.reshape(K.shape[0], K.shape[1], 2)
    return (vals[:, :, 0] - vals[:, :, 1]) / alpha


def _analytic_from_peaks(plant: Plant, K, omegas, values, gap_tol: float,
                         strict: bool = True):
    """Assemble the SVD gradient given the refined peak list of a gain.

    With `strict` the relative gap tests raise when the peak frequency or
    the top singular value is not clearly simple; without it the gradient
    of the numerically dominant branch is returned, which agrees with the
    true gradient almost everywhere.
    """
    if strict and values.size >= 2 and values[0] - values[1] < gap_tol * values[0]:
        raise NondifferentiablePointError(
            f"peak frequency not unique: top two peak values "
            f"{values[0]:.12g} and {values[1]:.12g}")
    omega0 = float(omegas[0])
    A_cl = plant.A - plant.B @ K
    W = plant.Q + K.T @ plant.R @ K
    H1 = sqrt_psd(W)
    H2 = np.linalg.inv(np.exp(1j * omega0) * np.eye(plant.n_x) - A_cl)
    H = H1 @ H2
    U, s, Vh = np.linalg.svd(H)
    if strict and s.size >= 2 and s[0] - s[1] < gap_tol * s[0]:
        raise NondifferentiablePointError(
            f"top singular value not simple at the peak: "
            f"{s[0]:.12g} vs {s[1]:.12g}")
    u1 = U[:, 0]
    v1 = Vh[0].conj()
    # Gamma = int_0^inf e^{-tau H1} (H2 v1 u1^*) e^{-tau H1} dtau solves
    # H1 Gamma + Gamma H1 = H2 v1 u1^*  (H1 is positive definite)
    M = np.outer(H2 @ v1, u1.conj())
    Gamma = scipy.linalg.solve_sylvester(H1, H1, M)
    term1 = plant.R @ K @ (Gamma + Gamma.T)
    term2 = np.outer(H2 @ v1, u1.conj() @ H @ plant.B).T
    return np.real(term1 - term2)


def grad_analytic(plant: Plant, K, coarse_points: int = 513,
                  refine_tol: float = 1e-10,
                  gap_tol: float = 1e-7) -> np.ndarray:
    """Exact gradient of the H-infinity cost at a differentiable gain.

    Raises UnstablePolicyError for non-stabilizing K and
    NondifferentiablePointError when the differentiability gap test fails
    (peak frequency within `gap_tol` relative of a second peak, or top
    singular value gap below `gap_tol` relative).
    """
    K = _gain(K)
    cl = assemble_closed_loop(plant, K)
    om, val = refined_peaks(cl, coarse_points, refine_tol)
    return _analytic_from_peaks(plant, K, om, val, gap_tol)


class AnalyticGradient:
    """Callable analytic gradient oracle for a fixed plant.

    `evaluate_many` batches the frequency sweep across gains, which is the
    dominant cost when solvers request whole bundles of gradients.  With
    `strict=False` the gap tests are skipped and the dominant-branch
    gradient is returned everywhere (correct almost everywhere; the
    sampling solvers rely on this once peaks equalize near the optimum,
    where the conservative test would reject entire sampling balls).
    """

    def __init__(self, plant: Plant, coarse_points: int = 257,
                 refine_tol: float = 1e-10, gap_tol: float = 1e-7,
                 strict: bool = True):
        self.plant = plant
        self.coarse_points = coarse_points
        self.refine_tol = refine_tol
        self.gap_tol = gap_tol
        self.strict = strict

    def _peaks(self, Ks):
        A_cls = np.stack([self.plant.A - self.plant.B @ K for K in Ks])
        C_cls = []
        for K, A_cl in zip(Ks, A_cls):
            cl = assemble_closed_loop(self.plant, K)
            _check_stable(cl)
            C_cls.append(cl.C_cl)
        return _peaks_many(A_cls, np.stack(C_cls), self.coarse_points,
                           self.refine_tol)

    def __call__(self, K) -> np.ndarray:
        return self.evaluate_many([np.asarray(K, dtype=float)])[0]

    def evaluate_many(self, Ks) -> list[np.ndarray]:
        Ks = [np.asarray(K, dtype=float) for K in Ks]
        peaks = self._peaks(Ks)
        return [_analytic_from_peaks(self.plant, K, om, val, self.gap_tol,
                                     self.strict)
                for K, (om, val) in zip(Ks, peaks)]

    def is_differentiable(self, K) -> bool:
        """Gap test alone (independent of `strict`): peak frequency unique
        and top singular value simple."""
        K = np.asarray(K, dtype=float)
        (om, val), = self._peaks([K])
        try:
            _analytic_from_peaks(self.plant, K, om, val, self.gap_tol,
                                 strict=True)
        except NondifferentiablePointError:
            return False
        return True
