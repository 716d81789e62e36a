"""Sampled approximation of the Goldstein subdifferential.

A bundle is a set of gradients taken at points drawn uniformly from a
Frobenius-norm ball around the current policy; the convex hull of those
gradients approximates the Goldstein subdifferential, and its minimum-norm
element (a simplex-constrained QP solved by Wolfe's min-norm-point
algorithm) supplies the descent direction used by the sampling solvers.
"""

from __future__ import annotations

import math

from dataclasses import dataclass

import numpy as np

from .errors import (
    InfeasibleBallError,
    NondifferentiablePointError,
    OracleError,
    UnstablePolicyError,
)

_WOLFE_TOL = 1e-12


def ball_point(center: np.ndarray, delta: float, rng) -> np.ndarray:
    """One point uniform in the Frobenius delta-ball around `center`.

    Direction from a normalized Gaussian, radius delta * U^(1/d) with d the
    number of matrix entries.
    """
    d = center.size
    direction = rng.standard_normal(center.shape)
    norm = np.linalg.norm(direction)
    while norm == 0.0:
        direction = rng.standard_normal(center.shape)
        norm = np.linalg.norm(direction)
    radius = delta * rng.uniform() ** (1.0 / d)
    return center + (radius / norm) * direction


def min_norm_point(vectors, tol: float = _WOLFE_TOL, max_cycles: int = 10000):
    """Minimum-norm element of the convex hull of a list of matrices.

    Wolfe's min-norm-point algorithm on the flattened vectors.  Returns
    (F, weights) with F = sum_i weights_i vectors_i, weights on the simplex,
    and the Wolfe optimality gap <F, g_i> >= ||F||^2 - tol * (1 + ||F||^2)
    for every input g_i.
    """
    mats = [np.asarray(v, dtype=float) for v in vectors]
    if not mats:
        raise ValueError("min_norm_point needs at least one vector")
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise ValueError("all vectors must share one shape")
    V = np.stack([m.ravel() for m in mats])
    m = V.shape[0]

    start = int(np.argmin(np.einsum("ij,ij->i", V, V)))
    corral = [start]
    w = np.array([1.0])
    x = V[start].copy()
    xx_best = math.inf
    stalls = 0

    for _ in range(max_cycles):
        dots = V @ x
        xx = float(x @ x)
        # exact arithmetic decreases ||x|| every major cycle; roundoff on
        # near-parallel bundles can cycle instead, so bail once it stops
        if xx < xx_best - tol * (1.0 + xx):
            xx_best = xx
            stalls = 0
        else:
            stalls += 1
            if stalls >= 5:
                break
        if dots.min() >= xx - tol * (1.0 + xx):
            break
        j = int(np.argmin(dots))
        if j in corral:
            break  # numerically stalled; x is already near-optimal
        corral.append(j)
        w = np.append(w, 0.0)
        while True:
            S = V[corral]
            # affine minimizer over the corral: solve (ee^T + S S^T) u = e
            G = np.ones((len(corral), len(corral))) + S @ S.T
            try:
                u = np.linalg.solve(G, np.ones(len(corral)))
            except np.linalg.LinAlgError:
                u, *_ = np.linalg.lstsq(G, np.ones(len(corral)), rcond=None)
            total = u.sum()
            if total <= 0 or not np.all(np.isfinite(u)):
                u, *_ = np.linalg.lstsq(G, np.ones(len(corral)), rcond=None)
                total = u.sum()
            v = u / total
            if np.all(v > tol):
                w = v
                break
            # step toward v until the first weight hits zero, then drop it
            mask = v <= tol
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(w > v, w / (w - v), np.inf)
            theta = min(1.0, float(ratios[mask].min()))
            w = (1.0 - theta) * w + theta * v
            w[w < tol] = 0.0
            keep = w > 0.0
            if not np.any(keep):
                keep[int(np.argmax(v))] = True
                w[keep] = 1.0
            corral = [c for c, k in zip(corral, keep) if k]
            w = w[keep]
            w = w / w.sum()
        x = w @ V[corral]

    weights = np.zeros(m)
    for c, wc in zip(corral, w):
        weights[c] += wc
    return x.reshape(shape), weights


@dataclass(frozen=True)
class Bundle:
    """Sampled gradients in a delta-ball plus their min-norm element."""

    center: np.ndarray
    radius: float
    points: list
    gradients: list
    weights: np.ndarray
    F: np.ndarray


def sample_bundle(grad_oracle, center, delta: float, m: int, rng,
                  include_center: bool = False,
                  max_redraws: int = 100) -> Bundle:
    """Bundle of m gradients at points uniform in the delta-ball.

    Points where the gradient oracle reports a nondifferentiable cost are
    redrawn (differentiability holds almost everywhere); an unstable sample
    raises InfeasibleBallError so the caller can shrink delta.  With
    `include_center` the center and its gradient join the bundle ahead of
    the m sampled points; a nondifferentiable center is the caller's
    problem and the error propagates.
    """
    if m < 1:
        raise ValueError("bundle size m must be >= 1")
    center = np.asarray(center, dtype=float)
    points = ([center] if include_center else [])
    points = points + [ball_point(center, delta, rng) for _ in range(m)]

    gradients = None
    if hasattr(grad_oracle, "evaluate_many"):
        try:
            gradients = [np.asarray(g, dtype=float)
                         for g in grad_oracle.evaluate_many(points)]
        except UnstablePolicyError as exc:
            raise InfeasibleBallError(
                f"sampled point left the stabilizing set (rho={exc.rho:.6g})"
            ) from exc
        except NondifferentiablePointError:
            gradients = None  # fall back to pointwise evaluation with redraws

    if gradients is None:
        gradients = []
        redraws = 0
        idx = 0
        while idx < len(points):
            try:
                g = grad_oracle(points[idx])
            except UnstablePolicyError as exc:
                raise InfeasibleBallError(
                    f"sampled point left the stabilizing set "
                    f"(rho={exc.rho:.6g})") from exc
            except NondifferentiablePointError:
                if include_center and idx == 0:
                    raise
                redraws += 1
                if redraws > max_redraws:
                    raise OracleError(
                        f"gradient oracle failed at {max_redraws} redraws")
                points[idx] = ball_point(center, delta, rng)
                continue
            gradients.append(np.asarray(g, dtype=float))
            idx += 1

    F, weights = min_norm_point(gradients)
    return Bundle(center=center, radius=float(delta), points=points,
                  gradients=gradients, weights=weights, F=F)
