"""Exact H-infinity cost oracles and Riccati-based certification.

The cost of a stabilizing closed loop is

    J = sup_{omega in [0, 2pi]} sigma_max( C_cl (e^{j omega} I - A_cl)^{-1} ),

computed here on a coarse frequency grid over [0, pi] (the gain is
symmetric about pi for real systems) followed by golden-section refinement
of every grid-local maximum.  An independent certification route bisects a
gain level gamma against the game-theoretic Riccati fixed point, and a
bounded-real-lemma residual check validates any (gamma, P) certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import UnstablePolicyError
from .systems import ClosedLoop, Plant, assemble_closed_loop, spectral_radius, _gain

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _sigma_max_batch(M: np.ndarray) -> np.ndarray:
    """Largest singular value of each matrix in a (..., n, n) stack.

    Computed as the square root of the top eigenvalue of M M^H.  For
    n <= 3 closed-form Hermitian eigenvalue formulas avoid the per-matrix
    LAPACK dispatch that dominates small-batch SVD cost; larger blocks
    fall back to eigvalsh.
    """
    n = M.shape[-1]
    H = M @ np.conj(np.swapaxes(M, -1, -2))
    if n == 1:
        return np.sqrt(np.abs(H[..., 0, 0].real))
    if n == 2:
        half_tr = 0.5 * (H[..., 0, 0].real + H[..., 1, 1].real)
        det = (H[..., 0, 0].real * H[..., 1, 1].real
               - (H[..., 0, 1] * H[..., 1, 0]).real)
        disc = np.sqrt(np.maximum(half_tr**2 - det, 0.0))
        return np.sqrt(np.maximum(half_tr + disc, 0.0))
    if n == 3:
        # trigonometric eigenvalue formula for Hermitian 3x3 blocks
        q = (H[..., 0, 0].real + H[..., 1, 1].real + H[..., 2, 2].real) / 3.0
        K00 = H[..., 0, 0].real - q
        K11 = H[..., 1, 1].real - q
        K22 = H[..., 2, 2].real - q
        K01, K02, K12 = H[..., 0, 1], H[..., 0, 2], H[..., 1, 2]
        p2 = (K00**2 + K11**2 + K22**2
              + 2.0 * (np.abs(K01)**2 + np.abs(K02)**2 + np.abs(K12)**2))
        p = np.sqrt(np.maximum(p2 / 6.0, 0.0))
        safe_p = np.where(p > 0.0, p, 1.0)
        detK = (K00 * (K11 * K22 - np.abs(K12)**2)
                - (K01 * (np.conj(K01) * K22 - K12 * np.conj(K02))).real
                + (K02 * (np.conj(K01) * np.conj(K12)
                          - K11 * np.conj(K02))).real)
        r = np.clip(detK / (2.0 * safe_p**3), -1.0, 1.0)
        lam = q + 2.0 * p * np.cos(np.arccos(r) / 3.0)
        lam = np.where(p > 0.0, lam, q)
        return np.sqrt(np.maximum(lam, 0.0))
    return np.sqrt(np.maximum(np.linalg.eigvalsh(H)[..., -1], 0.0))


def _inv_batch(E: np.ndarray) -> np.ndarray:
    """Inverse of each matrix in a (..., n, n) stack; adjugate formulas for
    n <= 3 sidestep per-matrix LAPACK dispatch."""
    n = E.shape[-1]
    if n == 1:
        return 1.0 / E
    if n == 2:
        a, b = E[..., 0, 0], E[..., 0, 1]
        c, d = E[..., 1, 0], E[..., 1, 1]
        det = a * d - b * c
        out = np.empty_like(E)
        out[..., 0, 0] = d
        out[..., 0, 1] = -b
        out[..., 1, 0] = -c
        out[..., 1, 1] = a
        return out / det[..., None, None]
    if n == 3:
        a, b, c = E[..., 0, 0], E[..., 0, 1], E[..., 0, 2]
        d, e, f = E[..., 1, 0], E[..., 1, 1], E[..., 1, 2]
        g, h, i = E[..., 2, 0], E[..., 2, 1], E[..., 2, 2]
        A = e * i - f * h
        B = -(d * i - f * g)
        C = d * h - e * g
        det = a * A + b * B + c * C
        out = np.empty_like(E)
        out[..., 0, 0] = A
        out[..., 0, 1] = -(b * i - c * h)
        out[..., 0, 2] = b * f - c * e
        out[..., 1, 0] = B
        out[..., 1, 1] = a * i - c * g
        out[..., 1, 2] = -(a * f - c * d)
        out[..., 2, 0] = C
        out[..., 2, 1] = -(a * h - b * g)
        out[..., 2, 2] = a * e - b * d
        return out / det[..., None, None]
    return np.linalg.inv(E)


def frequency_gain(cl: ClosedLoop, omegas) -> np.ndarray:
    """sigma_max(C_cl (e^{j w} I - A_cl)^{-1}) at each frequency in `omegas`."""
    om = np.atleast_1d(np.asarray(omegas, dtype=float))
    n = cl.n_x
    E = np.exp(1j * om)[:, None, None] * np.eye(n) - cl.A_cl
    M = cl.C_cl @ _inv_batch(E)
    return _sigma_max_batch(M)


def _check_stable(cl: ClosedLoop) -> float:
    rho = spectral_radius(cl.A_cl)
    if rho >= 1.0:
        raise UnstablePolicyError(rho)
    return rho


def _gain_at(A_stack, C_stack, omegas) -> np.ndarray:
    """Gain of system A_stack[i], C_stack[i] at frequency omegas[i]."""
    n = A_stack.shape[-1]
    E = np.exp(1j * omegas)[:, None, None] * np.eye(n) - A_stack
    M = C_stack @ _inv_batch(E)
    return _sigma_max_batch(M)


def _peaks_many(A_cls, C_cls, coarse_points, refine_tol):
    """Golden-refined grid-local maxima of the gain for a stack of systems.

    `A_cls`, `C_cls` have shape (B, n, n); all systems must already be
    Schur stable.  Returns per-system (omegas, values) arrays sorted by
    decreasing value, with peaks that land in the same grid cell merged.
    """
    if coarse_points < 64:
        raise ValueError(f"coarse_points must be >= 64, got {coarse_points}")
    if refine_tol <= 0:
        raise ValueError("refine_tol must be positive")
    B, n = A_cls.shape[0], A_cls.shape[-1]
    grid = np.linspace(0.0, math.pi, coarse_points)
    h = grid[1] - grid[0]
    E = np.exp(1j * grid)[None, :, None, None] * np.eye(n) - A_cls[:, None]
    M = C_cls[:, None] @ _inv_batch(E)
    g = _sigma_max_batch(M)  # (B, pts)

    left = np.full_like(g, -np.inf)
    right = np.full_like(g, -np.inf)
    left[:, 1:] = g[:, :-1]
    right[:, :-1] = g[:, 1:]
    # strict on the left so plateaus contribute a single representative
    sys_idx, peak_idx = np.nonzero((g > left) & (g >= right))

    # vectorized golden-section over every bracket of every system
    a = grid[np.maximum(peak_idx - 1, 0)]
    b = grid[np.minimum(peak_idx + 1, coarse_points - 1)]
    A_br = A_cls[sys_idx]
    C_br = C_cls[sys_idx]
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc = _gain_at(A_br, C_br, c)
    fd = _gain_at(A_br, C_br, d)
    while np.max(b - a) > refine_tol:
        take_c = fc > fd
        b = np.where(take_c, d, b)
        a = np.where(take_c, a, c)
        c = b - _INV_GOLDEN * (b - a)
        d = a + _INV_GOLDEN * (b - a)
        # one probe per bracket survives the shrink; evaluate only the new one
        f_new = _gain_at(A_br, C_br, np.where(take_c, c, d))
        fc, fd = (np.where(take_c, f_new, fd), np.where(take_c, fc, f_new))
    om = 0.5 * (a + b)
    val = _gain_at(A_br, C_br, om)
    grid_val = g[sys_idx, peak_idx]
    worse = val < grid_val
    om[worse] = grid[peak_idx[worse]]
    val[worse] = grid_val[worse]

    results = []
    for s in range(B):
        sel = sys_idx == s
        om_s, val_s = om[sel], val[sel]
        order = np.argsort(-val_s)
        om_s, val_s = om_s[order], val_s[order]
        keep = np.ones(om_s.size, dtype=bool)
        for i in range(om_s.size):
            if keep[i]:
                dup = (np.abs(om_s - om_s[i]) <= h) & (np.arange(om_s.size) > i)
                keep[dup] = False
        results.append((om_s[keep], val_s[keep]))
    return results


def refined_peaks(cl: ClosedLoop, coarse_points: int = 1024,
                  refine_tol: float = 1e-10):
    """All grid-local maxima of the gain on [0, pi], golden-refined.

    Returns (omegas, values) sorted by decreasing value.  Peaks that refine
    into the same grid cell are merged, keeping the larger value.
    """
    _check_stable(cl)
    return _peaks_many(cl.A_cl[None], cl.C_cl[None], coarse_points,
                       refine_tol)[0]


@dataclass(frozen=True)
class NormResult:
    """An H-infinity norm value with its peak frequency and method tag."""

    value: float
    peak_frequency: float
    method: str  # "grid_refine" or "bisection"
    tolerance: float
    grid_size: int | None = None


def hinf_norm_grid(cl: ClosedLoop, coarse_points: int = 1024,
                   refine_tol: float = 1e-10) -> NormResult:
    """H-infinity norm by coarse grid plus golden-section refinement."""
    om, val = refined_peaks(cl, coarse_points, refine_tol)
    return NormResult(value=float(val[0]), peak_frequency=float(om[0]),
                      method="grid_refine", tolerance=float(refine_tol),
                      grid_size=int(coarse_points))


@dataclass(frozen=True)
class FeasibilityCertificate:
    """Outcome of the Riccati fixed-point test for a gain level gamma."""

    gamma: float
    feasible: bool
    P: np.ndarray | None
    iterations: int
    residual: float


def _riccati_map(A_cl, W, gamma_sq, P):
    """Phi(P) = A_cl^T (P + P (g^2 I - P)^{-1} P) A_cl + W, or None if
    g^2 I - P is not positive definite."""
    S = gamma_sq * np.eye(P.shape[0]) - P
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return None
    X = scipy.linalg.cho_solve((L, True), P)  # S^{-1} P
    P_next = A_cl.T @ (P + P @ X) @ A_cl + W
    return 0.5 * (P_next + P_next.T)


def _finish(gamma, P, it, diff, gamma_sq, A_cl, W, conv_tol, eps_pd):
    """Classify a converged iterate: feasible needs g^2 I - P > eps_pd I."""
    lam_min = np.linalg.eigvalsh(gamma_sq * np.eye(P.shape[0]) - P).min()
    if lam_min <= eps_pd:
        return FeasibilityCertificate(float(gamma), False, None, it, diff)
    check = _riccati_map(A_cl, W, gamma_sq, P)
    residual = math.inf if check is None else float(np.linalg.norm(check - P))
    return FeasibilityCertificate(float(gamma), True, P, it, residual)


def _feasible_plain(gamma, A_cl, W, conv_tol, eps_pd, max_iters):
    gamma_sq = float(gamma) ** 2
    P = np.zeros_like(W)
    diff = math.inf
    for it in range(1, max_iters + 1):
        P_next = _riccati_map(A_cl, W, gamma_sq, P)
        if P_next is None:
            return FeasibilityCertificate(float(gamma), False, None, it, math.inf)
        norm_next = np.linalg.norm(P_next)
        if norm_next > 1e12:
            return FeasibilityCertificate(float(gamma), False, None, it, math.inf)
        diff = float(np.linalg.norm(P_next - P))
        P = P_next
        if diff < conv_tol * (1.0 + norm_next):
            return _finish(gamma, P, it, diff, gamma_sq, A_cl, W, conv_tol, eps_pd)
    # cap hit: near-critical level where the minimum eigenvalue of
    # g^2 I - P trends to zero; report infeasible
    return FeasibilityCertificate(float(gamma), False, None, max_iters, diff)


def _feasible_doubling(gamma, A_cl, W, conv_tol, eps_pd, max_doublings=64):
    """Same monotone fixed-point sequence, subsampled at indices 2^k.

    The map P -> A_cl^T P (I - P/g^2)^{-1} A_cl + W is a symplectic linear
    fractional transform, so composing it with itself is again a map of the
    same family; the doubling recursion below advances the plain iteration
    from P = 0 by 2^k steps per pass.  This resolves near-critical levels
    (where the plain iteration crawls through a saddle-node bottleneck) at
    machine precision in a few dozen cheap steps.  Any breakdown of the
    recursion corresponds to the plain sequence leaving the definiteness
    region, hence certifies infeasibility.
    """
    gamma_sq = float(gamma) ** 2
    n = W.shape[0]
    eye = np.eye(n)
    E = A_cl.copy()
    G = -eye / gamma_sq
    H = W.copy()  # equals plain iterate P_1
    diff = math.inf
    for it in range(1, max_doublings + 1):
        try:
            IGH = np.linalg.inv(eye + G @ H)
        except np.linalg.LinAlgError:
            return FeasibilityCertificate(float(gamma), False, None, it, math.inf)
        E_IGH = E @ IGH
        H_next = H + (IGH @ E).T @ (H @ E)
        H_next = 0.5 * (H_next + H_next.T)
        G_next = G + E_IGH @ (G @ E.T)
        G_next = 0.5 * (G_next + G_next.T)
        E_next = E_IGH @ E
        if not (np.all(np.isfinite(H_next)) and np.all(np.isfinite(G_next))
                and np.all(np.isfinite(E_next))):
            return FeasibilityCertificate(float(gamma), False, None, it, math.inf)
        diff = float(np.linalg.norm(H_next - H))
        norm_next = float(np.linalg.norm(H_next))
        if norm_next > 1e12:
            return FeasibilityCertificate(float(gamma), False, None, it, math.inf)
        lam_min = np.linalg.eigvalsh(gamma_sq * eye - H_next).min()
        if lam_min <= 0.0:
            return FeasibilityCertificate(float(gamma), False, None, it, math.inf)
        E, G, H = E_next, G_next, H_next
        if diff < conv_tol * (1.0 + norm_next):
            return _finish(gamma, H, it, diff, gamma_sq, A_cl, W, conv_tol, eps_pd)
    return FeasibilityCertificate(float(gamma), False, None, max_doublings, diff)


def hinf_feasible(plant: Plant, policy, gamma: float,
                  conv_tol: float = 1e-11, eps_pd: float = 1e-9,
                  max_iters: int = 20000,
                  method: str = "doubling") -> FeasibilityCertificate:
    """Test J(K) <= gamma via the game-theoretic Riccati fixed point.

    Iterates P <- (A-BK)^T (P + P (g^2 I - P)^{-1} P) (A-BK) + Q + K^T R K
    from P = 0.  The iteration increases monotonically and converges to the
    minimal positive definite solution exactly when the level is feasible;
    loss of definiteness of g^2 I - P or divergence certifies infeasibility.

    `method="plain"` runs the iteration literally (capped at `max_iters`);
    the default `method="doubling"` advances the identical sequence at
    indices 2^k, which keeps near-critical levels both fast and exact.
    For the doubling method, `iterations` on the certificate counts
    doubling passes rather than plain steps.
    """
    K = _gain(policy)
    cl = assemble_closed_loop(plant, K)
    _check_stable(cl)
    if gamma <= 0:
        return FeasibilityCertificate(float(gamma), False, None, 0, math.inf)
    A_cl = cl.A_cl
    W = plant.Q + K.T @ plant.R @ K
    if method == "plain":
        return _feasible_plain(gamma, A_cl, W, conv_tol, eps_pd, max_iters)
    if method == "doubling":
        return _feasible_doubling(gamma, A_cl, W, conv_tol, eps_pd)
    raise ValueError(f"unknown method {method!r}")


def hinf_norm_bisect(plant: Plant, policy, tol: float = 1e-8,
                     riccati_max_iters: int = 20000) -> NormResult:
    """Certified H-infinity norm by bisecting gamma over Riccati feasibility."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    K = _gain(policy)
    cl = assemble_closed_loop(plant, K)
    _check_stable(cl)
    peak_om, peak_val = refined_peaks(cl, coarse_points=128, refine_tol=1e-6)
    lo = 0.0
    hi = 2.0 * float(peak_val[0])
    # the coarse grid underestimates; double until certifiably feasible
    for _ in range(64):
        if hinf_feasible(plant, K, hi, max_iters=riccati_max_iters).feasible:
            break
        hi *= 2.0
    else:
        raise ArithmeticError("no feasible upper bound found for bisection")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if hinf_feasible(plant, K, mid, max_iters=riccati_max_iters).feasible:
            hi = mid
        else:
            lo = mid
    return NormResult(value=0.5 * (lo + hi), peak_frequency=float(peak_om[0]),
                      method="bisection", tolerance=float(tol))


def verify_bounded_real(cl: ClosedLoop, gamma: float, P) -> float:
    """Largest eigenvalue of the non-strict bounded-real block matrix.

    A value <= 1e-8 certifies that the closed-loop gain is at most gamma
    for the supplied Lyapunov-like matrix P (with B_cl = I).
    """
    P = np.asarray(P, dtype=float)
    n = cl.n_x
    if P.shape != (n, n):
        raise ValueError(f"P must be {n}x{n}, got {P.shape}")
    if not np.allclose(P, P.T, atol=1e-12 * (1.0 + np.abs(P).max())):
        raise ValueError("P must be symmetric")
    A, C = cl.A_cl, cl.C_cl
    block = np.block([
        [A.T @ P @ A - P + C.T @ C, A.T @ P],
        [P @ A, P - gamma**2 * np.eye(n)],
    ])
    return float(np.linalg.eigvalsh(0.5 * (block + block.T)).max())


class ExactHinfCost:
    """Callable exact cost oracle J(K) for a fixed plant.

    Raises UnstablePolicyError outside the stabilizing set.  `coarse_points`
    and `refine_tol` trade accuracy for speed; the defaults resolve the
    desk-scale instances to well below solver line-search tolerances.
    `evaluate_many` amortizes the grid and refinement across policies, which
    is what keeps sampling-heavy solvers fast.
    """

    def __init__(self, plant: Plant, coarse_points: int = 129,
                 refine_tol: float = 1e-8):
        self.plant = plant
        self.coarse_points = coarse_points
        self.refine_tol = refine_tol

    def closed_loops(self, Ks):
        """Stack closed loops for a list of gains; raise on any unstable one."""
        A_cls = np.stack([self.plant.A - self.plant.B @ np.asarray(K, dtype=float)
                          for K in Ks])
        rho = np.abs(np.linalg.eigvals(A_cls)).max(axis=1)
        if np.any(rho >= 1.0):
            raise UnstablePolicyError(rho.max())
        C_cls = np.stack([assemble_closed_loop(self.plant, K).C_cl for K in Ks])
        return A_cls, C_cls

    def __call__(self, K) -> float:
        return float(self.evaluate_many([K])[0])

    def evaluate_many(self, Ks) -> np.ndarray:
        A_cls, C_cls = self.closed_loops(Ks)
        peaks = _peaks_many(A_cls, C_cls, self.coarse_points, self.refine_tol)
        return np.array([float(val[0]) for _om, val in peaks])
