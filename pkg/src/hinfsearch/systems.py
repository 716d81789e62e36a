"""Plant/policy types, closed-loop assembly, stability tests, and simulation.

The synthesis instance is x_{t+1} = A x_t + B u_t + w_t with quadratic
weights (Q, R), Q > 0, R > 0, and the disturbance entering through the
identity (n_w = n_x).  Under u_t = -K x_t the closed loop is

    x_{t+1} = (A - B K) x_t + w_t,      z_t = (Q + K^T R K)^{1/2} x_t,

and everything downstream (norm oracles, gradients, estimators) works on
the triple (A_cl, I, C_cl).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPD_TOL = 1e-10  # dimension-scaled eigenvalue floor for Q, R


def _as_matrix(M, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    M = M.copy()
    M.flags.writeable = False
    return M


def spectral_radius(M) -> float:
    """Largest eigenvalue magnitude of a square matrix."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"spectral radius needs a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("spectral radius needs finite entries")
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def sqrt_psd(M, *, tol: float = 1e-8) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in [-tol*||M||, 0) are treated as roundoff and clamped to
    zero; anything below that raises, since the input was expected PSD.
    """
    M = np.asarray(M, dtype=float)
    S = 0.5 * (M + M.T)
    lam, V = np.linalg.eigh(S)
    floor = -tol * max(np.abs(lam).max(), 1e-300)
    if lam.min() < floor:
        raise ValueError(
            f"matrix is not numerically PSD: min eigenvalue {lam.min():.3e}"
        )
    return (V * np.sqrt(np.clip(lam, 0.0, None))) @ V.T


@dataclass(frozen=True)
class Plant:
    """Synthesis instance (A, B, Q, R) with validated dimensions and weights."""

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        B = _as_matrix(self.B, "B")
        Q = _as_matrix(self.Q, "Q")
        R = _as_matrix(self.R, "R")
        n_x = A.shape[0]
        if A.shape != (n_x, n_x):
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != n_x:
            raise ValueError(f"B has {B.shape[0]} rows, expected {n_x}")
        n_u = B.shape[1]
        if Q.shape != (n_x, n_x):
            raise ValueError(f"Q must be {n_x}x{n_x}, got {Q.shape}")
        if R.shape != (n_u, n_u):
            raise ValueError(f"R must be {n_u}x{n_u}, got {R.shape}")
        for name, M, dim in (("Q", Q, n_x), ("R", R, n_u)):
            lam_min = np.linalg.eigvalsh(0.5 * (M + M.T)).min()
            if lam_min <= SPD_TOL * dim:
                raise ValueError(f"{name} must be positive definite "
                                 f"(min eigenvalue {lam_min:.3e})")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class Policy:
    """State-feedback gain u_t = -K x_t."""

    K: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "K", _as_matrix(self.K, "K"))

    @property
    def n_u(self) -> int:
        return self.K.shape[0]

    @property
    def n_x(self) -> int:
        return self.K.shape[1]


def _gain(policy) -> np.ndarray:
    """Accept either a Policy or a bare gain matrix."""
    if isinstance(policy, Policy):
        return policy.K
    return np.asarray(policy, dtype=float)


@dataclass(frozen=True)
class ClosedLoop:
    """Closed-loop triple (A_cl, B_cl=I, C_cl) mapping disturbances to z."""

    A_cl: np.ndarray
    C_cl: np.ndarray

    def __post_init__(self):
        A = _as_matrix(self.A_cl, "A_cl")
        C = _as_matrix(self.C_cl, "C_cl")
        if A.shape != C.shape or A.shape[0] != A.shape[1]:
            raise ValueError(f"A_cl and C_cl must be square of equal size, "
                             f"got {A.shape} and {C.shape}")
        object.__setattr__(self, "A_cl", A)
        object.__setattr__(self, "C_cl", C)

    @property
    def n_x(self) -> int:
        return self.A_cl.shape[0]

    @property
    def B_cl(self) -> np.ndarray:
        return np.eye(self.n_x)


def assemble_closed_loop(plant: Plant, policy) -> ClosedLoop:
    """Form A_cl = A - B K and C_cl = (Q + K^T R K)^{1/2}."""
    K = _gain(policy)
    if K.shape != (plant.n_u, plant.n_x):
        raise ValueError(f"K must be {plant.n_u}x{plant.n_x}, got {K.shape}")
    A_cl = plant.A - plant.B @ K
    W = plant.Q + K.T @ plant.R @ K
    C_cl = sqrt_psd(W)
    return ClosedLoop(A_cl=A_cl, C_cl=C_cl)


def is_stabilizing(plant: Plant, policy, margin: float = 0.0) -> bool:
    """True iff rho(A - B K) < 1 - margin."""
    K = _gain(policy)
    if K.shape != (plant.n_u, plant.n_x):
        raise ValueError(f"K must be {plant.n_u}x{plant.n_x}, got {K.shape}")
    return spectral_radius(plant.A - plant.B @ K) < 1.0 - margin


def simulate(cl: ClosedLoop, w, T: int | None = None):
    """Run x_{t+1} = A_cl x_t + w_t from x_0 = 0 and return (x, z).

    Both outputs have length T (states x_0..x_{T-1}, outputs z_t = C_cl x_t).
    """
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if T is None:
        T = w.shape[0]
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    if w.shape != (T, cl.n_x):
        raise ValueError(f"disturbance must be {T}x{cl.n_x}, got {w.shape}")
    A, C = cl.A_cl, cl.C_cl
    x = np.zeros((T, cl.n_x))
    z = np.zeros((T, cl.n_x))
    xt = np.zeros(cl.n_x)
    for t in range(T):
        x[t] = xt
        z[t] = C @ xt
        xt = A @ xt + w[t]
    return x, z
