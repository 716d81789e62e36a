"""The four policy-search algorithms with feasibility-preserving step rules.

* ``solve_goldstein``  normalized min-norm-element descent with diminishing
                       or constant radius and a descent guard,
* ``solve_gs``         gradient sampling with line search, radius shrinking
                       on null steps, and the nondifferentiable-landing
                       branch,
* ``solve_ns``         the derivative-free variant built on the Gupal
                       estimate, with its own geometric line search,
* ``solve_ingd``       interpolated normalized gradient descent driven by
                       the randomized two-point min-norm inner loop.

All solvers record an IterationTrace (one row per iteration: cost,
min-norm-element magnitude, radii, step size, cumulative oracle calls,
wall time) and guarantee every recorded iterate is stabilizing.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bundle import ball_point, min_norm_point, sample_bundle
from .errors import (
    InfeasibleBallError,
    NondifferentiablePointError,
    OracleError,
    UnstablePolicyError,
)
from .gradients import AnalyticGradient, grad_fd, gupal_chi
from .norms import ExactHinfCost
from .systems import Plant, Policy, is_stabilizing, _gain


# ---------------------------------------------------------------------------
# configs

@dataclass
class GoldsteinConfig:
    """Goldstein-style descent on the sampled min-norm element.

    `mode="diminishing"` uses the radius schedule c * delta0_hat / (n + 1);
    `mode="constant"` keeps radius `delta`.  delta0_hat stands in for the
    unknown distance between the initial sublevel set and the unstable
    complement and is halved whenever a sampling ball proves infeasible.
    """

    mode: str = "diminishing"
    c: float = 0.5
    delta: float = 0.01
    delta0_hat: float = 0.02
    m: int | None = None
    max_iters: int = 500
    tol_F: float = 1e-6

    def __post_init__(self):
        if self.mode not in ("diminishing", "constant"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0.0 < self.c < 1.0:
            raise ValueError("c must lie in (0, 1)")
        if self.delta <= 0 or self.delta0_hat <= 0:
            raise ValueError("radii must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class GsConfig:
    """Gradient-sampling parameters (defaults follow the desk-scale runs)."""

    delta0: float = 0.01
    eps0: float = 100.0
    mu_delta: float = 0.5
    mu_eps: float = 0.5
    m: int | None = None
    beta: float = 0.5
    theta: float = 0.9
    delta_opt: float = 0.0
    eps_opt: float = 0.0
    max_iters: int = 2000
    line_search_cap: int = 200

    def __post_init__(self):
        if self.delta0 <= 0 or self.eps0 < 0:
            raise ValueError("delta0 must be positive and eps0 nonnegative")
        if not (0.0 < self.mu_delta <= 1.0 and 0.0 < self.mu_eps <= 1.0):
            raise ValueError("reduction factors must lie in (0, 1]")
        if not (0.0 < self.beta < 1.0 and 0.0 < self.theta < 1.0):
            raise ValueError("beta and theta must lie in (0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class NsConfig(GsConfig):
    """Non-derivative sampling parameters.

    Extends the GS parameters with the geometric line-search pair
    (t_floor, kappa) and the mollifier schedule alpha_n = alpha0 / (n + 1).
    `theta` is inherited but unused (NS shrinks trial steps by kappa).

    With `floor_delta_at_mollifier` (default) null steps never shrink the
    sampling radius below the current mollifier value: otherwise an early
    cascade of null steps can leave delta orders of magnitude under
    alpha_n, where the Gupal estimates carry no information about the
    delta-ball and the line search stops accepting steps.  Both radii
    still decay to zero, so the asymptotic behavior is unchanged; set the
    flag to False for the literal reduction rule.
    """

    t_floor: float = 0.01
    kappa: float = 0.9
    alpha0: float = 0.1
    floor_delta_at_mollifier: bool = True

    def __post_init__(self):
        super().__post_init__()
        if not (0.0 < self.t_floor < 1.0 and 0.0 < self.kappa < 1.0):
            raise ValueError("t_floor and kappa must lie in (0, 1)")
        if not 0.0 < self.alpha0 < 1.0:
            raise ValueError("alpha0 must lie in (0, 1)")


@dataclass
class IngdConfig:
    """Interpolated normalized gradient descent parameters.

    `lipschitz=None` estimates the constant at solve time as 1.5x the
    largest gradient norm over 50 samples in the delta-ball around the
    start.  `mode="anneal"` shrinks delta by `anneal_factor` each time a
    (delta, eps)-stationary point is found, stopping below `delta_floor`
    (default tuned so the anneal protocol certifies ~1e-3 relative
    accuracy on the desk-scale instances).
    """

    delta: float = 0.01
    eps: float = 1e-5
    lipschitz: float | None = None
    max_iters: int = 200
    max_inner: int = 1000
    mode: str = "constant"
    anneal_factor: float = 0.7
    delta_floor: float = 3e-4

    def __post_init__(self):
        if self.delta <= 0 or self.eps <= 0:
            raise ValueError("delta and eps must be positive")
        if self.lipschitz is not None and self.lipschitz <= 0:
            raise ValueError("lipschitz must be positive when given")
        if self.mode not in ("constant", "anneal"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0.0 < self.anneal_factor < 1.0:
            raise ValueError("anneal_factor must lie in (0, 1)")


# ---------------------------------------------------------------------------
# trace

TRACE_HEADER = "n,J,Fnorm,delta,eps,t,oracle_calls,elapsed_s"


@dataclass
class IterationRecord:
    n: int
    J: float
    Fnorm: float
    delta: float
    eps: float
    t: float
    oracle_calls: int
    elapsed_s: float
    K: np.ndarray | None = None


@dataclass
class IterationTrace:
    records: list[IterationRecord] = field(default_factory=list)
    status: str = "iteration_cap"
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def final_J(self) -> float:
        return float(self.metadata["final_J"])

    def to_csv(self) -> str:
        lines = [TRACE_HEADER]
        for r in self.records:
            lines.append(
                f"{r.n},{r.J:.17g},{r.Fnorm:.17g},{r.delta:.17g},"
                f"{r.eps:.17g},{r.t:.17g},{r.oracle_calls},{r.elapsed_s:.17g}")
        lines.append(f"# status={self.status}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())


# ---------------------------------------------------------------------------
# oracle plumbing

class _Counter:
    __slots__ = ("calls",)

    def __init__(self):
        self.calls = 0


class _Counting:
    """Wrap an oracle so every (batched) evaluation bumps a shared counter."""

    def __init__(self, inner, counter: _Counter):
        self.inner = inner
        self.counter = counter

    def __call__(self, K):
        self.counter.calls += 1
        return self.inner(K)

    def evaluate_many(self, Ks):
        self.counter.calls += len(Ks)
        if hasattr(self.inner, "evaluate_many"):
            return self.inner.evaluate_many(Ks)
        return [self.inner(K) for K in Ks]


def _cost_inf(cost, K) -> float:
    try:
        return float(cost(K))
    except UnstablePolicyError:
        return math.inf


def _cost_many_inf(cost, Ks) -> np.ndarray:
    try:
        return np.asarray(cost.evaluate_many(Ks), dtype=float)
    except UnstablePolicyError:
        return np.array([_cost_inf(cost, K) for K in Ks])


def _first_passing(cost, points, condition):
    """Index and value of the first point passing `condition(idx, J)`.

    Points are evaluated in geometric chunks so a first-candidate accept
    costs one evaluation while deep backtracking stays batched.
    """
    idx = 0
    chunk = 1
    while idx < len(points):
        batch = points[idx:idx + chunk]
        vals = _cost_many_inf(cost, batch)
        for off, J in enumerate(vals):
            if condition(idx + off, float(J)):
                return idx + off, float(J)
        idx += len(batch)
        chunk = min(2 * chunk, 16)
    return None, None


def _require_stabilizing(plant, K):
    if not is_stabilizing(plant, K):
        raise ValueError("initial policy is not stabilizing")


def _default_cost(plant, cost_oracle):
    return cost_oracle if cost_oracle is not None else ExactHinfCost(plant)


def _default_grad(plant, grad_oracle, strict: bool = False,
                  coarse_points: int = 257, refine_tol: float = 1e-10):
    """Sampling solvers default to the dominant-branch (non-strict) oracle;
    gap-test failures would otherwise reject whole sampling balls once the
    gain peaks equalize near the optimum."""
    if grad_oracle is not None:
        return grad_oracle
    return AnalyticGradient(plant, coarse_points=coarse_points,
                            refine_tol=refine_tol, strict=strict)


def _differentiability_test(grad_oracle):
    """A predicate deciding the continuously-differentiable branch.

    Prefers the oracle's own gap test; otherwise treats a
    NondifferentiablePointError from a plain call as the signal.
    """
    inner = grad_oracle.inner if isinstance(grad_oracle, _Counting) else grad_oracle
    if hasattr(inner, "is_differentiable"):
        return inner.is_differentiable

    def probe(K):
        try:
            grad_oracle(K)
        except NondifferentiablePointError:
            return False
        return True

    return probe


def _bundle_m(plant: Plant, m: int | None) -> int:
    floor = plant.n_x * plant.n_u + 1
    if m is None:
        return floor
    if m < floor:
        raise ValueError(f"bundle size m={m} below n_x*n_u+1={floor}")
    return m


# ---------------------------------------------------------------------------
# Goldstein descent

def solve_goldstein(plant: Plant, K0, cfg: GoldsteinConfig,
                    cost_oracle=None, grad_oracle=None, seed: int = 0):
    """Normalized descent along the sampled Goldstein min-norm element.

    Steps K <- K - delta_n F / ||F|| are accepted only when they do not
    increase the cost; on an increase the local radius is halved and the
    bundle resampled (at most 20 times, after which the iteration is
    recorded as a null step).  Infeasible sampling balls halve the global
    delta0_hat estimate; an iteration whose every attempt hits an
    infeasible ball aborts with the last feasible iterate.
    """
    K = _gain(K0).copy()
    _require_stabilizing(plant, K)
    rng = np.random.default_rng(seed)
    counter = _Counter()
    cost = _Counting(_default_cost(plant, cost_oracle), counter)
    grad = _Counting(_default_grad(plant, grad_oracle), counter)
    m = _bundle_m(plant, cfg.m)
    delta0_hat = cfg.delta0_hat

    trace = IterationTrace(metadata={"algorithm": "goldstein", "seed": seed})
    start = time.perf_counter()
    J_cur = float(cost(K))
    status = "iteration_cap"

    for n in range(cfg.max_iters):
        delta_n = (cfg.c * delta0_hat / (n + 1) if cfg.mode == "diminishing"
                   else cfg.delta)
        J_pre = J_cur
        delta_loc = delta_n
        Fnorm = math.nan
        t_taken = 0.0
        bundles = 0
        stop = None
        for _attempt in range(21):
            try:
                b = sample_bundle(grad, K, delta_loc, m, rng)
            except InfeasibleBallError:
                delta_loc *= 0.5
                delta0_hat = min(delta0_hat, delta_loc)
                continue
            bundles += 1
            Fnorm = float(np.linalg.norm(b.F))
            if Fnorm <= cfg.tol_F:
                stop = "stationary_target"
                break
            K_try = K - (delta_loc / Fnorm) * b.F
            J_try = _cost_inf(cost, K_try)
            if J_try <= J_cur:
                K, J_cur = K_try, J_try
                t_taken = delta_loc
                break
            delta_loc *= 0.5  # cost increased: shrink locally and resample
        if bundles == 0:
            stop = "infeasible_abort"
        trace.records.append(IterationRecord(
            n=n, J=J_pre, Fnorm=Fnorm, delta=delta_loc, eps=cfg.tol_F,
            t=t_taken, oracle_calls=counter.calls,
            elapsed_s=time.perf_counter() - start, K=K.copy()))
        if stop is not None:
            status = stop
            break

    trace.status = status
    trace.metadata["final_J"] = J_cur
    return Policy(K=K), trace


# ---------------------------------------------------------------------------
# Gradient sampling

def _ensure_differentiable_start(plant, grad, is_diff, K, rng, max_draws=100):
    """Perturb the start within a tiny ball until the gap test passes."""
    if is_diff(K):
        return K, grad(K)
    radius = 1e-8 * (1.0 + float(np.linalg.norm(K)))
    for _ in range(max_draws):
        K_try = ball_point(K, radius, rng)
        if not is_stabilizing(plant, K_try):
            continue
        if is_diff(K_try):
            return K_try, grad(K_try)
        radius *= 2.0
    raise OracleError("could not find a differentiable start near K0")


def _center_gradient(grad, cost, K):
    """Gradient at the current iterate; falls back to finite differences
    when the gap test rejects the point (rare: the landing branch keeps
    iterates differentiable)."""
    try:
        return grad(K)
    except NondifferentiablePointError:
        return grad_fd(cost, K, h=1e-7)


def solve_gs(plant: Plant, K0, cfg: GsConfig,
             grad_oracle=None, cost_oracle=None, seed: int = 0):
    """Gradient sampling with trust-region radius control.

    Per iteration: bundle the gradient at the iterate plus m sampled
    gradients from the delta-ball, take the min-norm element F of their
    hull, do a null step shrinking (delta, eps) when ||F|| <= eps, and
    otherwise backtrack t over {1, theta, theta^2, ...} against the descent
    target J(K - t Fhat) < J(K) - beta t delta ||F|| with Fhat the
    delta-normalized direction.  A nondifferentiable landing point is
    replaced by a nearby differentiable one holding both the descent and
    proximity conditions (rejection sampling, then accepted as-is).
    """
    K = _gain(K0).copy()
    _require_stabilizing(plant, K)
    rng = np.random.default_rng(seed)
    counter = _Counter()
    cost = _Counting(_default_cost(plant, cost_oracle), counter)
    grad = _Counting(_default_grad(plant, grad_oracle), counter)
    m = _bundle_m(plant, cfg.m)

    is_diff = _differentiability_test(grad)
    trace = IterationTrace(metadata={"algorithm": "gs", "seed": seed})
    start = time.perf_counter()
    K, g_center = _ensure_differentiable_start(plant, grad, is_diff, K, rng)
    J_cur = float(cost(K))
    delta, eps = cfg.delta0, cfg.eps0
    status = "iteration_cap"

    def record(n, J, Fnorm, t, delta_used):
        trace.records.append(IterationRecord(
            n=n, J=J, Fnorm=Fnorm, delta=delta_used, eps=eps, t=t,
            oracle_calls=counter.calls,
            elapsed_s=time.perf_counter() - start, K=K.copy()))

    for n in range(cfg.max_iters):
        if delta <= cfg.delta_opt and eps <= cfg.eps_opt:
            status = "converged"
            break
        J_pre = J_cur
        delta_loc = delta
        bundle = None
        for _attempt in range(21):
            try:
                bundle = sample_bundle(grad, K, delta_loc, m, rng)
                break
            except InfeasibleBallError:
                delta_loc *= 0.5
        if bundle is None:
            record(n, J_pre, math.nan, 0.0, delta_loc)
            status = "infeasible_abort"
            break
        F, _w = min_norm_point([g_center] + bundle.gradients)
        Fnorm = float(np.linalg.norm(F))

        if Fnorm <= eps:
            record(n, J_pre, Fnorm, 0.0, delta_loc)
            delta *= cfg.mu_delta
            eps *= cfg.mu_eps
            continue

        Fhat = (delta_loc / Fnorm) * F
        ts = [cfg.theta ** k for k in range(cfg.line_search_cap)]
        pts = [K - t * Fhat for t in ts]
        hit, J_hit = _first_passing(
            cost, pts,
            lambda i, J: J < J_pre - cfg.beta * ts[i] * delta_loc * Fnorm)
        if hit is None:
            record(n, J_pre, Fnorm, 0.0, delta_loc)  # line search exhausted
            continue
        t_n = ts[hit]
        cand = pts[hit]
        J_cand = J_hit
        if is_diff(cand):
            K, J_cur = cand, J_cand
            g_center = grad(K)
        else:
            # land on a nearby differentiable point holding both the descent
            # and the proximity condition (rejection sampling, <= 100 draws;
            # a dozen gap-test failures is taken as evidence that the whole
            # landing ball sits in the numerically nondifferentiable shell)
            land_radius = min(t_n, delta_loc) * float(np.linalg.norm(Fhat))
            target = J_pre - cfg.beta * t_n * delta_loc * Fnorm
            landed = False
            draws = 0
            gap_failures = 0
            while draws < 100 and gap_failures < 12 and not landed:
                batch = []
                while len(batch) < 8 and draws < 100:
                    draws += 1
                    P = ball_point(cand, land_radius, rng)
                    if is_stabilizing(plant, P):
                        batch.append(P)
                if not batch:
                    continue
                Js = _cost_many_inf(cost, batch)
                for P, J_try in zip(batch, Js):
                    if not J_try < target:
                        continue
                    if not is_diff(P):
                        gap_failures += 1
                        if gap_failures >= 12:
                            break
                        continue
                    K, J_cur = P, float(J_try)
                    g_center = grad(K)
                    landed = True
                    break
            if not landed:
                K, J_cur = cand, J_cand  # accept the unperturbed point
                g_center = _center_gradient(grad, cost, K)
        record(n, J_pre, Fnorm, t_n, delta_loc)

    trace.status = status
    trace.metadata["final_J"] = J_cur
    return Policy(K=K), trace


# ---------------------------------------------------------------------------
# Non-derivative sampling

def _chi_bundle(cost, centers, alpha, zs):
    """Gupal estimates at each center, batched through the cost oracle."""
    shape = centers[0].shape
    points = []
    for C, z in zip(centers, zs):
        base = C + alpha * z
        for i in range(shape[0]):
            for j in range(shape[1]):
                for sign in (+1.0, -1.0):
                    P = base.copy()
                    P[i, j] = C[i, j] + sign * alpha / 2.0
                    points.append(P)
    vals = np.asarray(cost.evaluate_many(points), dtype=float)
    per = 2 * shape[0] * shape[1]
    chis = []
    for k in range(len(centers)):
        v = vals[k * per:(k + 1) * per].reshape(shape[0], shape[1], 2)
        chis.append((v[:, :, 0] - v[:, :, 1]) / alpha)
    return chis


def solve_ns(plant: Plant, K0, cfg: NsConfig,
             cost_oracle=None, seed: int = 0):
    """Non-derivative sampling: GS driven by the Gupal estimate.

    Per iteration: sample m ball points and m cube matrices z, bundle the
    Gupal estimates chi(K_l, alpha_n, z_l) with alpha_n = alpha0 / (n+1),
    take the min-norm element, and either shrink the radii (null step when
    ||F|| <= eps) or line search t over {delta, kappa delta, ...} against
    J(K - t Fhat) <= J(K) - beta t ||F|| with unit Fhat, stopping at
    t_min = min(t_floor, kappa delta / 3).
    """
    K = _gain(K0).copy()
    _require_stabilizing(plant, K)
    rng = np.random.default_rng(seed)
    counter = _Counter()
    cost = _Counting(_default_cost(plant, cost_oracle), counter)
    m = _bundle_m(plant, cfg.m)

    trace = IterationTrace(metadata={"algorithm": "ns", "seed": seed})
    start = time.perf_counter()
    J_cur = float(cost(K))
    delta, eps = cfg.delta0, cfg.eps0
    status = "iteration_cap"

    def record(n, J, Fnorm, t, delta_used):
        trace.records.append(IterationRecord(
            n=n, J=J, Fnorm=Fnorm, delta=delta_used, eps=eps, t=t,
            oracle_calls=counter.calls,
            elapsed_s=time.perf_counter() - start, K=K.copy()))

    for n in range(cfg.max_iters):
        if delta <= cfg.delta_opt and eps <= cfg.eps_opt:
            status = "converged"
            break
        alpha_n = cfg.alpha0 / (n + 1)
        J_pre = J_cur
        delta_loc = delta
        chis = None
        for _attempt in range(21):
            centers = [ball_point(K, delta_loc, rng) for _ in range(m)]
            zs = [rng.uniform(-0.5, 0.5, K.shape) for _ in range(m)]
            try:
                chis = _chi_bundle(cost, centers, alpha_n, zs)
                break
            except UnstablePolicyError:
                delta_loc *= 0.5  # a probe left the stabilizing set
        if chis is None:
            record(n, J_pre, math.nan, 0.0, delta_loc)
            status = "infeasible_abort"
            break
        F, _w = min_norm_point(chis)
        Fnorm = float(np.linalg.norm(F))

        if Fnorm <= eps:
            record(n, J_pre, Fnorm, 0.0, delta_loc)
            shrunk = cfg.mu_delta * delta
            if cfg.floor_delta_at_mollifier:
                # keep the sampling radius at or above the mollifier scale
                # (never raising it); both still decay to zero
                shrunk = max(shrunk, min(delta, cfg.alpha0 / (n + 2)))
            delta = shrunk
            eps *= cfg.mu_eps
            continue

        Fhat = F / Fnorm
        t_min = min(cfg.t_floor, cfg.kappa * delta_loc / 3.0)
        ts = []
        t = delta_loc
        while True:
            ts.append(t)
            if cfg.kappa * t < t_min:
                break
            t = cfg.kappa * t
        pts = [K - t * Fhat for t in ts]
        hit, J_hit = _first_passing(
            cost, pts,
            lambda i, J: J <= J_pre - cfg.beta * ts[i] * Fnorm)
        if hit is None:
            record(n, J_pre, Fnorm, 0.0, delta_loc)  # t = 0: null step
            continue
        K, J_cur = pts[hit], J_hit
        record(n, J_pre, Fnorm, ts[hit], delta_loc)

    trace.status = status
    trace.metadata["final_J"] = J_cur
    return Policy(K=K), trace


# ---------------------------------------------------------------------------
# INGD

def estimate_lipschitz(plant: Plant, K0, delta: float, grad_oracle=None,
                       seed: int = 0, samples: int = 50) -> float:
    """1.5x the largest gradient norm over `samples` draws in the delta-ball."""
    rng = np.random.default_rng(seed)
    grad = _default_grad(plant, grad_oracle, coarse_points=129,
                         refine_tol=1e-9)
    K0 = _gain(K0)
    best = 0.0
    got = 0
    for _ in range(20 * samples):
        if got == samples:
            break
        P = ball_point(K0, delta, rng)
        if not is_stabilizing(plant, P):
            continue
        try:
            g = grad(P)
        except NondifferentiablePointError:
            continue
        best = max(best, float(np.linalg.norm(g)))
        got += 1
    if got == 0:
        raise InfeasibleBallError("no differentiable samples for the "
                                  "Lipschitz estimate")
    return 1.5 * best


def ingd_min_norm(plant: Plant, K, cfg: IngdConfig,
                  grad_oracle=None, cost_oracle=None, rng=None, *,
                  delta: float | None = None,
                  lipschitz: float | None = None,
                  J_K: float | None = None):
    """Randomized two-point min-norm descent-direction search.

    Starting from the gradient at a uniform point of the delta-ball,
    repeatedly perturbs the direction, samples a gradient on the segment
    toward the trial step, and projects the origin onto the segment between
    the old direction and the new gradient, until either ||F|| <= eps or
    the normalized step K - delta F/||F|| decreases the cost by more than
    (delta/4) ||F||.  Returns (F, hit_cap); `hit_cap` flags an inner-loop
    cap exit, in which case neither exit condition is certified.
    """
    K = _gain(K)
    grad_oracle = _default_grad(plant, grad_oracle, coarse_points=129,
                                refine_tol=1e-9)
    cost_oracle = _default_cost(plant, cost_oracle)
    rng = np.random.default_rng() if rng is None else rng
    delta = cfg.delta if delta is None else delta
    eps = cfg.eps
    L = lipschitz if lipschitz is not None else cfg.lipschitz
    if L is None:
        L = estimate_lipschitz(plant, K, delta, grad_oracle=grad_oracle)

    def _grad_at(P, draws=100):
        for _ in range(draws):
            try:
                return grad_oracle(P)
            except NondifferentiablePointError:
                P = ball_point(P, 1e-10 * (1.0 + np.linalg.norm(P)), rng)
            except UnstablePolicyError:
                return None
        raise OracleError("gradient oracle kept failing the gap test")

    F = None
    for _ in range(100):
        Xi = ball_point(K, delta, rng)
        g = _grad_at(Xi)
        if g is not None:
            F = np.asarray(g, dtype=float)
            break
    if F is None:
        raise InfeasibleBallError("could not sample a stabilizing point "
                                  "in the delta-ball")

    if J_K is None:
        J_K = float(cost_oracle(K))
    hit_cap = False
    inner = 0
    while True:
        Fnorm = float(np.linalg.norm(F))
        if Fnorm <= eps:
            break
        J_step = _cost_inf(cost_oracle, K - (delta / Fnorm) * F)
        if J_K - J_step > (delta / 4.0) * Fnorm:
            break  # sufficient decrease certified
        if inner >= max(cfg.max_inner, 1):
            hit_cap = True
            break
        inner += 1
        x = Fnorm ** 2 / (128.0 * L ** 2)
        arg = x * (2.0 - x) if x < 2.0 else 1.0
        r = 0.5 * Fnorm * math.sqrt(arg)
        Upsilon = ball_point(F, r, rng)
        u_norm = float(np.linalg.norm(Upsilon))
        if u_norm == 0.0:
            continue
        G = None
        for _ in range(100):
            Xi = K - rng.uniform() * (delta / u_norm) * Upsilon
            g = _grad_at(Xi)
            if g is not None:
                G = np.asarray(g, dtype=float)
                break
        if G is None:
            raise InfeasibleBallError("segment sampling kept leaving the "
                                      "stabilizing set")
        # project the origin onto the segment [F, G]
        dFG = F - G
        denom = float(np.sum(dFG * dFG))
        if denom == 0.0:
            s = 1.0  # degenerate segment: prefer the new gradient
        else:
            s = min(1.0, max(0.0, float(np.sum(F * dFG)) / denom))
        F = F + s * (G - F)
    return F, hit_cap


def solve_ingd(plant: Plant, K0, cfg: IngdConfig,
               grad_oracle=None, cost_oracle=None, seed: int = 0):
    """Interpolated normalized gradient descent.

    Each outer step asks the min-norm inner loop for a direction F and
    moves K <- K - delta F/||F||; an inner result with ||F|| <= eps is a
    (delta, eps)-stationary certificate, which in `anneal` mode shrinks
    delta by `anneal_factor` and continues until `delta_floor`.
    """
    K = _gain(K0).copy()
    _require_stabilizing(plant, K)
    rng = np.random.default_rng(seed)
    counter = _Counter()
    cost = _Counting(_default_cost(plant, cost_oracle), counter)
    grad = _Counting(_default_grad(plant, grad_oracle, coarse_points=129,
                                   refine_tol=1e-9), counter)
    L = cfg.lipschitz
    if L is None:
        L = estimate_lipschitz(plant, K, cfg.delta, grad_oracle=grad,
                               seed=seed)
    delta = cfg.delta

    trace = IterationTrace(metadata={"algorithm": "ingd", "seed": seed,
                                     "lipschitz": L})
    start = time.perf_counter()
    J_cur = float(cost(K))
    status = "iteration_cap"

    for n in range(cfg.max_iters):
        try:
            F, hit_cap = ingd_min_norm(plant, K, cfg, grad, cost, rng,
                                       delta=delta, lipschitz=L, J_K=J_cur)
        except InfeasibleBallError:
            status = "infeasible_abort"
            break
        Fnorm = float(np.linalg.norm(F))
        J_pre = J_cur
        t_taken = 0.0
        stop = None
        if Fnorm <= cfg.eps:
            if cfg.mode == "anneal":
                delta *= cfg.anneal_factor
                if delta < cfg.delta_floor:
                    stop = "converged"
            else:
                stop = "stationary_target"
        else:
            K_try = K - (delta / Fnorm) * F
            J_try = _cost_inf(cost, K_try)
            if J_try <= J_cur:
                K, J_cur = K_try, J_try
                t_taken = delta
            # an uncertified direction (inner cap) may fail to descend;
            # keep the iterate in that case
        trace.records.append(IterationRecord(
            n=n, J=J_pre, Fnorm=Fnorm, delta=delta, eps=cfg.eps, t=t_taken,
            oracle_calls=counter.calls,
            elapsed_s=time.perf_counter() - start, K=K.copy()))
        if stop is not None:
            status = stop
            break

    trace.status = status
    trace.metadata["final_J"] = J_cur
    return Policy(K=K), trace
