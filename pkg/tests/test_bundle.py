import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hinfsearch import (
    AnalyticGradient,
    InfeasibleBallError,
    ball_point,
    min_norm_point,
    sample_bundle,
)


def brute_force_min_norm(vectors, step=1e-3):
    """Dense simplex-grid search for the min-norm hull element (m <= 3)."""
    V = np.stack([np.asarray(v, float).ravel() for v in vectors])
    G = V @ V.T
    m = len(vectors)
    best = np.inf
    grid = np.arange(0.0, 1.0 + step / 2, step)
    if m == 1:
        best = G[0, 0]
    elif m == 2:
        lam = np.stack([grid, 1.0 - grid])
        best = np.einsum("im,ij,jm->m", lam, G, lam).min()
    elif m == 3:
        for a in grid:
            b = np.arange(0.0, 1.0 - a + step / 2, step)
            lam = np.stack([np.full_like(b, a), b, 1.0 - a - b])
            best = min(best, np.einsum("im,ij,jm->m", lam, G, lam).min())
    else:
        raise ValueError("dense grid only practical for m <= 3")
    return np.sqrt(max(best, 0.0))


def exact_min_norm_by_faces(vectors):
    """Exact min-norm point by enumerating affine faces of the hull."""
    V = np.stack([np.asarray(v, float).ravel() for v in vectors])
    m = V.shape[0]
    best = None
    for r in range(1, m + 1):
        for S in itertools.combinations(range(m), r):
            Vs = V[list(S)]
            G = np.ones((r, r)) + Vs @ Vs.T
            try:
                u = np.linalg.solve(G, np.ones(r))
            except np.linalg.LinAlgError:
                continue
            if u.sum() <= 0:
                continue
            w = u / u.sum()
            if np.any(w < -1e-12):
                continue
            x = w @ Vs
            if best is None or x @ x < best:
                best = float(x @ x)
    return np.sqrt(best)


class TestMinNormPoint:
    def test_singleton(self):
        g = np.array([[1.0, 2.0]])
        F, w = min_norm_point([g])
        assert np.array_equal(F, g)
        assert np.array_equal(w, [1.0])

    def test_opposite_pair_contains_origin(self):
        g = np.array([[3.0, -1.0]])
        F, w = min_norm_point([g, -g])
        assert np.linalg.norm(F) <= 1e-12
        assert np.allclose(w, [0.5, 0.5])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            min_norm_point([])

    def test_against_dense_grid(self):
        rng = np.random.default_rng(42)
        for _ in range(10):
            vs = [rng.standard_normal(3) for _ in range(3)]
            F, _w = min_norm_point(vs)
            assert np.linalg.norm(F) == pytest.approx(
                brute_force_min_norm(vs), abs=1e-3)

    def test_against_face_enumeration(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            m = int(rng.integers(1, 7))
            vs = [rng.standard_normal(4) for _ in range(m)]
            F, _w = min_norm_point(vs)
            assert np.linalg.norm(F) == pytest.approx(
                exact_min_norm_by_faces(vs), abs=1e-9)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 8))
    @settings(max_examples=40, deadline=None)
    def test_certificate_and_weights(self, seed, m):
        rng = np.random.default_rng(seed)
        vs = [rng.standard_normal((2, 3)) for _ in range(m)]
        F, w = min_norm_point(vs)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(w >= 0)
        combo = sum(wi * vi for wi, vi in zip(w, vs))
        assert np.abs(combo - F).max() <= 1e-10
        # first-order optimality of the hull projection
        for v in vs:
            assert float(np.sum(F * (v - F))) >= -1e-9

    def test_nested_hulls_monotone(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            vs = [rng.standard_normal(4) for _ in range(6)]
            norms = [np.linalg.norm(min_norm_point(vs[:k])[0])
                     for k in range(1, 7)]
            assert all(b <= a + 1e-10 for a, b in zip(norms, norms[1:]))

    def test_permutation_invariance(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            vs = [rng.standard_normal(5) for _ in range(6)]
            n1 = np.linalg.norm(min_norm_point(vs)[0])
            perm = rng.permutation(6)
            n2 = np.linalg.norm(min_norm_point([vs[i] for i in perm])[0])
            assert n1 == pytest.approx(n2, abs=1e-12)


class TestBallPoint:
    def test_within_radius(self):
        rng = np.random.default_rng(0)
        center = np.array([[1.0, -2.0, 0.5]])
        for _ in range(200):
            p = ball_point(center, 0.3, rng)
            assert np.linalg.norm(p - center) <= 0.3 + 1e-12

    def test_radii_distribution(self):
        # radius^d uniform: mean of (r/delta)^d is 1/2
        rng = np.random.default_rng(1)
        center = np.zeros((2, 2))
        ratios = [(np.linalg.norm(ball_point(center, 1.0, rng)) ** 4)
                  for _ in range(4000)]
        assert np.mean(ratios) == pytest.approx(0.5, abs=0.03)


class TestSampleBundle:
    def test_affine_cost_collapses(self, example13):
        G = np.array([[1.0, -2.0, 0.5]])
        grad = lambda K: G
        rng = np.random.default_rng(0)
        b = sample_bundle(grad, example13.K0, 0.05, 5, rng)
        assert all(np.array_equal(g, G) for g in b.gradients)
        assert np.abs(b.F - G).max() <= 1e-12

    def test_membership_and_invariants(self, example13):
        plant, K0 = example13.plant, example13.K0
        grad = AnalyticGradient(plant, strict=False)
        rng = np.random.default_rng(3)
        b = sample_bundle(grad, K0, 0.01, 4, rng)
        assert len(b.points) == 4
        for p in b.points:
            assert np.linalg.norm(p - K0) <= b.radius + 1e-12
        assert b.weights.sum() == pytest.approx(1.0, abs=1e-12)
        combo = sum(w * g for w, g in zip(b.weights, b.gradients))
        assert np.abs(combo - b.F).max() <= 1e-10
        Fn = np.linalg.norm(b.F)
        assert all(Fn <= np.linalg.norm(g) + 1e-12 for g in b.gradients)

    def test_include_center(self, example13):
        plant, K0 = example13.plant, example13.K0
        grad = AnalyticGradient(plant, strict=False)
        rng = np.random.default_rng(4)
        b = sample_bundle(grad, K0, 0.01, 4, rng, include_center=True)
        assert len(b.points) == 5
        assert np.array_equal(b.points[0], K0)

    def test_infeasible_ball_raises(self, example13):
        plant, K0 = example13.plant, example13.K0
        grad = AnalyticGradient(plant, strict=False)
        rng = np.random.default_rng(5)
        with pytest.raises(InfeasibleBallError):
            # huge radius guarantees unstable samples
            sample_bundle(grad, K0, 50.0, 8, rng)

    def test_bundle_size_validated(self, example13):
        with pytest.raises(ValueError):
            sample_bundle(lambda K: K, example13.K0, 0.1, 0,
                          np.random.default_rng(0))
