import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hinfsearch import (
    ClosedLoop,
    ExactHinfCost,
    Plant,
    assemble_closed_loop,
    hinf_norm_grid,
    is_stabilizing,
    simulate,
    spectral_radius,
    sqrt_psd,
)


class TestSpectralRadius:
    def test_identity(self):
        assert spectral_radius(np.eye(3)) == pytest.approx(1.0)

    def test_example13_start(self, example13):
        p, K0 = example13.plant, example13.K0
        rho = spectral_radius(p.A - p.B @ K0)
        assert rho == pytest.approx(0.5756, abs=1e-4)

    def test_exampleD1_start(self, exampleD1):
        p, K0 = exampleD1.plant, exampleD1.K0
        rho = spectral_radius(p.A - p.B @ K0)
        assert rho == pytest.approx(0.9567, abs=1e-4)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            spectral_radius(np.ones((2, 3)))

    def test_rejects_nonfinite(self):
        M = np.eye(2)
        M = M.copy()
        M[0, 1] = np.nan
        with pytest.raises(ValueError):
            spectral_radius(M)

    @given(st.sampled_from([-2.0, 0.5]), st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_scaling_homogeneity(self, alpha, seed):
        M = np.random.default_rng(seed).standard_normal((4, 4))
        assert spectral_radius(alpha * M) == pytest.approx(
            abs(alpha) * spectral_radius(M), rel=1e-10, abs=1e-12)


class TestSqrtPsd:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_square_recovers_input(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((4, 4))
        M = X @ X.T + 0.1 * np.eye(4)
        S = sqrt_psd(M)
        assert np.linalg.norm(S @ S - M) <= 1e-10 * max(np.linalg.norm(M), 1)

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError):
            sqrt_psd(np.diag([1.0, -0.5]))

    def test_clamps_roundoff_negatives(self):
        M = np.diag([1.0, -1e-14])
        S = sqrt_psd(M)
        assert S[1, 1] == 0.0


class TestPlantValidation:
    def test_rejects_semidefinite_q(self):
        with pytest.raises(ValueError, match="Q"):
            Plant(A=np.eye(2), B=np.eye(2), Q=np.diag([1.0, 0.0]),
                  R=np.eye(2))

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(ValueError):
            Plant(A=np.eye(2), B=np.ones((3, 1)), Q=np.eye(2),
                  R=np.eye(1))

    def test_matrices_frozen(self, example13):
        with pytest.raises(ValueError):
            example13.plant.A[0, 0] = 5.0


class TestAssembleClosedLoop:
    def test_trivial_identity(self):
        p = Plant(A=np.zeros((2, 2)), B=np.zeros((2, 1)), Q=np.eye(2),
                  R=np.eye(1))
        cl = assemble_closed_loop(p, np.zeros((1, 2)))
        assert np.array_equal(cl.A_cl, np.zeros((2, 2)))
        assert np.allclose(cl.C_cl, np.eye(2))

    def test_defining_identity_example13(self, example13):
        p, K0 = example13.plant, example13.K0
        cl = assemble_closed_loop(p, K0)
        W = p.Q + K0.T @ p.R @ K0
        assert np.linalg.norm(cl.C_cl.T @ cl.C_cl - W) <= 1e-10

    def test_b_cl_is_identity(self, example13):
        cl = assemble_closed_loop(example13.plant, example13.K0)
        assert np.array_equal(cl.B_cl, np.eye(3))


class TestIsStabilizing:
    def test_example13_start(self, example13):
        assert is_stabilizing(example13.plant, example13.K0)

    def test_zero_gain_at_unit_circle(self):
        p = Plant(A=np.eye(3), B=np.ones((3, 1)), Q=np.eye(3), R=np.eye(1))
        assert not is_stabilizing(p, np.zeros((1, 3)))

    def test_scaled_gain_destabilizes(self, example13):
        p, K0 = example13.plant, example13.K0
        K = 100.0 * K0
        assert spectral_radius(p.A - p.B @ K) >= 1.0
        assert not is_stabilizing(p, K)

    def test_margin(self, example13):
        assert not is_stabilizing(example13.plant, example13.K0, margin=0.5)


class TestSimulate:
    def test_one_step_delay(self):
        cl = ClosedLoop(A_cl=np.zeros((3, 3)), C_cl=np.eye(3))
        w = np.zeros((4, 3))
        w[0, 0] = 1.0
        x, z = simulate(cl, w)
        expected = np.zeros((4, 3))
        expected[1, 0] = 1.0
        assert np.array_equal(z, expected)

    def test_geometric_impulse_response(self):
        cl = ClosedLoop(A_cl=np.array([[0.5]]), C_cl=np.array([[1.0]]))
        w = np.array([[1.0], [0.0], [0.0], [0.0]])
        _x, z = simulate(cl, w, T=4)
        assert np.allclose(z.ravel(), [0.0, 1.0, 0.5, 0.25])

    def test_zero_horizon_rejected(self):
        cl = ClosedLoop(A_cl=np.zeros((1, 1)), C_cl=np.eye(1))
        with pytest.raises(ValueError):
            simulate(cl, np.zeros((0, 1)), T=0)

    def test_impulse_energy_below_norm(self, example13):
        # finite-horizon impulse-response energy never exceeds J(K)^2
        p, K0 = example13.plant, example13.K0
        cl = assemble_closed_loop(p, K0)
        J = hinf_norm_grid(cl).value
        rng = np.random.default_rng(0)
        for _ in range(5):
            w = np.zeros((400, 3))
            w0 = rng.standard_normal(3)
            w[0] = w0 / np.linalg.norm(w0)
            _x, z = simulate(cl, w)
            assert np.sum(z**2) <= J**2 + 1e-9

    def test_impulse_energy_monotone_in_horizon(self, example13):
        cl = assemble_closed_loop(example13.plant, example13.K0)
        energies = []
        for T in (10, 30, 100, 300):
            w = np.zeros((T, 3))
            w[0, 0] = 1.0
            _x, z = simulate(cl, w)
            energies.append(np.sum(z**2))
        assert all(b >= a - 1e-12 for a, b in zip(energies, energies[1:]))

    def test_stabilizing_implies_geometric_decay(self, example13):
        p, K0 = example13.plant, example13.K0
        cl = assemble_closed_loop(p, K0)
        w = np.zeros((101, 3))
        w[0] = np.array([1.0, -0.5, 0.25])
        x, _z = simulate(cl, w)
        norms = np.linalg.norm(x[1:], axis=1)
        # ratio test over 100 steps: windowed norms shrink geometrically
        head = np.linalg.norm(x[1:21])
        tail = np.linalg.norm(x[81:101])
        assert tail < 0.5 * head
        assert norms[-1] < 1e-3 * norms[0]
