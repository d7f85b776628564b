"""Tests for the no-bias soft-margin SVM solvers."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from scipy.linalg import block_diag

from app.models.errors import CovarianceError
from app.models.svm_model import SvmProblem
from app.services.svm_service import SvmService
from conftest import face_oracle

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)
penalties = st.sampled_from([0.1, 1.0, 10.0])


def _random_problem(seed, points, dim):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((points, dim))
    y = np.where(rng.standard_normal(points) >= 0, 1.0, -1.0)
    return X, y


# ============================================================================
# SINGLE PROBLEM
# ============================================================================


class TestSoftMargin:
    """Coordinate descent against the exhaustive face oracle."""

    @given(seeds, penalties, st.integers(min_value=2, max_value=5))
    def test_matches_face_oracle(self, seed, C, points):
        X, y = _random_problem(seed, points, points + 2)
        Q = np.outer(y, y) * (X @ X.T)
        alpha = face_oracle(Q, C)
        expected = X.T @ (alpha * y)

        solution = SvmService().solve_soft_margin(SvmProblem(X, y, C), tol=1e-12, max_iter=100000)
        assert solution.converged
        assert_allclose(solution.weights, expected, atol=1e-5)

    @given(seeds)
    def test_gap_certificate(self, seed):
        X, y = _random_problem(seed, 40, 3)
        solution = SvmService().solve_soft_margin(SvmProblem(X, y, 1.0), tol=1e-8)
        assert solution.converged
        assert 0.0 <= solution.gap <= 1e-8 + 1e-12
        assert np.all(solution.duals >= 0.0) and np.all(solution.duals <= 1.0)
        assert_allclose(solution.weights, X.T @ (solution.duals * y), atol=1e-10)

    @given(seeds, penalties)
    def test_complementary_slackness(self, seed, C):
        X, y = _random_problem(seed, 30, 3)
        solution = SvmService().solve_soft_margin(SvmProblem(X, y, C), tol=1e-10, max_iter=100000)
        assert solution.converged
        margins = y * (X @ solution.weights)
        alpha = solution.duals
        # the gap splits into non-negative per-point terms
        terms = alpha * np.maximum(margins - 1.0, 0.0) + (C - alpha) * np.maximum(1.0 - margins, 0.0)
        assert np.all(terms >= -1e-12)
        assert terms.sum() == pytest.approx(solution.gap, abs=1e-9)
        assert np.all(terms <= 1e-9)

    @given(seeds, st.sampled_from([0.5, 2.0, 3.0]))
    def test_feature_scaling(self, seed, scale):
        # ½‖w‖² + C Σ ξ over (s·X) with penalty C / s² has optimum w*/s
        X, y = _random_problem(seed, 10, 3)
        service = SvmService()
        C = 1.0
        base = service.solve_soft_margin(SvmProblem(X, y, C), tol=1e-12, max_iter=100000)
        scaled = service.solve_soft_margin(SvmProblem(scale * X, y, C / scale ** 2), tol=1e-12, max_iter=100000)
        assert base.converged and scaled.converged
        assert_allclose(scaled.weights, base.weights / scale, atol=1e-5)

    def test_seed_changes_order_not_optimum(self, rng):
        X = rng.standard_normal((60, 4))
        y = np.where(rng.standard_normal(60) >= 0, 1.0, -1.0)
        service = SvmService()
        a = service.solve_soft_margin(SvmProblem(X, y, 1.0), tol=1e-10, seed=1)
        b = service.solve_soft_margin(SvmProblem(X, y, 1.0), tol=1e-10, seed=2)
        # strong convexity: ½‖w − w*‖² ≤ gap
        assert np.linalg.norm(a.weights - b.weights) <= 2 * np.sqrt(2e-10)

    def test_deterministic(self, rng):
        X = rng.standard_normal((30, 3))
        y = np.where(rng.standard_normal(30) >= 0, 1.0, -1.0)
        service = SvmService()
        a = service.solve_soft_margin(SvmProblem(X, y, 1.0), seed=7)
        b = service.solve_soft_margin(SvmProblem(X, y, 1.0), seed=7)
        assert_array_equal(a.weights, b.weights)
        assert a.iterations == b.iterations

    @given(seeds)
    def test_label_flip_negates_weights(self, seed):
        X, y = _random_problem(seed, 12, 3)
        service = SvmService()
        a = service.solve_soft_margin(SvmProblem(X, y, 1.0), seed=3)
        b = service.solve_soft_margin(SvmProblem(X, -y, 1.0), seed=3)
        assert_array_equal(b.weights, -a.weights)

    def test_zero_row_gets_full_penalty(self, rng):
        X = rng.standard_normal((10, 3))
        y = np.where(rng.standard_normal(10) >= 0, 1.0, -1.0)
        X_zero = np.vstack([X, np.zeros(3)])
        y_zero = np.append(y, 1.0)
        service = SvmService()
        base = service.solve_soft_margin(SvmProblem(X, y, 2.0), tol=1e-10)
        padded = service.solve_soft_margin(SvmProblem(X_zero, y_zero, 2.0), tol=1e-10)
        assert padded.duals[-1] == 2.0
        assert_allclose(padded.weights, base.weights, atol=1e-4)

    def test_separable_pair(self):
        X = np.array([[2.0, 0.0], [-2.0, 0.0]])
        y = np.array([1.0, -1.0])
        solution = SvmService().solve_soft_margin(SvmProblem(X, y, 10.0), tol=1e-12)
        assert_allclose(solution.weights, [0.5, 0.0], atol=1e-9)

    def test_non_convergence_is_reported(self, rng):
        X = rng.standard_normal((200, 5))
        y = np.where(rng.standard_normal(200) >= 0, 1.0, -1.0)
        solution = SvmService().solve_soft_margin(SvmProblem(X, y, 1.0), tol=1e-14, max_iter=1)
        assert not solution.converged
        assert solution.iterations == 1
        assert np.all(np.isfinite(solution.weights))

    def test_warm_start_at_optimum(self, rng):
        X = rng.standard_normal((25, 3))
        y = np.where(rng.standard_normal(25) >= 0, 1.0, -1.0)
        service = SvmService()
        first = service.solve_soft_margin(SvmProblem(X, y, 1.0), tol=1e-8)
        again = service.solve_soft_margin(SvmProblem(X, y, 1.0), tol=1e-6, init_duals=first.duals)
        assert again.iterations == 0
        assert_allclose(again.weights, first.weights, atol=1e-10)


class TestValidation:
    """Bad inputs raise ValueError before any iteration."""

    def test_labels_must_be_signs(self):
        with pytest.raises(ValueError, match="±1"):
            SvmService().solve_soft_margin(SvmProblem(np.ones((2, 2)), np.array([1.0, 0.5]), 1.0))

    def test_penalty_positive(self):
        with pytest.raises(ValueError, match="C"):
            SvmService().solve_soft_margin(SvmProblem(np.ones((2, 2)), np.array([1.0, -1.0]), 0.0))

    def test_label_count(self):
        with pytest.raises(ValueError, match="Число меток"):
            SvmService().solve_soft_margin(SvmProblem(np.ones((3, 2)), np.array([1.0, -1.0]), 1.0))

    def test_tol_positive(self):
        with pytest.raises(ValueError, match="tol"):
            SvmService().solve_soft_margin(SvmProblem(np.ones((2, 2)), np.array([1.0, -1.0]), 1.0), tol=0.0)


# ============================================================================
# BATCH
# ============================================================================


class TestBatch:
    """Shared features, one label column per problem."""

    def test_batch_equals_single(self, rng):
        X = rng.standard_normal((30, 4))
        Y = np.where(rng.standard_normal((30, 3)) >= 0, 1.0, -1.0)
        service = SvmService()
        batch = service.solve_soft_margin_batch(X, Y, 1.0, tol=1e-9, seed=5)
        for b in range(3):
            single = service.solve_soft_margin(SvmProblem(X, Y[:, b], 1.0), tol=1e-9, seed=5)
            # both certified to gap ≤ 1e-9
            assert np.linalg.norm(batch[b].weights - single.weights) <= 2 * np.sqrt(2e-9)

    def test_vector_labels(self, rng):
        X = rng.standard_normal((8, 2))
        y = np.where(rng.standard_normal(8) >= 0, 1.0, -1.0)
        assert len(SvmService().solve_soft_margin_batch(X, y, 1.0)) == 1


# ============================================================================
# MAHALANOBIS
# ============================================================================


class TestMahalanobis:
    """Joint estimation with a block-diagonal metric."""

    def _pilots(self):
        # K = 1, T_t = 1, pilot (1 + 2j)/√5
        x = (1 + 2j) / np.sqrt(5)
        return np.array([[x.real, x.imag], [-x.imag, x.real]])

    def test_joint_layout(self):
        covs = [np.eye(4), 2 * np.eye(4)]
        service = SvmService()
        spec = service.build_mahalanobis_spec(covs)
        assert (spec.users, spec.antennas) == (2, 2)
        assert spec.layout[:4] == [(0, "re", 0), (0, "re", 1), (0, "im", 0), (0, "im", 1)]
        a = service.joint_features(spec, np.array([[1.0, 2.0, 3.0, 4.0]]), np.array([1]))
        assert_array_equal(a, [[0, 1.0, 0, 3.0, 0, 2.0, 0, 4.0]])

    @given(seeds, penalties)
    def test_matches_metric_oracle(self, seed, C):
        rng = np.random.default_rng(seed)
        B = rng.standard_normal((4, 4))
        cov = B @ B.T + 0.5 * np.eye(4)
        X_t = self._pilots()
        y = np.where(rng.standard_normal(4) >= 0, 1.0, -1.0)
        x_rows = np.tile(X_t.T, (2, 1))
        antennas = np.repeat(np.arange(2), 2)

        service = SvmService()
        spec = service.build_mahalanobis_spec([cov])
        A = service.joint_features(spec, x_rows, antennas)
        Q = np.outer(y, y) * (A @ cov @ A.T)
        theta = cov @ A.T @ (face_oracle(Q, C) * y)
        expected = np.concatenate([theta.reshape(2, 2)[0][:, None], theta.reshape(2, 2)[1][:, None]], axis=1)

        H_tilde, solution = service.solve_mahalanobis_margin(
            x_rows, y, antennas, spec, C, tol=1e-12, max_iter=100000
        )
        assert solution.converged
        assert_allclose(H_tilde, expected, atol=1e-5)

    def test_identity_metric_decouples(self, rng):
        X_t = rng.standard_normal((4, 10))
        Y_t = np.where(rng.standard_normal((3, 10)) >= 0, 1.0, -1.0)
        service = SvmService()
        spec = service.build_mahalanobis_spec([np.eye(6), np.eye(6)])
        H_joint, _ = service.solve_mahalanobis_margin(
            np.tile(X_t.T, (3, 1)), Y_t.ravel(), np.repeat(np.arange(3), 10), spec, 1.0, tol=1e-12
        )
        for i in range(3):
            row = service.solve_soft_margin(SvmProblem(X_t.T, Y_t[i], 1.0), tol=1e-12)
            assert_allclose(H_joint[i], row.weights, atol=1e-5)

    @given(st.sampled_from([0.25, 2.0, 9.0]))
    def test_isotropic_metric_rescales_penalty(self, sigma2):
        # ½ Σ h_kᵀ(σ²I)⁻¹h_k + C Σ ξ = (½ Σ ‖h_k‖² + Cσ² Σ ξ) / σ²
        rng = np.random.default_rng(11)
        X_t = rng.standard_normal((4, 10))
        Y_t = np.where(rng.standard_normal((3, 10)) >= 0, 1.0, -1.0)
        x_rows, labels, antennas = np.tile(X_t.T, (3, 1)), Y_t.ravel(), np.repeat(np.arange(3), 10)
        service = SvmService()
        scaled, _ = service.solve_mahalanobis_margin(
            x_rows, labels, antennas, service.build_mahalanobis_spec([sigma2 * np.eye(6)] * 2), 1.0,
            tol=1e-12, max_iter=100000,
        )
        identity, _ = service.solve_mahalanobis_margin(
            x_rows, labels, antennas, service.build_mahalanobis_spec([np.eye(6)] * 2), sigma2,
            tol=1e-12, max_iter=100000,
        )
        assert_allclose(scaled, identity, atol=2e-5)

    def test_singular_psd_is_floored(self):
        v = np.array([1.0, 0.0, 0.0, 0.0])
        spec = SvmService().build_mahalanobis_spec([np.outer(v, v)])
        root = spec.whitening[0]
        assert_allclose(root @ root, block_diag(1.0, 1e-10, 1e-10, 1e-10), atol=1e-12)

    def test_rejects_asymmetric(self):
        with pytest.raises(CovarianceError, match="симметрична"):
            SvmService().build_mahalanobis_spec([np.array([[1.0, 0.5], [0.0, 1.0]])])

    def test_rejects_indefinite(self):
        with pytest.raises(CovarianceError, match="положительно"):
            SvmService().build_mahalanobis_spec([np.diag([1.0, -1.0])])

    def test_rejects_odd_size(self):
        with pytest.raises(CovarianceError, match="2N×2N"):
            SvmService().build_mahalanobis_spec([np.eye(3)])
