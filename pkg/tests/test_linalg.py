"""Truncated SVD, thin QR, and the weighted minimum-norm solver."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trom.errors import (
    DegenerateNeighborhood,
    InvalidDimension,
    InvalidInput,
    InvalidRank,
)
from trom.linalg import thin_qr, truncated_svd, weighted_minnorm_solve


def matrix_with_spectrum(rng, m, n, spectrum):
    u, _ = np.linalg.qr(rng.standard_normal((m, len(spectrum))))
    v, _ = np.linalg.qr(rng.standard_normal((n, len(spectrum))))
    return u @ np.diag(spectrum) @ v.T


class TestTruncatedSvd:
    def test_rank_mode_matches_numpy(self, rng):
        a = rng.standard_normal((8, 5))
        res = truncated_svd(a, rank=3)
        s_ref = np.linalg.svd(a, compute_uv=False)
        assert res.rank == 3
        assert np.allclose(res.singular_values, s_ref[:3], rtol=1e-12)
        # factors orthonormal (columns on both sides)
        assert np.allclose(res.left.T @ res.left, np.eye(3), atol=1e-12)
        assert np.allclose(res.right.T @ res.right, np.eye(3), atol=1e-12)

    def test_rank_mode_best_approximation(self, rng):
        a = rng.standard_normal((7, 9))
        res = truncated_svd(a, rank=4)
        s_ref = np.linalg.svd(a, compute_uv=False)
        err = np.linalg.norm(a - res.reconstruct())
        assert err == pytest.approx(np.sqrt(np.sum(s_ref[4:] ** 2)), rel=1e-10)

    def test_tol_mode_meets_absolute_error(self, rng):
        spectrum = [10.0, 1.0, 0.1, 0.01, 0.001]
        a = matrix_with_spectrum(rng, 10, 8, spectrum)
        for tol in (5.0, 0.5, 0.05, 0.005):
            res = truncated_svd(a, tol=tol)
            assert np.linalg.norm(a - res.reconstruct()) <= tol * (1 + 1e-12)

    def test_tol_mode_keeps_minimal_rank(self, rng):
        spectrum = [4.0, 2.0, 1.0]
        a = matrix_with_spectrum(rng, 6, 6, spectrum)
        # discarding sigma_3=1 alone is allowed at tol 1.05; sigma_2 is not
        res = truncated_svd(a, tol=1.05)
        assert res.rank == 2

    def test_exactly_one_mode_required(self, rng):
        a = rng.standard_normal((3, 3))
        with pytest.raises(InvalidInput):
            truncated_svd(a)
        with pytest.raises(InvalidInput):
            truncated_svd(a, rank=2, tol=0.1)

    def test_rank_too_large(self, rng):
        with pytest.raises(InvalidRank):
            truncated_svd(rng.standard_normal((4, 3)), rank=4)

    def test_nonfinite_rejected(self):
        a = np.array([[1.0, np.inf], [0.0, 1.0]])
        with pytest.raises(InvalidInput):
            truncated_svd(a, rank=1)

    def test_sign_convention_deterministic(self, rng):
        a = rng.standard_normal((6, 4))
        r1 = truncated_svd(a, rank=2)
        r2 = truncated_svd(a.copy(), rank=2)
        assert np.array_equal(r1.left, r2.left)
        # largest-magnitude entry of each left vector is positive
        for j in range(r1.rank):
            col = r1.left[:, j]
            assert col[np.argmax(np.abs(col))] > 0

    def test_zero_matrix_tol_mode(self):
        res = truncated_svd(np.zeros((4, 3)), tol=0.5)
        assert res.rank >= 0
        assert np.linalg.norm(res.reconstruct() - np.zeros((4, 3))) <= 0.5


class TestThinQr:
    def test_reproduces_and_orthonormal(self, rng):
        a = rng.standard_normal((9, 4))
        res = thin_qr(a)
        assert np.allclose(res.q @ res.r, a, rtol=1e-12, atol=1e-13)
        assert np.allclose(res.q.T @ res.q, np.eye(4), atol=1e-12)

    def test_r_upper_triangular_nonneg_diag(self, rng):
        a = rng.standard_normal((7, 5))
        r = thin_qr(a).r
        assert np.allclose(r, np.triu(r))
        assert np.all(np.diag(r) >= 0)

    def test_wide_input_rejected(self, rng):
        with pytest.raises(InvalidDimension):
            thin_qr(rng.standard_normal((3, 5)))

    def test_square_ok(self, rng):
        a = rng.standard_normal((4, 4))
        res = thin_qr(a)
        assert np.allclose(res.q @ res.r, a, rtol=1e-12, atol=1e-13)


class TestWeightedMinnormSolve:
    def test_reproduces_rhs(self, rng):
        # affine-reproduction system: coordinates plus a sum-to-one row
        pts = rng.uniform(0, 1, size=(2, 6))
        x = np.vstack([pts, np.ones(6)])
        d = rng.uniform(0.1, 2.0, size=6)
        alpha = pts @ np.full(6, 1 / 6)
        rhs = np.concatenate([alpha, [1.0]])
        w = weighted_minnorm_solve(x, d, rhs)
        assert np.allclose(x @ w, rhs, atol=1e-10)

    def test_weights_prefer_near_samples(self, rng):
        pts = np.array([[0.0, 1.0, 10.0]])
        x = np.vstack([pts, np.ones(3)])
        d = np.array([0.1, 0.5, 9.0])
        rhs = np.array([0.2, 1.0])
        w = weighted_minnorm_solve(x, d, rhs)
        # distant sample contributes least
        assert abs(w[2]) < abs(w[0])

    def test_minimum_norm_among_solutions(self, rng):
        x = np.vstack([rng.uniform(0, 1, size=(2, 8)), np.ones(8)])
        d = rng.uniform(0.2, 1.5, size=8)
        rhs = np.concatenate([rng.uniform(0.2, 0.8, size=2), [1.0]])
        w = weighted_minnorm_solve(x, d, rhs)
        # w = W y with y the min-norm solution of (X W) y = rhs, so y must be
        # orthogonal to the null space of X W
        _, _, vt = np.linalg.svd(x @ np.diag(1.0 / d))
        null = vt[3:]
        assert np.allclose(null @ (w * d), 0.0, atol=1e-10)

    def test_degenerate_raises(self):
        # three collinear points cannot reproduce an off-line target
        pts = np.array([[0.1, 0.2, 0.3], [0.1, 0.2, 0.3]])
        x = np.vstack([pts, np.ones(3)])
        d = np.full(3, 0.5)
        with pytest.raises(DegenerateNeighborhood):
            weighted_minnorm_solve(x, d, np.array([0.5, 0.1, 1.0]))

    @given(st.integers(4, 9))
    @settings(max_examples=20, deadline=None)
    def test_partition_of_unity(self, count):
        rng = np.random.default_rng(count)
        pts = rng.uniform(0, 1, size=(2, count))
        x = np.vstack([pts, np.ones(count)])
        d = rng.uniform(0.05, 2.0, size=count)
        alpha = pts.mean(axis=1)
        w = weighted_minnorm_solve(x, d, np.concatenate([alpha, [1.0]]))
        assert np.sum(w) == pytest.approx(1.0, abs=1e-9)
