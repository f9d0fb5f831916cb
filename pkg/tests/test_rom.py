"""Offline basis extraction, online core matrices, and local bases."""

import numpy as np
import pytest

from trom.decomp import cp_als, cp_from_slices, hosvd, tt_svd
from trom.linalg import thin_qr
from trom.errors import DimensionMismatch, InvalidInput, InvalidRank, RankBudgetExceeded
from trom.rom import (
    OnlinePayloadCP,
    core_matrix,
    extract_dense,
    local_basis,
    offline_cp,
    offline_hosvd,
    offline_tt,
    pod_basis,
)
from trom.sampling import (
    CartesianGrid,
    GeneralSampling,
    InterpVectors,
    ParameterBox,
    general_vector,
    lagrange_vectors,
)
from trom.tensor import DenseTensor, kmode_product

from conftest import decaying_tensor


BOX = ParameterBox(bounds=((0.0, 1.0), (0.0, 1.0)))


def cartesian_setup(rng, m=30, axes=(4, 3), n_time=8):
    phi = decaying_tensor(rng, (m, *axes, n_time))
    grid = CartesianGrid.uniform(BOX, axes)
    return phi, grid


def extract_oracle(phi, e):
    """Slow loop: weighted sum of parameter slices."""
    arr = phi.array
    out = np.zeros((arr.shape[0], arr.shape[-1]))
    mids = [v.size for v in e.vectors]
    for idx in np.ndindex(*mids):
        w = 1.0
        for axis, i in enumerate(idx):
            w *= e.vectors[axis][i]
        out += w * arr[(slice(None), *idx, slice(None))]
    return out


class TestOffline:
    def test_hosvd_basis_orthonormal(self, rng):
        phi, _ = cartesian_setup(rng)
        basis, payload = offline_hosvd(hosvd(phi, eps=1e-8))
        u = basis.u
        assert np.allclose(u.T @ u, np.eye(u.shape[1]), atol=1e-12)
        assert basis.source_format == "hosvd"
        assert basis.reduced_dim == u.shape[1]

    def test_tt_basis_orthonormal(self, rng):
        phi, _ = cartesian_setup(rng)
        basis, payload = offline_tt(tt_svd(phi, 1e-8))
        u = basis.u
        assert np.allclose(u.T @ u, np.eye(u.shape[1]), atol=1e-12)
        assert basis.source_format == "tt"

    def test_cp_basis_orthonormal(self, rng):
        phi, _ = cartesian_setup(rng)
        basis, payload = offline_cp(cp_als(phi, 6, random_state=3))
        u = basis.u
        assert np.allclose(u.T @ u, np.eye(u.shape[1]), atol=1e-12)
        assert payload.rank == 6
        assert np.allclose(payload.r_u, np.triu(payload.r_u))

    def test_cp_rank_above_space_rejected(self, rng):
        phi = DenseTensor(rng.standard_normal((4, 3, 6)))
        d = cp_from_slices(DenseTensor(rng.standard_normal((10, 3, 3))))
        # rebuild with a first mode smaller than the rank
        bad = cp_als(phi, 4, random_state=0)
        object.__setattr__(bad, "u_factors", bad.u_factors[:3, :])
        with pytest.raises(InvalidRank):
            offline_cp(bad)

    def test_cp_wide_time_factor_kept_raw(self, rng):
        # rank 6 > 4 time steps: r_v must be the raw time factor
        phi = decaying_tensor(rng, (20, 3, 4))
        d = cp_als(phi, 6, random_state=1)
        basis, payload = offline_cp(d)
        assert payload.r_v.shape == (4, 6)
        assert np.array_equal(payload.r_v, d.v_factors)

    def test_entry_count_triangular(self, rng):
        phi, _ = cartesian_setup(rng, m=40, axes=(4, 3), n_time=10)
        d = cp_als(phi, 5, random_state=0)
        _, payload = offline_cp(d)
        # R=5 <= N=10: tri(5) twice plus the two axis factors
        assert payload.entry_count == 15 + 15 + 5 * (4 + 3)


class TestCoreMatrix:
    @pytest.mark.parametrize("fmt", ["cp", "hosvd", "tt"])
    def test_matches_dense_extraction(self, rng, fmt):
        # U C V^T equals the compressed extraction, where V is the trailing
        # orthogonal time factor each format keeps offline
        phi, grid = cartesian_setup(rng)
        if fmt == "cp":
            d = cp_als(phi, 8, random_state=7, restarts=2)
            basis, payload = offline_cp(d)
            trailing = thin_qr(d.v_factors).q
        elif fmt == "hosvd":
            d = hosvd(phi, eps=1e-9)
            basis, payload = offline_hosvd(d)
            trailing = d.v
        else:
            d = tt_svd(phi, 1e-9)
            basis, payload = offline_tt(d)
            # raw chain times raw v: the w scales cancel
            trailing = d.v
        for _ in range(5):
            a = BOX.sample(1, rng)[0]
            e = lagrange_vectors(grid, a, p=2)
            c = core_matrix(payload, e)
            approx = extract_dense(d, e)
            assert np.allclose(basis.u @ c @ trailing.T, approx, atol=1e-10)

    def test_general_sampling_single_axis(self, rng):
        phi = decaying_tensor(rng, (25, 6, 7))
        pts = BOX.sample(6, rng)
        s = GeneralSampling(box=BOX, samples=pts)
        d = hosvd(phi, eps=1e-9)
        basis, payload = offline_hosvd(d)
        e = general_vector(s, BOX.sample(1, rng)[0], q=4)
        c = core_matrix(payload, e)
        assert np.allclose(basis.u @ c @ d.v.T, extract_dense(d, e), atol=1e-10)

    def test_vector_count_mismatch(self, rng):
        phi, grid = cartesian_setup(rng)
        _, payload = offline_hosvd(hosvd(phi, eps=1e-6))
        e = InterpVectors(vectors=(np.ones(4) / 4,), kind="general")
        with pytest.raises(DimensionMismatch):
            core_matrix(payload, e)

    def test_vector_length_mismatch(self, rng):
        phi, grid = cartesian_setup(rng)
        _, payload = offline_hosvd(hosvd(phi, eps=1e-6))
        e = InterpVectors(vectors=(np.ones(5) / 5, np.ones(3) / 3),
                          kind="cartesian")
        with pytest.raises(DimensionMismatch):
            core_matrix(payload, e)

    def test_rejects_non_payload(self):
        e = InterpVectors(vectors=(np.ones(2),), kind="general")
        with pytest.raises(InvalidInput):
            core_matrix(np.eye(3), e)


class TestLocalBasis:
    @pytest.mark.parametrize("fmt", ["cp", "hosvd", "tt"])
    def test_singular_values_match_extraction(self, rng, fmt):
        # the core matrix and the extracted snapshot matrix share singular
        # values because the basis has orthonormal columns
        phi, grid = cartesian_setup(rng)
        if fmt == "cp":
            d = cp_als(phi, 8, random_state=7, restarts=2)
            _, payload = offline_cp(d)
        elif fmt == "hosvd":
            d = hosvd(phi, eps=1e-9)
            _, payload = offline_hosvd(d)
        else:
            d = tt_svd(phi, 1e-9)
            _, payload = offline_tt(d)
        a = BOX.sample(1, rng)[0]
        e = lagrange_vectors(grid, a, p=2)
        lb = local_basis(payload, e, n=3)
        ref = np.linalg.svd(extract_dense(d, e), compute_uv=False)
        k = min(lb.singular_values.size, ref.size)
        assert np.allclose(lb.singular_values[:k], ref[:k],
                           atol=1e-10 * max(ref[0], 1.0))
        assert np.all(ref[k:] <= 1e-10 * max(ref[0], 1.0))

    def test_coords_orthonormal(self, rng):
        phi, grid = cartesian_setup(rng)
        _, payload = offline_hosvd(hosvd(phi, eps=1e-8))
        e = lagrange_vectors(grid, [0.3, 0.6], p=2)
        lb = local_basis(payload, e, n=4)
        assert lb.coords.shape[1] == 4
        assert np.allclose(lb.coords.T @ lb.coords, np.eye(4), atol=1e-12)

    def test_budget_enforced(self, rng):
        phi, grid = cartesian_setup(rng)
        _, payload = offline_hosvd(hosvd(phi, eps=1e-8))
        e = lagrange_vectors(grid, [0.3, 0.6], p=2)
        c = core_matrix(payload, e)
        budget = min(c.shape)
        with pytest.raises(RankBudgetExceeded):
            local_basis(payload, e, n=budget + 1)
        with pytest.raises(RankBudgetExceeded):
            local_basis(payload, e, n=0)

    def test_padded_flag(self, rng):
        # rank-1 extraction: asking for 2 columns pads the basis
        phi = DenseTensor(
            np.multiply.outer(
                np.multiply.outer(rng.standard_normal(10), np.ones(3)),
                rng.standard_normal(5),
            )
        )
        grid = CartesianGrid.uniform(ParameterBox(bounds=((0.0, 1.0),)), (3,))
        _, payload = offline_hosvd(hosvd(phi, ranks=(2, 2, 2)))
        e = lagrange_vectors(grid, [0.5], p=2)
        lb = local_basis(payload, e, n=2)
        assert lb.numerical_rank == 1
        assert lb.padded
        assert np.allclose(lb.coords.T @ lb.coords, np.eye(2), atol=1e-12)

    def test_not_padded_at_full_rank(self, rng):
        phi, grid = cartesian_setup(rng)
        _, payload = offline_hosvd(hosvd(phi, eps=1e-8))
        e = lagrange_vectors(grid, [0.2, 0.8], p=2)
        lb = local_basis(payload, e, n=2)
        assert not lb.padded


class TestPodBasis:
    def test_matches_unfolding_svd(self, rng):
        phi = decaying_tensor(rng, (12, 4, 6))
        u = pod_basis(phi, 5)
        mat = phi.array.reshape(12, -1)
        ref = np.linalg.svd(mat, full_matrices=False)[0][:, :5]
        # compare up to column signs
        assert np.allclose(np.abs(u.T @ ref), np.eye(5), atol=1e-10)

    def test_rank_bounds(self, rng):
        phi = decaying_tensor(rng, (12, 4, 6))
        with pytest.raises(InvalidRank):
            pod_basis(phi, 0)
        with pytest.raises(InvalidRank):
            pod_basis(phi, 13)


class TestExtractDense:
    def test_matches_loop_oracle(self, rng):
        phi, grid = cartesian_setup(rng, m=15, axes=(4, 3), n_time=5)
        for _ in range(5):
            a = BOX.sample(1, rng)[0]
            e = lagrange_vectors(grid, a, p=3)
            assert np.allclose(extract_dense(phi, e), extract_oracle(phi, e),
                               atol=1e-12)

    def test_indicator_recovers_slice(self, rng):
        phi, grid = cartesian_setup(rng, m=10, axes=(4, 3), n_time=5)
        e = InterpVectors(vectors=(np.eye(4)[1], np.eye(3)[2]),
                          kind="cartesian")
        assert np.array_equal(extract_dense(phi, e), phi.array[:, 1, 2, :])

    def test_decomposition_input_materializes(self, rng):
        phi, grid = cartesian_setup(rng)
        d = hosvd(phi, eps=1e-10)
        e = lagrange_vectors(grid, [0.4, 0.4], p=2)
        assert np.allclose(extract_dense(d, e), extract_oracle(phi, e),
                           atol=1e-8)

    def test_vector_count_checked(self, rng):
        phi, _ = cartesian_setup(rng)
        e = InterpVectors(vectors=(np.ones(4),), kind="general")
        with pytest.raises(DimensionMismatch):
            extract_dense(phi, e)

    def test_rejects_wrong_type(self):
        e = InterpVectors(vectors=(np.ones(2),), kind="general")
        with pytest.raises(InvalidInput):
            extract_dense([[1.0, 2.0]], e)
