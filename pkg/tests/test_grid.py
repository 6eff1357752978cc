import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qpoisson.errors import InvalidParameter, ResourceLimitError
from qpoisson.grid import (DiscreteLaplacian, RhsVector, analytic_eigenvalue,
                           analytic_eigenvector, apply_delta_h, build_delta_h, build_Lh,
                           builtin_rhs, condition_number, load_rhs_csv, padded_indices,
                           rhs_from_source, sample_rhs, sine_matrix)


class TestLh:
    def test_smallest(self):
        assert build_Lh(2).tolist() == [[2.0]]

    def test_m4(self):
        assert build_Lh(4).tolist() == [[2, -1, 0], [-1, 2, -1], [0, -1, 2]]

    def test_too_small(self):
        with pytest.raises(InvalidParameter):
            build_Lh(1)


class TestDeltaH:
    def test_m2(self):
        assert build_delta_h(2, 1).tolist() == [[8.0]]

    def test_m4_d2_block_structure(self):
        A = build_delta_h(4, 2) / 16
        B = build_Lh(4) + 2 * np.eye(3)
        for k in range(3):
            assert np.array_equal(A[3 * k:3 * k + 3, 3 * k:3 * k + 3], B)
        for k in range(2):
            assert np.array_equal(A[3 * k:3 * k + 3, 3 * k + 3:3 * k + 6], -np.eye(3))
        assert np.all(np.diag(A) == 4)

    def test_kronecker_identity(self):
        L, I = build_Lh(8), np.eye(7)
        assert np.array_equal(build_delta_h(8, 2), 64 * (np.kron(L, I) + np.kron(I, L)))

    @pytest.mark.parametrize("M,d", [(2, 1), (4, 2), (8, 2), (4, 3)])
    def test_symmetric(self, M, d):
        A = build_delta_h(M, d)
        assert np.array_equal(A, A.T)

    def test_dense_limit(self):
        with pytest.raises(ResourceLimitError, match="matrix-free"):
            build_delta_h(32, 3)

    @pytest.mark.parametrize("M,d", [(4, 1), (8, 2), (4, 3)])
    def test_matrix_free_matches_dense(self, M, d):
        v = np.random.default_rng(1).standard_normal((M - 1) ** d)
        assert np.allclose(apply_delta_h(M, d, v), build_delta_h(M, d) @ v, atol=1e-10)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(InvalidParameter):
            build_delta_h(6, 1)


class TestSpectrum:
    def test_m2(self):
        assert analytic_eigenvalue(1, 2) == pytest.approx(8)

    def test_m4_j2(self):
        assert analytic_eigenvalue(2, 4) == pytest.approx(32)

    def test_m4_d2(self):
        lam = analytic_eigenvalue((1, 1), 4)
        assert lam == pytest.approx(64 - 32 * math.sqrt(2))
        assert lam == pytest.approx(np.linalg.eigvalsh(build_delta_h(4, 2)).min())

    def test_out_of_range(self):
        with pytest.raises(InvalidParameter):
            analytic_eigenvalue(4, 4)

    def test_vector_m2(self):
        assert analytic_eigenvector(1, 2).tolist() == pytest.approx([1.0])

    def test_vector_m4(self):
        v = analytic_eigenvector(1, 4)
        ref = np.sin(np.pi * np.arange(1, 4) / 4)
        assert np.allclose(v, ref / np.linalg.norm(ref))

    def test_orthonormal_m8(self):
        U = np.column_stack([analytic_eigenvector(j, 8) for j in range(1, 8)])
        assert np.allclose(U.T @ U, np.eye(7), atol=1e-12)

    @pytest.mark.parametrize("M", [2, 4, 8])
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_dense_eigensolver_agrees(self, M, d):
        lap = DiscreteLaplacian(M, d)
        A = lap.matrix()
        w = np.linalg.eigvalsh(A)
        assert np.allclose(np.sort(lap.eigenvalues), w, atol=1e-10 * w.max())
        for js in [(1,) * d, (M - 1,) * d, tuple(range(1, d + 1)) if M > d else (1,) * d]:
            u = analytic_eigenvector(js, M)
            assert np.linalg.norm(A @ u - analytic_eigenvalue(js, M) * u) <= 1e-10 * w.max()

    @pytest.mark.parametrize("M", [4, 8, 16, 32])
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_lowest_eigenvalue_per_dimension_exceeds_five(self, M, d):
        assert analytic_eigenvalue((1,) * d, M) / d > 5

    def test_sine_matrix_involutory(self):
        for M in (2, 4, 8):
            S = sine_matrix(M)
            assert np.allclose(S @ S, np.eye(M - 1), atol=1e-12)

    def test_eigenbasis_round_trip(self):
        lap = DiscreteLaplacian(4, 2)
        v = np.random.default_rng(0).standard_normal(lap.N)
        assert np.allclose(lap.from_eigenbasis(lap.to_eigenbasis(v)), v)


class TestCondition:
    def test_m2(self):
        assert condition_number(2, 3) == pytest.approx(1)

    def test_m4(self):
        ref = math.sin(3 * math.pi / 8) ** 2 / math.sin(math.pi / 8) ** 2
        assert condition_number(4, 1) == pytest.approx(ref)
        assert ref == pytest.approx(5.8284, abs=1e-4)

    @given(st.sampled_from([2, 4, 8, 16, 64]), st.integers(1, 6))
    def test_independent_of_dimension(self, M, d):
        assert condition_number(M, d) == pytest.approx(condition_number(M, 1))


class TestRhs:
    def test_zero_field_is_degenerate(self):
        assert sample_rhs(lambda x: 0.0, 4).degenerate

    def test_sine_field(self):
        r = sample_rhs(lambda x: math.sin(math.pi * x), 4)
        assert np.allclose(r.values, np.sin(np.pi * np.array([0.25, 0.5, 0.75])))

    def test_padded_layout_d2(self):
        r = sample_rhs(lambda x, y: 1.0 + x + 10 * y, 4, 2)
        pad = r.padded_layout
        assert pad.size == 64
        nz = sorted(np.flatnonzero(pad).tolist())
        assert nz == sorted((4 + j1) * 8 + (4 + j2) for j1 in range(1, 4) for j2 in range(1, 4))
        assert pad[(4 + 1) * 8 + (4 + 2)] == pytest.approx(1 + 0.25 + 5)
        assert np.linalg.norm(pad) == pytest.approx(r.norm)

    def test_padded_indices_d1(self):
        assert padded_indices(4, 1).tolist() == [5, 6, 7]

    def test_builtins(self):
        assert np.allclose(builtin_rhs("eigenvector:2", 8).values, analytic_eigenvector(2, 8))
        assert np.allclose(builtin_rhs("eigenvector:1,2", 4, 2).values,
                           analytic_eigenvector((1, 2), 4))
        assert np.all(builtin_rhs("constant", 4, 2).values == 1)
        assert np.allclose(builtin_rhs("random:5", 8).values, builtin_rhs("random:5", 8).values)
        sp = builtin_rhs("sin-product", 8, 2).values
        u = analytic_eigenvector((1, 1), 8)
        assert abs(np.dot(sp, u)) == pytest.approx(np.linalg.norm(sp))

    def test_unknown_builtin(self):
        with pytest.raises(InvalidParameter):
            builtin_rhs("nope", 4)

    def test_csv(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("1,2\n3\n")
        assert load_rhs_csv(p, 4).values.tolist() == [1, 2, 3]
        assert rhs_from_source(f"csv:{p}", 4).values.tolist() == [1, 2, 3]

    def test_wrong_length(self):
        with pytest.raises(InvalidParameter):
            RhsVector(np.ones(4), 4)
