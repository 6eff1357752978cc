import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qpoisson.errors import ContractViolation, DegenerateInputError, PostselectionError
from qpoisson.fixedpoint import FixedPoint
from qpoisson.grid import analytic_eigenvector, padded_indices, RhsVector
from qpoisson.kernels import newton_inverse
from qpoisson.qsim import (RegisterLayout, StateVector, apply_basis_function,
                           apply_controlled_ry_cascade, apply_inverse_qft, apply_qft, fidelity,
                           init_state, postselect, qft_matrix, ry_matrix)


def small_layout():
    return RegisterLayout((("anc", 1), ("A", 3), ("B0", 3)))


def random_state(layout, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(2**layout.total_qubits) + 1j * rng.standard_normal(2**layout.total_qubits)
    return StateVector.from_dense(layout, v / np.linalg.norm(v))


def dense_apply(U_full, state):
    return U_full @ state.to_dense()


class TestLayout:
    def test_poisson_layout(self):
        lay = RegisterLayout.poisson(b=24, n=27, M=8, d=2)
        assert lay.names == ("anc", "L", "C", "B0", "B1")
        assert lay.total_qubits == 1 + 24 + 27 + 2 * 4

    def test_index_round_trip(self):
        lay = small_layout()
        for idx in range(2**7):
            assert lay.compose_index(lay.decompose_index(idx)) == idx

    def test_duplicate_name(self):
        with pytest.raises(Exception):
            RegisterLayout((("A", 1), ("A", 2)))


class TestInit:
    def test_basis_input(self):
        lay = RegisterLayout.poisson(b=2, n=3, M=4, d=1)
        e = np.zeros(8)
        e[5] = 1
        st_ = init_state(lay, e)
        assert len(st_) == 1 and st_.column("B0").tolist() == [5]
        assert st_.column("C").tolist() == [0]

    def test_padded_u1(self):
        lay = RegisterLayout.poisson(b=2, n=3, M=4, d=1)
        rhs = RhsVector(analytic_eigenvector(1, 4), 4)
        st_ = init_state(lay, rhs.padded_layout)
        assert sorted(st_.column("B0").tolist()) == [5, 6, 7]

    def test_normalizes(self):
        lay = RegisterLayout((("B0", 3),))
        st_ = init_state(lay, np.arange(8.0))
        assert st_.norm() == pytest.approx(1)

    def test_zero(self):
        with pytest.raises(DegenerateInputError):
            init_state(RegisterLayout((("B0", 3),)), np.zeros(8))


class TestQft:
    def test_round_trip(self):
        lay = small_layout()
        st_ = random_state(lay, 0)
        ref = st_.to_dense()
        apply_inverse_qft(apply_qft(st_, "A"), "A")
        assert np.allclose(st_.to_dense(), ref, atol=1e-12)

    def test_zero_gives_uniform(self):
        lay = RegisterLayout((("A", 4),))
        st_ = apply_qft(StateVector.basis_state(lay), "A")
        assert np.allclose(st_.to_dense(), np.full(16, 0.25))

    def test_two_qubit_matrix(self):
        w = np.exp(2j * np.pi / 4)
        ref = np.array([[w ** (j * k) for k in range(4)] for j in range(4)]) / 2
        assert np.allclose(qft_matrix(2), ref)
        lay = RegisterLayout((("A", 2),))
        for k in range(4):
            st_ = apply_qft(StateVector.basis_state(lay, {"A": k}), "A")
            assert np.allclose(st_.to_dense(), ref[:, k])

    def test_register_inside_larger_state(self):
        lay = small_layout()
        st_ = random_state(lay, 1)
        full = np.kron(np.kron(np.eye(2), qft_matrix(3)), np.eye(8))
        expected = dense_apply(full, st_)
        assert np.allclose(apply_qft(st_, "A").to_dense(), expected, atol=1e-12)


class TestGates:
    def test_controlled_matrix_against_dense(self):
        lay = small_layout()
        st_ = random_state(lay, 2)
        ref = st_.to_dense()
        U = ry_matrix(0.7)
        st_.apply_matrix("B0", U, [1], controls=[("anc", 0, 1)])
        P1 = np.diag([0, 1])
        full = np.kron(np.eye(2) - P1, np.eye(64)) + np.kron(
            P1, np.kron(np.eye(8), np.kron(np.kron(np.eye(2), U), np.eye(2))))
        assert np.allclose(st_.to_dense(), full @ ref, atol=1e-12)

    def test_hadamard_all(self):
        lay = RegisterLayout((("A", 3),))
        st_ = StateVector.basis_state(lay).apply_hadamard_all("A")
        assert np.allclose(st_.to_dense(), np.full(8, 8**-0.5))

    def test_phase(self):
        lay = RegisterLayout((("A", 2),))
        st_ = StateVector.from_dense(lay, np.full(4, 0.5)).apply_phase(["A"], lambda a: np.pi * a / 2)
        assert np.allclose(st_.to_dense(), 0.5 * np.exp(1j * np.pi * np.arange(4) / 2))

    @given(st.integers(0, 10**6))
    def test_norm_preserved(self, seed):
        lay = small_layout()
        st_ = random_state(lay, seed)
        st_.apply_qft("A").apply_matrix("B0", ry_matrix(seed % 7), [0], controls=[("A", 2, 1)])
        st_.apply_basis_function(["A"], lambda a: (a + 3) % 8)
        assert st_.norm() == pytest.approx(1, abs=1e-12)


class TestBasisFunction:
    def test_identity(self):
        st_ = random_state(small_layout(), 3)
        ref = st_.to_dense()
        assert np.allclose(apply_basis_function(st_, ["A"], lambda a: a).to_dense(), ref)

    def test_increment_shifts(self):
        lay = RegisterLayout((("A", 3),))
        v = np.arange(1, 9, dtype=float)
        st_ = apply_basis_function(StateVector.from_dense(lay, v), ["A"], lambda a: (a + 1) % 8)
        assert np.allclose(st_.to_dense(), np.roll(v, 1))

    def test_not_injective(self):
        lay = RegisterLayout((("A", 3),))
        with pytest.raises(ContractViolation):
            StateVector.from_dense(lay, np.ones(8)).apply_basis_function(["A"], lambda a: 0)

    def test_newton_map_matches_kernel(self):
        # toy widths: v has 4 integer bits, 2 fractional bits; x has 8 bits
        lay = RegisterLayout((("V", 6), ("X", 8)))
        vals = np.zeros(64)
        vals[16:] = 1
        st_ = StateVector.from_register_vector(lay, ["V"], vals / np.linalg.norm(vals))

        def g(v):
            x = newton_inverse(FixedPoint(v, 2, 6), b=8, steps=3, E=16, C_d=1)
            return 0 if x is None else x.mantissa

        st_.apply_xor_function(["V"], "X", g)
        for v, x in st_.basis.tolist():
            assert x == g(v)
        st_.apply_xor_function(["V"], "X", g)
        assert st_.residual_weight(["X"]) == 0

    @given(st.permutations(list(range(8))))
    def test_inverse_composition_is_identity(self, perm):
        inv = {p: i for i, p in enumerate(perm)}
        st_ = random_state(small_layout(), 4)
        ref = st_.to_dense()
        st_.apply_basis_function(["A"], lambda a: perm[a]).apply_basis_function(["A"], lambda a: inv[a])
        assert np.allclose(st_.to_dense(), ref)


class TestRyCascade:
    def _target(self, theta_bits, frac):
        lay = RegisterLayout((("T", 3), ("anc", 1)))
        st_ = StateVector.basis_state(lay, {"T": theta_bits})
        apply_controlled_ry_cascade(st_, "T", "anc", frac)
        return st_.register_vector(["anc"], {"T": theta_bits})

    def test_zero_angle(self):
        assert np.allclose(self._target(0, 3), [1, 0])

    def test_half(self):
        assert np.allclose(self._target(0b100, 3), [np.cos(0.5), np.sin(0.5)])

    def test_three_quarters(self):
        assert np.allclose(self._target(0b110, 3), [np.cos(0.75), np.sin(0.75)])

    def test_superposition_brute_force(self):
        lay = RegisterLayout((("T", 3), ("anc", 1)))
        beta = np.random.default_rng(5).standard_normal(8)
        beta /= np.linalg.norm(beta)
        st_ = StateVector.from_register_vector(lay, ["T"], beta)
        apply_controlled_ry_cascade(st_, "T", "anc", 3)
        dense = st_.to_dense().reshape(8, 2)
        theta = np.arange(8) / 8
        assert np.allclose(dense[:, 0], beta * np.cos(theta), atol=1e-14)
        assert np.allclose(dense[:, 1], beta * np.sin(theta), atol=1e-14)

    def test_inverse_undoes(self):
        lay = RegisterLayout((("T", 3), ("anc", 1)))
        st_ = StateVector.from_register_vector(lay, ["T"], np.ones(8) / np.sqrt(8))
        apply_controlled_ry_cascade(st_, "T", "anc", 3)
        apply_controlled_ry_cascade(st_, "T", "anc", 3, inverse=True)
        assert st_.residual_weight(["anc"]) < 1e-28


class TestPostselect:
    def _product(self, a, b):
        lay = RegisterLayout((("anc", 1), ("A", 2)))
        phi = np.array([0.5, 0.5j, -0.5, 0.5])
        return StateVector.from_dense(lay, np.kron([a, b], phi)), phi

    def test_product_state(self):
        st_, phi = self._product(0.6, 0.8)
        p, out = postselect(st_, "anc", 0, 1)
        assert p == pytest.approx(0.64)
        assert np.allclose(out.register_vector(["A"], {"anc": 1}), phi)

    def test_probabilities_sum_to_one(self):
        st_ = random_state(small_layout(), 6)
        assert st_.qubit_probability("anc", 0, 0) + st_.qubit_probability("anc", 0, 1) == pytest.approx(1)

    def test_impossible_outcome(self):
        st_, _ = self._product(1.0, 0.0)
        with pytest.raises(PostselectionError):
            postselect(st_, "anc", 0, 1)


class TestRegisters:
    def test_drop_clean(self):
        st_ = random_state(small_layout(), 7).add_registers([("S", 4)])
        out = st_.drop_registers(["S"])
        assert out.layout.names == ("anc", "A", "B0")

    def test_drop_dirty(self):
        st_ = random_state(small_layout(), 7)
        with pytest.raises(ContractViolation):
            st_.drop_registers(["A"])

    def test_register_vector_entangled(self):
        with pytest.raises(ContractViolation):
            random_state(small_layout(), 8).register_vector(["B0"])

    def test_dumps(self, tmp_path):
        st_ = random_state(small_layout(), 9)
        st_.dump_json(tmp_path / "s.json")
        st_.dump_csv(tmp_path / "s.csv")
        assert (tmp_path / "s.csv").read_text().count("\n") == len(st_) + 1


class TestFidelity:
    def test_identical(self):
        v = np.random.default_rng(0).standard_normal(7)
        assert fidelity(v, 3 * v) == pytest.approx(1)

    def test_orthogonal(self):
        assert fidelity([1, 0], [0, 1]) == 0

    def test_sine_modes_embedded(self):
        pad = []
        for j in (1, 2):
            v = np.zeros(8)
            v[padded_indices(4, 1)] = analytic_eigenvector(j, 4)
            pad.append(v)
        assert fidelity(*pad) <= 1e-12
