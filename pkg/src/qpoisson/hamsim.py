"""Hamiltonian simulation of the grid Laplacian on padded registers.

Each dimension owns an ``(m+1)``-qubit register ``B{k}`` whose node block
is the values ``M+1 .. 2M-1`` (leading bit set, node ``j`` at ``M + j``).
On that block the sandwich ``G = T_M^† F_{2M} T_M`` acts as ``-i S`` with
``S`` the sine transform, which diagonalizes ``L_h``.

``exp(i h^-2 L̂_h γ)`` with ``γ = 2π 2^t / E`` is applied either

* ``mode="circuit"``: ``G``, then the ESA eigenvalue ``ℓ_j`` computed into a
  scratch register, shifted by ``2^t`` with a CNOT fan, turned into a phase
  by per-qubit phase gates, uncomputed, then ``G`` again and a ``-1`` on the
  node block (the two sandwiches contribute ``(-i)^2``);
* ``mode="oracle"``: one ``2M x 2M`` matrix, ``S diag(e^{iγℓ}) S`` on the
  node block and identity elsewhere.

``F_{2M}`` is the DFT with kernel ``exp(-2πi jk/2M)``, i.e. the inverse
QFT.  Phases are reduced modulo ``2π`` in exact integer arithmetic: the
phase of node ``j`` is ``2π ((ℓ_j 2^ν 2^t) mod 2^n) / 2^n``.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import InvalidParameter, LayoutViolation
from .grid import check_grid, sine_matrix
from .kernels import EsaParams, ell_table
from .qsim import RegisterLayout, StateVector

__all__ = [
    "MODES",
    "LAYOUT_TOL",
    "build_TM",
    "build_D",
    "build_pi",
    "dft_matrix",
    "sandwich_matrix",
    "sine_transform_block",
    "apply_sandwich",
    "apply_exp_Lh",
    "apply_exp_delta",
    "controlled_exp_delta",
    "times_power_of_two",
    "phase_kickback",
    "check_layout",
    "node_phases",
    "operator_matrix",
]

MODES = ("circuit", "oracle")
LAYOUT_TOL = 1e-10
SCRATCH = ("ell", "ell_shift")


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise InvalidParameter(f"mode must be one of {MODES}, got {mode!r}")


def build_D(M: int) -> np.ndarray:
    """Leading-qubit mix ``[[1, i], [1, -i]] / sqrt 2`` applied only when ``x != 0``."""
    check_grid(M)
    D = np.eye(2 * M, dtype=complex)
    r = 1 / math.sqrt(2)
    for x in range(1, M):
        lo, hi = x, M + x
        D[lo, lo], D[lo, hi] = r, 1j * r
        D[hi, lo], D[hi, hi] = r, -1j * r
    return D


def build_pi(M: int) -> np.ndarray:
    """Two's complement of the low ``m`` bits, controlled by the leading qubit."""
    check_grid(M)
    P = np.zeros((2 * M, 2 * M))
    for x in range(M):
        P[x, x] = 1
        P[M + (-x) % M, M + x] = 1
    return P


def build_TM(M: int) -> np.ndarray:
    """``T_M``: ``|0x> -> (|0x> + |1x'>)/√2``, ``|1x> -> i(|0x> - |1x'>)/√2``.

    ``x' = M - x``; the two ``x = 0`` states are fixed.  Equals
    ``build_pi(M) @ build_D(M)`` (``D`` acts first).
    """
    check_grid(M)
    T = np.zeros((2 * M, 2 * M), dtype=complex)
    r = 1 / math.sqrt(2)
    T[0, 0] = T[M, M] = 1
    for x in range(1, M):
        xp = M - x
        T[x, x], T[M + xp, x] = r, r
        T[x, M + x], T[M + xp, M + x] = 1j * r, -1j * r
    return T


def dft_matrix(N: int) -> np.ndarray:
    """Unitary DFT, kernel ``exp(-2πi jk/N) / sqrt N``."""
    jk = np.outer(np.arange(N), np.arange(N))
    return np.exp(-2j * np.pi * jk / N) / math.sqrt(N)


def sandwich_matrix(M: int) -> np.ndarray:
    T = build_TM(M)
    return T.conj().T @ dft_matrix(2 * M) @ T


def sine_transform_block(M: int) -> np.ndarray:
    """Node block (rows/cols ``M+1 .. 2M-1``) of the sandwich; equals ``-i S``."""
    return sandwich_matrix(M)[M + 1:, M + 1:]


def check_layout(state: StateVector, registers: Sequence[str], tol: float = LAYOUT_TOL) -> None:
    """Raise :class:`LayoutViolation` when any ``B`` register leaves its node block."""
    bad = np.zeros(len(state), dtype=bool)
    for reg in registers:
        M = 1 << (state.layout.width(reg) - 1)
        v = state.column(reg)
        bad |= (v <= M)
    weight = float(np.sum(np.abs(state.amps[bad]) ** 2))
    if weight > tol:
        raise LayoutViolation(f"weight {weight:.3e} outside the node block of {list(registers)}")


def node_phases(params: EsaParams, t: int) -> np.ndarray:
    """Phase angles ``2π ((ℓ_j 2^ν 2^t) mod 2^n) / 2^n`` for ``j = 0..M-1``."""
    n = params.n
    table = ell_table(params.M, params.nu, params.s)
    mod = 1 << n
    return np.array([2 * math.pi * ((ell << t) % mod) / mod for ell in table])


def _controls(control) -> list:
    return [] if control is None else [(control[0], control[1], 1)]


def apply_sandwich(state: StateVector, register: str, adjoint: bool = False) -> StateVector:
    """``T^† F T`` on one padded register, gate by gate: ``D``, ``π``, ``F``, ``π``, ``D^†``."""
    M = 1 << (state.layout.width(register) - 1)
    D = build_D(M)
    twos = _twos_complement_map(M)
    state.apply_matrix(register, D)
    state.apply_basis_function([register], twos)
    # F is the inverse QFT; its adjoint is the QFT
    state.apply_qft(register, inverse=not adjoint)
    state.apply_basis_function([register], twos)
    state.apply_matrix(register, D.conj().T)
    return state


def _twos_complement_map(M: int):
    def f(v: int) -> int:
        return M + (-(v - M)) % M if v >= M else v
    return f


def times_power_of_two(state: StateVector, source: str, target: str, t: int) -> StateVector:
    """CNOT fan ``target[i + t] ^= source[i]``: ``|k>|0> -> |k>|k 2^t mod 2^n>``."""
    if t < 0:
        raise InvalidParameter("shift must be nonnegative")
    w = state.layout.width(target)
    mask = (1 << w) - 1
    return state.apply_xor_function([source], target, lambda k: (k << t) & mask)


def phase_kickback(state: StateVector, register: str, control=None, sign: int = 1,
                   per_qubit: bool = True) -> StateVector:
    """Imprint ``exp(sign 2πi m / 2^w)`` on value ``m`` of ``register``.

    ``per_qubit=True`` applies one phase gate ``diag(1, e^{±2πi 2^i/2^w})``
    per qubit (weight ``2^i``); otherwise a single diagonal.
    """
    w = state.layout.width(register)
    ctl = _controls(control)
    if not per_qubit:
        return state.apply_phase([register], lambda m: sign * 2 * math.pi * m / (1 << w), ctl)
    for q in range(w):
        i = w - 1 - q
        phi = sign * 2 * math.pi * ((1 << i) / (1 << w))
        state.apply_matrix(register, np.diag([1.0, np.exp(1j * phi)]), [q], ctl)
    return state


def _oracle_block(params: EsaParams, t: int, adjoint: bool) -> np.ndarray:
    M = params.M
    S = sine_matrix(M)
    ph = node_phases(params, t)[1:]
    U = np.eye(2 * M, dtype=complex)
    U[M + 1:, M + 1:] = (S * np.exp((-1j if adjoint else 1j) * ph)) @ S
    return U


def apply_exp_Lh(state: StateVector, dim_index: int, t: int, params: EsaParams,
                 mode: str = "circuit", control=None, adjoint: bool = False,
                 check: bool = True) -> StateVector:
    """``exp(±i h^-2 L̂_h 2π 2^t / E)`` on register ``B{dim_index}``.

    ``control`` is an optional ``(register, qubit)``.
    """
    _check_mode(mode)
    if not 0 <= t < params.n:
        raise InvalidParameter(f"t={t} outside 0..{params.n - 1}")
    reg = f"B{dim_index}"
    if state.layout.width(reg) != params.m + 1:
        raise InvalidParameter(f"register {reg} does not have m+1 = {params.m + 1} qubits")
    if check:
        check_layout(state, [reg])
    if mode == "oracle":
        state.apply_matrix(reg, _oracle_block(params, t, adjoint), controls=_controls(control))
    else:
        _circuit_exp_Lh(state, reg, t, params, control, adjoint)
    if check:
        check_layout(state, [reg])
    return state


def _circuit_exp_Lh(state, reg, t, params, control, adjoint):
    M, n = params.M, params.n
    table = ell_table(M, params.nu, params.s)

    def ell_of(v: int) -> int:
        return table[v - M] if v > M else 0

    sign = -1 if adjoint else 1
    apply_sandwich(state, reg, adjoint)
    st = state.add_registers([(SCRATCH[0], n), (SCRATCH[1], n)])
    st.apply_xor_function([reg], SCRATCH[0], ell_of)
    times_power_of_two(st, SCRATCH[0], SCRATCH[1], t)
    phase_kickback(st, SCRATCH[1], control, sign)
    times_power_of_two(st, SCRATCH[0], SCRATCH[1], t)
    st.apply_xor_function([reg], SCRATCH[0], ell_of)
    st = st.drop_registers(SCRATCH)
    state.layout, state.basis, state.amps = st.layout, st.basis, st.amps
    apply_sandwich(state, reg, adjoint)
    # (-i)^2 from the two sandwiches
    state.apply_phase([reg], lambda v: math.pi if v > M else 0.0)


def apply_exp_delta(state: StateVector, t: int, params: EsaParams, mode: str = "circuit",
                    control=None, adjoint: bool = False, check: bool = True) -> StateVector:
    """Tensor product of :func:`apply_exp_Lh` over all ``d`` dimensions."""
    for k in range(params.d):
        apply_exp_Lh(state, k, t, params, mode, control, adjoint, check)
    return state


def controlled_exp_delta(state: StateVector, control_qubit: int, t: int, params: EsaParams,
                         mode: str = "circuit", register: str = "C",
                         adjoint: bool = False) -> StateVector:
    """:func:`apply_exp_delta` conditioned on qubit ``control_qubit`` of ``register``."""
    return apply_exp_delta(state, t, params, mode, (register, control_qubit), adjoint)


def operator_matrix(params: EsaParams, t: int, mode: str = "circuit",
                    controlled: bool = False, adjoint: bool = False) -> np.ndarray:
    """Dense matrix of the simulated operator on the node block.

    Columns are indexed by node (lexicographic multi-index); with
    ``controlled`` a leading control qubit doubles the dimension.  All
    columns are pushed through the simulator at once via a batch register.
    """
    M, d = params.M, params.d
    N = (M - 1) ** d
    nodes = np.array(np.meshgrid(*[np.arange(1, M)] * d, indexing="ij")).reshape(d, -1).T
    n_ctl = 2 if controlled else 1
    cols = N * n_ctl
    bw = max(1, (cols - 1).bit_length())
    layout = RegisterLayout((("ctl", 1), ("batch", bw))
                            + tuple((f"B{k}", params.m + 1) for k in range(d)))
    rows = np.zeros((cols, 2 + d), dtype=np.int64)
    rows[:, 1] = np.arange(cols)
    rows[:, 0] = np.arange(cols) // N
    rows[:, 2:] = np.tile(nodes + M, (n_ctl, 1))
    st = StateVector(layout, rows, np.ones(cols))
    apply_exp_delta(st, t, params, mode, ("ctl", 0) if controlled else None, adjoint)
    check_layout(st, [f"B{k}" for k in range(d)])
    weights = (M - 1) ** np.arange(d - 1, -1, -1)
    out_node = (st.basis[:, 2:] - M - 1) @ weights
    out = np.zeros((cols, cols), dtype=complex)
    out[st.basis[:, 0] * N + out_node, st.basis[:, 1]] = st.amps
    return out
