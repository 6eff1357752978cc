"""Sparse state-vector simulator over a named register stack.

The pipeline touches up to ~100 qubits but, because arithmetic stages act
as permutations of basis states and phase estimation is exact, only a
handful of basis states ever carry amplitude.  A :class:`StateVector`
therefore stores a table of occupied basis states (one integer column per
register) next to their amplitudes, rather than a dense ``2**Q`` array.

Conventions
-----------
* Registers are listed most significant first; the global basis index
  concatenates them in layout order.
* Inside a register, qubit ``0`` is the most significant bit.
* QFT kernel is ``exp(+2 pi i j k / 2**w) / sqrt(2**w)``; the inverse QFT
  is its adjoint.
* ``R_y(phi) = [[cos(phi/2), -sin(phi/2)], [sin(phi/2), cos(phi/2)]]``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ContractViolation, DegenerateInputError, InvalidParameter, PostselectionError

__all__ = [
    "RegisterLayout",
    "StateVector",
    "init_state",
    "apply_qft",
    "apply_inverse_qft",
    "apply_controlled_ry_cascade",
    "apply_basis_function",
    "postselect",
    "fidelity",
    "ry_matrix",
    "qft_matrix",
    "PRUNE_TOL",
    "MAX_REGISTER_WIDTH",
]

PRUNE_TOL = 1e-14
MAX_REGISTER_WIDTH = 62
POSTSELECT_FLOOR = 1e-15

Control = tuple  # (register name, qubit index, required bit value)


def ry_matrix(phi: float) -> np.ndarray:
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def qft_matrix(width: int) -> np.ndarray:
    dim = 1 << width
    jk = np.outer(np.arange(dim), np.arange(dim))
    return np.exp(2j * np.pi * jk / dim) / np.sqrt(dim)


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered ``(name, width)`` pairs."""

    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        regs = tuple((str(n), int(w)) for n, w in self.registers)
        names = [n for n, _ in regs]
        if len(set(names)) != len(names):
            raise InvalidParameter(f"duplicate register names in {names}")
        for n, w in regs:
            if not 0 < w <= MAX_REGISTER_WIDTH:
                raise InvalidParameter(
                    f"register {n!r} width {w} outside 1..{MAX_REGISTER_WIDTH}"
                )
        object.__setattr__(self, "registers", regs)

    @classmethod
    def poisson(cls, b: int, n: int, M: int, d: int) -> "RegisterLayout":
        """``anc | L (b) | C (n) | B0 .. B{d-1} (m+1 each)``."""
        m = M.bit_length() - 1
        return cls((("anc", 1), ("L", b), ("C", n)) + tuple((f"B{k}", m + 1) for k in range(d)))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.registers)

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(w for _, w in self.registers)

    @property
    def total_qubits(self) -> int:
        return sum(self.widths)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InvalidParameter(f"no register named {name!r} in {self.names}") from None

    def width(self, name: str) -> int:
        return self.registers[self.index(name)][1]

    def with_registers(self, extra: Iterable[tuple[str, int]]) -> "RegisterLayout":
        return RegisterLayout(self.registers + tuple(extra))

    def without(self, names: Iterable[str]) -> "RegisterLayout":
        drop = set(names)
        return RegisterLayout(tuple(r for r in self.registers if r[0] not in drop))

    def compose_index(self, values: Sequence[int]) -> int:
        """Global basis index of one row of register values."""
        idx = 0
        for (_, w), v in zip(self.registers, values):
            idx = (idx << w) | int(v)
        return idx

    def decompose_index(self, index: int) -> tuple[int, ...]:
        out = []
        for _, w in reversed(self.registers):
            out.append(index & ((1 << w) - 1))
            index >>= w
        if index:
            raise InvalidParameter("index exceeds the layout's qubit count")
        return tuple(reversed(out))


def _unique_rows(rows: np.ndarray):
    """Unique rows (lexicographic) and the inverse map, via ``np.lexsort``."""
    K, R = rows.shape
    if R == 0 or K == 0:
        return rows[:min(K, 1)], np.zeros(K, dtype=np.int64)
    if R == 1:
        uniq, inv = np.unique(rows[:, 0], return_inverse=True)
        return uniq[:, None], inv.reshape(-1)
    order = np.lexsort(rows.T[::-1])
    srt = rows[order]
    new = np.empty(K, dtype=bool)
    new[0] = True
    new[1:] = np.any(srt[1:] != srt[:-1], axis=1)
    group = np.cumsum(new) - 1
    inv = np.empty(K, dtype=np.int64)
    inv[order] = group
    return srt[new], inv


class StateVector:
    """Sparse amplitudes over a :class:`RegisterLayout`.

    ``basis`` has shape ``(K, R)`` (register values per occupied row) and
    ``amps`` shape ``(K,)``.  Rows are kept unique; amplitudes below
    :data:`PRUNE_TOL` are dropped after every gate.  The state is not
    renormalized implicitly.
    """

    def __init__(self, layout: RegisterLayout, basis: np.ndarray, amps: np.ndarray,
                 *, compact: bool = True):
        self.layout = layout
        self.basis = np.asarray(basis, dtype=np.int64).reshape(-1, len(layout.registers))
        self.amps = np.asarray(amps, dtype=complex).reshape(-1)
        if self.basis.shape[0] != self.amps.shape[0]:
            raise InvalidParameter("basis and amplitude tables differ in length")
        if compact:
            self._compact()

    # construction -------------------------------------------------------
    @classmethod
    def basis_state(cls, layout: RegisterLayout, values: Mapping[str, int] | None = None):
        row = np.zeros((1, len(layout.registers)), dtype=np.int64)
        for name, v in (values or {}).items():
            w = layout.width(name)
            if not 0 <= v < 1 << w:
                raise InvalidParameter(f"value {v} does not fit register {name!r} ({w} qubits)")
            row[0, layout.index(name)] = v
        return cls(layout, row, np.ones(1))

    @classmethod
    def from_register_vector(cls, layout: RegisterLayout, names: Sequence[str],
                             vector: np.ndarray, fixed: Mapping[str, int] | None = None):
        """Amplitudes ``vector`` over the joint value of ``names`` (first most significant)."""
        vector = np.asarray(vector, dtype=complex).reshape(-1)
        widths = [layout.width(n) for n in names]
        if vector.size != 1 << sum(widths):
            raise InvalidParameter(f"vector length {vector.size} != 2**{sum(widths)}")
        nz = np.flatnonzero(vector)
        rows = np.zeros((nz.size, len(layout.registers)), dtype=np.int64)
        rem = nz.astype(np.int64)
        for n, w in zip(reversed(names), reversed(widths)):
            rows[:, layout.index(n)] = rem & ((1 << w) - 1)
            rem = rem >> w
        for n, v in (fixed or {}).items():
            rows[:, layout.index(n)] = v
        return cls(layout, rows, vector[nz])

    @classmethod
    def from_dense(cls, layout: RegisterLayout, vector: np.ndarray):
        return cls.from_register_vector(layout, layout.names, vector)

    def copy(self) -> "StateVector":
        return StateVector(self.layout, self.basis.copy(), self.amps.copy(), compact=False)

    # bookkeeping ----------------------------------------------------------
    def _compact(self) -> None:
        if self.basis.shape[0] > 1:
            uniq, inv = _unique_rows(self.basis)
            if uniq.shape[0] != self.basis.shape[0]:
                amps = np.zeros(uniq.shape[0], dtype=complex)
                np.add.at(amps, inv, self.amps)
                self.basis, self.amps = uniq, amps
        keep = np.abs(self.amps) > PRUNE_TOL
        if not keep.all():
            self.basis, self.amps = self.basis[keep], self.amps[keep]

    def __len__(self) -> int:
        return self.amps.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.layout.total_qubits

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0:
            raise DegenerateInputError("cannot normalize the zero state")
        return StateVector(self.layout, self.basis, self.amps / nrm, compact=False)

    def column(self, name: str) -> np.ndarray:
        return self.basis[:, self.layout.index(name)]

    def _mask(self, controls: Sequence[Control] | None) -> np.ndarray:
        mask = np.ones(len(self), dtype=bool)
        for reg, qubit, bit in controls or ():
            w = self.layout.width(reg)
            if not 0 <= qubit < w:
                raise InvalidParameter(f"qubit {qubit} outside register {reg!r}")
            mask &= ((self.column(reg) >> (w - 1 - qubit)) & 1) == int(bit)
        return mask

    # gates -----------------------------------------------------------------
    def apply_matrix(self, register: str, U: np.ndarray, qubits: Sequence[int] | None = None,
                     controls: Sequence[Control] | None = None) -> "StateVector":
        """Apply ``U`` to ``qubits`` of ``register`` (all of it by default).

        ``U`` is indexed by the value of the selected qubits, first listed
        qubit most significant.  ``controls`` are ``(register, qubit, bit)``.
        """
        return self._apply_group_map(register, qubits, controls,
                                     lambda D: D @ np.asarray(U, dtype=complex).T,
                                     np.shape(U))

    def _apply_group_map(self, register, qubits, controls, op, shape=None):
        col = self.layout.index(register)
        w = self.layout.width(register)
        qubits = list(range(w)) if qubits is None else [int(q) for q in qubits]
        k = len(qubits)
        if len(set(qubits)) != k or any(not 0 <= q < w for q in qubits):
            raise InvalidParameter(f"bad qubit list {qubits} for register {register!r}")
        if shape is not None and tuple(shape) != (1 << k, 1 << k):
            raise InvalidParameter(f"matrix shape {shape} does not match {k} qubits")
        for reg, q, _ in controls or ():
            if reg == register and q in qubits:
                raise InvalidParameter("control qubit overlaps the targets")
        active = self._mask(controls)
        if not active.any():
            return self
        shifts = [w - 1 - q for q in qubits]
        sub = self.basis[active]
        vals = sub[:, col]
        tv = np.zeros_like(vals)
        clear = 0
        for pos, sh in enumerate(shifts):
            tv |= ((vals >> sh) & 1) << (k - 1 - pos)
            clear |= 1 << sh
        rest = sub.copy()
        rest[:, col] = vals & ~clear
        uniq, inv = _unique_rows(rest)
        D = np.zeros((uniq.shape[0], 1 << k), dtype=complex)
        D[inv, tv] = self.amps[active]
        out = op(D)
        g, u = np.nonzero(np.abs(out) > PRUNE_TOL)
        new = uniq[g].copy()
        spread = np.zeros_like(u)
        for pos, sh in enumerate(shifts):
            spread |= ((u >> (k - 1 - pos)) & 1) << sh
        new[:, col] |= spread
        self.basis = np.concatenate([self.basis[~active], new])
        self.amps = np.concatenate([self.amps[~active], out[g, u]])
        self._compact()
        return self

    def apply_qft(self, register: str, inverse: bool = False,
                  controls: Sequence[Control] | None = None) -> "StateVector":
        """QFT (kernel ``e^{+}``) on a whole register via FFT."""
        fn = np.fft.fft if inverse else np.fft.ifft
        return self._apply_group_map(register, None, controls,
                                     lambda D: fn(D, axis=1, norm="ortho"))

    def apply_hadamard_all(self, register: str) -> "StateVector":
        """Walsh-Hadamard on every qubit of ``register``."""
        w = self.layout.width(register)
        H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        for q in range(w):
            self.apply_matrix(register, H, [q])
        return self

    def apply_phase(self, registers: Sequence[str], phase: Callable[..., float],
                    controls: Sequence[Control] | None = None) -> "StateVector":
        """Multiply each row by ``exp(i * phase(*values))`` (values of ``registers``)."""
        active = self._mask(controls)
        if not active.any():
            return self
        cols = [self.layout.index(r) for r in registers]
        keys, inv = _unique_rows(self.basis[active][:, cols])
        ph = np.array([phase(*(int(x) for x in row)) for row in keys], dtype=float)
        amps = self.amps.copy()
        amps[active] *= np.exp(1j * ph[inv])
        self.amps = amps
        return self

    def apply_basis_function(self, registers: Sequence[str],
                             f: Callable[..., Sequence[int]],
                             controls: Sequence[Control] | None = None) -> "StateVector":
        """Permute basis states: values of ``registers`` ``x -> f(*x)``.

        ``f`` must be injective on the occupied rows; a collision raises
        :class:`~qpoisson.errors.ContractViolation`.
        """
        active = self._mask(controls)
        if not active.any():
            return self
        cols = [self.layout.index(r) for r in registers]
        widths = [self.layout.width(r) for r in registers]
        keys, inv = _unique_rows(self.basis[active][:, cols])
        mapped = np.empty_like(keys)
        for i, row in enumerate(keys):
            out = f(*(int(x) for x in row))
            out = (out,) if isinstance(out, (int, np.integer)) else tuple(out)
            if len(out) != len(cols):
                raise ContractViolation("basis function returned the wrong number of registers")
            for c, (v, w) in enumerate(zip(out, widths)):
                if not 0 <= int(v) < 1 << w:
                    raise ContractViolation(f"basis function output {v} overflows {w} qubits")
                mapped[i, c] = int(v)
        new = self.basis.copy()
        sub = new[active]
        sub[:, cols] = mapped[inv]
        new[active] = sub
        if _unique_rows(new)[0].shape[0] != new.shape[0]:
            raise ContractViolation("basis function is not injective on the occupied subspace")
        self.basis = new
        return self

    def apply_xor_function(self, sources: Sequence[str], target: str,
                           g: Callable[..., int],
                           controls: Sequence[Control] | None = None) -> "StateVector":
        """``|x>|y> -> |x>|y XOR g(x)>``: reversible for any ``g``."""
        if target in sources:
            raise InvalidParameter("target register cannot be a source")
        regs = list(sources) + [target]

        def f(*vals):
            return tuple(vals[:-1]) + (vals[-1] ^ int(g(*vals[:-1])),)

        return self.apply_basis_function(regs, f, controls)

    # registers ---------------------------------------------------------------
    def add_registers(self, extra: Iterable[tuple[str, int]]) -> "StateVector":
        """Append registers initialized to ``|0>``."""
        layout = self.layout.with_registers(extra)
        pad = np.zeros((len(self), len(layout.registers) - len(self.layout.registers)),
                       dtype=np.int64)
        return StateVector(layout, np.concatenate([self.basis, pad], axis=1), self.amps,
                           compact=False)

    def drop_registers(self, names: Iterable[str], tol: float = 1e-10) -> "StateVector":
        """Remove registers that are back in ``|0>``.

        Weight on nonzero values above ``tol`` raises
        :class:`~qpoisson.errors.ContractViolation`.
        """
        names = list(names)
        cols = [self.layout.index(n) for n in names]
        dirty = np.any(self.basis[:, cols] != 0, axis=1)
        leak = float(np.sum(np.abs(self.amps[dirty]) ** 2))
        if leak > tol:
            raise ContractViolation(f"registers {names} not clean: residual weight {leak:.3e}")
        keep = [i for i in range(len(self.layout.registers)) if i not in cols]
        return StateVector(self.layout.without(names), self.basis[~dirty][:, keep],
                           self.amps[~dirty])

    def residual_weight(self, names: Iterable[str]) -> float:
        """Squared norm carried by nonzero values of ``names``."""
        cols = [self.layout.index(n) for n in names]
        dirty = np.any(self.basis[:, cols] != 0, axis=1)
        return float(np.sum(np.abs(self.amps[dirty]) ** 2))

    # measurement -------------------------------------------------------------
    def qubit_probability(self, register: str, qubit: int, outcome: int) -> float:
        mask = self._mask([(register, qubit, outcome)])
        return float(np.sum(np.abs(self.amps[mask]) ** 2)) / self.norm() ** 2

    def postselect(self, register: str, qubit: int, outcome: int):
        """``(probability, collapsed normalized state)``."""
        nrm2 = self.norm() ** 2
        if nrm2 == 0:
            raise DegenerateInputError("zero state")
        mask = self._mask([(register, qubit, outcome)])
        p = float(np.sum(np.abs(self.amps[mask]) ** 2)) / nrm2
        if p < POSTSELECT_FLOOR:
            raise PostselectionError(
                f"outcome {outcome} on {register}[{qubit}] has probability {p:.3e}"
            )
        out = StateVector(self.layout, self.basis[mask], self.amps[mask], compact=False)
        return p, out.normalized()

    def register_distribution(self, register: str) -> dict[int, float]:
        col = self.column(register)
        probs = np.abs(self.amps) ** 2 / self.norm() ** 2
        out: dict[int, float] = {}
        for v, p in zip(col.tolist(), probs.tolist()):
            out[v] = out.get(v, 0.0) + p
        return dict(sorted(out.items()))

    def register_vector(self, names: Sequence[str], fixed: Mapping[str, int] | None = None,
                        tol: float = 1e-10) -> np.ndarray:
        """Dense amplitudes over ``names`` with every other register pinned.

        Other registers must take the values in ``fixed`` (default 0) on all
        but ``tol`` of the weight; otherwise the registers are entangled and
        a :class:`~qpoisson.errors.ContractViolation` is raised.
        """
        fixed = dict(fixed or {})
        others = [n for n in self.layout.names if n not in names]
        match = np.ones(len(self), dtype=bool)
        for n in others:
            match &= self.column(n) == fixed.get(n, 0)
        leak = float(np.sum(np.abs(self.amps[~match]) ** 2))
        if leak > tol:
            raise ContractViolation(f"registers outside {list(names)} carry weight {leak:.3e}")
        widths = [self.layout.width(n) for n in names]
        if sum(widths) > 30:
            raise InvalidParameter("requested dense vector exceeds 2**30 entries")
        idx = np.zeros(int(match.sum()), dtype=np.int64)
        for n, w in zip(names, widths):
            idx = (idx << w) | self.column(n)[match]
        out = np.zeros(1 << sum(widths), dtype=complex)
        out[idx] = self.amps[match]
        return out

    def to_dense(self) -> np.ndarray:
        return self.register_vector(self.layout.names)

    def global_indices(self) -> list[int]:
        return [self.layout.compose_index(row) for row in self.basis.tolist()]

    # dumps -------------------------------------------------------------------
    def amplitude_table(self) -> list[tuple[int, float, float]]:
        rows = sorted(zip(self.global_indices(), self.amps.real.tolist(), self.amps.imag.tolist()))
        return [(i, re, im) for i, re, im in rows]

    def dump_json(self, path) -> None:
        payload = {
            "registers": [list(r) for r in self.layout.registers],
            "amplitudes": [{"index": i, "re": re, "im": im} for i, re, im in self.amplitude_table()],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)

    def dump_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "re", "im"])
            w.writerows(self.amplitude_table())


# module-level helpers ---------------------------------------------------------

def init_state(layout: RegisterLayout, regb_amplitudes: np.ndarray) -> StateVector:
    """Registers ``B0..`` hold the (normalized) padded vector, the rest ``|0>``."""
    vec = np.asarray(regb_amplitudes, dtype=complex).reshape(-1)
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        raise DegenerateInputError("right-hand side is the zero vector")
    bnames = [n for n in layout.names if n.startswith("B")]
    return StateVector.from_register_vector(layout, bnames, vec / nrm)


def apply_qft(state: StateVector, register: str) -> StateVector:
    return state.apply_qft(register)


def apply_inverse_qft(state: StateVector, register: str) -> StateVector:
    return state.apply_qft(register, inverse=True)


def apply_controlled_ry_cascade(state: StateVector, angle_register: str, target: str,
                                frac_bits: int, target_qubit: int = 0,
                                inverse: bool = False) -> StateVector:
    """One controlled ``R_y(2 * weight)`` per angle qubit.

    Qubit ``i`` of the angle register has weight ``2**(width-1-i-frac_bits)``,
    so the composite turns ``|0>`` into ``cos(theta)|0> + sin(theta)|1>``.
    """
    w = state.layout.width(angle_register)
    order = range(w - 1, -1, -1) if inverse else range(w)
    for i in order:
        weight = 2.0 ** (w - 1 - i - frac_bits)
        U = ry_matrix(-2 * weight if inverse else 2 * weight)
        state.apply_matrix(target, U, [target_qubit], controls=[(angle_register, i, 1)])
    return state


def apply_basis_function(state: StateVector, registers: Sequence[str], f) -> StateVector:
    return state.apply_basis_function(registers, f)


def postselect(state: StateVector, register: str, qubit: int, outcome: int):
    return state.postselect(register, qubit, outcome)


def fidelity(a, b) -> float:
    """``|<a|b>|^2 / (|a|^2 |b|^2)`` for dense vectors of equal length."""
    a = np.asarray(a, dtype=complex).reshape(-1)
    b = np.asarray(b, dtype=complex).reshape(-1)
    if a.shape != b.shape:
        raise InvalidParameter(f"length mismatch {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise DegenerateInputError("fidelity with a zero vector")
    return float(min(1.0, abs(np.vdot(a, b)) ** 2 / (na * nb) ** 2))
