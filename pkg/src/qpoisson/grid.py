"""Finite-difference discretization of the Poisson problem on the unit cube.

Nodes are ordered lexicographically over multi-indices ``(j_1, ..., j_d)``
with ``j_1`` most significant, so the discrete operator is literally the
Kronecker sum ``L⊗I⊗…⊗I + … + I⊗…⊗I⊗L`` scaled by ``h**-2``.

Throughout, "the Laplacian matrix" means the positive definite ``-Δ_h``.

The padded register layout used by the simulator gives each dimension
``m + 1`` qubits (``M = 2**m``); node index ``j`` in a dimension sits at
register value ``M + j`` (leading bit set).  A d-dimensional node maps to
``sum_k (M + j_k) * (2M)**(d-1-k)``.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator

from .errors import InvalidParameter, ResourceLimitError

__all__ = [
    "DENSE_LIMIT",
    "DiscreteLaplacian",
    "RhsVector",
    "build_Lh",
    "build_delta_h",
    "apply_delta_h",
    "analytic_eigenvalue",
    "analytic_eigenvector",
    "sine_matrix",
    "sample_rhs",
    "builtin_rhs",
    "load_rhs_csv",
    "rhs_from_source",
    "condition_number",
    "node_multi_indices",
    "padded_indices",
    "check_grid",
]

DENSE_LIMIT = 4096


def check_grid(M: int, d: int = 1) -> int:
    """Validate ``M`` (power of two, at least 2) and ``d``; return ``log2 M``."""
    if not isinstance(M, (int, np.integer)) or M < 2 or M & (M - 1):
        raise InvalidParameter(f"grid size M must be a power of two >= 2, got {M!r}")
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise InvalidParameter(f"dimension d must be a positive integer, got {d!r}")
    return int(M).bit_length() - 1


def build_Lh(M: int) -> np.ndarray:
    """The ``(M-1) x (M-1)`` second-difference matrix tridiag(-1, 2, -1)."""
    if M < 2:
        raise InvalidParameter(f"M must be >= 2, got {M}")
    n = M - 1
    return 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)


def build_delta_h(M: int, d: int) -> np.ndarray:
    """Dense ``-Δ_h = h**-2 * (Kronecker sum of d copies of L_h)``.

    Raises :class:`~qpoisson.errors.ResourceLimitError` above
    :data:`DENSE_LIMIT` unknowns; use :func:`apply_delta_h` there.
    """
    check_grid(M, d)
    N = (M - 1) ** d
    if N > DENSE_LIMIT:
        raise ResourceLimitError(
            f"(M-1)^d = {N} exceeds the dense limit {DENSE_LIMIT}; use apply_delta_h "
            "or DiscreteLaplacian(M, d).operator() for matrix-free application"
        )
    L = build_Lh(M)
    I = np.eye(M - 1)
    A = np.zeros((N, N))
    for k in range(d):
        term = np.ones((1, 1))
        for i in range(d):
            term = np.kron(term, L if i == k else I)
        A += term
    return A * M**2


def apply_delta_h(M: int, d: int, v: np.ndarray) -> np.ndarray:
    """Matrix-free ``-Δ_h v`` for a vector in lexicographic node order."""
    check_grid(M, d)
    n = M - 1
    grid = np.asarray(v).reshape((n,) * d)
    out = 2.0 * d * grid
    for axis in range(d):
        lo = [slice(None)] * d
        hi = [slice(None)] * d
        lo[axis], hi[axis] = slice(0, n - 1), slice(1, n)
        out[tuple(lo)] -= grid[tuple(hi)]
        out[tuple(hi)] -= grid[tuple(lo)]
    return (out * M**2).reshape(-1)


def _as_multi_index(j, d: int | None = None) -> tuple[int, ...]:
    if isinstance(j, (int, np.integer)):
        return (int(j),) * (d or 1)
    j = tuple(int(x) for x in j)
    if d is not None and len(j) != d:
        raise InvalidParameter(f"multi-index {j} does not have {d} components")
    return j


def analytic_eigenvalue(j, M: int) -> float:
    """``sum_k 4 M^2 sin^2(j_k pi / 2M)`` for a (multi-)index ``j``."""
    j = _as_multi_index(j)
    if any(not 1 <= jk <= M - 1 for jk in j):
        raise InvalidParameter(f"eigen-index {j} out of range 1..{M - 1}")
    return float(sum(4.0 * M**2 * math.sin(jk * math.pi / (2 * M)) ** 2 for jk in j))


def sine_matrix(M: int) -> np.ndarray:
    """Orthogonal, involutory ``S[i, j] = sqrt(2/M) sin(pi i j / M)``, ``i, j = 1..M-1``."""
    idx = np.arange(1, M)
    return math.sqrt(2.0 / M) * np.sin(np.pi * np.outer(idx, idx) / M)


def analytic_eigenvector(j, M: int) -> np.ndarray:
    """Unit eigenvector of ``-Δ_h`` for multi-index ``j`` (tensor of sine modes)."""
    j = _as_multi_index(j)
    if any(not 1 <= jk <= M - 1 for jk in j):
        raise InvalidParameter(f"eigen-index {j} out of range 1..{M - 1}")
    S = sine_matrix(M)
    vec = np.ones(1)
    for jk in j:
        vec = np.kron(vec, S[:, jk - 1])
    return vec


def node_multi_indices(M: int, d: int) -> np.ndarray:
    """``((M-1)^d, d)`` array of node multi-indices in lexicographic order."""
    return np.array(list(itertools.product(range(1, M), repeat=d)), dtype=np.int64).reshape(-1, d)


def padded_indices(M: int, d: int) -> np.ndarray:
    """Position of every node inside the ``(2M)^d`` padded register layout."""
    idx = node_multi_indices(M, d) + M
    weights = (2 * M) ** np.arange(d - 1, -1, -1, dtype=np.int64)
    return idx @ weights


def condition_number(M: int, d: int = 1) -> float:
    """``lambda_max / lambda_min`` of ``-Δ_h``; independent of ``d``."""
    check_grid(M, d)
    return analytic_eigenvalue((M - 1,) * d, M) / analytic_eigenvalue((1,) * d, M)


@dataclass(frozen=True)
class DiscreteLaplacian:
    """Grid parameters of ``-Δ_h`` with analytic spectrum access."""

    M: int
    d: int = 1

    def __post_init__(self):
        check_grid(self.M, self.d)

    @property
    def m(self) -> int:
        return self.M.bit_length() - 1

    @property
    def h(self) -> float:
        return 1.0 / self.M

    @property
    def N(self) -> int:
        return (self.M - 1) ** self.d

    def matrix(self) -> np.ndarray:
        return build_delta_h(self.M, self.d)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return apply_delta_h(self.M, self.d, v)

    def operator(self) -> LinearOperator:
        return LinearOperator((self.N, self.N), matvec=self.apply, dtype=float)

    def eigenvalue(self, j) -> float:
        return analytic_eigenvalue(_as_multi_index(j, self.d), self.M)

    def eigenvector(self, j) -> np.ndarray:
        return analytic_eigenvector(_as_multi_index(j, self.d), self.M)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """All eigenvalues, indexed like the nodes (lexicographic multi-index)."""
        one_d = 4.0 * self.M**2 * np.sin(np.arange(1, self.M) * np.pi / (2 * self.M)) ** 2
        total = np.zeros((self.M - 1,) * self.d)
        for axis in range(self.d):
            shape = [1] * self.d
            shape[axis] = self.M - 1
            total = total + one_d.reshape(shape)
        return total.reshape(-1)

    def to_eigenbasis(self, v: np.ndarray) -> np.ndarray:
        """Coefficients ``beta_j = <u_j|v>`` (sine transform along each axis)."""
        return _sine_apply(np.asarray(v), self.M, self.d)

    def from_eigenbasis(self, beta: np.ndarray) -> np.ndarray:
        return _sine_apply(np.asarray(beta), self.M, self.d)


def _sine_apply(v: np.ndarray, M: int, d: int) -> np.ndarray:
    S = sine_matrix(M)
    grid = v.reshape((M - 1,) * d)
    for axis in range(d):
        grid = np.moveaxis(np.tensordot(S, grid, axes=([1], [axis])), 0, axis)
    return grid.reshape(-1)


@dataclass(frozen=True)
class RhsVector:
    """Right-hand side sampled at the interior nodes."""

    values: np.ndarray
    M: int
    d: int = 1

    def __post_init__(self):
        check_grid(self.M, self.d)
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if vals.size != (self.M - 1) ** self.d:
            raise InvalidParameter(
                f"expected {(self.M - 1) ** self.d} node values, got {vals.size}"
            )
        object.__setattr__(self, "values", vals)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    @property
    def degenerate(self) -> bool:
        return self.norm == 0.0

    @property
    def padded_layout(self) -> np.ndarray:
        out = np.zeros((2 * self.M) ** self.d, dtype=complex)
        out[padded_indices(self.M, self.d)] = self.values
        return out


def sample_rhs(f: Callable[..., float], M: int, d: int = 1) -> RhsVector:
    """Evaluate ``f(x_1, ..., x_d)`` at every interior node ``x_k = j_k / M``."""
    check_grid(M, d)
    points = node_multi_indices(M, d) / M
    values = np.fromiter((f(*p) for p in points), dtype=float, count=len(points))
    return RhsVector(values, M, d)


def builtin_rhs(name: str, M: int, d: int = 1) -> RhsVector:
    """Named right-hand sides.

    ``sin-product``
        ``prod_k sin(pi x_k)``, proportional to the lowest mode.
    ``constant``
        ``f = 1``.
    ``eigenvector:J``
        the analytic eigenvector ``J`` (``"2"`` or ``"1,3"``); a single
        index is repeated over all dimensions.
    ``random:SEED``
        standard normal node values from ``numpy.random.default_rng(SEED)``.
    """
    check_grid(M, d)
    key, _, arg = name.partition(":")
    if key == "sin-product":
        return sample_rhs(lambda *x: float(np.prod(np.sin(np.pi * np.array(x)))), M, d)
    if key == "constant":
        return RhsVector(np.ones((M - 1) ** d), M, d)
    if key == "eigenvector":
        parts = [int(p) for p in arg.split(",") if p.strip()]
        if not parts:
            raise InvalidParameter("eigenvector rhs needs an index, e.g. eigenvector:1")
        j = tuple(parts) if len(parts) > 1 else parts[0]
        return RhsVector(analytic_eigenvector(_as_multi_index(j, d), M), M, d)
    if key == "random":
        rng = np.random.default_rng(int(arg) if arg else 0)
        return RhsVector(rng.standard_normal((M - 1) ** d), M, d)
    raise InvalidParameter(f"unknown builtin rhs {name!r}")


def load_rhs_csv(path: str | Path, M: int, d: int = 1) -> RhsVector:
    """Read node values (lexicographic order) from a CSV; all cells are flattened."""
    with open(path, newline="") as fh:
        cells = [c for row in csv.reader(fh) for c in row if c.strip()]
    try:
        values = [float(c) for c in cells]
    except ValueError as exc:
        raise InvalidParameter(f"non-numeric cell in {path}: {exc}") from None
    return RhsVector(np.array(values), M, d)


def rhs_from_source(source: str | Sequence[float] | np.ndarray | RhsVector,
                    M: int, d: int = 1) -> RhsVector:
    """Accept ``"csv:PATH"``, ``"builtin:NAME"``, a bare builtin name, or raw values."""
    if isinstance(source, RhsVector):
        return source
    if isinstance(source, str):
        if source.startswith("csv:"):
            return load_rhs_csv(source[4:], M, d)
        return builtin_rhs(source.removeprefix("builtin:"), M, d)
    return RhsVector(np.asarray(source, dtype=float), M, d)
