"""End-to-end quantum Poisson solve on the sparse simulator.

Pipeline on ``anc | L (b) | C (n) | B0..B{d-1}`` plus a temporary angle
register ``theta`` (``q + 1`` qubits):

1. load the padded right-hand side into the ``B`` registers;
2. phase estimation of ``exp(2πi (-Δ̂_h) / E)`` into ``C``, which then holds
   ``k = λ̂ 2^ν`` exactly;
3. ``L ^= x̂``, the Newton reciprocal of ``v = λ̂ / C_d`` (zero on the guard);
4. ``theta ^= arcsin(x̂)`` by bisection, then a controlled-``R_y`` cascade
   rotates ``anc`` to ``cos θ |0> + sin θ |1>``;
5. uncompute ``theta``, ``L`` and the phase estimation;
6. post-select ``anc = 1``.

``x̂ = 1 / v = C_d / λ̂`` is already the rotation amplitude, so the decimal
point is tracked statically and no extra arithmetic is needed.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy.linalg import schur

from .classical_ref import direct_solve
from .errors import ContractViolation, DegenerateInputError, InvalidParameter
from .fixedpoint import FixedPoint
from .grid import check_grid, padded_indices, rhs_from_source
from .hamsim import MODES, check_layout, controlled_exp_delta, operator_matrix
from .kernels import EsaParams, bisect_arcsin, derive_params, ell_table, newton_inverse
from .qsim import RegisterLayout, StateVector, apply_controlled_ry_cascade, init_state

__all__ = [
    "SolverConfig",
    "SolverResult",
    "TrialOutcome",
    "SpectralData",
    "parameters",
    "error_budget",
    "resource_estimate",
    "reciprocal_of_register",
    "rotation_angle",
    "node_eigen_values",
    "spectral_data",
    "phase_estimation",
    "inverse_phase_estimation",
    "solve",
    "repeat_until_success",
    "PE_STRATEGIES",
    "LADDER_MAX_N",
]

PE_STRATEGIES = ("auto", "ladder", "spectral")
LADDER_MAX_N = 10
UNCOMPUTE_TOL = 1e-10
LEAKAGE_TOL = 1e-10


def parameters(eps: float, M: int, d: int = 1, **overrides) -> EsaParams:
    """Derived precision parameters (see :func:`qpoisson.kernels.derive_params`)."""
    return derive_params(eps, M, d, **overrides)


def error_budget(params: EsaParams) -> float:
    """``17 E / 2^ν + ε0² + ε1²``."""
    return 17 * params.E / 2.0**params.nu + params.eps0**2 + params.eps1**2


# ---------------------------------------------------------------------------
# resource model

def _esa_ops(nu: int, s: int) -> int:
    # nu + 7 complex squarings, 3 s-bit multiplications each, s^2 gates apiece
    return (nu + 7) * 3 * s * s


def _sandwich_ops(w: int) -> int:
    qft = w * (w + 1) // 2
    return qft + 2 * (2 * w) + 2 * (w * w)  # F, two D's, two controlled negations


def resource_estimate(params: EsaParams) -> dict[str, Any]:
    """Qubit tally and gate-count model for one run of the pipeline.

    Costs (gate counts, compute plus uncompute where applicable):

    * ``hamsim``: per dimension two sine-transform sandwiches on ``m+1``
      qubits, two ESA evaluations and, for each of the ``n`` controls, an
      ``n``-gate shift in each direction plus ``n`` phase gates;
    * ``qft``: Hadamards and inverse QFT on ``C``;
    * ``newton``: ``steps`` iterations of two ``b``-bit multiplications and
      one addition;
    * ``rotation``: ``bisect_steps`` ESA sines in ``q``-bit arithmetic with a
      ``q``-bit comparison each, plus the ``q+1`` controlled rotations.

    The phase estimation and the arithmetic stages run twice (compute and
    uncompute).
    """
    p = params
    w = p.m + 1
    ham_dim = 2 * _sandwich_ops(w) + 2 * _esa_ops(p.nu, p.s) + p.n * (3 * p.n)
    hamsim = p.d * ham_dim
    qft = p.n + p.n * (p.n + 1) // 2
    newton = p.newton_steps * (2 * p.b * p.b + p.b)
    bisect = p.bisect_steps * (_esa_ops(p.nu_rot, p.q) + p.q)
    operations = 2 * (hamsim + qft) + 2 * newton + 2 * bisect + (p.q + 1)
    layout_qubits = 1 + p.b + p.n + p.d * w
    scratch = {
        "theta": p.q + 1,
        "eigenvalue_registers": p.d * 2 * p.n,
        "esa_workspace": p.d * 2 * (p.s + 1) * (p.nu + 8),
        "newton_workspace": (p.newton_steps + 1) * p.b,
        "bisection_workspace": p.bisect_steps * (p.q + 1) + 2 * (p.q + 1) * (p.nu_rot + 8),
    }
    return {
        "layout_qubits": layout_qubits,
        "scratch_qubits": scratch,
        "qubits": layout_qubits + sum(scratch.values()),
        "operations": operations,
        "breakdown": {
            "hamsim": 2 * hamsim,
            "qft": 2 * qft,
            "newton": 2 * newton,
            "rotation": 2 * bisect + (p.q + 1),
        },
    }


# ---------------------------------------------------------------------------
# arithmetic stages

def reciprocal_of_register(k: int, params: EsaParams) -> FixedPoint | None:
    """Newton reciprocal of ``v = k / 2^(ν + log2 C_d) = λ̂ / C_d``; ``None`` on the guard."""
    v = FixedPoint(k, params.v_frac_bits, params.n)
    return newton_inverse(v, b=params.b, steps=params.newton_steps, E=params.E,
                          C_d=params.C_d)


def rotation_angle(x: FixedPoint | None, params: EsaParams) -> FixedPoint | None:
    """Bisection arcsine of the rotation amplitude ``x̂ = C_d / λ̂``."""
    if x is None or x.mantissa == 0:
        return None
    bound = 0.25 + params.eps0**2
    if float(x) > bound:
        raise ContractViolation(f"rotation amplitude {float(x)} exceeds 1/4")
    return bisect_arcsin(x, params)


def node_eigen_values(params: EsaParams) -> list[dict[str, Any]]:
    """Per node (lexicographic): ``k``, ``x̂``, ``θ`` and ``sin θ``."""
    M, d = params.M, params.d
    table = ell_table(M, params.nu, params.s)
    out = []
    for js in np.ndindex(*(M - 1,) * d):
        k = sum(table[j + 1] for j in js)
        x = reciprocal_of_register(k, params)
        th = rotation_angle(x, params)
        out.append({
            "index": tuple(j + 1 for j in js),
            "k": k,
            "x": x,
            "theta": th,
            "sin_theta": 0.0 if th is None else math.sin(float(th)),
        })
    return out


# ---------------------------------------------------------------------------
# phase estimation

@dataclass
class SpectralData:
    """Eigen-decomposition of the simulated operator and exact readout amplitudes."""

    vectors: np.ndarray  # columns: eigenvectors over the node block
    k: np.ndarray  # decoded register value per eigenvector
    readout: np.ndarray  # amplitude of |k> after the ladder and inverse QFT

    @property
    def leakage(self) -> float:
        return float(np.max(1 - np.abs(self.readout) ** 2))


_SPECTRAL_CACHE: dict = {}


def _split_by_phase(phases: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group indices whose phases (radians) agree within ``tol`` on the circle."""
    order = np.argsort(phases)
    p = phases[order]
    gaps = np.diff(np.concatenate([p, [p[0] + 2 * np.pi]]))
    start = (int(np.argmax(gaps)) + 1) % len(p)  # cut at the widest gap
    order, gaps = np.roll(order, -start), np.roll(gaps, -start)
    groups, cur = [], [order[0]]
    for i in range(1, len(order)):
        if gaps[i - 1] > tol:
            groups.append(np.array(cur))
            cur = []
        cur.append(order[i])
    groups.append(np.array(cur))
    return groups


def spectral_data(params: EsaParams, mode: str = "circuit") -> SpectralData:
    """Diagonalize the simulated ``exp(2πi (-Δ̂_h) 2^t / E)`` for all ``t``.

    The eigenbasis is refined power by power: clusters of eigenvalues that
    coincide at ``t`` are re-diagonalized with the ``t + 1`` operator, whose
    phase gaps are twice as large.  For each eigenvector the phases ``φ_t``
    are measured and the register value ``k`` is decoded bit by bit; the
    readout amplitude is the exact phase-estimation kernel
    ``∏_t (1 + e^{2πi(φ_t - k 2^t / 2^n)}) / 2``.
    """
    key = (params, mode)
    if key in _SPECTRAL_CACHE:
        return _SPECTRAL_CACHE[key]
    n = params.n
    mats = [operator_matrix(params, t, mode) for t in range(n)]
    N = mats[0].shape[0]
    V = np.eye(N, dtype=complex)
    clusters = [np.arange(N)]
    for U in mats:
        refined = []
        for c in clusters:
            if len(c) == 1:
                refined.append(c)
                continue
            R = V[:, c].conj().T @ U @ V[:, c]
            T, W = schur(R, output="complex")
            V[:, c] = V[:, c] @ W
            refined.extend(c[g] for g in _split_by_phase(np.angle(np.diag(T)), 1e-6))
        clusters = refined
    phases = np.empty((n, N))
    for t, U in enumerate(mats):
        diag = np.einsum("be,bc,ce->e", V.conj(), U, V)
        resid = np.linalg.norm(U @ V - V * diag, axis=0).max()
        if resid > 1e-8:
            raise ContractViolation(f"eigenvectors not shared by power 2^{t} (residual {resid:.2e})")
        phases[t] = np.angle(diag) / (2 * np.pi)
    ks = np.zeros(V.shape[1], dtype=object)
    readout = np.ones(V.shape[1], dtype=complex)
    for e in range(V.shape[1]):
        k = 0
        for t in range(n - 1, -1, -1):
            j = n - 1 - t  # bits of k already known
            known = k / 2.0 ** (j + 1)
            bit = int(round(2 * ((phases[t, e] - known) % 1.0))) % 2
            k |= bit << j
        ks[e] = k
        for t in range(n):
            shift = ((k << t) % (1 << n)) / 2.0**n
            readout[e] *= (1 + np.exp(2j * np.pi * (phases[t, e] - shift))) / 2
    data = SpectralData(V, ks, readout)
    _SPECTRAL_CACHE[key] = data
    return data


def _node_index(state: StateVector, params: EsaParams) -> np.ndarray:
    M, d = params.M, params.d
    idx = np.zeros(len(state), dtype=np.int64)
    for k in range(d):
        idx = idx * (M - 1) + (state.column(f"B{k}") - M - 1)
    return idx


def _group_other(state: StateVector, exclude: list[str]):
    cols = [i for i, n in enumerate(state.layout.names) if n not in exclude]
    rest = state.basis[:, cols]
    if rest.shape[1] == 0:
        return np.zeros((1, 0), dtype=np.int64), np.zeros(len(state), dtype=np.int64), cols
    uniq, inv = np.unique(rest, axis=0, return_inverse=True)
    return uniq, inv.reshape(-1), cols


def _spectral_forward(state: StateVector, params: EsaParams, mode: str) -> StateVector:
    data = spectral_data(params, mode)
    if data.leakage > LEAKAGE_TOL:
        raise ContractViolation(f"phase estimation leaks {data.leakage:.2e} off the exact readout")
    if np.any(state.column("C") != 0):
        raise ContractViolation("phase register must start in |0>")
    bnames = [f"B{k}" for k in range(params.d)]
    check_layout(state, bnames)
    N = data.vectors.shape[0]
    uniq, inv, cols = _group_other(state, bnames)
    psi = np.zeros((uniq.shape[0], N), dtype=complex)
    psi[inv, _node_index(state, params)] = state.amps
    coeff = (psi @ data.vectors.conj()) * data.readout  # (G, eigen)
    return _rebuild(state, params, uniq, cols, coeff, data, "C", data.k)


def _rebuild(state, params, uniq, cols, coeff, data, creg, kvals):
    """Rows ``(group, C = kvals[e], B = node)`` with amplitude ``coeff[g, e] V[node, e]``."""
    G, Ne = coeff.shape
    amp = coeff[:, :, None] * data.vectors.T[None, :, :]  # (G, e, node)
    g, e, node = np.nonzero(np.abs(amp) > 1e-15)
    M, d = params.M, params.d
    rows = np.zeros((g.size, len(state.layout.names)), dtype=np.int64)
    rows[:, cols] = uniq[g]
    cidx = state.layout.index(creg)
    rows[:, cidx] = np.array([int(kvals[x]) for x in e], dtype=np.int64)
    rem = node.astype(np.int64)
    for k in range(d - 1, -1, -1):
        rows[:, state.layout.index(f"B{k}")] = rem % (M - 1) + M + 1
        rem //= (M - 1)
    return StateVector(state.layout, rows, amp[g, e, node])


def _spectral_inverse(state: StateVector, params: EsaParams, mode: str) -> StateVector:
    data = spectral_data(params, mode)
    bnames = [f"B{k}" for k in range(params.d)]
    check_layout(state, bnames)
    N = data.vectors.shape[0]
    uniq, inv, cols = _group_other(state, bnames)  # groups include C
    cpos = cols.index(state.layout.index("C"))
    psi = np.zeros((uniq.shape[0], N), dtype=complex)
    psi[inv, _node_index(state, params)] = state.amps
    coeff = psi @ data.vectors.conj()
    kvec = np.array([int(x) for x in data.k], dtype=object)
    match = np.array([[kvec[e] == int(uniq[gi, cpos]) for e in range(len(kvec))]
                      for gi in range(uniq.shape[0])], dtype=bool).reshape(uniq.shape[0], -1)
    leak = float(np.sum(np.abs(coeff[~match]) ** 2))
    if leak > LEAKAGE_TOL:
        raise ContractViolation(
            f"phase register not correlated with the eigenbasis (weight {leak:.2e})"
        )
    coeff = np.where(match, coeff * data.readout.conj(), 0)
    uniq = uniq.copy()
    uniq[:, cpos] = 0
    zeros = np.zeros(len(kvec), dtype=np.int64)
    return _rebuild(state, params, uniq, cols, coeff, data, "C", zeros)


def _resolve_strategy(strategy: str, params: EsaParams) -> str:
    if strategy not in PE_STRATEGIES:
        raise InvalidParameter(f"phase estimation strategy must be one of {PE_STRATEGIES}")
    if strategy == "auto":
        return "ladder" if params.n <= LADDER_MAX_N else "spectral"
    return strategy


def phase_estimation(state: StateVector, params: EsaParams, mode: str = "circuit",
                     strategy: str = "auto") -> StateVector:
    """Write ``k = λ̂ 2^ν`` into register ``C``.

    ``ladder`` runs Hadamards, the controlled powers (control ``t`` on
    qubit ``n-1-t``) and the inverse QFT gate by gate; its state holds
    ``2^n`` rows midway, so it is only practical for small ``n``.
    ``spectral`` applies the same unitary through the eigen-decomposition
    of the simulated operator (see :func:`spectral_data`).
    """
    strategy = _resolve_strategy(strategy, params)
    if strategy == "spectral":
        return _spectral_forward(state, params, mode)
    state.apply_hadamard_all("C")
    for t in range(params.n):
        controlled_exp_delta(state, params.n - 1 - t, t, params, mode)
    return state.apply_qft("C", inverse=True)


def inverse_phase_estimation(state: StateVector, params: EsaParams, mode: str = "circuit",
                             strategy: str = "auto") -> StateVector:
    strategy = _resolve_strategy(strategy, params)
    if strategy == "spectral":
        return _spectral_inverse(state, params, mode)
    state.apply_qft("C")
    for t in range(params.n - 1, -1, -1):
        controlled_exp_delta(state, params.n - 1 - t, t, params, mode, adjoint=True)
    return state.apply_hadamard_all("C")


# ---------------------------------------------------------------------------
# solve

@dataclass
class SolverConfig:
    M: int
    d: int = 1
    eps: float = 1e-2
    rhs: Any = "builtin:sin-product"
    mode: str = "circuit"
    seed: int | None = None
    overrides: dict = field(default_factory=dict)
    strategy: str = "auto"

    def __post_init__(self):
        check_grid(self.M, self.d)
        if self.mode not in MODES:
            raise InvalidParameter(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.strategy not in PE_STRATEGIES:
            raise InvalidParameter(f"strategy must be one of {PE_STRATEGIES}")

    def params(self) -> EsaParams:
        return parameters(self.eps, self.M, self.d, **self.overrides)

    def describe(self) -> dict:
        rhs = self.rhs if isinstance(self.rhs, str) else "array"
        return {"M": self.M, "d": self.d, "eps": self.eps, "rhs": rhs, "mode": self.mode,
                "seed": self.seed, "overrides": dict(sorted(self.overrides.items())),
                "strategy": self.strategy}


@dataclass
class SolverResult:
    config: dict
    params: dict
    success_probability: float
    solution_state: np.ndarray  # normalized, node order, phase aligned
    classical_solution: np.ndarray
    fidelity: float
    predicted_error_bound: float
    measured_error: float
    unnormalized_error: float
    uncompute_residual: float
    resources: dict
    strategy: str

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items()
               if k not in ("solution_state", "classical_solution")}
        out["solution"] = [[i, [float(z.real), float(z.imag)]]
                           for i, z in enumerate(self.solution_state)]
        out["classical_solution"] = [float(x) for x in self.classical_solution]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _theta_map(params: EsaParams):
    cache: dict[int, int] = {}

    def g(x_mant: int) -> int:
        if x_mant not in cache:
            th = rotation_angle(FixedPoint(x_mant, params.b, params.b), params)
            cache[x_mant] = 0 if th is None else th.mantissa
        return cache[x_mant]
    return g


def _inv_map(params: EsaParams):
    cache: dict[int, int] = {}

    def g(k: int) -> int:
        if k not in cache:
            x = reciprocal_of_register(k, params)
            cache[k] = 0 if x is None else x.mantissa
        return cache[k]
    return g


def run_pipeline(config: SolverConfig):
    """Steps 1-5; returns ``(state, params, uncompute_residual, strategy)``."""
    params = config.params()
    rhs = rhs_from_source(config.rhs, config.M, config.d)
    if rhs.degenerate:
        raise DegenerateInputError("right-hand side is the zero vector")
    strategy = _resolve_strategy(config.strategy, params)
    layout = RegisterLayout.poisson(params.b, params.n, params.M, params.d)
    state = init_state(layout, rhs.padded_layout)
    state = phase_estimation(state, params, config.mode, strategy)
    inv, theta = _inv_map(params), _theta_map(params)
    state.apply_xor_function(["C"], "L", inv)
    state = state.add_registers([("theta", params.q + 1)])
    state.apply_xor_function(["L"], "theta", theta)
    apply_controlled_ry_cascade(state, "theta", "anc", params.q)
    state.apply_xor_function(["L"], "theta", theta)
    state = state.drop_registers(["theta"])
    state.apply_xor_function(["C"], "L", inv)
    state = inverse_phase_estimation(state, params, config.mode, strategy)
    residual = state.residual_weight(["L", "C"])
    if residual > UNCOMPUTE_TOL:
        raise ContractViolation(f"uncomputation left weight {residual:.3e} in L and C")
    state = state.drop_registers(["L", "C"])
    return state, params, residual, strategy, rhs


def solve(config: SolverConfig) -> SolverResult:
    state, params, residual, strategy, rhs = run_pipeline(config)
    M, d = params.M, params.d
    bnames = [f"B{k}" for k in range(d)]
    prob, post = state.postselect("anc", 0, 1)
    raw = post.register_vector(bnames, fixed={"anc": 1})[padded_indices(M, d)]
    # unnormalized branch amplitude, divided by C_d, approximates (-Δ_h)^-1 f / |f|
    branch = raw * math.sqrt(prob) / params.C_d
    classical = direct_solve(M, d, rhs)
    target = classical / rhs.norm
    phase = np.vdot(raw, classical)
    align = phase / abs(phase) if abs(phase) > 0 else 1.0
    sol = raw * align
    sol_n = sol / np.linalg.norm(sol)
    cls_n = classical / np.linalg.norm(classical)
    fid = float(min(1.0, abs(np.vdot(sol_n, cls_n)) ** 2))
    return SolverResult(
        config=config.describe(),
        params=params.as_dict(),
        success_probability=prob,
        solution_state=sol_n,
        classical_solution=classical,
        fidelity=fid,
        predicted_error_bound=error_budget(params),
        measured_error=float(np.linalg.norm(sol_n - cls_n)),
        unnormalized_error=float(np.linalg.norm(branch * align - target)),
        uncompute_residual=residual,
        resources=resource_estimate(params),
        strategy=strategy,
    )


@dataclass
class TrialOutcome:
    success: bool
    trials: int
    probability: float
    result: SolverResult | None


def repeat_until_success(config: SolverConfig, max_trials: int = 10_000,
                         seed: int | None = None,
                         result: SolverResult | None = None) -> TrialOutcome:
    """Bernoulli trials with the post-selection probability until outcome 1.

    ``result`` reuses an earlier :func:`solve`; the random stream comes from
    ``seed`` (default: ``config.seed``).
    """
    if max_trials < 1:
        raise InvalidParameter("max_trials must be positive")
    result = solve(config) if result is None else result
    p = result.success_probability
    rng = np.random.default_rng(config.seed if seed is None else seed)
    for trial in range(1, max_trials + 1):
        if rng.random() < p:
            return TrialOutcome(True, trial, p, result)
    return TrialOutcome(False, max_trials, p, None)
