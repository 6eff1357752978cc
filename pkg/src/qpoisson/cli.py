"""``qpoisson`` command line: ``solve``, ``verify-bounds``, ``simulate-ham``.

Exit codes: 0 success, 1 usage or parameter error (or a failed check),
2 post-selection failure in sampling mode.  Settings resolve as flags over
a ``--config`` file (flat ``key=value`` lines, ``#`` comments) over built-in
defaults.  Output is deterministic for identical inputs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BOUND_ALIASES, BOUND_NAMES, verify_bounds
from .classical_ref import dense_expm
from .errors import PostselectionError, QPoissonError
from .grid import (DENSE_LIMIT, build_delta_h, build_Lh, padded_indices, rhs_from_source,
                   sine_matrix)
from .hamsim import (MODES, apply_exp_delta, operator_matrix, sandwich_matrix,
                     sine_transform_block)
from .kernels import derive_params
from .qsim import RegisterLayout, StateVector
from .solver import PE_STRATEGIES, SolverConfig, repeat_until_success, solve

__all__ = ["main", "build_parser", "read_config"]

SOLVE_DEFAULTS = {
    "dim": 1,
    "eps": 1e-2,
    "mode": "circuit",
    "rhs": "builtin:sin-product",
    "strategy": "auto",
    "seed": 0,
    "max_trials": 10_000,
}


HAM_CHECKS = ("sine-block", "eq20", "tensor", "modes")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def read_config(path: str | Path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _int_range(text: str) -> list[int]:
    """``"6..14"``, ``"4,8,16"`` or ``"10"``."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qpoisson", description="Quantum Poisson solver simulator")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="run the full pipeline and write a JSON result")
    s.add_argument("--config", help="key=value settings file")
    s.add_argument("--dim", type=int)
    s.add_argument("--grid", type=int, help="grid divisions M (power of two)")
    s.add_argument("--eps", type=float)
    s.add_argument("--mode", choices=MODES)
    s.add_argument("--rhs", help="csv:PATH or builtin:NAME")
    s.add_argument("--strategy", choices=PE_STRATEGIES)
    s.add_argument("--seed", type=int)
    for name in ("nu", "b", "s", "q", "n"):
        s.add_argument(f"--{name}", type=int, help=f"override {name}")
    s.add_argument("--sample", action="store_true",
                   help="also draw post-selection trials until success")
    s.add_argument("--max-trials", type=int)
    s.add_argument("--out", help="output path (default: stdout)")

    v = sub.add_parser("verify-bounds", help="check kernel error bounds, CSV output")
    v.add_argument("--only", help=f"comma-separated subset of {','.join(BOUND_NAMES)} "
                   f"(or the aliases {','.join(BOUND_ALIASES)})")
    v.add_argument("--grid", default="4,8,16", help="grid sizes, e.g. 4,8,16")
    v.add_argument("--nu", default="6..14", help="accuracy exponents, e.g. 6..14")
    v.add_argument("--dims", default="1,2,3")
    v.add_argument("--trials", type=int, default=1000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--jobs", type=int, default=1)
    v.add_argument("--out", help="CSV path (default: stdout)")

    h = sub.add_parser("simulate-ham", help="apply the simulated exponential to a vector")
    h.add_argument("--grid", type=int, required=True)
    h.add_argument("--dim", type=int, default=1)
    h.add_argument("--t", type=int, default=0)
    h.add_argument("--eps", type=float, default=1e-2)
    h.add_argument("--nu", type=int)
    h.add_argument("--mode", default="circuit", choices=MODES)
    h.add_argument("--vector", default="builtin:sin-product",
                   help="node values: csv:PATH or builtin:NAME")
    h.add_argument("--dense", action="store_true", help="include the operator (M <= 8)")
    h.add_argument("--check", action="append", choices=HAM_CHECKS, default=[],
                   help="identity checks to run (repeatable); eq20 is an alias of sine-block")
    h.add_argument("--out", help="output path (default: stdout)")
    return p


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _complex_list(vec) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(vec, dtype=complex)]


def _cmd_solve(args) -> int:
    cfg = dict(SOLVE_DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for key, val in vars(args).items():
        if val is not None and key not in ("command", "config", "out", "sample"):
            cfg[key] = val
    if "grid" not in cfg:
        raise UsageError("--grid is required (flag or config file)")
    overrides = {k: int(cfg[k]) for k in ("nu", "b", "s", "q", "n") if k in cfg}
    config = SolverConfig(
        M=int(cfg["grid"]), d=int(cfg["dim"]), eps=float(cfg["eps"]), rhs=str(cfg["rhs"]),
        mode=str(cfg["mode"]), seed=int(cfg["seed"]), overrides=overrides,
        strategy=str(cfg["strategy"]),
    )
    result = solve(config)
    payload = result.to_dict()
    code = 0
    if args.sample or str(cfg.get("sample", "")).lower() in ("1", "true", "yes"):
        outcome = repeat_until_success(config, int(cfg["max_trials"]), result=result)
        payload["sampling"] = {"success": outcome.success, "trials": outcome.trials,
                               "max_trials": int(cfg["max_trials"]), "seed": config.seed}
        if not outcome.success:
            code = 2
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return code


def _cmd_verify(args) -> int:
    names = BOUND_NAMES if not args.only else [x.strip() for x in args.only.split(",")]
    rows = verify_bounds(names, Ms=_int_range(args.grid), nus=_int_range(args.nu),
                         ds=_int_range(args.dims), trials=args.trials, seed=args.seed,
                         jobs=args.jobs)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bound", "params", "measured_error", "proven_bound", "pass"])
    w.writerows(r.as_csv_row() for r in rows)
    _emit(buf.getvalue(), args.out)
    return 0 if all(r.passed for r in rows) else 1


def _ham_checks(params, checks) -> dict:
    M, d = params.M, params.d
    out = {}
    for name in ("sine-block", "eq20"):
        if name in checks:
            # node block of the conjugated Fourier transform against -i S
            block = sine_transform_block(M)
            err = float(np.abs(block + 1j * sine_matrix(M)).max())
            full = sandwich_matrix(M)
            off = max(float(np.abs(full[M + 1:, :M + 1]).max()),
                      float(np.abs(full[:M + 1, M + 1:]).max()))
            out[name] = {"max_error": err, "off_block": off,
                         "pass": err <= 1e-12 and off <= 1e-12}
    if "tensor" in checks:
        if (M - 1) ** d > DENSE_LIMIT:
            raise UsageError("tensor check needs (M-1)^d <= dense limit")
        gamma = 2 * np.pi / params.E
        full = dense_expm(build_delta_h(M, d), gamma)
        one = dense_expm(build_Lh(M) * M * M, gamma)
        kron = np.ones((1, 1))
        for _ in range(d):
            kron = np.kron(kron, one)
        err_exact = float(np.abs(full - kron).max())
        sim = operator_matrix(params, 0, "oracle")
        # one dimension with the same E, so the same γ
        one_sim = operator_matrix(replace(params, d=1), 0, "oracle")
        kron_sim = np.ones((1, 1))
        for _ in range(d):
            kron_sim = np.kron(kron_sim, one_sim)
        err_sim = float(np.abs(sim - kron_sim).max())
        out["tensor"] = {"exact_max_error": err_exact, "simulated_max_error": err_sim,
                         "pass": err_exact <= 1e-10 and err_sim <= 1e-10}
    if "modes" in checks:
        worst = 0.0
        for t in range(params.n):
            a = operator_matrix(params, t, "circuit")
            b = operator_matrix(params, t, "oracle")
            worst = max(worst, float(np.abs(a - b).max()))
        out["modes"] = {"max_error": worst, "pass": worst <= 1e-10}
    return out


def _cmd_ham(args) -> int:
    params = derive_params(args.eps, args.grid, args.dim, nu=args.nu)
    if not 0 <= args.t < params.n:
        raise UsageError(f"--t must lie in 0..{params.n - 1}")
    M, d = params.M, params.d
    vec = rhs_from_source(args.vector, M, d)
    layout = RegisterLayout(tuple((f"B{k}", params.m + 1) for k in range(d)))
    st = StateVector.from_register_vector(layout, layout.names, vec.padded_layout)
    apply_exp_delta(st, args.t, params, args.mode)
    output = st.register_vector(layout.names)[padded_indices(M, d)]
    payload = {
        "params": params.as_dict(),
        "t": args.t,
        "mode": args.mode,
        "input": [float(x) for x in vec.values],
        "output": _complex_list(output),
        "checks": _ham_checks(params, args.check),
    }
    if args.dense:
        if M > 8:
            raise UsageError("--dense is limited to M <= 8")
        payload["operator"] = [_complex_list(row) for row in operator_matrix(params, args.t,
                                                                             args.mode)]
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0 if all(c["pass"] for c in payload["checks"].values()) else 1


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors, --help, --version
        return exc.code if isinstance(exc.code, int) else 1
    handler = {"solve": _cmd_solve, "verify-bounds": _cmd_verify,
               "simulate-ham": _cmd_ham}[args.command]
    try:
        return handler(args)
    except PostselectionError as exc:
        print(f"qpoisson: post-selection failed: {exc}", file=sys.stderr)
        return 2
    except (UsageError, QPoissonError, ValueError, OSError) as exc:
        print(f"qpoisson: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
