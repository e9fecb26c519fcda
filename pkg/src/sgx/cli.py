"""Command-line driver: run, verify and sweep experiment files.

Exit codes: 0 success, 1 parse/validation problem (bad file, bad flags,
bad network), 2 runtime failure (including failed verify assertions),
3 verify invoked on a topology it is not defined for.  The selected report
is the only thing written to standard output; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .dsl import (
    ExperimentSpec,
    ParseError,
    SourceDecl,
    SplitterDecl,
    parse_experiment,
    resolve_source_state,
)
from .network import (
    MONTE_CARLO,
    NetworkError,
    RunResult,
    build_network,
    propagate_expectation,
    propagate_monte_carlo,
)
from .quantum import Hamiltonian, Observable
from .report import render_report, render_sweep
from .verify import TopologyMismatch, verify_experiment

_SEED_LIMIT = 1 << 64


class CliError(Exception):
    """Invalid invocation or input; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise CliError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="sgx", description="cascaded spin-measurement beam networks")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_mode=True):
        if with_mode:
            p.add_argument("--mode", choices=["expectation", "montecarlo"],
                           default="expectation")
            p.add_argument("--seed", type=int, default=0,
                           help="Monte Carlo seed (64-bit unsigned)")
            p.add_argument("--particles", type=int, default=None,
                           help="override the source particle count")
            p.add_argument("--threads", type=int, default=None,
                           help="Monte Carlo worker threads (default: all cores; "
                                "SGX_THREADS is the fallback)")
            p.add_argument("--format", choices=["table", "csv", "json"], default="table")
        p.add_argument("--out", default=None, help="write the report to a file")

    run_p = sub.add_parser("run", help="execute an experiment and print a report")
    run_p.add_argument("input", help="path to an .sgx experiment file")
    add_common(run_p)

    verify_p = sub.add_parser("verify", help="check the bundled-cascade expected values")
    verify_p.add_argument("input", help="path to an .sgx experiment file")
    add_common(verify_p, with_mode=False)

    sweep_p = sub.add_parser("sweep", help="rerun an experiment across a parameter range")
    sweep_p.add_argument("input", help="path to an .sgx experiment file")
    sweep_p.add_argument("--param", required=True,
                         help="'alpha' or 'time:<splitter>'")
    sweep_p.add_argument("--range", required=True, nargs=3, type=float,
                         metavar=("START", "STOP", "STEPS"))
    add_common(sweep_p)
    return parser


def _read_spec(path_text: str) -> ExperimentSpec:
    path = Path(path_text)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path_text!r}: {exc}") from None
    try:
        return parse_experiment(text)
    except ParseError as exc:
        raise CliError(f"{path_text}: {exc}") from None


def _resolve_threads(arg: int | None) -> int | None:
    if arg is None:
        env = os.environ.get("SGX_THREADS")
        if env:
            try:
                arg = int(env)
            except ValueError:
                raise CliError(f"SGX_THREADS must be an integer, got {env!r}") from None
        else:
            return None
    if arg < 1:
        raise CliError("thread count must be >= 1")
    return arg


def _check_seed(seed: int) -> int:
    if not 0 <= seed < _SEED_LIMIT:
        raise CliError("seed must be a 64-bit unsigned integer")
    return seed


def _execute(spec: ExperimentSpec, args) -> RunResult:
    net = build_network(spec)
    if args.mode == "montecarlo":
        return propagate_monte_carlo(net, _check_seed(args.seed), args.particles,
                                     threads=_resolve_threads(args.threads))
    return propagate_expectation(net, args.particles)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def apply_sweep_param(spec: ExperimentSpec, param: str, value: float) -> ExperimentSpec:
    """Return a copy of the spec with one swept parameter applied.

    Sweeping ``alpha`` rescales the Hamiltonian by ``value / alpha`` so the
    declared matrix keeps its proportionality to the declared coupling;
    ``time:<splitter>`` restamps one splitter.  Ground-state sources are
    re-resolved against the modified Hamiltonian.
    """
    if param == "alpha":
        if spec.alpha == 0:
            raise CliError("cannot sweep alpha: the experiment declares alpha 0")
        scale = value / spec.alpha
        hamiltonian = Hamiltonian(Observable("hamiltonian", spec.hamiltonian.matrix * scale),
                                  hbar=spec.hbar, alpha=value)
        devices = tuple(
            replace(d, state=resolve_source_state(d.state_decl, spec.dim, hamiltonian))
            if isinstance(d, SourceDecl) and d.state_decl == "ground" else d
            for d in spec.devices)
        return replace(spec, alpha=value, hamiltonian=hamiltonian, devices=devices)
    if param.startswith("time:"):
        name = param[len("time:"):]
        if not any(isinstance(d, SplitterDecl) and d.name == name for d in spec.devices):
            raise CliError(f"sweep parameter names unknown splitter {name!r}")
        devices = tuple(
            replace(d, time=value) if isinstance(d, SplitterDecl) and d.name == name else d
            for d in spec.devices)
        return replace(spec, devices=devices)
    raise CliError(f"sweep parameter must be 'alpha' or 'time:<splitter>', got {param!r}")


def run_sweep(spec: ExperimentSpec, param: str, values, args) -> list[tuple[float, RunResult]]:
    rows = []
    for value in values:
        rows.append((float(value), _execute(apply_sweep_param(spec, param, float(value)), args)))
    return rows


def _cmd_run(args) -> int:
    spec = _read_spec(args.input)
    result = _execute(spec, args)
    _emit(render_report(result, args.format), args.out)
    return 0


def _cmd_verify(args) -> int:
    spec = _read_spec(args.input)
    try:
        _shape, checks = verify_experiment(spec)
    except TopologyMismatch as exc:
        print(f"sgx: verify: not a supported cascade topology: {exc}", file=sys.stderr)
        return 3
    text = "".join(check.line() + "\n" for check in checks)
    _emit(text, args.out)
    return 0 if all(c.passed for c in checks) else 2


def _cmd_sweep(args) -> int:
    spec = _read_spec(args.input)
    start, stop, steps_f = args.range
    if not (math.isfinite(start) and math.isfinite(stop)):
        raise CliError("sweep range bounds must be finite")
    steps = int(steps_f)
    if steps != steps_f or steps < 1:
        raise CliError("sweep STEPS must be a positive integer")
    values = np.linspace(start, stop, steps)
    apply_sweep_param(spec, args.param, float(values[0]))  # validate param early
    rows = run_sweep(spec, args.param, values, args)
    _emit(render_sweep(args.param, rows, args.format), args.out)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_sweep(args)
    except (CliError, NetworkError) as exc:
        print(f"sgx: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # engine failure: exit 2, never a traceback on stdout
        print(f"sgx: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
