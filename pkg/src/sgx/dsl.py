"""Line-oriented experiment-description language (``.sgx`` files).

Grammar (one declaration per line, ``#`` starts a comment, keywords are
case-sensitive)::

    experiment <ident>
    dim <int>                # default 2
    hbar <float>             # default 1.0
    alpha <float>            # default 1.0
    hamiltonian <mexpr>
    observable <ident> <mexpr>
    source <ident> count=<int> state=(mixed | ground | ket[<c>,...])
    splitter <ident> observable=<ident> time=<float>
    sink <ident> kind=(camera|battery)
    route <ident>[.<branch>] -> <ident>

``<mexpr>`` is either ``<float>*Sx|Sy|Sz|I`` (spin builtins are dim-2 only)
or a bracketed matrix literal ``[[a+bi, ...], ...]``.  Complex literals use
``a+bi`` with optional parts; whitespace is ignored inside brackets.  Route
branches are outcome indices in ascending-eigenvalue order; ``route src -> X``
without a branch is the source's single output.

Errors are reported with the line and column of the offending token;
semantic problems (unknown names, bad dimensions, non-Hermitian matrices)
point at the declaring line.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from .quantum import (
    Hamiltonian,
    NonHermitianInput,
    Observable,
    QuantumState,
    ground_state,
    spin_operator,
)

__all__ = [
    "ParseErrorKind",
    "ParseError",
    "SourceDecl",
    "SplitterDecl",
    "SinkDecl",
    "RouteDecl",
    "ExperimentSpec",
    "parse_experiment",
    "format_experiment",
    "load_experiment",
    "bundled_experiment_path",
    "parse_complex_literal",
    "format_complex_literal",
    "format_matrix_literal",
]

_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_INT_RE = re.compile(r"^[+-]?\d+$")
_BRANCH_RE = re.compile(r"^\d+$")
_MEXPR_RE = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\*(Sx|Sy|Sz|I)$")


class ParseErrorKind(Enum):
    SYNTAX = "Syntax"
    UNKNOWN_IDENTIFIER = "UnknownIdentifier"
    DIMENSION_MISMATCH = "DimensionMismatch"
    DUPLICATE_NAME = "DuplicateName"
    NON_HERMITIAN = "NonHermitian"


class ParseError(ValueError):
    """Parse or validation failure with a 1-based source position."""

    def __init__(self, line: int, column: int, kind: ParseErrorKind, message: str):
        self.line = line
        self.column = column
        self.kind = kind
        self.message = message
        super().__init__(f"line {line}, column {column}: {kind.value}: {message}")


@dataclass(frozen=True)
class SourceDecl:
    name: str
    count: int
    state: QuantumState
    state_decl: str  # "mixed", "ground" or a canonical "ket[...]" literal


@dataclass(frozen=True)
class SplitterDecl:
    name: str
    observable: str
    time: float = 0.0


@dataclass(frozen=True)
class SinkDecl:
    name: str
    kind: str  # "camera" | "battery"


@dataclass(frozen=True)
class RouteDecl:
    src: str
    branch: int | None
    dst: str


@dataclass(frozen=True)
class ExperimentSpec:
    """Parsed, validated experiment description."""

    name: str
    dim: int
    hbar: float
    alpha: float
    hamiltonian: Hamiltonian
    observables: dict[str, Observable]
    devices: tuple[SourceDecl | SplitterDecl | SinkDecl, ...]
    routes: tuple[RouteDecl, ...]

    @property
    def sources(self) -> tuple[SourceDecl, ...]:
        return tuple(d for d in self.devices if isinstance(d, SourceDecl))

    @property
    def source_count(self) -> int | None:
        srcs = self.sources
        return srcs[0].count if srcs else None

    def device(self, name: str):
        for d in self.devices:
            if d.name == name:
                return d
        raise KeyError(name)


# ---------------------------------------------------------------------------
# literals

def _fmt_float(x: float) -> str:
    return repr(float(x))


def parse_complex_literal(text: str, line: int = 1, col: int = 1) -> complex:
    """Parse an ``a+bi`` literal (either part optional, ``i`` alone means 1i)."""
    stripped = text.strip()
    col = col + (len(text) - len(text.lstrip()))
    compact = "".join(stripped.split())
    if not compact:
        raise ParseError(line, col, ParseErrorKind.SYNTAX, "empty complex literal")
    if "j" in compact or "(" in compact or ")" in compact:
        raise ParseError(line, col, ParseErrorKind.SYNTAX,
                         f"invalid complex literal {stripped!r} (use 'a+bi')")
    try:
        value = complex(compact.replace("i", "j"))
    except ValueError:
        raise ParseError(line, col, ParseErrorKind.SYNTAX,
                         f"invalid complex literal {stripped!r}") from None
    if not cmath.isfinite(value):
        raise ParseError(line, col, ParseErrorKind.SYNTAX,
                         f"non-finite complex literal {stripped!r}")
    return value


def format_complex_literal(z: complex) -> str:
    re_, im = float(z.real), float(z.imag)
    if im == 0.0:
        return _fmt_float(re_)
    im_part = _fmt_float(abs(im)) + "i"
    if re_ == 0.0:
        return ("-" if im < 0 else "") + im_part
    return _fmt_float(re_) + ("-" if im < 0 else "+") + im_part


def _split_entries(inner: str, line: int, base_col: int) -> list[complex]:
    entries = []
    offset = 0
    for part in inner.split(","):
        entries.append(parse_complex_literal(part, line, base_col + offset))
        offset += len(part) + 1
    return entries


def _parse_matrix_literal(token: str, line: int, col: int) -> list[list[complex]]:
    """Parse ``[[...],[...]]`` with column tracking; rows must not nest."""

    def err(pos: int, msg: str, kind=ParseErrorKind.SYNTAX):
        return ParseError(line, col + pos, kind, msg)

    def skip_ws(i: int) -> int:
        while i < len(token) and token[i].isspace():
            i += 1
        return i

    if not token.startswith("["):
        raise err(0, "expected '[' to start a matrix literal")
    rows: list[list[complex]] = []
    i = skip_ws(1)
    while True:
        if i >= len(token) or token[i] != "[":
            raise err(min(i, len(token) - 1), "expected '[' to start a matrix row")
        end = token.find("]", i)
        if end < 0:
            raise err(i, "unterminated matrix row")
        inner = token[i + 1:end]
        if not inner.strip():
            raise err(i, "empty matrix row")
        rows.append(_split_entries(inner, line, col + i + 1))
        i = skip_ws(end + 1)
        if i >= len(token):
            raise err(len(token) - 1, "unterminated matrix literal")
        if token[i] == ",":
            i = skip_ws(i + 1)
            continue
        if token[i] == "]":
            i = skip_ws(i + 1)
            if i != len(token):
                raise err(i, "unexpected text after matrix literal")
            break
        raise err(i, "expected ',' or ']' after a matrix row")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise err(0, "matrix rows have unequal lengths", ParseErrorKind.DIMENSION_MISMATCH)
    return rows


def format_matrix_literal(matrix: np.ndarray) -> str:
    rows = []
    for row in np.asarray(matrix, dtype=np.complex128):
        rows.append("[" + ", ".join(format_complex_literal(z) for z in row) + "]")
    return "[" + ", ".join(rows) + "]"


def _eval_mexpr(token: str, line: int, col: int, dim: int, hbar: float) -> np.ndarray:
    if token.startswith("["):
        rows = _parse_matrix_literal(token, line, col)
        if len(rows) != len(rows[0]):
            raise ParseError(line, col, ParseErrorKind.DIMENSION_MISMATCH,
                             f"matrix literal is {len(rows)}x{len(rows[0])}, must be square")
        if len(rows) != dim:
            raise ParseError(line, col, ParseErrorKind.DIMENSION_MISMATCH,
                             f"matrix literal is {len(rows)}x{len(rows)} but dim is {dim}")
        return np.array(rows, dtype=np.complex128)
    m = _MEXPR_RE.match(token)
    if m is None:
        raise ParseError(line, col, ParseErrorKind.SYNTAX,
                         f"expected '<float>*Sx|Sy|Sz|I' or a matrix literal, got {token!r}")
    coeff = float(m.group(1))
    base_name = m.group(2)
    if base_name == "I":
        base = np.eye(dim, dtype=np.complex128)
    else:
        if dim != 2:
            raise ParseError(line, col, ParseErrorKind.DIMENSION_MISMATCH,
                             f"spin builtin {base_name} requires dim 2, dim is {dim}")
        base = spin_operator(base_name[1].lower(), hbar).matrix
    return coeff * base


# ---------------------------------------------------------------------------
# tokenizing

def _tokens(line: str) -> list[tuple[str, int]]:
    """Whitespace-split tokens with 1-based columns; brackets bind spaces."""
    out = []
    i, n = 0, len(line)
    while i < n:
        if line[i].isspace():
            i += 1
            continue
        start = i
        depth = 0
        while i < n and (depth > 0 or not line[i].isspace()):
            if line[i] == "[":
                depth += 1
            elif line[i] == "]" and depth > 0:
                depth -= 1
            i += 1
        out.append((line[start:i], start + 1))
    return out


def _parse_kv(tokens: list[tuple[str, int]], line: int, allowed: dict[str, bool]) -> dict:
    """key=value pairs; ``allowed`` maps key -> required."""
    seen: dict[str, tuple[str, int]] = {}
    for text, col in tokens:
        key, eq, value = text.partition("=")
        if not eq or not key:
            raise ParseError(line, col, ParseErrorKind.SYNTAX,
                             f"expected key=value, got {text!r}")
        if key not in allowed:
            raise ParseError(line, col, ParseErrorKind.SYNTAX, f"unknown parameter {key!r}")
        if key in seen:
            raise ParseError(line, col, ParseErrorKind.SYNTAX, f"duplicate parameter {key!r}")
        seen[key] = (value, col + len(key) + 1)
    return seen


def _require(kv: dict, key: str, line: int, line_text: str):
    if key not in kv:
        raise ParseError(line, len(line_text) + 1, ParseErrorKind.SYNTAX,
                         f"missing required parameter {key!r}")
    return kv[key]


def _parse_int(text: str, line: int, col: int, what: str) -> int:
    if not _INT_RE.match(text):
        raise ParseError(line, col, ParseErrorKind.SYNTAX, f"{what} must be an integer")
    return int(text)


def _parse_float(text: str, line: int, col: int, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(line, col, ParseErrorKind.SYNTAX,
                         f"{what} must be a number") from None
    if not math.isfinite(value):
        raise ParseError(line, col, ParseErrorKind.SYNTAX, f"{what} must be finite")
    return value


def _parse_ident(text: str, line: int, col: int, what: str) -> str:
    if not _IDENT_RE.match(text):
        raise ParseError(line, col, ParseErrorKind.SYNTAX,
                         f"{what} must be an identifier, got {text!r}")
    return text


# ---------------------------------------------------------------------------
# parser

def parse_experiment(text: str) -> ExperimentSpec:
    """Parse and validate an experiment description.

    Raises :class:`ParseError` at the first failing position; unknown names,
    dimension conflicts and non-Hermitian matrices are reported against the
    line that declares them.
    """
    lines = text.splitlines()

    exp_name = None
    exp_line = 1
    scalars: dict[str, tuple] = {}  # dim/hbar/alpha/hamiltonian -> (value, line, col)
    raw_devices: list[tuple] = []   # (directive, name, kv, line, col, line_text)
    raw_observables: list[tuple] = []  # (name, token, line, col)
    raw_routes: list[tuple] = []    # (src, branch, dst, line, col)
    device_lines: dict[str, int] = {}
    observable_lines: dict[str, int] = {}

    for lineno, raw in enumerate(lines, 1):
        content = raw.split("#", 1)[0]
        tokens = _tokens(content)
        if not tokens:
            continue
        (directive, dcol) = tokens[0]

        if exp_name is None:
            if directive != "experiment":
                raise ParseError(lineno, dcol, ParseErrorKind.SYNTAX,
                                 "file must start with an 'experiment' declaration")
            if len(tokens) != 2:
                raise ParseError(lineno, dcol + len(directive) + 1, ParseErrorKind.SYNTAX,
                                 "expected: experiment <name>")
            exp_name = _parse_ident(tokens[1][0], lineno, tokens[1][1], "experiment name")
            exp_line = lineno
            continue

        if directive == "experiment":
            raise ParseError(lineno, dcol, ParseErrorKind.DUPLICATE_NAME,
                             "duplicate 'experiment' declaration")

        if directive in ("dim", "hbar", "alpha", "hamiltonian"):
            if directive in scalars:
                raise ParseError(lineno, dcol, ParseErrorKind.DUPLICATE_NAME,
                                 f"duplicate {directive!r} declaration")
            if len(tokens) != 2:
                raise ParseError(lineno, dcol, ParseErrorKind.SYNTAX,
                                 f"expected: {directive} <value>")
            value, vcol = tokens[1]
            if directive == "dim":
                n = _parse_int(value, lineno, vcol, "dim")
                if n < 1:
                    raise ParseError(lineno, vcol, ParseErrorKind.SYNTAX,
                                     "dim must be a positive integer")
                scalars["dim"] = (n, lineno, vcol)
            elif directive == "hbar":
                h = _parse_float(value, lineno, vcol, "hbar")
                if h <= 0:
                    raise ParseError(lineno, vcol, ParseErrorKind.SYNTAX,
                                     "hbar must be positive")
                scalars["hbar"] = (h, lineno, vcol)
            elif directive == "alpha":
                scalars["alpha"] = (_parse_float(value, lineno, vcol, "alpha"), lineno, vcol)
            else:
                scalars["hamiltonian"] = (value, lineno, vcol)
            continue

        if directive == "observable":
            if len(tokens) != 3:
                raise ParseError(lineno, dcol, ParseErrorKind.SYNTAX,
                                 "expected: observable <name> <matrix-expression>")
            name = _parse_ident(tokens[1][0], lineno, tokens[1][1], "observable name")
            if name in observable_lines:
                raise ParseError(lineno, tokens[1][1], ParseErrorKind.DUPLICATE_NAME,
                                 f"observable {name!r} already declared")
            observable_lines[name] = lineno
            raw_observables.append((name, tokens[2][0], lineno, tokens[2][1]))
            continue

        if directive in ("source", "splitter", "sink"):
            if len(tokens) < 2:
                raise ParseError(lineno, dcol, ParseErrorKind.SYNTAX,
                                 f"expected: {directive} <name> ...")
            name = _parse_ident(tokens[1][0], lineno, tokens[1][1], f"{directive} name")
            if name in device_lines:
                raise ParseError(lineno, tokens[1][1], ParseErrorKind.DUPLICATE_NAME,
                                 f"device {name!r} already declared")
            device_lines[name] = lineno
            allowed = {"source": {"count": True, "state": True},
                       "splitter": {"observable": True, "time": False},
                       "sink": {"kind": True}}[directive]
            kv = _parse_kv(tokens[2:], lineno, allowed)
            for key, required in allowed.items():
                if required:
                    _require(kv, key, lineno, content)
            raw_devices.append((directive, name, kv, lineno, dcol, content))
            continue

        if directive == "route":
            if len(tokens) != 4 or tokens[2][0] != "->":
                raise ParseError(lineno, dcol, ParseErrorKind.SYNTAX,
                                 "expected: route <device>[.<branch>] -> <device>")
            src_text, src_col = tokens[1]
            left, dot, branch_text = src_text.partition(".")
            src = _parse_ident(left, lineno, src_col, "route source")
            branch = None
            if dot:
                if not _BRANCH_RE.match(branch_text):
                    raise ParseError(lineno, src_col + len(left) + 1, ParseErrorKind.SYNTAX,
                                     "route branch must be a non-negative integer")
                branch = int(branch_text)
            dst = _parse_ident(tokens[3][0], lineno, tokens[3][1], "route target")
            raw_routes.append((src, branch, dst, lineno, src_col))
            continue

        raise ParseError(lineno, dcol, ParseErrorKind.SYNTAX,
                         f"unknown directive {directive!r}")

    if exp_name is None:
        raise ParseError(1, 1, ParseErrorKind.SYNTAX, "missing 'experiment' declaration")

    dim = scalars.get("dim", (2,))[0]
    hbar = scalars.get("hbar", (1.0,))[0]
    alpha = scalars.get("alpha", (1.0,))[0]

    if "hamiltonian" not in scalars:
        raise ParseError(exp_line, 1, ParseErrorKind.SYNTAX,
                         "missing 'hamiltonian' declaration")
    ham_token, ham_line, ham_col = scalars["hamiltonian"]
    ham_matrix = _eval_mexpr(ham_token, ham_line, ham_col, dim, hbar)
    try:
        hamiltonian = Hamiltonian(Observable("hamiltonian", ham_matrix), hbar=hbar, alpha=alpha)
    except NonHermitianInput as exc:
        raise ParseError(ham_line, ham_col, ParseErrorKind.NON_HERMITIAN, str(exc)) from None

    observables: dict[str, Observable] = {}
    for name, token, lineno, col in raw_observables:
        matrix = _eval_mexpr(token, lineno, col, dim, hbar)
        try:
            observables[name] = Observable(name, matrix)
        except NonHermitianInput as exc:
            raise ParseError(lineno, col, ParseErrorKind.NON_HERMITIAN, str(exc)) from None

    devices: list[SourceDecl | SplitterDecl | SinkDecl] = []
    for directive, name, kv, lineno, dcol, content in raw_devices:
        if directive == "source":
            count_text, ccol = kv["count"]
            count = _parse_int(count_text, lineno, ccol, "count")
            if count < 1:
                raise ParseError(lineno, ccol, ParseErrorKind.SYNTAX, "count must be positive")
            state_text, scol = kv["state"]
            state, state_decl = _resolve_state(state_text, lineno, scol, dim, hamiltonian)
            devices.append(SourceDecl(name, count, state, state_decl))
        elif directive == "splitter":
            obs_text, ocol = kv["observable"]
            obs_name = _parse_ident(obs_text, lineno, ocol, "observable reference")
            if obs_name not in observables:
                raise ParseError(lineno, ocol, ParseErrorKind.UNKNOWN_IDENTIFIER,
                                 f"observable {obs_name!r} is not declared")
            time = 0.0
            if "time" in kv:
                time = _parse_float(kv["time"][0], lineno, kv["time"][1], "time")
            devices.append(SplitterDecl(name, obs_name, time))
        else:
            kind_text, kcol = kv["kind"]
            if kind_text not in ("camera", "battery"):
                raise ParseError(lineno, kcol, ParseErrorKind.SYNTAX,
                                 f"sink kind must be 'camera' or 'battery', got {kind_text!r}")
            devices.append(SinkDecl(name, kind_text))

    by_name = {d.name: d for d in devices}
    routes: list[RouteDecl] = []
    seen_routes: set[tuple[str, int | None]] = set()
    for src, branch, dst, lineno, col in raw_routes:
        if src not in by_name:
            raise ParseError(lineno, col, ParseErrorKind.UNKNOWN_IDENTIFIER,
                             f"route source {src!r} is not a declared device")
        if dst not in by_name:
            raise ParseError(lineno, col, ParseErrorKind.UNKNOWN_IDENTIFIER,
                             f"route target {dst!r} is not a declared device")
        src_decl = by_name[src]
        if isinstance(src_decl, SinkDecl):
            raise ParseError(lineno, col, ParseErrorKind.SYNTAX,
                             f"sink {src!r} cannot be a route source")
        if isinstance(src_decl, SourceDecl) and branch is not None:
            raise ParseError(lineno, col, ParseErrorKind.SYNTAX,
                             "a source route takes no branch index")
        if isinstance(src_decl, SplitterDecl) and branch is None:
            raise ParseError(lineno, col, ParseErrorKind.SYNTAX,
                             f"route from splitter {src!r} needs a '.<branch>' index")
        if isinstance(by_name[dst], SourceDecl):
            raise ParseError(lineno, col, ParseErrorKind.SYNTAX,
                             f"source {dst!r} cannot be a route target")
        key = (src, branch)
        if key in seen_routes:
            raise ParseError(lineno, col, ParseErrorKind.DUPLICATE_NAME,
                             f"duplicate route from {src!r}"
                             + (f" branch {branch}" if branch is not None else ""))
        seen_routes.add(key)
        routes.append(RouteDecl(src, branch, dst))

    return ExperimentSpec(exp_name, dim, hbar, alpha, hamiltonian, observables,
                          tuple(devices), tuple(routes))


def _resolve_state(text: str, line: int, col: int, dim: int,
                   hamiltonian: Hamiltonian) -> tuple[QuantumState, str]:
    if text == "mixed":
        return QuantumState.maximally_mixed(dim), "mixed"
    if text == "ground":
        return ground_state(hamiltonian), "ground"
    if text.startswith("ket[") and text.endswith("]"):
        entries = _split_entries(text[4:-1], line, col + 4)
        if len(entries) != dim:
            raise ParseError(line, col, ParseErrorKind.DIMENSION_MISMATCH,
                             f"ket has {len(entries)} amplitudes but dim is {dim}")
        v = np.array(entries, dtype=np.complex128)
        norm = float(np.linalg.norm(v))
        if norm < 1e-12:
            raise ParseError(line, col, ParseErrorKind.SYNTAX, "ket state must be non-zero")
        v = v / norm
        canonical = "ket[" + ", ".join(format_complex_literal(z) for z in v) + "]"
        return QuantumState.from_ket(v), canonical
    raise ParseError(line, col, ParseErrorKind.SYNTAX,
                     f"state must be 'mixed', 'ground' or 'ket[...]', got {text!r}")


def resolve_source_state(decl: str, dim: int, hamiltonian: Hamiltonian) -> QuantumState:
    """Re-resolve a stored state declaration (used when sweeping parameters)."""
    return _resolve_state(decl, 1, 1, dim, hamiltonian)[0]


# ---------------------------------------------------------------------------
# canonical rendering

def format_experiment(spec: ExperimentSpec) -> str:
    """Canonical text form; ``parse_experiment`` recovers an equal spec."""
    out = [f"experiment {spec.name}",
           f"dim {spec.dim}",
           f"hbar {_fmt_float(spec.hbar)}",
           f"alpha {_fmt_float(spec.alpha)}",
           f"hamiltonian {format_matrix_literal(spec.hamiltonian.matrix)}"]
    for name, obs in spec.observables.items():
        out.append(f"observable {name} {format_matrix_literal(obs.matrix)}")
    for d in spec.devices:
        if isinstance(d, SourceDecl):
            out.append(f"source {d.name} count={d.count} state={d.state_decl}")
        elif isinstance(d, SplitterDecl):
            out.append(f"splitter {d.name} observable={d.observable} time={_fmt_float(d.time)}")
        else:
            out.append(f"sink {d.name} kind={d.kind}")
    for r in spec.routes:
        src = r.src if r.branch is None else f"{r.src}.{r.branch}"
        out.append(f"route {src} -> {r.dst}")
    return "\n".join(out) + "\n"


def load_experiment(path) -> ExperimentSpec:
    return parse_experiment(Path(path).read_text(encoding="utf-8"))


def bundled_experiment_path(name: str) -> Path:
    """Filesystem path of a bundled ``.sgx`` experiment (without extension)."""
    return Path(str(resources.files("sgx").joinpath("experiments", f"{name}.sgx")))
