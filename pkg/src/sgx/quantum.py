"""Finite-dimensional quantum kernel: states, observables, measurement, evolution.

States are either pure kets or density matrices on a d-dimensional Hilbert
space.  Observables are Hermitian matrices; measuring one collapses the state
onto an eigenspace with probability given by the Born rule.  Time evolution
goes through the spectral decomposition of the Hamiltonian, never a series
expansion, so a single evolution step is exact to rounding.

All values are immutable after construction and every operation is a pure
function of its inputs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .eigen import (
    DEFAULT_CLUSTER_TOL,
    Eigensystem,
    NonHermitianInput,
    as_square_complex,
    check_hermitian,
    hermitian_eigenvalues,
    hermitian_eigensystem,
)

__all__ = [
    "PURE",
    "MIXED",
    "QuantumState",
    "Observable",
    "Hamiltonian",
    "MeasurementOutcome",
    "DimensionMismatch",
    "KindMismatch",
    "NonHermitianInput",
    "ZeroProbabilityOutcome",
    "IndexOutOfRange",
    "DegenerateGroundStateWarning",
    "spectral_decompose",
    "spin_operator",
    "spin_hamiltonian",
    "evolve",
    "born_probabilities",
    "collapse",
    "expectation",
    "expected_post_measurement_energy",
    "ground_state",
    "states_equal_up_to_phase",
    "ket_fidelity",
]

PURE = "pure"
MIXED = "mixed"

NORM_TOL = 1e-12
PSD_FLOOR = -1e-10
PROB_CLAMP = 1e-12
COLLAPSE_FLOOR = 1e-14
IMAG_RESIDUE_TOL = 1e-10


class DimensionMismatch(ValueError):
    """Operands live on Hilbert spaces of different dimension."""


class KindMismatch(ValueError):
    """A pure state was combined with a mixed one where kinds must agree."""


class ZeroProbabilityOutcome(ValueError):
    """Requested collapse onto an outcome of (numerically) zero probability."""


class IndexOutOfRange(IndexError):
    """Outcome index outside the eigensystem's outcome list."""


class DegenerateGroundStateWarning(UserWarning):
    """The lowest eigenspace has multiplicity > 1; a representative was chosen."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.complex128)
    out.setflags(write=False)
    return out


@dataclass
class QuantumState:
    """Pure ket or density matrix, validated on construction.

    Pure states must be unit-norm; mixed states must be Hermitian, trace one
    and positive semidefinite.  Use :meth:`from_ket`, :meth:`from_density` or
    :meth:`maximally_mixed` rather than the raw constructor.
    """

    kind: str
    ket: np.ndarray | None = None
    rho: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == PURE:
            if self.ket is None or self.rho is not None:
                raise ValueError("pure state needs a ket and no density matrix")
            v = np.asarray(self.ket, dtype=np.complex128).reshape(-1)
            if v.size < 1 or not np.all(np.isfinite(v)):
                raise ValueError("ket must be a finite non-empty vector")
            norm2 = float(np.vdot(v, v).real)
            if abs(norm2 - 1.0) > NORM_TOL:
                raise ValueError(f"ket norm^2 = {norm2!r} is not 1 within {NORM_TOL:.0e}")
            self.ket = _frozen(v)
        elif self.kind == MIXED:
            if self.rho is None or self.ket is not None:
                raise ValueError("mixed state needs a density matrix and no ket")
            m = check_hermitian(self.rho, "density matrix")
            tr = float(m.trace().real)
            if abs(tr - 1.0) > NORM_TOL:
                raise ValueError(f"density matrix trace = {tr!r} is not 1 within {NORM_TOL:.0e}")
            if float(hermitian_eigenvalues(m, "density matrix")[0]) < PSD_FLOOR:
                raise ValueError("density matrix is not positive semidefinite")
            self.rho = _frozen(m)
        else:
            raise ValueError(f"unknown state kind {self.kind!r}")

    @classmethod
    def from_ket(cls, amplitudes) -> "QuantumState":
        return cls(PURE, ket=np.asarray(amplitudes, dtype=np.complex128))

    @classmethod
    def from_density(cls, matrix) -> "QuantumState":
        return cls(MIXED, rho=np.asarray(matrix, dtype=np.complex128))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "QuantumState":
        return cls(MIXED, rho=np.eye(dim, dtype=np.complex128) / dim)

    @classmethod
    def basis_ket(cls, dim: int, index: int) -> "QuantumState":
        v = np.zeros(dim, dtype=np.complex128)
        v[index] = 1.0
        return cls(PURE, ket=v)

    @property
    def dim(self) -> int:
        return self.ket.shape[0] if self.kind == PURE else self.rho.shape[0]

    @property
    def is_pure(self) -> bool:
        return self.kind == PURE

    def density(self) -> np.ndarray:
        """Density-matrix view (|psi><psi| for pure states)."""
        if self.kind == PURE:
            return np.outer(self.ket, self.ket.conj())
        return np.asarray(self.rho)


@dataclass
class Observable:
    """Named Hermitian matrix; its eigenvalues are the possible outcomes."""

    name: str
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = _frozen(check_hermitian(self.matrix, f"observable {self.name!r}"))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass
class Hamiltonian:
    """Energy observable plus the unit constants it was built with.

    ``hbar`` sets the energy-time scale of evolution; ``alpha`` is the
    frequency coefficient of the spin-half builder and is carried along as
    metadata for generic matrices.
    """

    observable: Observable
    hbar: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0.0 and np.isfinite(self.hbar)):
            raise ValueError("hbar must be a positive real")
        if not np.isfinite(self.alpha):
            raise ValueError("alpha must be finite")

    @property
    def matrix(self) -> np.ndarray:
        return self.observable.matrix

    @property
    def dim(self) -> int:
        return self.observable.dim


@dataclass
class MeasurementOutcome:
    outcome_index: int
    eigenvalue: float
    probability: float
    post_state: QuantumState


_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def spin_operator(axis: str, hbar: float = 1.0) -> Observable:
    """Spin-1/2 component along x, y or z: (hbar/2) times the Pauli matrix."""
    if axis not in _PAULI:
        raise ValueError(f"axis must be one of 'x', 'y', 'z', got {axis!r}")
    if not (hbar > 0.0 and np.isfinite(hbar)):
        raise ValueError("hbar must be a positive real")
    return Observable(f"S{axis}", (hbar / 2.0) * _PAULI[axis])


def spin_hamiltonian(alpha: float = 1.0, hbar: float = 1.0) -> Hamiltonian:
    """Spin-1/2 energy operator -alpha * (hbar/2) * sigma_z.

    For alpha > 0 the ground state is the spin-up basis ket with energy
    -alpha*hbar/2.
    """
    if not (hbar > 0.0 and np.isfinite(hbar)):
        raise ValueError("hbar must be a positive real")
    if not np.isfinite(alpha):
        raise ValueError("alpha must be finite")
    matrix = -alpha * (hbar / 2.0) * _PAULI["z"]
    return Hamiltonian(Observable("H", matrix), hbar=hbar, alpha=alpha)


def spectral_decompose(obs: Observable, cluster_tol: float = DEFAULT_CLUSTER_TOL) -> Eigensystem:
    """Eigensystem of an observable, eigenvalues ascending, degeneracies merged."""
    return hermitian_eigensystem(obs.matrix, cluster_tol, name=f"observable {obs.name!r}")


def _check_dims(state_dim: int, other_dim: int, what: str) -> None:
    if state_dim != other_dim:
        raise DimensionMismatch(f"state dim {state_dim} != {what} dim {other_dim}")


def evolve(state: QuantumState, hamiltonian: Hamiltonian, dt: float) -> QuantumState:
    """Unitary time evolution exp(-i*dt*H/hbar) applied through H's eigensystem."""
    _check_dims(state.dim, hamiltonian.dim, "hamiltonian")
    if not np.isfinite(dt):
        raise ValueError("dt must be finite")
    if dt == 0.0:
        return state
    eig = spectral_decompose(hamiltonian.observable)
    u = np.zeros((state.dim, state.dim), dtype=np.complex128)
    for lam, proj in zip(eig.eigenvalues, eig.projectors):
        u += np.exp(-1j * lam * dt / hamiltonian.hbar) * proj
    if state.is_pure:
        return QuantumState(PURE, ket=u @ state.ket)
    return QuantumState(MIXED, rho=u @ state.rho @ u.conj().T)


def born_probabilities(state: QuantumState, eig: Eigensystem) -> list[float]:
    """Outcome probabilities <psi|P_k|psi> (pure) or trace(P_k rho) (mixed)."""
    _check_dims(state.dim, eig.dim, "eigensystem")
    probs = []
    for proj in eig.projectors:
        if state.is_pure:
            p = complex(state.ket.conj() @ (proj @ state.ket))
        else:
            p = complex(np.einsum("ij,ji->", proj, state.rho))
        if abs(p.imag) > IMAG_RESIDUE_TOL:
            raise ArithmeticError(f"probability has imaginary residue {p.imag:.3e}")
        val = p.real
        if val < -PROB_CLAMP or val > 1.0 + PROB_CLAMP:
            raise ArithmeticError(f"probability {val!r} outside [0, 1] beyond round-off")
        probs.append(min(max(val, 0.0), 1.0))
    return probs


def collapse(state: QuantumState, eig: Eigensystem, outcome_index: int,
             collapse_floor: float = COLLAPSE_FLOOR) -> MeasurementOutcome:
    """Project the state onto one eigenspace and renormalize."""
    _check_dims(state.dim, eig.dim, "eigensystem")
    if not 0 <= outcome_index < eig.n_outcomes:
        raise IndexOutOfRange(
            f"outcome index {outcome_index} outside 0..{eig.n_outcomes - 1}")
    p = born_probabilities(state, eig)[outcome_index]
    if p < collapse_floor:
        raise ZeroProbabilityOutcome(
            f"outcome {outcome_index} has probability {p!r} < {collapse_floor!r}")
    proj = eig.projectors[outcome_index]
    if state.is_pure:
        v = proj @ state.ket
        post = QuantumState(PURE, ket=v / np.linalg.norm(v))
    else:
        m = proj @ state.rho @ proj
        m = 0.5 * (m + m.conj().T)
        post = QuantumState(MIXED, rho=m / m.trace().real)
    return MeasurementOutcome(outcome_index, eig.eigenvalues[outcome_index], p, post)


def expectation(state: QuantumState, obs: Observable) -> float:
    """<psi|M|psi> or trace(M rho); the (tiny) imaginary residue is discarded."""
    _check_dims(state.dim, obs.dim, "observable")
    if state.is_pure:
        val = complex(state.ket.conj() @ (obs.matrix @ state.ket))
    else:
        val = complex(np.einsum("ij,ji->", obs.matrix, state.rho))
    if abs(val.imag) > IMAG_RESIDUE_TOL:
        raise ArithmeticError(f"expectation has imaginary residue {val.imag:.3e}")
    return val.real


def expected_post_measurement_energy(state: QuantumState, obs: Observable,
                                     hamiltonian: Hamiltonian) -> float:
    """Mean energy after measuring ``obs``: sum_k trace(P_k rho P_k H).

    Measuring an observable that does not commute with the Hamiltonian on a
    nondegenerate ground state strictly raises this above the ground energy.
    """
    _check_dims(state.dim, obs.dim, "observable")
    _check_dims(state.dim, hamiltonian.dim, "hamiltonian")
    eig = spectral_decompose(obs)
    h = hamiltonian.matrix
    total = 0.0 + 0.0j
    for proj in eig.projectors:
        if state.is_pure:
            v = proj @ state.ket
            total += complex(v.conj() @ (h @ v))
        else:
            m = proj @ state.rho @ proj
            total += complex(np.einsum("ij,ji->", h, m))
    if abs(total.imag) > IMAG_RESIDUE_TOL:
        raise ArithmeticError(f"energy has imaginary residue {total.imag:.3e}")
    return total.real


def ground_state(hamiltonian: Hamiltonian) -> QuantumState:
    """Normalized eigenvector of the smallest eigenvalue.

    A degenerate lowest eigenspace is flagged with
    :class:`DegenerateGroundStateWarning`; the representative returned is the
    first projector column of non-negligible norm, normalized, which is
    deterministic for a given matrix.
    """
    eig = spectral_decompose(hamiltonian.observable)
    proj = eig.projectors[0]
    if eig.multiplicities[0] > 1:
        warnings.warn(
            f"ground eigenspace of {hamiltonian.observable.name!r} has multiplicity "
            f"{eig.multiplicities[0]}; returning a deterministic representative",
            DegenerateGroundStateWarning, stacklevel=2)
    for j in range(proj.shape[1]):
        col = proj[:, j]
        norm = np.linalg.norm(col)
        if norm > 1e-8:
            return QuantumState(PURE, ket=col / norm)
    raise ArithmeticError("ground projector has no usable column")  # unreachable


def states_equal_up_to_phase(a: QuantumState, b: QuantumState, tol: float = 1e-9) -> bool:
    """Ray equality: |<a|b>| >= 1 - tol for kets, max-entry closeness for densities."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"state dims differ: {a.dim} != {b.dim}")
    if a.kind != b.kind:
        raise KindMismatch(f"cannot compare {a.kind} state with {b.kind} state")
    if a.is_pure:
        return abs(np.vdot(a.ket, b.ket)) >= 1.0 - tol
    return float(np.max(np.abs(a.rho - b.rho))) <= tol


def ket_fidelity(state: QuantumState, ket) -> float:
    """Overlap of a state with a reference unit ket: |<k|psi>|^2 or <k|rho|k>."""
    v = np.asarray(ket, dtype=np.complex128).reshape(-1)
    _check_dims(state.dim, v.shape[0], "reference ket")
    if state.is_pure:
        return float(abs(np.vdot(v, state.ket)) ** 2)
    return float((v.conj() @ (state.rho @ v)).real)
