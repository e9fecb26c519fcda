"""Spectral decomposition of small dense Hermitian matrices.

The solver is a cyclic complex Jacobi iteration: each rotation zeroes one
off-diagonal pair with a phased Givens rotation, sweeping until the largest
off-diagonal magnitude drops below threshold.  Dimensions here are tiny
(<= ~16), so robustness and exact unitarity of the accumulated eigenvector
matrix matter more than speed.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

HERMITICITY_TOL = 1e-12
OFFDIAG_TOL = 1e-13
MAX_SWEEPS = 100
DEFAULT_CLUSTER_TOL = 1e-9


class NonHermitianInput(ValueError):
    """Raised when a matrix expected to be Hermitian is not."""


class JacobiConvergenceError(RuntimeError):
    """Raised when the rotation sweep limit is exhausted."""


def as_square_complex(matrix, name: str = "matrix") -> np.ndarray:
    """Coerce to a square complex128 array with finite entries."""
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"{name} must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def check_hermitian(matrix, name: str = "matrix", tol: float = HERMITICITY_TOL) -> np.ndarray:
    m = as_square_complex(matrix, name)
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > tol:
        raise NonHermitianInput(f"{name} deviates from Hermitian by {dev:.3e} (tol {tol:.1e})")
    return m


def _jacobi(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalize a Hermitian matrix; returns (eigenvalues, eigenvector columns)."""
    a = 0.5 * (matrix + matrix.conj().T)  # enforce exact symmetry before iterating
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    if n == 1:
        return a.real.diagonal().copy(), v

    scale = max(1.0, float(np.max(np.abs(a))))
    tol = OFFDIAG_TOL * scale

    for _ in range(MAX_SWEEPS):
        off = np.abs(a - np.diag(a.diagonal()))
        if off.max() <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= tol:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                phase = apq / r
                tau = (aqq - app) / (2.0 * r)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c

                # A <- J^H A J with the phased rotation in the (p, q) plane.
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * phase.conjugate() * col_q
                a[:, q] = s * col_p + c * phase.conjugate() * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * phase * row_q
                a[q, :] = s * row_p + c * phase * row_q
                a[p, p] = app - t * r
                a[q, q] = aqq + t * r
                a[p, q] = 0.0
                a[q, p] = 0.0

                col_p = v[:, p].copy()
                col_q = v[:, q].copy()
                v[:, p] = c * col_p - s * phase.conjugate() * col_q
                v[:, q] = s * col_p + c * phase.conjugate() * col_q
    else:
        raise JacobiConvergenceError(
            f"off-diagonal norm still {off.max():.3e} after {MAX_SWEEPS} sweeps"
        )
    return a.diagonal().real.copy(), v


@dataclass
class Eigensystem:
    """Distinct eigenvalues (ascending) with orthogonal projectors onto their eigenspaces."""

    eigenvalues: tuple[float, ...]
    projectors: tuple[np.ndarray, ...]
    multiplicities: tuple[int, ...]

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        """Sum of eigenvalue-weighted projectors (equals the source matrix)."""
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for lam, proj in zip(self.eigenvalues, self.projectors):
            out += lam * proj
        return out


def hermitian_eigenvalues(matrix, name: str = "matrix") -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix (no projectors)."""
    m = check_hermitian(matrix, name)
    vals, _ = _jacobi(m)
    return np.sort(vals)


def hermitian_eigensystem(matrix, cluster_tol: float = DEFAULT_CLUSTER_TOL,
                          name: str = "matrix") -> Eigensystem:
    """Spectral decomposition with near-equal eigenvalues merged into one eigenspace.

    ``cluster_tol`` is applied after scaling by the largest eigenvalue
    magnitude, so degeneracy detection is insensitive to the overall scale.
    """
    if cluster_tol <= 0.0:
        raise ValueError("cluster_tol must be positive")
    m = check_hermitian(matrix, name)
    vals, vecs = _jacobi(m)
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]

    gap = cluster_tol * max(1.0, float(np.max(np.abs(vals))))
    clusters: list[list[int]] = [[0]]
    for i in range(1, len(vals)):
        if vals[i] - vals[clusters[-1][-1]] <= gap:
            clusters[-1].append(i)
        else:
            clusters.append([i])

    eigenvalues = []
    projectors = []
    multiplicities = []
    for idxs in clusters:
        sub = vecs[:, idxs]
        proj = sub @ sub.conj().T
        proj = 0.5 * (proj + proj.conj().T)
        proj.setflags(write=False)
        eigenvalues.append(float(np.mean(vals[idxs])))
        projectors.append(proj)
        multiplicities.append(len(idxs))
    return Eigensystem(tuple(eigenvalues), tuple(projectors), tuple(multiplicities))
