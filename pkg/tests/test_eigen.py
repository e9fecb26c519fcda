"""Jacobi spectral decomposition against the numpy eigensolver as oracle."""

import numpy as np
import pytest

from sgx import Observable, spectral_decompose
from sgx.eigen import (
    JacobiConvergenceError,
    NonHermitianInput,
    hermitian_eigensystem,
    hermitian_eigenvalues,
)

from conftest import random_hermitian, random_unitary


def test_spin_z_eigensystem():
    sz = Observable("Sz", 0.5 * np.diag([1.0, -1.0]))
    eig = spectral_decompose(sz)
    assert eig.eigenvalues == (-0.5, 0.5)
    assert eig.multiplicities == (1, 1)
    np.testing.assert_allclose(eig.projectors[0], np.diag([0.0, 1.0]), atol=1e-15)
    np.testing.assert_allclose(eig.projectors[1], np.diag([1.0, 0.0]), atol=1e-15)


def test_identity_is_one_cluster():
    eig = hermitian_eigensystem(np.eye(3))
    assert eig.eigenvalues == (1.0,)
    assert eig.multiplicities == (3,)
    np.testing.assert_allclose(eig.projectors[0], np.eye(3), atol=1e-15)


def test_random_reconstruction_matches_input():
    rng = np.random.default_rng(101)
    for _ in range(300):
        d = int(rng.integers(2, 7))
        m = random_hermitian(rng, d)
        eig = hermitian_eigensystem(m)
        assert np.max(np.abs(eig.reconstruct() - m)) <= 1e-10
        assert sum(eig.multiplicities) == d
        assert list(eig.eigenvalues) == sorted(eig.eigenvalues)


def test_eigenvalues_match_numpy_oracle():
    rng = np.random.default_rng(102)
    for _ in range(200):
        d = int(rng.integers(2, 7))
        m = random_hermitian(rng, d)
        eig = hermitian_eigensystem(m)
        flat = [lam for lam, mult in zip(eig.eigenvalues, eig.multiplicities)
                for _ in range(mult)]
        np.testing.assert_allclose(flat, np.linalg.eigvalsh(m), atol=1e-11)


def test_projector_identities():
    rng = np.random.default_rng(103)
    for _ in range(100):
        d = int(rng.integers(2, 7))
        eig = hermitian_eigensystem(random_hermitian(rng, d))
        total = sum(eig.projectors)
        assert np.max(np.abs(total - np.eye(d))) <= 1e-10
        for i, pi in enumerate(eig.projectors):
            for j, pj in enumerate(eig.projectors):
                expected = pi if i == j else np.zeros((d, d))
                assert np.max(np.abs(pi @ pj - expected)) <= 1e-10


def test_exact_degeneracy_merges():
    rng = np.random.default_rng(104)
    u = random_unitary(rng, 4)
    m = u @ np.diag([2.0, 2.0, 2.0, 5.0]) @ u.conj().T
    eig = hermitian_eigensystem(m)
    assert eig.multiplicities == (3, 1)
    assert abs(eig.eigenvalues[0] - 2.0) < 1e-10
    assert abs(float(np.trace(eig.projectors[0]).real) - 3.0) < 1e-10


def test_near_degeneracy_clusters_at_tolerance():
    eig = hermitian_eigensystem(np.diag([0.0, 4e-10, 1.0]), cluster_tol=1e-9)
    assert eig.multiplicities == (2, 1)
    fine = hermitian_eigensystem(np.diag([0.0, 4e-10, 1.0]), cluster_tol=1e-11)
    assert fine.multiplicities == (1, 1, 1)


def test_non_hermitian_rejected():
    with pytest.raises(NonHermitianInput):
        hermitian_eigensystem(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(NonHermitianInput):
        Observable("bad", np.array([[0.0, 1.0], [0.5, 0.0]]))


def test_cluster_tol_must_be_positive():
    with pytest.raises(ValueError):
        hermitian_eigensystem(np.eye(2), cluster_tol=0.0)


def test_scaled_matrices_converge():
    rng = np.random.default_rng(105)
    for scale in (1e-8, 1.0, 1e8):
        m = scale * random_hermitian(rng, 5)
        eig = hermitian_eigensystem(m)
        assert np.max(np.abs(eig.reconstruct() - m)) <= 1e-10 * max(1.0, scale)


def test_eigenvalues_only_helper():
    rng = np.random.default_rng(106)
    m = random_hermitian(rng, 4)
    np.testing.assert_allclose(hermitian_eigenvalues(m), np.linalg.eigvalsh(m), atol=1e-11)
