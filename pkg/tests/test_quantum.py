"""Kernel operations: construction rules, measurement, evolution, energies."""

import cmath

import numpy as np
import pytest

from sgx import (
    DegenerateGroundStateWarning,
    DimensionMismatch,
    Hamiltonian,
    IndexOutOfRange,
    KindMismatch,
    Observable,
    QuantumState,
    ZeroProbabilityOutcome,
    born_probabilities,
    collapse,
    evolve,
    expectation,
    expected_post_measurement_energy,
    ground_state,
    spectral_decompose,
    spin_hamiltonian,
    spin_operator,
    states_equal_up_to_phase,
)

from conftest import random_hermitian, random_ket

Z_PLUS = QuantumState.basis_ket(2, 0)
Z_MINUS = QuantumState.basis_ket(2, 1)
X_PLUS = QuantumState.from_ket(np.array([1.0, 1.0]) / np.sqrt(2))
X_MINUS = QuantumState.from_ket(np.array([1.0, -1.0]) / np.sqrt(2))


# ---------------------------------------------------------------------------
# type invariants

def test_pure_state_must_be_normalized():
    with pytest.raises(ValueError):
        QuantumState.from_ket([1.0, 1.0])
    QuantumState.from_ket(np.array([1.0, 1.0]) / np.sqrt(2))


def test_mixed_state_validation():
    QuantumState.maximally_mixed(3)
    with pytest.raises(ValueError):
        QuantumState.from_density(np.diag([0.7, 0.7]))  # trace 1.4
    with pytest.raises(Exception):
        QuantumState.from_density(np.array([[0.5, 0.5], [0.0, 0.5]]))  # not Hermitian
    with pytest.raises(ValueError):
        QuantumState.from_density(np.diag([1.5, -0.5]))  # negative eigenvalue


def test_states_are_read_only():
    with pytest.raises(ValueError):
        Z_PLUS.ket[0] = 0.0
    with pytest.raises(ValueError):
        QuantumState.maximally_mixed(2).rho[0, 0] = 9.0


# ---------------------------------------------------------------------------
# builders

def test_spin_operator_matrices():
    np.testing.assert_allclose(spin_operator("z").matrix, 0.5 * np.diag([1.0, -1.0]))
    np.testing.assert_allclose(spin_operator("x").matrix,
                               0.5 * np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(spin_operator("y").matrix,
                               0.5 * np.array([[0.0, -1.0j], [1.0j, 0.0]]))
    np.testing.assert_allclose(spin_operator("z", hbar=3.0).matrix, 1.5 * np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        spin_operator("q")
    with pytest.raises(ValueError):
        spin_operator("z", hbar=0.0)


def test_spin_hamiltonian_matrix_and_ground():
    h = spin_hamiltonian(1.0, 1.0)
    np.testing.assert_allclose(h.matrix, np.diag([-0.5, 0.5]))
    np.testing.assert_allclose(spin_hamiltonian(0.0, 1.0).matrix, np.zeros((2, 2)))
    # eigendecomposition oracle for the coupling-2 ground energy
    h2 = spin_hamiltonian(2.0, 1.0)
    g = ground_state(h2)
    assert abs(expectation(g, h2.observable) - np.linalg.eigvalsh(h2.matrix)[0]) < 1e-12
    assert abs(expectation(g, h2.observable) + 1.0) < 1e-12


# ---------------------------------------------------------------------------
# evolution

def test_energy_eigenstate_evolves_by_phase_only():
    h = spin_hamiltonian(1.0, 1.0)
    for t in (0.3, 2.0, -5.7):
        out = evolve(Z_PLUS, h, t)
        assert states_equal_up_to_phase(out, Z_PLUS, 1e-12)
        # the phase itself is exp(+i*alpha*t/2) on the spin-up amplitude
        assert abs(out.ket[0] - cmath.exp(1j * t / 2)) < 1e-12


def test_zero_time_evolution_is_identity():
    st = random_ket(np.random.default_rng(1), 4)
    h = Hamiltonian(Observable("h", random_hermitian(np.random.default_rng(2), 4)))
    assert evolve(st, h, 0.0) is st


def test_superposition_evolution_closed_form():
    # independent oracle: phases written out with cmath
    alpha, dt = 1.0, 0.9
    h = spin_hamiltonian(alpha, 1.0)
    out = evolve(X_PLUS, h, dt)
    oracle = np.array([cmath.exp(1j * alpha * dt / 2),
                       cmath.exp(-1j * alpha * dt / 2)]) / np.sqrt(2)
    assert np.max(np.abs(out.ket - oracle)) < 1e-12


def test_evolution_preserves_norm_and_trace():
    rng = np.random.default_rng(3)
    for _ in range(50):
        d = int(rng.integers(2, 6))
        h = Hamiltonian(Observable("h", random_hermitian(rng, d)))
        t = float(rng.uniform(-5, 5))
        pure = evolve(random_ket(rng, d), h, t)
        assert abs(np.vdot(pure.ket, pure.ket).real - 1.0) <= 1e-10
        mixed = evolve(QuantumState.maximally_mixed(d), h, t)
        assert abs(np.trace(mixed.rho).real - 1.0) <= 1e-10


def test_evolution_round_trip_is_identity():
    rng = np.random.default_rng(4)
    for _ in range(50):
        d = int(rng.integers(2, 6))
        h = Hamiltonian(Observable("h", random_hermitian(rng, d)))
        st = random_ket(rng, d)
        t = float(rng.uniform(-5, 5))
        back = evolve(evolve(st, h, t), h, -t)
        assert states_equal_up_to_phase(back, st, 1e-9)


def test_evolve_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        evolve(QuantumState.basis_ket(3, 0), spin_hamiltonian(), 1.0)


# ---------------------------------------------------------------------------
# Born probabilities

def test_probabilities_of_orthogonal_basis_state():
    sx_eig = spectral_decompose(spin_operator("x"))
    np.testing.assert_allclose(born_probabilities(Z_PLUS, sx_eig), [0.5, 0.5], atol=1e-12)


def test_probabilities_of_own_eigenstate():
    sx_eig = spectral_decompose(spin_operator("x"))
    p = born_probabilities(X_PLUS, sx_eig)
    assert p[0] <= 1e-15 and abs(p[1] - 1.0) <= 1e-12  # ascending eigenvalue order


def test_drifted_probability_matches_cosine_law():
    # oracle: direct 2x2 complex arithmetic, no kernel calls
    alpha = 1.0
    sx_eig = spectral_decompose(spin_operator("x"))
    h = spin_hamiltonian(alpha, 1.0)
    for dt in np.linspace(0.0, 7.0, 29):
        drifted = evolve(X_PLUS, h, float(dt))
        p = born_probabilities(drifted, sx_eig)
        amp = (cmath.exp(1j * alpha * dt / 2) + cmath.exp(-1j * alpha * dt / 2)) / 2.0
        assert abs(p[1] - abs(amp) ** 2) < 1e-12


def test_probabilities_sum_to_one():
    rng = np.random.default_rng(5)
    for _ in range(100):
        d = int(rng.integers(2, 7))
        eig = spectral_decompose(Observable("m", random_hermitian(rng, d)))
        for state in (random_ket(rng, d), QuantumState.maximally_mixed(d)):
            p = born_probabilities(state, eig)
            assert all(0.0 <= x <= 1.0 for x in p)
            assert abs(sum(p) - 1.0) <= 1e-10


# ---------------------------------------------------------------------------
# collapse

def test_collapse_onto_x_plus():
    sx_eig = spectral_decompose(spin_operator("x"))
    out = collapse(Z_PLUS, sx_eig, 1)
    assert abs(out.probability - 0.5) < 1e-12
    assert abs(out.eigenvalue - 0.5) < 1e-12
    assert states_equal_up_to_phase(out.post_state, X_PLUS, 1e-12)


def test_collapse_of_eigenstate_is_identity():
    sz_eig = spectral_decompose(spin_operator("z"))
    out = collapse(Z_MINUS, sz_eig, 0)
    assert out.probability == pytest.approx(1.0, abs=1e-12)
    assert states_equal_up_to_phase(out.post_state, Z_MINUS, 1e-12)


def test_mixed_qutrit_collapse_against_dense_oracle():
    rng = np.random.default_rng(6)
    state = QuantumState.maximally_mixed(3)
    obs = Observable("m", random_hermitian(rng, 3))
    eig = spectral_decompose(obs)
    rho = state.rho
    for k, proj in enumerate(eig.projectors):
        # oracle: brute-force matrix products
        p = float(np.trace(proj @ rho).real)
        expected = proj @ rho @ proj / p
        out = collapse(state, eig, k)
        assert abs(out.probability - p) < 1e-12
        assert np.max(np.abs(out.post_state.rho - expected)) < 1e-12


def test_collapse_is_idempotent():
    rng = np.random.default_rng(7)
    for _ in range(30):
        d = int(rng.integers(2, 6))
        eig = spectral_decompose(Observable("m", random_hermitian(rng, d)))
        state = random_ket(rng, d)
        p = born_probabilities(state, eig)
        k = int(np.argmax(p))
        once = collapse(state, eig, k)
        twice = collapse(once.post_state, eig, k)
        assert twice.probability == pytest.approx(1.0, abs=1e-12)
        assert states_equal_up_to_phase(twice.post_state, once.post_state, 1e-12)


def test_collapse_error_conditions():
    sz_eig = spectral_decompose(spin_operator("z"))
    with pytest.raises(ZeroProbabilityOutcome):
        collapse(Z_PLUS, sz_eig, 0)  # spin-down outcome has probability 0
    with pytest.raises(IndexOutOfRange):
        collapse(Z_PLUS, sz_eig, 2)
    with pytest.raises(DimensionMismatch):
        collapse(QuantumState.basis_ket(3, 0), sz_eig, 0)


# ---------------------------------------------------------------------------
# energies

def test_expectation_values():
    h = spin_hamiltonian(1.0, 1.0)
    assert expectation(Z_PLUS, h.observable) == pytest.approx(-0.5, abs=1e-12)
    assert expectation(X_PLUS, h.observable) == pytest.approx(0.0, abs=1e-12)
    assert expectation(X_MINUS, h.observable) == pytest.approx(0.0, abs=1e-12)
    assert expectation(QuantumState.maximally_mixed(2), h.observable) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DimensionMismatch):
        expectation(QuantumState.basis_ket(3, 0), h.observable)


def test_measurement_pumps_ground_state_energy():
    h = spin_hamiltonian(1.0, 1.0)
    after = expected_post_measurement_energy(Z_PLUS, spin_operator("x"), h)
    assert after == pytest.approx(0.0, abs=1e-12)  # gain of +1/2 over -1/2


def test_commuting_measurement_conserves_energy():
    h = spin_hamiltonian(1.0, 1.0)
    after = expected_post_measurement_energy(Z_PLUS, spin_operator("z"), h)
    assert after == pytest.approx(-0.5, abs=1e-12)


def test_post_measurement_energy_matches_collapse_compose_oracle():
    rng = np.random.default_rng(8)
    for _ in range(25):
        h = Hamiltonian(Observable("h", random_hermitian(rng, 5)))
        obs = Observable("a", random_hermitian(rng, 5))
        state = ground_state(h)
        eig = spectral_decompose(obs)
        probs = born_probabilities(state, eig)
        # oracle: explicit collapse on every reachable outcome, then expectation
        oracle = sum(p * expectation(collapse(state, eig, k).post_state, h.observable)
                     for k, p in enumerate(probs) if p > 1e-14)
        direct = expected_post_measurement_energy(state, obs, h)
        assert abs(direct - oracle) < 1e-10


def test_energy_gain_theorem():
    rng = np.random.default_rng(9)
    checked = 0
    while checked < 200:
        d = int(rng.integers(2, 7))
        h = Hamiltonian(Observable("h", random_hermitian(rng, d)))
        eig_h = spectral_decompose(h.observable)
        if eig_h.multiplicities[0] != 1:
            continue
        obs = Observable("a", random_hermitian(rng, d))
        g = ground_state(h)
        residual = obs.matrix @ g.ket - expectation(g, obs) * g.ket
        if np.linalg.norm(residual) <= 1e-6:
            continue
        e_ground = eig_h.eigenvalues[0]
        assert expected_post_measurement_energy(g, obs, h) > e_ground + 1e-12
        checked += 1


def test_commuting_observable_keeps_ground_energy():
    rng = np.random.default_rng(10)
    for _ in range(20):
        d = int(rng.integers(2, 6))
        h = Hamiltonian(Observable("h", random_hermitian(rng, d)))
        eig_h = spectral_decompose(h.observable)
        # an observable built from H's own projectors commutes with H exactly
        weights = rng.standard_normal(eig_h.n_outcomes)
        commuting = Observable("c", sum(w * p for w, p in zip(weights, eig_h.projectors)))
        g = ground_state(h)
        value = expected_post_measurement_energy(g, commuting, h)
        assert abs(value - expectation(g, h.observable)) < 1e-10


# ---------------------------------------------------------------------------
# ground state

def test_ground_state_of_spin_hamiltonian():
    g = ground_state(spin_hamiltonian(1.0, 1.0))
    assert states_equal_up_to_phase(g, Z_PLUS, 1e-12)
    flipped = ground_state(spin_hamiltonian(-1.0, 1.0))
    assert states_equal_up_to_phase(flipped, Z_MINUS, 1e-12)


def test_ground_state_of_diagonal_matrix():
    g = ground_state(Hamiltonian(Observable("h", np.diag([3.0, 1.0, 2.0]))))
    assert states_equal_up_to_phase(g, QuantumState.basis_ket(3, 1), 1e-12)


def test_ground_state_rayleigh_quotient():
    rng = np.random.default_rng(11)
    for _ in range(25):
        h = Hamiltonian(Observable("h", random_hermitian(rng, 6)))
        g = ground_state(h)
        # oracle: numpy eigensolver
        assert abs(expectation(g, h.observable) - np.linalg.eigvalsh(h.matrix)[0]) < 1e-10


def test_degenerate_ground_state_is_flagged():
    h = Hamiltonian(Observable("h", np.diag([1.0, 1.0, 4.0])))
    with pytest.warns(DegenerateGroundStateWarning):
        g = ground_state(h)
    assert abs(expectation(g, h.observable) - 1.0) < 1e-12
    with pytest.warns(DegenerateGroundStateWarning):
        again = ground_state(h)
    assert states_equal_up_to_phase(g, again, 1e-12)  # deterministic representative


# ---------------------------------------------------------------------------
# ray equality

def test_phase_equality():
    phased = QuantumState.from_ket(np.exp(0.73j) * Z_PLUS.ket)
    assert states_equal_up_to_phase(Z_PLUS, phased, 1e-12)
    assert not states_equal_up_to_phase(Z_PLUS, Z_MINUS, 1e-9)


def test_full_period_returns_to_start():
    alpha = 1.0
    h = spin_hamiltonian(alpha, 1.0)
    out = evolve(X_PLUS, h, 2 * np.pi / alpha)
    assert states_equal_up_to_phase(out, X_PLUS, 1e-12)
    half = evolve(X_PLUS, h, np.pi / alpha)
    assert not states_equal_up_to_phase(half, X_PLUS, 1e-9)


def test_equality_requires_matching_kind_and_dim():
    with pytest.raises(KindMismatch):
        states_equal_up_to_phase(Z_PLUS, QuantumState.maximally_mixed(2))
    with pytest.raises(DimensionMismatch):
        states_equal_up_to_phase(Z_PLUS, QuantumState.basis_ket(3, 0))


def test_mixed_state_equality():
    a = QuantumState.maximally_mixed(2)
    b = QuantumState.from_density(np.diag([0.5, 0.5]))
    assert states_equal_up_to_phase(a, b, 1e-12)
    c = QuantumState.from_density(np.diag([0.6, 0.4]))
    assert not states_equal_up_to_phase(a, c, 1e-9)
