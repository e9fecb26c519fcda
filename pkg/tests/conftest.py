"""Shared helpers for building random matrices, states and networks."""

import numpy as np

from sgx import (
    ExperimentSpec,
    Hamiltonian,
    Observable,
    QuantumState,
    RouteDecl,
    SinkDecl,
    SourceDecl,
    SplitterDecl,
    spectral_decompose,
)
from sgx.dsl import format_complex_literal


def random_hermitian(rng, dim):
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (m + m.conj().T)


def random_ket(rng, dim):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return QuantumState.from_ket(v / np.linalg.norm(v))


def random_unitary(rng, dim):
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def ket_decl(state):
    return "ket[" + ", ".join(format_complex_literal(z) for z in state.ket) + "]"


def make_spec(devices, routes, *, name="test", dim=2, hbar=1.0, alpha=1.0,
              hamiltonian=None, observables=None):
    if hamiltonian is None:
        hamiltonian = Hamiltonian(
            Observable("hamiltonian", -0.5 * np.diag([1.0, -1.0])), hbar=hbar, alpha=alpha)
    return ExperimentSpec(name, dim, hbar, alpha, hamiltonian, observables or {},
                          tuple(devices), tuple(routes))


def single_splitter_spec(obs_matrix, source_state, *, count=10000, dim=None,
                         h_matrix=None, time=0.0, battery_branch=None, name="single"):
    """source -> splitter -> one sink per outcome."""
    dim = dim if dim is not None else source_state.dim
    obs = Observable("m", obs_matrix)
    n_out = spectral_decompose(obs).n_outcomes
    if h_matrix is None:
        h_matrix = np.zeros((dim, dim))
    ham = Hamiltonian(Observable("hamiltonian", h_matrix))
    decl = ket_decl(source_state) if source_state.is_pure else "mixed"
    devices = [SourceDecl("src", count, source_state, decl),
               SplitterDecl("spl", "m", time)]
    routes = [RouteDecl("src", None, "spl")]
    for k in range(n_out):
        kind = "battery" if k == battery_branch else "camera"
        devices.append(SinkDecl(f"sink{k}", kind))
        routes.append(RouteDecl("spl", k, f"sink{k}"))
    return make_spec(devices, routes, name=name, dim=dim, hamiltonian=ham,
                     observables={"m": obs})


def random_network_spec(rng, dim, *, count=10000, name="random"):
    """Random DAG: source -> chain of 1..3 splitters with extra cross-links
    to later splitters, every remaining branch terminated by a sink."""
    h = Hamiltonian(Observable("hamiltonian", random_hermitian(rng, dim)))
    observables = {f"ob{i}": Observable(f"ob{i}", random_hermitian(rng, dim))
                   for i in range(int(rng.integers(1, 3)))}
    obs_names = list(observables)
    n_spl = int(rng.integers(1, 4))
    splitters = [SplitterDecl(f"s{i}", obs_names[int(rng.integers(len(obs_names)))],
                              float(rng.uniform(0.0, 1.0)))
                 for i in range(n_spl)]

    if rng.random() < 0.5:
        state = random_ket(rng, dim)
        decl = ket_decl(state)
    else:
        state = QuantumState.maximally_mixed(dim)
        decl = "mixed"
    devices = [SourceDecl("src", count, state, decl)] + list(splitters)
    routes = [RouteDecl("src", None, "s0")]
    sinks = []
    for i, spl in enumerate(splitters):
        n_out = spectral_decompose(observables[spl.observable]).n_outcomes
        for k in range(n_out):
            if i + 1 < n_spl and k == 0:
                dst = f"s{i + 1}"  # keep every splitter reachable
            elif i + 1 < n_spl and rng.random() < 0.4:
                dst = f"s{int(rng.integers(i + 1, n_spl))}"
            else:
                dst = f"snk{len(sinks)}"
                sinks.append(SinkDecl(dst, "battery" if rng.random() < 0.3 else "camera"))
            routes.append(RouteDecl(spl.name, k, dst))
    devices += sinks
    return make_spec(devices, routes, name=name, dim=dim, hamiltonian=h,
                     observables=observables)
