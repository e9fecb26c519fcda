"""Beam-network simulator: a DAG of measurement devices with two engines.

A network has one particle source, splitters that measure an observable and
fan the beam out across the outcome eigenspaces, and camera/battery sinks.
The expectation engine propagates exact fractional counts (each splitter
divides the incoming count by the Born probabilities); the Monte Carlo engine
samples one trajectory per particle with counter-based randomness so results
are bit-identical for a given seed regardless of how work is threaded.

Each beam records its particle count, quantum state and total energy
(count times the energy expectation), and the energy ledger charges every
device with the energy it injects: outgoing minus incoming beam energy.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import dsl
from .eigen import Eigensystem
from .quantum import (
    COLLAPSE_FLOOR,
    DimensionMismatch,
    Hamiltonian,
    Observable,
    QuantumState,
    born_probabilities,
    collapse,
    evolve,
    expectation,
    spectral_decompose,
)
from .rng import counter_uniforms

CAMERA = "camera"
BATTERY = "battery"

EXPECTATION = "expectation"
MONTE_CARLO = "montecarlo"

_SEED_LIMIT = 1 << 64


class NetworkError(ValueError):
    """Invalid network description."""


class MissingSource(NetworkError):
    pass


class DuplicateDeviceName(NetworkError):
    pass


class UnroutedBranch(NetworkError):
    pass


class InvalidRoute(NetworkError):
    pass


class CycleDetected(NetworkError):
    pass


class UnreachableDevice(NetworkError):
    pass


class NoBatteryInNetwork(NetworkError):
    pass


@dataclass(frozen=True)
class Source:
    name: str
    count: int
    state: QuantumState


@dataclass(frozen=True)
class Splitter:
    name: str
    observable: Observable
    time: float = 0.0


@dataclass(frozen=True)
class Sink:
    name: str
    flavor: str  # CAMERA | BATTERY


Device = Source | Splitter | Sink


@dataclass
class Beam:
    """One edge of the network: who emitted it, where it goes, what it carries."""

    id: str
    src: str
    branch: int | None
    dst: str
    count: float | int
    state: QuantumState
    total_energy: float


@dataclass
class SinkTally:
    count: float | int
    mean_energy: float
    flavor: str


@dataclass
class EnergyLedger:
    """Per-beam energies and per-device injected energy (out minus in).

    The device injections of all pass-through devices sum to
    ``network_total_out - network_total_in``; sinks only absorb and the
    source only emits, so neither appears in ``per_device_injected``.
    ``per_device_in_count`` and ``source_count`` allow reporting injections
    per incoming particle and per source particle.
    """

    per_beam: dict[str, float]
    per_device_injected: dict[str, float]
    per_device_in_count: dict[str, float]
    network_total_in: float
    network_total_out: float
    source_count: float

    def injected_per_incoming(self, device: str) -> float:
        n = self.per_device_in_count.get(device, 0.0)
        return self.per_device_injected[device] / n if n else 0.0

    def injected_per_source_particle(self, device: str) -> float:
        return self.per_device_injected[device] / self.source_count if self.source_count else 0.0

    def conservation_residual(self) -> float:
        total = sum(self.per_device_injected.values())
        return abs(total - (self.network_total_out - self.network_total_in))


@dataclass
class RunResult:
    mode: str  # EXPECTATION | MONTE_CARLO
    seed: int | None
    trajectories: int | None
    beams: list[Beam]
    ledger: EnergyLedger
    sink_tallies: dict[str, SinkTally]


@dataclass
class BeamNetwork:
    name: str
    dim: int
    hamiltonian: Hamiltonian
    devices: dict[str, Device]          # declaration order
    routes: dict[tuple[str, int | None], str]
    source: str
    order: tuple[str, ...]              # topological
    eigensystems: dict[str, Eigensystem]  # per splitter


def build_network(spec: dsl.ExperimentSpec) -> BeamNetwork:
    """Assemble and validate a network from a parsed experiment."""
    devices: dict[str, Device] = {}
    for decl in spec.devices:
        if decl.name in devices:
            raise DuplicateDeviceName(f"device {decl.name!r} declared twice")
        if isinstance(decl, dsl.SourceDecl):
            if decl.state.dim != spec.dim:
                raise DimensionMismatch(
                    f"source {decl.name!r} state dim {decl.state.dim} != network dim {spec.dim}")
            devices[decl.name] = Source(decl.name, decl.count, decl.state)
        elif isinstance(decl, dsl.SplitterDecl):
            obs = spec.observables.get(decl.observable)
            if obs is None:
                raise NetworkError(
                    f"splitter {decl.name!r} references undeclared observable {decl.observable!r}")
            if obs.dim != spec.dim:
                raise DimensionMismatch(
                    f"observable {obs.name!r} dim {obs.dim} != network dim {spec.dim}")
            devices[decl.name] = Splitter(decl.name, obs, decl.time)
        else:
            devices[decl.name] = Sink(decl.name, decl.kind)

    sources = [d for d in devices.values() if isinstance(d, Source)]
    if len(sources) != 1:
        raise MissingSource(f"network needs exactly one source, found {len(sources)}")
    source = sources[0]
    if spec.hamiltonian.dim != spec.dim:
        raise DimensionMismatch(
            f"hamiltonian dim {spec.hamiltonian.dim} != network dim {spec.dim}")

    eigensystems = {d.name: spectral_decompose(d.observable)
                    for d in devices.values() if isinstance(d, Splitter)}

    routes: dict[tuple[str, int | None], str] = {}
    for r in spec.routes:
        if r.src not in devices:
            raise InvalidRoute(f"route source {r.src!r} is not a declared device")
        if r.dst not in devices:
            raise InvalidRoute(f"route target {r.dst!r} is not a declared device")
        src_dev = devices[r.src]
        if isinstance(src_dev, Sink):
            raise InvalidRoute(f"sink {r.src!r} cannot emit beams")
        if isinstance(devices[r.dst], Source):
            raise InvalidRoute(f"source {r.dst!r} cannot receive beams")
        if isinstance(src_dev, Source):
            if r.branch is not None:
                raise InvalidRoute(f"source route {r.src!r} takes no branch")
        else:
            n_out = eigensystems[r.src].n_outcomes
            if r.branch is None or not 0 <= r.branch < n_out:
                raise InvalidRoute(
                    f"splitter {r.src!r} has outcomes 0..{n_out - 1}, route names {r.branch}")
        key = (r.src, r.branch)
        if key in routes:
            raise InvalidRoute(f"duplicate route from {r.src!r} branch {r.branch}")
        routes[key] = r.dst

    if (source.name, None) not in routes:
        raise UnroutedBranch(f"source {source.name!r} output is not routed")
    for name, eig in eigensystems.items():
        for k in range(eig.n_outcomes):
            if (name, k) not in routes:
                raise UnroutedBranch(
                    f"splitter {name!r} outcome {k} "
                    f"(eigenvalue {eig.eigenvalues[k]:g}) has no route")

    # Kahn topological sort, queue kept in declaration order for determinism.
    order_index = {name: i for i, name in enumerate(devices)}
    indeg = {name: 0 for name in devices}
    for dst in routes.values():
        indeg[dst] += 1
    ready = sorted((n for n, d in indeg.items() if d == 0), key=order_index.get)
    topo: list[str] = []
    while ready:
        name = ready.pop(0)
        topo.append(name)
        for (src, _branch), dst in routes.items():
            if src == name:
                indeg[dst] -= 1
                if indeg[dst] == 0:
                    ready.append(dst)
        ready.sort(key=order_index.get)
    if len(topo) != len(devices):
        cyclic = sorted(set(devices) - set(topo))
        raise CycleDetected(f"routing contains a cycle through {cyclic}")

    reachable = {source.name}
    frontier = [source.name]
    while frontier:
        name = frontier.pop()
        for (src, _branch), dst in routes.items():
            if src == name and dst not in reachable:
                reachable.add(dst)
                frontier.append(dst)
    unreachable = sorted(set(devices) - reachable)
    if unreachable:
        raise UnreachableDevice(f"devices not reachable from the source: {unreachable}")

    return BeamNetwork(spec.name, spec.dim, spec.hamiltonian, devices, routes,
                       source.name, tuple(topo), eigensystems)


# ---------------------------------------------------------------------------
# state plan (shared by both engines)

@dataclass
class _Cohort:
    """Particles sharing one path through the network, on one edge of it."""

    src: str
    branch: int | None
    dst: str
    beam_idx: int
    state: QuantumState
    emit_time: float
    ordinal: int      # splitters visited before arriving at dst
    weight: float     # expected fraction of the source count
    children: list[int] | None = None
    cum_probs: np.ndarray | None = None


@dataclass
class _Plan:
    cohorts: list[_Cohort]
    beam_keys: list[tuple[str, int | None, str]]
    beam_cohorts: list[list[int]]


def _eigenspace_representative(eig: Eigensystem, k: int) -> QuantumState:
    proj = eig.projectors[k]
    for j in range(proj.shape[1]):
        col = proj[:, j]
        norm = np.linalg.norm(col)
        if norm > 1e-8:
            return QuantumState.from_ket(col / norm)
    raise ArithmeticError("projector has no usable column")  # unreachable


def _build_plan(net: BeamNetwork) -> _Plan:
    cohorts: list[_Cohort] = []
    beam_keys: list[tuple[str, int | None, str]] = []
    beam_cohorts: list[list[int]] = []
    beam_index: dict[tuple[str, int | None, str], int] = {}

    def add(src, branch, dst, state, emit_time, ordinal, weight) -> int:
        key = (src, branch, dst)
        if key not in beam_index:
            beam_index[key] = len(beam_keys)
            beam_keys.append(key)
            beam_cohorts.append([])
        idx = len(cohorts)
        cohorts.append(_Cohort(src, branch, dst, beam_index[key], state,
                               emit_time, ordinal, weight))
        beam_cohorts[beam_index[key]].append(idx)
        return idx

    src_dev = net.devices[net.source]
    add(net.source, None, net.routes[(net.source, None)], src_dev.state, 0.0, 0, 1.0)

    i = 0
    while i < len(cohorts):
        cohort = cohorts[i]
        dst_dev = net.devices[cohort.dst]
        if isinstance(dst_dev, Splitter):
            dt = dst_dev.time - cohort.emit_time
            arrived = evolve(cohort.state, net.hamiltonian, dt)
            eig = net.eigensystems[dst_dev.name]
            probs = born_probabilities(arrived, eig)
            cohort.cum_probs = np.cumsum(probs)
            children = []
            for k in range(eig.n_outcomes):
                if probs[k] >= COLLAPSE_FLOOR:
                    child_state = collapse(arrived, eig, k).post_state
                else:
                    child_state = _eigenspace_representative(eig, k)
                children.append(add(dst_dev.name, k, net.routes[(dst_dev.name, k)],
                                    child_state, dst_dev.time,
                                    cohort.ordinal + 1, cohort.weight * probs[k]))
            cohort.children = children
        i += 1
    return _Plan(cohorts, beam_keys, beam_cohorts)


def _mixture(states: list[QuantumState], weights: list[float]) -> QuantumState:
    total = sum(weights)
    if total <= 0.0:
        weights = [1.0] * len(states)
        total = float(len(states))
    rho = np.zeros((states[0].dim, states[0].dim), dtype=np.complex128)
    for st, w in zip(states, weights):
        if w:
            rho += (w / total) * st.density()
    return QuantumState.from_density(rho)


def _assemble(net: BeamNetwork, plan: _Plan, counts, mode: str,
              seed: int | None, trajectories: int | None) -> RunResult:
    h_obs = net.hamiltonian.observable
    beams: list[Beam] = []
    for b_idx, (src, branch, dst) in enumerate(plan.beam_keys):
        members = plan.beam_cohorts[b_idx]
        total = sum(counts[ci] for ci in members)
        if len(members) == 1:
            state = plan.cohorts[members[0]].state
        else:
            realized = [float(counts[ci]) for ci in members]
            if sum(realized) <= 0.0:
                realized = [plan.cohorts[ci].weight for ci in members]
            state = _mixture([plan.cohorts[ci].state for ci in members], realized)
        beam_id = src if branch is None else f"{src}.{branch}"
        energy = float(total) * expectation(state, h_obs)
        beams.append(Beam(beam_id, src, branch, dst, total, state, energy))

    tallies: dict[str, SinkTally] = {}
    absorbed: dict[str, float] = {}
    for name, dev in net.devices.items():
        if isinstance(dev, Sink):
            tallies[name] = SinkTally(0 if mode == MONTE_CARLO else 0.0, 0.0, dev.flavor)
            absorbed[name] = 0.0
    for beam in beams:
        if beam.dst in tallies:
            tallies[beam.dst].count += beam.count
            absorbed[beam.dst] += beam.total_energy
    for name, tally in tallies.items():
        tally.mean_energy = absorbed[name] / tally.count if tally.count else 0.0

    result = RunResult(mode, seed, trajectories, beams, None, tallies)
    result.ledger = compute_ledger(result, net.hamiltonian)
    return result


def propagate_expectation(net: BeamNetwork, particles: int | None = None) -> RunResult:
    """Exact sweep: every splitter divides its beam by the Born probabilities."""
    n = float(net.devices[net.source].count if particles is None else particles)
    plan = _build_plan(net)
    counts = [cohort.weight * n for cohort in plan.cohorts]
    return _assemble(net, plan, counts, EXPECTATION, None, None)


def _mc_chunk(plan: _Plan, seed: int, lo: int, hi: int) -> np.ndarray:
    counts = np.zeros(len(plan.cohorts), dtype=np.int64)
    members: list[np.ndarray | None] = [None] * len(plan.cohorts)
    members[0] = np.arange(lo, hi, dtype=np.uint64)
    for ci, cohort in enumerate(plan.cohorts):
        ids = members[ci]
        if ids is None:
            ids = members[ci] = np.empty(0, dtype=np.uint64)
        counts[ci] = ids.size
        if cohort.children is None:
            continue
        if ids.size == 0:
            for child in cohort.children:
                members[child] = ids
            continue
        u = counter_uniforms(seed, ids, cohort.ordinal)
        branch = np.searchsorted(cohort.cum_probs, u, side="right")
        branch = np.minimum(branch, len(cohort.children) - 1)
        for k, child in enumerate(cohort.children):
            members[child] = ids[branch == k]
        members[ci] = None  # free
    return counts


def propagate_monte_carlo(net: BeamNetwork, seed: int, n_particles: int | None = None,
                          threads: int | None = None) -> RunResult:
    """Sample one trajectory per particle.

    Randomness is a pure function of (seed, particle index, visit ordinal),
    so the outcome is bit-identical for a given ``(seed, n_particles)`` no
    matter how many threads partition the particle range.
    """
    if not 0 <= seed < _SEED_LIMIT:
        raise ValueError("seed must be a 64-bit unsigned integer")
    n = net.devices[net.source].count if n_particles is None else n_particles
    if n < 1:
        raise ValueError("n_particles must be >= 1")
    if threads is None:
        threads = os.cpu_count() or 1
    threads = max(1, min(int(threads), n))

    plan = _build_plan(net)
    bounds = np.linspace(0, n, threads + 1, dtype=np.int64)
    spans = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if len(spans) == 1:
        counts = _mc_chunk(plan, seed, *spans[0])
    else:
        with ThreadPoolExecutor(max_workers=len(spans)) as pool:
            parts = list(pool.map(lambda s: _mc_chunk(plan, seed, *s), spans))
        counts = np.sum(parts, axis=0)
    counts = [int(c) for c in counts]
    return _assemble(net, plan, counts, MONTE_CARLO, seed, n)


def compute_ledger(result: RunResult, hamiltonian: Hamiltonian) -> EnergyLedger:
    """Recompute per-beam energies and per-device injections from the beam table."""
    h_obs = hamiltonian.observable
    per_beam: dict[str, float] = {}
    out_energy: dict[str, float] = {}
    in_energy: dict[str, float] = {}
    in_count: dict[str, float] = {}
    for beam in result.beams:
        energy = float(beam.count) * expectation(beam.state, h_obs)
        per_beam[beam.id] = energy
        out_energy[beam.src] = out_energy.get(beam.src, 0.0) + energy
        in_energy[beam.dst] = in_energy.get(beam.dst, 0.0) + energy
        in_count[beam.dst] = in_count.get(beam.dst, 0.0) + float(beam.count)

    pass_through = sorted(set(out_energy) & set(in_energy))
    sources = set(out_energy) - set(in_energy)
    sinks = set(in_energy) - set(out_energy)
    injected = {name: out_energy[name] - in_energy[name] for name in pass_through}
    total_in = sum(out_energy[name] for name in sources)
    total_out = sum(in_energy[name] for name in sinks)
    source_count = sum(float(b.count) for b in result.beams if b.src in sources)
    return EnergyLedger(per_beam, injected,
                        {name: in_count[name] for name in pass_through},
                        total_in, total_out, source_count)


def battery_yield(result: RunResult) -> tuple[float, float]:
    """Total (count, absorbed energy) over all battery sinks."""
    batteries = [(name, t) for name, t in result.sink_tallies.items()
                 if t.flavor == BATTERY]
    if not batteries:
        raise NoBatteryInNetwork("network has no battery sink")
    count = sum(t.count for _name, t in batteries)
    energy = sum(t.count * t.mean_energy for _name, t in batteries)
    return count, energy
