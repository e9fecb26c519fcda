"""Built-in regression checks for the bundled cascade topology.

``verify`` only knows two network shapes: the full three-splitter cascade
(z-measurement preparing stage, x-measurement stage, final z-measurement
with a battery on the lower branch) and the counterfactual variant with the
middle x-stage removed.  Anything else is reported as a topology mismatch so
the caller can exit with the dedicated status code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsl import ExperimentSpec
from .network import (
    BATTERY,
    CAMERA,
    BeamNetwork,
    Sink,
    Splitter,
    battery_yield,
    build_network,
    propagate_expectation,
)
from .quantum import spin_hamiltonian, spin_operator
from .report import state_label

_MATCH_TOL = 1e-9


class TopologyMismatch(Exception):
    """Input network is not one of the shapes verify is defined for."""


@dataclass
class VerifyCheck:
    description: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        suffix = f"  ({self.detail})" if self.detail and not self.passed else ""
        return f"{status}  {self.description}{suffix}"


def _matrices_match(a: np.ndarray, b: np.ndarray) -> bool:
    scale = max(1.0, float(np.max(np.abs(b))))
    return float(np.max(np.abs(a - b))) <= _MATCH_TOL * scale


def _splitter_or_none(net: BeamNetwork, name: str) -> Splitter | None:
    dev = net.devices.get(name)
    return dev if isinstance(dev, Splitter) else None


def _sink_kind(net: BeamNetwork, name: str) -> str | None:
    dev = net.devices.get(name)
    return dev.flavor if isinstance(dev, Sink) else None


def _classify(spec: ExperimentSpec, net: BeamNetwork) -> tuple[str, dict[str, str]]:
    """Return ("full"|"no_b", device names) or raise TopologyMismatch."""
    def fail(why: str):
        raise TopologyMismatch(why)

    if net.dim != 2:
        fail(f"network dimension is {net.dim}, expected 2")
    sz = spin_operator("z", spec.hbar).matrix
    sx = spin_operator("x", spec.hbar).matrix
    if not _matrices_match(net.hamiltonian.matrix,
                           spin_hamiltonian(spec.alpha, spec.hbar).matrix):
        fail("hamiltonian is not -alpha * Sz")

    source = net.devices[net.source]
    rho = source.state.density()
    if float(np.max(np.abs(rho - np.eye(2) / 2))) > _MATCH_TOL:
        fail("source state is not maximally mixed")

    a_name = net.routes[(net.source, None)]
    a = _splitter_or_none(net, a_name)
    if a is None or not _matrices_match(a.observable.matrix, sz):
        fail("first device after the source is not a z-splitter")
    if _sink_kind(net, net.routes[(a_name, 0)]) != CAMERA:
        fail("lower branch of the preparing splitter must feed a camera")

    next_name = net.routes[(a_name, 1)]
    nxt = _splitter_or_none(net, next_name)
    if nxt is None:
        fail("upper branch of the preparing splitter must feed a splitter")

    if _matrices_match(nxt.observable.matrix, sx):
        b_name = next_name
        if _sink_kind(net, net.routes[(b_name, 1)]) != CAMERA:
            fail("upper branch of the x-splitter must feed a camera")
        c_name = net.routes[(b_name, 0)]
        c = _splitter_or_none(net, c_name)
        if c is None or not _matrices_match(c.observable.matrix, sz):
            fail("lower branch of the x-splitter must feed a z-splitter")
        shape = "full"
        names = {"A": a_name, "B": b_name, "C": c_name}
    elif _matrices_match(nxt.observable.matrix, sz):
        c_name = next_name
        c = nxt
        shape = "no_b"
        names = {"A": a_name, "C": c_name}
    else:
        fail("second splitter measures neither x nor z")

    if _sink_kind(net, net.routes[(c_name, 1)]) != CAMERA:
        fail("upper branch of the final z-splitter must feed a camera")
    if _sink_kind(net, net.routes[(c_name, 0)]) != BATTERY:
        fail("lower branch of the final z-splitter must feed the battery")
    return shape, names


def verify_experiment(spec: ExperimentSpec) -> tuple[str, list[VerifyCheck]]:
    """Run the expectation engine and check the built-in expected values."""
    net = build_network(spec)
    shape, names = _classify(spec, net)
    result = propagate_expectation(net)
    beams = {b.id: b for b in result.beams}
    checks: list[VerifyCheck] = []

    n_source = float(net.devices[net.source].count)
    n = n_source / 2.0  # particles surviving the preparing stage
    alpha, hbar = spec.alpha, spec.hbar
    unit = alpha * hbar

    def close(got: float, expected: float) -> bool:
        return abs(got - expected) <= 1e-9 * max(1.0, abs(expected))

    def check(description: str, got, expected, exact: bool = False):
        ok = (got == expected) if exact else close(got, expected)
        checks.append(VerifyCheck(description, ok, f"expected {expected!r}, got {got!r}"))

    def check_label(description: str, beam_id: str, label: str):
        got = state_label(beams[beam_id].state)
        checks.append(VerifyCheck(description, got == label,
                                  f"expected {label}, got {got}"))

    a_name = names["A"]
    c_name = names["C"]

    if shape == "full":
        b_name = names["B"]
        for dev, lower, upper in ((a_name, 0, 1), (b_name, 0, 1), (c_name, 0, 1)):
            into = sum(b.count for b in result.beams if b.dst == dev)
            for branch in (lower, upper):
                frac = beams[f"{dev}.{branch}"].count / into
                check(f"branch probability {dev}.{branch} = 1/2", frac, 0.5)
        expected_rows = [
            (f"{a_name}.1", n, "|z+>", -n * unit / 2),
            (f"{a_name}.0", n, "|z->", +n * unit / 2),
            (f"{b_name}.1", n / 2, "|x+>", 0.0),
            (f"{b_name}.0", n / 2, "|x->", 0.0),
            (f"{c_name}.1", n / 4, "|z+>", -n * unit / 8),
            (f"{c_name}.0", n / 4, "|z->", +n * unit / 8),
        ]
        for beam_id, count, label, energy in expected_rows:
            check(f"beam {beam_id} count", beams[beam_id].count, count)
            check_label(f"beam {beam_id} state", beam_id, label)
            check(f"beam {beam_id} energy", beams[beam_id].total_energy, energy)
        check(f"device {b_name} injects n*alpha*hbar/2",
              result.ledger.per_device_injected[b_name], n * unit / 2)
        check(f"device {b_name} injection per incoming particle = alpha*hbar/2",
              result.ledger.injected_per_incoming(b_name), unit / 2)
        check(f"device {b_name} injection per source particle = alpha*hbar/4",
              result.ledger.injected_per_source_particle(b_name), unit / 4)
        count, energy = battery_yield(result)
        check("battery count", count, n / 4)
        check("battery energy", energy, n * unit / 8)
        chain_end = (beams[f"{b_name}.1"].total_energy
                     + beams[f"{c_name}.1"].total_energy
                     + beams[f"{c_name}.0"].total_energy)
        check("prepared-beam energy", beams[f"{a_name}.1"].total_energy, -n * unit / 2)
        check("post-cascade energy of the prepared beam", chain_end, 0.0)
    else:
        count, energy = battery_yield(result)
        check("battery count (x-stage removed)", count, 0.0, exact=True)
        check("battery energy (x-stage removed)", energy, 0.0, exact=True)
        check(f"all prepared particles reach {c_name}.1",
              beams[f"{c_name}.1"].count, n)
        check_label("final beam state unchanged", f"{c_name}.1", "|z+>")
        final = beams[f"{c_name}.1"].total_energy + beams[f"{c_name}.0"].total_energy
        check("final energy unchanged at -n*alpha*hbar/2", final, -n * unit / 2)
    return shape, checks
