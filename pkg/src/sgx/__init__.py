"""Cascaded spin-measurement beam networks with exact and Monte Carlo engines.

The package simulates networks of projective measurement devices on a
finite-dimensional quantum system: a source emits particles, splitters
measure an observable and route each outcome to the next device, and
camera/battery sinks collect them.  Every beam carries a particle count, a
quantum state and its total energy, and an energy ledger accounts for the
energy each measurement device injects into the system.
"""

from .eigen import Eigensystem, JacobiConvergenceError, NonHermitianInput
from .quantum import (
    MIXED,
    PURE,
    DegenerateGroundStateWarning,
    DimensionMismatch,
    Hamiltonian,
    IndexOutOfRange,
    KindMismatch,
    MeasurementOutcome,
    Observable,
    QuantumState,
    ZeroProbabilityOutcome,
    born_probabilities,
    collapse,
    evolve,
    expectation,
    expected_post_measurement_energy,
    ground_state,
    ket_fidelity,
    spectral_decompose,
    spin_hamiltonian,
    spin_operator,
    states_equal_up_to_phase,
)
from .rng import counter_uniform, counter_uniforms
from .network import (
    BATTERY,
    CAMERA,
    Beam,
    BeamNetwork,
    CycleDetected,
    DuplicateDeviceName,
    EnergyLedger,
    InvalidRoute,
    MissingSource,
    NetworkError,
    NoBatteryInNetwork,
    RunResult,
    Sink,
    SinkTally,
    Source,
    Splitter,
    UnreachableDevice,
    UnroutedBranch,
    battery_yield,
    build_network,
    compute_ledger,
    propagate_expectation,
    propagate_monte_carlo,
)
from .dsl import (
    ExperimentSpec,
    ParseError,
    ParseErrorKind,
    RouteDecl,
    SinkDecl,
    SourceDecl,
    SplitterDecl,
    bundled_experiment_path,
    format_experiment,
    load_experiment,
    parse_experiment,
)
from .report import render_report, render_sweep, state_label

__version__ = "0.1.0"
