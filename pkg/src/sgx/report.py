"""Render run results as an aligned table, CSV or JSON.

Numeric fields are printed with 12 significant digits in every format.
Beam states are labeled with the nearest named spin-half ket when the
overlap is essentially exact, otherwise the amplitudes (or density matrix)
are printed using the same literal syntax the experiment language uses.
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from .dsl import format_complex_literal, format_matrix_literal
from .network import RunResult
from .quantum import QuantumState, ket_fidelity

LABEL_TOL = 1e-9

_NAMED_KETS = (
    ("|z+>", np.array([1.0, 0.0], dtype=np.complex128)),
    ("|z->", np.array([0.0, 1.0], dtype=np.complex128)),
    ("|x+>", np.array([1.0, 1.0], dtype=np.complex128) / np.sqrt(2.0)),
    ("|x->", np.array([1.0, -1.0], dtype=np.complex128) / np.sqrt(2.0)),
)


def _g12(x: float) -> str:
    return f"{float(x):.12g}"


def _round12(x: float) -> float:
    return float(_g12(x))


def _fmt_count(count) -> str:
    return str(count) if isinstance(count, int) else _g12(count)


def state_label(state: QuantumState) -> str:
    """Named ket, 'rho=I/d' for the maximally mixed state, else a literal."""
    if state.dim == 2:
        for name, ket in _NAMED_KETS:
            if ket_fidelity(state, ket) >= 1.0 - LABEL_TOL:
                return name
    if state.is_pure:
        return "[" + ", ".join(format_complex_literal(z) for z in state.ket) + "]"
    d = state.dim
    if float(np.max(np.abs(state.rho - np.eye(d) / d))) <= LABEL_TOL:
        return f"rho=I/{d}"
    return "rho=" + format_matrix_literal(state.rho)


def render_report(result: RunResult, format: str = "table") -> str:
    if format == "table":
        return _render_table(result)
    if format == "csv":
        return _render_csv(result)
    if format == "json":
        return _render_json(result)
    raise ValueError(f"unknown report format {format!r}")


def _beam_rows(result: RunResult) -> list[tuple[str, str, str, str]]:
    return [(b.id, _fmt_count(b.count), state_label(b.state), _g12(b.total_energy))
            for b in result.beams]


def _render_table(result: RunResult) -> str:
    header = ("beam", "#particles", "state", "E_tot")
    rows = _beam_rows(result)
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) if rows else len(header[i])
              for i in range(4)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    for row in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    if not rows:
        return lines[0] + "\n"

    ledger = result.ledger
    lines.append("")
    lines.append("injections:")
    for name, energy in ledger.per_device_injected.items():
        lines.append(f"  {name}: total={_g12(energy)}"
                     f" per_incoming={_g12(ledger.injected_per_incoming(name))}"
                     f" per_source={_g12(ledger.injected_per_source_particle(name))}")
    lines.append(f"  network: in={_g12(ledger.network_total_in)}"
                 f" out={_g12(ledger.network_total_out)}")
    lines.append("sinks:")
    for name, tally in result.sink_tallies.items():
        lines.append(f"  {name}: count={_fmt_count(tally.count)}"
                     f" mean_energy={_g12(tally.mean_energy)} kind={tally.flavor}")
    return "\n".join(lines) + "\n"


def _render_csv(result: RunResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["beam", "from", "branch", "to", "count", "state", "energy"])
    for b in result.beams:
        writer.writerow([b.id, b.src, "" if b.branch is None else b.branch, b.dst,
                         _fmt_count(b.count), state_label(b.state), _g12(b.total_energy)])
    return buf.getvalue()


def _render_json(result: RunResult) -> str:
    ledger = result.ledger
    doc = {
        "mode": result.mode,
        "seed": result.seed,
        "beams": [
            {
                "id": b.id,
                "from": b.src,
                "branch": b.branch,
                "to": b.dst,
                "count": b.count if isinstance(b.count, int) else _round12(b.count),
                "state": state_label(b.state),
                "energy": _round12(b.total_energy),
            }
            for b in result.beams
        ],
        "ledger": {
            "per_beam": {k: _round12(v) for k, v in ledger.per_beam.items()},
            "per_device_injected": {k: _round12(v)
                                    for k, v in ledger.per_device_injected.items()},
            "per_device_injected_per_incoming": {
                k: _round12(ledger.injected_per_incoming(k))
                for k in ledger.per_device_injected},
            "per_device_injected_per_source_particle": {
                k: _round12(ledger.injected_per_source_particle(k))
                for k in ledger.per_device_injected},
            "network_total_in": _round12(ledger.network_total_in),
            "network_total_out": _round12(ledger.network_total_out),
        },
        "sinks": {
            name: {
                "count": t.count if isinstance(t.count, int) else _round12(t.count),
                "mean_energy": _round12(t.mean_energy),
                "kind": t.flavor,
            }
            for name, t in result.sink_tallies.items()
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def render_sweep(param: str, rows: list[tuple[float, RunResult]],
                 format: str = "table") -> str:
    """One row per swept value: beam counts, injections and battery yield."""
    if not rows:
        raise ValueError("sweep produced no rows")
    first = rows[0][1]
    beam_ids = [b.id for b in first.beams]
    devices = list(first.ledger.per_device_injected)
    has_battery = any(t.flavor == "battery" for t in first.sink_tallies.values())

    header = [param] + [f"count:{b}" for b in beam_ids] + [f"injected:{d}" for d in devices]
    if has_battery:
        header += ["battery_count", "battery_energy"]

    table: list[list[str]] = []
    json_rows = []
    for value, result in rows:
        counts = {b.id: b.count for b in result.beams}
        cells = [_g12(value)]
        cells += [_fmt_count(counts[b]) for b in beam_ids]
        cells += [_g12(result.ledger.per_device_injected[d]) for d in devices]
        entry = {
            "value": _round12(value),
            "counts": {b: (counts[b] if isinstance(counts[b], int) else _round12(counts[b]))
                       for b in beam_ids},
            "injected": {d: _round12(result.ledger.per_device_injected[d]) for d in devices},
        }
        if has_battery:
            from .network import battery_yield
            count, energy = battery_yield(result)
            cells += [_fmt_count(count), _g12(energy)]
            entry["battery"] = {
                "count": count if isinstance(count, int) else _round12(count),
                "energy": _round12(energy),
            }
        table.append(cells)
        json_rows.append(entry)

    if format == "json":
        return json.dumps({"sweep": param, "rows": json_rows}, indent=2) + "\n"
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(header)
        writer.writerows(table)
        return buf.getvalue()
    if format == "table":
        widths = [max(len(header[i]), *(len(r[i]) for r in table)) for i in range(len(header))]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
        for row in table:
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {format!r}")
