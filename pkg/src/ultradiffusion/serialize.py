"""Plot-ready table and JSON output.

Every writer renders the full file content in memory, writes it to a
temporary file in the destination directory, and renames it into place, so a
failure partway through never leaves a truncated file behind. Floats are
formatted with 9 significant digits, which makes re-runs byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from collections.abc import Iterable, Mapping
from pathlib import Path

import numpy as np

from .generator import Generator
from .traces import EventTrace, PopularityCurve
from .ultrametric import UltrametricSpace

__all__ = [
    "write_curve_tsv",
    "write_distance_tsv",
    "write_fit_curve_tsv",
    "write_generator_tsv",
    "write_json",
    "write_spectrum_tsv",
    "write_trace_csv",
    "write_trajectory_tsv",
]


def _fmt(x: float) -> str:
    return f"{float(x):.9g}"


def _atomic_write(path, text: str) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=target.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_curve_tsv(path, curve: PopularityCurve) -> None:
    """Two-column table `t`, `p`."""
    lines = ["t\tp"]
    lines.extend(f"{_fmt(t)}\t{_fmt(p)}" for t, p in zip(curve.grid, curve.values))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_fit_curve_tsv(path, grid, observed, fitted, simulated=None) -> None:
    """Table `t`, `observed`, `fitted` and, when available, `simulated`."""
    grid = np.asarray(grid, dtype=float)
    columns = [("observed", np.asarray(observed, dtype=float)),
               ("fitted", np.asarray(fitted, dtype=float))]
    if simulated is not None:
        columns.append(("simulated", np.asarray(simulated, dtype=float)))
    for name, col in columns:
        if col.shape != grid.shape:
            raise ValueError(f"column {name!r} does not match the grid length")
    lines = ["\t".join(["t"] + [name for name, _ in columns])]
    for k, t in enumerate(grid):
        row = [_fmt(t)] + [_fmt(col[k]) for _, col in columns]
        lines.append("\t".join(row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_trace_csv(path, traces: Iterable[EventTrace]) -> None:
    """Event table with header `story_id,timestamp`, one row per event."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["story_id", "timestamp"])
    for trace in traces:
        for t in trace.events:
            writer.writerow([trace.story_id, _fmt(t)])
    _atomic_write(path, buffer.getvalue())


def write_distance_tsv(path, space: UltrametricSpace) -> None:
    """Distance matrix with state labels on both axes."""
    names = [f"X_{int(a) if float(a).is_integer() else _fmt(a)}" for a in space.labels]
    lines = ["\t".join(["state"] + names)]
    for name, row in zip(names, space.dist):
        lines.append("\t".join([name] + [_fmt(v) for v in row]))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_generator_tsv(path, gen: Generator) -> None:
    """Rate matrix with 1-based state indices on both axes."""
    n = gen.size
    names = [f"state_{i}" for i in range(1, n + 1)]
    lines = ["\t".join(["state"] + names)]
    for name, row in zip(names, gen.rates):
        lines.append("\t".join([name] + [_fmt(v) for v in row]))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_spectrum_tsv(path, eigenvalues) -> None:
    """Two-column table `j`, `lambda`, j counted from 1."""
    lines = ["j\tlambda"]
    lines.extend(f"{j}\t{_fmt(lam)}" for j, lam in enumerate(np.asarray(eigenvalues), start=1))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_trajectory_tsv(path, grid, trajectory) -> None:
    """Table `t`, `P_1` .. `P_N` for an integrated distribution."""
    grid = np.asarray(grid, dtype=float)
    traj = np.asarray(trajectory, dtype=float)
    if traj.ndim != 2 or traj.shape[0] != grid.size:
        raise ValueError("trajectory must have one row per grid time")
    lines = ["\t".join(["t"] + [f"P_{i}" for i in range(1, traj.shape[1] + 1)])]
    for t, row in zip(grid, traj):
        lines.append("\t".join([_fmt(t)] + [_fmt(v) for v in row]))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path, payload: Mapping | list) -> None:
    """JSON with sorted keys and a trailing newline."""
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
