"""Event traces and popularity curves.

A trace records when one story (a post, a paper, a package) received each of
its rebroadcasts: votes, comments, downloads, measured in seconds since
submission. A popularity curve is the cumulative fraction of rebroadcasts seen
by time t, sampled on a uniform grid. Curves are what the model layer fits.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EventTrace",
    "PopularityCurve",
    "TraceFormatError",
    "aggregate_mean",
    "empirical_curve",
    "parse_trace_csv",
    "uniform_grid",
]


class TraceFormatError(ValueError):
    """A trace CSV that cannot be parsed into event traces."""


def _readonly(values, dtype=float) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class EventTrace:
    """Rebroadcast times of one story, seconds since submission.

    Events are sorted ascending, strictly positive, and never exceed the
    observation horizon. Ties are legal: simultaneous events stay distinct
    here and are only collapsed when a state space is built from the trace.
    """

    story_id: str
    events: np.ndarray
    horizon: float

    def __post_init__(self) -> None:
        if not self.story_id:
            raise ValueError("story_id must be nonempty")
        events = _readonly(self.events)
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "horizon", float(self.horizon))
        if not math.isfinite(self.horizon) or self.horizon <= 0:
            raise ValueError(f"story {self.story_id}: horizon must be positive and finite")
        if events.ndim != 1:
            raise ValueError(f"story {self.story_id}: events must be one-dimensional")
        if events.size == 0:
            raise ValueError(f"story {self.story_id}: trace needs at least one event")
        if not np.all(np.isfinite(events)):
            raise ValueError(f"story {self.story_id}: event times must be finite")
        if np.any(np.diff(events) < 0):
            raise ValueError(f"story {self.story_id}: events must be sorted ascending")
        if events[0] <= 0:
            raise ValueError(f"story {self.story_id}: event times must be positive")
        if events[-1] > self.horizon:
            raise ValueError(
                f"story {self.story_id}: event at t={events[-1]!r} exceeds "
                f"horizon {self.horizon!r}"
            )

    @property
    def count(self) -> int:
        """Number of recorded events."""
        return int(self.events.size)


@dataclass(frozen=True)
class PopularityCurve:
    """Cumulative response fraction sampled on a uniform time grid."""

    grid: np.ndarray
    values: np.ndarray
    saturation_count: int

    def __post_init__(self) -> None:
        grid = _readonly(self.grid)
        values = _readonly(self.values)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "saturation_count", int(self.saturation_count))
        if grid.ndim != 1 or values.ndim != 1:
            raise ValueError("grid and values must be one-dimensional")
        if grid.size != values.size:
            raise ValueError(f"grid has {grid.size} points but values has {values.size}")
        if grid.size == 0:
            raise ValueError("curve needs at least one grid point")
        if grid[0] < 0:
            raise ValueError("grid must start at a nonnegative time")
        steps = np.diff(grid)
        if grid.size > 1:
            if np.any(steps <= 0):
                raise ValueError("grid must be strictly increasing")
            # Uniform spacing keeps downstream interpolation and fitting honest.
            if np.max(steps) - np.min(steps) > 1e-6 * np.max(steps):
                raise ValueError("grid must be uniformly spaced")
        if self.saturation_count < 1:
            raise ValueError("saturation count must be a positive integer")
        if np.min(values) < 0 or np.max(values) > 1 + 1e-12:
            raise ValueError("curve values must lie in [0, 1]")
        if np.any(np.diff(values) < -1e-12):
            raise ValueError("curve values must be nondecreasing")

    @property
    def horizon(self) -> float:
        """Last grid time, the curve's observation horizon."""
        return float(self.grid[-1])


def uniform_grid(horizon: float, grid_points: int) -> np.ndarray:
    """Uniform sampling times k*horizon/n for k = 1..n.

    The grid excludes zero and includes the horizon exactly.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if grid_points < 1:
        raise ValueError("grid_points must be at least 1")
    return horizon * (np.arange(1, grid_points + 1) / grid_points)


def parse_trace_csv(path, horizon: float | None = None) -> list[EventTrace]:
    """Read story traces from a CSV with header ``story_id,timestamp``.

    Timestamps are decimal seconds since each story's submission. Rows may be
    LF or CRLF terminated. Stories keep their order of first appearance. The
    observation horizon of each story is its largest timestamp unless
    `horizon` overrides it for every story.
    """
    order: list[str] = []
    times: dict[str, list[float]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise TraceFormatError(f"{path}: empty file")
        if [h.strip() for h in header] != ["story_id", "timestamp"]:
            raise TraceFormatError(
                f"{path}: line 1: expected header 'story_id,timestamp', got {','.join(header)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise TraceFormatError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            story, raw = row[0].strip(), row[1].strip()
            if not story:
                raise TraceFormatError(f"{path}: line {lineno}: empty story_id")
            try:
                stamp = float(raw)
            except ValueError:
                raise TraceFormatError(
                    f"{path}: line {lineno}: malformed timestamp {raw!r}"
                ) from None
            if not math.isfinite(stamp):
                raise TraceFormatError(f"{path}: line {lineno}: timestamp {raw!r} is not finite")
            if stamp < 0:
                raise TraceFormatError(f"{path}: line {lineno}: negative timestamp {raw!r}")
            if story not in times:
                order.append(story)
                times[story] = []
            times[story].append(stamp)
    if not order:
        raise TraceFormatError(f"{path}: no data rows")
    traces = []
    for story in order:
        events = np.sort(np.asarray(times[story], dtype=float))
        span = float(events[-1]) if horizon is None else float(horizon)
        try:
            traces.append(EventTrace(story_id=story, events=events, horizon=span))
        except ValueError as exc:
            # A zero timestamp or an override horizon below the last event
            # violates trace invariants; surface it as a format problem.
            raise TraceFormatError(f"{path}: {exc}") from None
    return traces


def empirical_curve(trace: EventTrace, grid_points: int = 200) -> PopularityCurve:
    """Step curve of cumulative event fraction on a uniform grid.

    The value at grid time t is (number of events <= t) / M with M the
    trace's total event count, so the curve is right-continuous and ends at
    exactly 1.0 at the horizon.
    """
    grid = uniform_grid(trace.horizon, grid_points)
    counts = np.searchsorted(trace.events, grid, side="right")
    return PopularityCurve(grid=grid, values=counts / trace.count, saturation_count=trace.count)


def aggregate_mean(curves: list[PopularityCurve], grid_points: int = 200) -> PopularityCurve:
    """Pointwise mean of several curves on a shared uniform grid.

    Each member is linearly interpolated onto a uniform grid over
    [0, max horizon], holding its first value to the left of its support and
    its last value beyond its own horizon. Means are computed with exactly
    rounded summation, so the result does not depend on input order. The
    aggregate saturation count is the sum of the member counts.
    """
    if not curves:
        raise ValueError("aggregate_mean needs at least one curve")
    span = max(curve.horizon for curve in curves)
    grid = uniform_grid(span, grid_points)
    sampled = [np.interp(grid, curve.grid, curve.values) for curve in curves]
    values = np.array(
        [math.fsum(column) / len(sampled) for column in zip(*sampled)], dtype=float
    )
    total = sum(curve.saturation_count for curve in curves)
    return PopularityCurve(grid=grid, values=values, saturation_count=total)
