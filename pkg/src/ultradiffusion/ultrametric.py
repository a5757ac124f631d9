"""Ultrametric state spaces induced by event timelines.

Each event at time t, observed up to horizon T, becomes a state labeled by the
reverse-time subscript a = T - t; the state with label a = T is the one in
which no rebroadcast has happened. The distance between two distinct states is
T - min(a, b): the later of the two original event times. Distances built this
way satisfy the strong triangle inequality d(x, y) <= max(d(x, z), d(z, y)),
which is what makes a hierarchy of relaxation time scales possible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .traces import EventTrace, _readonly

__all__ = [
    "TripleReport",
    "UltrametricSpace",
    "build_from_trace",
    "rescale_distances",
    "uniform_chain",
    "verify_ultrametric",
]


@dataclass(frozen=True)
class UltrametricSpace:
    """A finite state space with pairwise ultrametric distances.

    `labels` identifies the states (ascending; reverse-time subscripts for
    trace-built spaces, plain indices for model chains), `dist` holds the
    symmetric distance matrix, and `multiplicity` counts how many trace
    events collapsed into each state (zero for the no-rebroadcast state,
    one everywhere for model chains).
    """

    labels: np.ndarray
    horizon: float
    dist: np.ndarray
    multiplicity: np.ndarray

    def __post_init__(self) -> None:
        labels = _readonly(self.labels)
        dist = _readonly(self.dist)
        multiplicity = _readonly(self.multiplicity, dtype=int)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "multiplicity", multiplicity)
        object.__setattr__(self, "horizon", float(self.horizon))
        n = labels.size
        if n == 0:
            raise ValueError("state space needs at least one state")
        if labels.ndim != 1 or multiplicity.shape != (n,):
            raise ValueError("labels and multiplicity must be one-dimensional and aligned")
        if n > 1 and np.any(np.diff(labels) <= 0):
            raise ValueError("labels must be strictly ascending")
        if dist.shape != (n, n):
            raise ValueError(f"distance matrix must be {n}x{n}, got {dist.shape}")
        if np.any(np.diagonal(dist) != 0):
            raise ValueError("distances must be zero on the diagonal")
        if not np.array_equal(dist, dist.T):
            raise ValueError("distance matrix must be symmetric")
        off = dist[~np.eye(n, dtype=bool)]
        if off.size and np.min(off) <= 0:
            raise ValueError("distances between distinct states must be positive")

    @property
    def size(self) -> int:
        return int(self.labels.size)


@dataclass(frozen=True)
class TripleReport:
    """Outcome of an exhaustive triple scan over a matrix.

    `triple` holds 0-based state indices (i, j, k) of the first violation in
    lexicographic order, or None when every triple passes.
    """

    ok: bool
    triple: tuple[int, int, int] | None
    message: str


def build_from_trace(trace: EventTrace) -> UltrametricSpace:
    """State space of a trace: one state per distinct event time, plus one
    no-rebroadcast state at subscript T.

    Simultaneous events collapse into a single state whose multiplicity
    records how many merged. An event at exactly t = T is allowed and yields
    subscript 0.
    """
    span = trace.horizon
    distinct, counts = np.unique(trace.events, return_counts=True)
    # Ascending event times map to descending subscripts; reverse, then append
    # the no-rebroadcast state at subscript T with multiplicity zero.
    labels = np.concatenate([(span - distinct)[::-1], [span]])
    multiplicity = np.concatenate([counts[::-1], [0]])
    later = np.maximum.outer(span - labels, span - labels)
    np.fill_diagonal(later, 0.0)
    return UltrametricSpace(labels=labels, horizon=span, dist=later, multiplicity=multiplicity)


def uniform_chain(n: int) -> UltrametricSpace:
    """Unit-spaced chain of n states with d(i, j) = max(i, j) - 1 for i != j.

    This is the state space whose closed-form spectrum the model layer uses:
    the rate between states i < j is e^(-mu*(j-1)).
    """
    if n < 2:
        raise ValueError("a chain needs at least 2 states")
    idx = np.arange(1, n + 1, dtype=float)
    dist = np.maximum.outer(idx, idx) - 1.0
    np.fill_diagonal(dist, 0.0)
    return UltrametricSpace(
        labels=idx,
        horizon=float(n - 1),
        dist=dist,
        multiplicity=np.ones(n, dtype=int),
    )


def rescale_distances(space: UltrametricSpace) -> UltrametricSpace:
    """Divide all distances by the largest one.

    Useful for conditioning: rates e^(-mu*d) underflow when raw-second
    distances reach the tens of thousands.
    """
    if space.size < 2:
        return space
    top = float(np.max(space.dist))
    return UltrametricSpace(
        labels=space.labels,
        horizon=space.horizon,
        dist=space.dist / top,
        multiplicity=space.multiplicity,
    )


def verify_ultrametric(space: UltrametricSpace, tol: float = 0.0) -> TripleReport:
    """Exhaustively check the strong triangle inequality over ordered triples.

    Confirms d(i, j) <= max(d(i, k), d(k, j)) + tol for every ordered triple
    of distinct states and reports the first violating triple otherwise.
    Symmetry, zero diagonal, and positivity are enforced when the space is
    built, so only the triangle structure is scanned here.
    """
    dist = space.dist
    n = space.size
    worst: tuple[int, int, int] | None = None
    for k in range(n):
        bound = np.maximum.outer(dist[:, k], dist[k, :])
        bad = dist > bound + tol
        bad[:, k] = False
        bad[k, :] = False
        if bad.any():
            i, j = np.argwhere(bad)[0]
            candidate = (int(i), int(j), k)
            # Report the violation that is lexicographically first as (i, j, k).
            if worst is None or candidate[:2] < worst[:2] or (
                candidate[:2] == worst[:2] and candidate[2] < worst[2]
            ):
                worst = candidate
    if worst is None:
        return TripleReport(ok=True, triple=None, message=f"all {n} states ultrametric")
    i, j, k = worst
    return TripleReport(
        ok=False,
        triple=worst,
        message=(
            f"d({space.labels[i]:g},{space.labels[j]:g})={dist[i, j]:g} exceeds "
            f"max(d(.,{space.labels[k]:g}))={max(dist[i, k], dist[k, j]):g}"
        ),
    )
