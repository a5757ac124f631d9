"""Transition-rate generators over ultrametric state spaces.

The rate between distinct states is e^(-mu*d(i, j)); each diagonal entry is
minus its row's off-diagonal sum, so probability is conserved. Because rates
are a decreasing function of an ultrametric distance, they inherit the dual
inequality rate(i, j) >= min(rate(i, k), rate(k, j)).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .traces import _readonly
from .ultrametric import TripleReport, UltrametricSpace

__all__ = ["Generator", "build_generator", "check_rate_ultrametricity"]


@dataclass(frozen=True)
class Generator:
    """Symmetric transition-rate matrix with zero row sums."""

    rates: np.ndarray
    mu: float

    def __post_init__(self) -> None:
        rates = _readonly(self.rates)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "mu", float(self.mu))
        if rates.ndim != 2 or rates.shape[0] != rates.shape[1]:
            raise ValueError(f"rates must be square, got {rates.shape}")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if not np.array_equal(rates, rates.T):
            raise ValueError("rates must be symmetric")
        n = rates.shape[0]
        off = rates[~np.eye(n, dtype=bool)]
        if off.size and np.min(off) < 0:
            raise ValueError("off-diagonal rates must be nonnegative")
        drift = np.max(np.abs(rates.sum(axis=1))) if n else 0.0
        if drift > 1e-12 * max(1.0, float(np.max(np.abs(rates)))) * max(1, n):
            raise ValueError(f"row sums must vanish, worst drift {drift:g}")

    @property
    def size(self) -> int:
        return int(self.rates.shape[0])


def build_generator(space: UltrametricSpace, mu: float) -> Generator:
    """Generator over `space` with off-diagonal rates e^(-mu*d)."""
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    rates = np.exp(-mu * space.dist)
    np.fill_diagonal(rates, 0.0)
    if space.size > 1 and np.min(rates + np.eye(space.size)) <= 0:
        warnings.warn(
            "some rates underflowed to zero; consider rescaling distances",
            RuntimeWarning,
            stacklevel=2,
        )
    np.fill_diagonal(rates, -rates.sum(axis=1))
    return Generator(rates=rates, mu=mu)


def check_rate_ultrametricity(gen: Generator, tol: float = 0.0) -> TripleReport:
    """Exhaustively confirm rate(i, j) >= min(rate(i, k), rate(k, j)) - tol.

    Scans every ordered triple of distinct states and reports the first
    violation in lexicographic (i, j, k) order.
    """
    n = gen.size
    rates = gen.rates.copy()
    # Mask diagonals with +inf so triples containing repeats pass trivially.
    np.fill_diagonal(rates, np.inf)
    worst: tuple[int, int, int] | None = None
    for k in range(n):
        floor = np.minimum.outer(rates[:, k], rates[k, :])
        bad = rates < floor - tol
        bad[:, k] = False
        bad[k, :] = False
        if bad.any():
            i, j = np.argwhere(bad)[0]
            candidate = (int(i), int(j), k)
            if worst is None or candidate[:2] < worst[:2] or (
                candidate[:2] == worst[:2] and candidate[2] < worst[2]
            ):
                worst = candidate
    if worst is None:
        return TripleReport(ok=True, triple=None, message=f"all {n} states rate-ultrametric")
    i, j, k = worst
    return TripleReport(
        ok=False,
        triple=worst,
        message=(
            f"rate({i},{j})={gen.rates[i, j]:g} falls below "
            f"min via state {k}: {min(gen.rates[i, k], gen.rates[k, j]):g}"
        ),
    )
