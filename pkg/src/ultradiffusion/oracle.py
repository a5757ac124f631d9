"""Independent numerical ground truth for the closed forms.

The probability flow dP/dt = rates @ P is integrated with adaptive
Dormand-Prince 4(5) stepping, and spectra are recomputed with a dense
symmetric eigensolver. Nothing here reuses the closed-form results, so
agreement between the two routes is evidence, not tautology.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .generator import Generator
from .traces import _readonly

__all__ = ["ProbabilityVector", "integrate_master_equation", "numeric_spectrum"]


@dataclass(frozen=True)
class ProbabilityVector:
    """A distribution over states: nonnegative entries that sum to one."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = _readonly(self.entries)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 1 or entries.size == 0:
            raise ValueError("entries must be a nonempty vector")
        if np.min(entries) < -1e-12:
            raise ValueError("entries must be nonnegative")
        drift = abs(float(entries.sum()) - 1.0)
        if drift > 1e-9:
            raise ValueError(f"entries must sum to 1, off by {drift:g}")

    @classmethod
    def characteristic(cls, n: int, state: int) -> "ProbabilityVector":
        """Unit mass on one state, numbered 1..n."""
        if not 1 <= state <= n:
            raise ValueError(f"state {state} outside 1..{n}")
        entries = np.zeros(n)
        entries[state - 1] = 1.0
        return cls(entries=entries)


def integrate_master_equation(
    gen: Generator,
    p0,
    grid,
    rtol: float = 1e-8,
    atol: float = 1e-9,
) -> np.ndarray:
    """Trajectory of dP/dt = rates @ P sampled at `grid`.

    `p0` holds the distribution at t = 0; integration runs from 0 to the
    last grid time and is sampled at the grid points (which need not include
    0). Returns an array of shape (len(grid), n) whose rows each sum to 1
    within 1e-9; a larger drift or an integrator failure raises with
    diagnostics.
    """
    start = p0.entries if isinstance(p0, ProbabilityVector) else np.asarray(p0, dtype=float)
    if start.shape != (gen.size,):
        raise ValueError(f"p0 has shape {start.shape}, generator needs ({gen.size},)")
    times = np.asarray(grid, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("grid must be a nonempty vector of times")
    if times[0] < 0 or np.any(np.diff(times) < 0):
        raise ValueError("grid times must be nonnegative and nondecreasing")
    if times[-1] == 0.0:
        return np.tile(start, (times.size, 1))

    rates = gen.rates
    # Gershgorin bound |lambda| <= 2*max|diag| sets the opening step size.
    scale = 2.0 * float(np.max(np.abs(np.diagonal(rates)))) if gen.size > 1 else 0.0
    first = 1e-3 / scale if scale > 0 else None
    sol = solve_ivp(
        lambda _t, y: rates @ y,
        (0.0, float(times[-1])),
        start,
        method="RK45",
        t_eval=times,
        rtol=rtol,
        atol=atol,
        first_step=first,
    )
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    traj = sol.y.T
    drift = float(np.max(np.abs(traj.sum(axis=1) - 1.0)))
    if drift > 1e-9:
        where = float(times[int(np.argmax(np.abs(traj.sum(axis=1) - 1.0)))])
        raise RuntimeError(f"probability drifted by {drift:g} at t={where:g}")
    return traj


def numeric_spectrum(gen: Generator) -> tuple[np.ndarray, np.ndarray]:
    """Dense symmetric eigendecomposition of the generator.

    Returns (eigenvalues ascending, eigenvectors as columns). The
    reconstruction V diag(w) V^T is checked against the input to within
    1e-9 of its largest entry.
    """
    rates = np.asarray(gen.rates, dtype=float)
    w, v = np.linalg.eigh(rates)
    top = max(1e-300, float(np.max(np.abs(rates))))
    residual = float(np.max(np.abs((v * w) @ v.T - rates)))
    if residual > 1e-9 * top:
        raise RuntimeError(f"eigendecomposition residual {residual:g} exceeds 1e-9*{top:g}")
    return w, v
