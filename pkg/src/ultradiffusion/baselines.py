"""Reference processes the saturation model is judged against.

Two foils. A memoryless (Poisson) arrival process, whose event-time curve
grows linearly in t rather than saturating, and which a linear fit therefore
explains strictly better. And a self-similar hierarchy with branching b and
level spacing delta_h, whose relaxation is a geometric series of exponentials
that sums to a power law t^(-v) over a wide window instead of a single
exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "PoissonModel",
    "PowerLawCurve",
    "PowerLawModel",
    "fit_linear",
    "loglog_slope",
    "poisson_event_probability",
    "poisson_expected",
    "poisson_pmf",
    "power_law_curve",
]


@dataclass(frozen=True)
class PoissonModel:
    """Constant-rate arrivals: rate rho, observation window T0."""

    rho: float
    T0: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.rho) or self.rho <= 0:
            raise ValueError(f"rate rho must be positive, got {self.rho}")
        if not math.isfinite(self.T0) or self.T0 <= 0:
            raise ValueError(f"window T0 must be positive, got {self.T0}")


_lgamma = np.vectorize(math.lgamma, otypes=[float])


def poisson_pmf(model: PoissonModel, k, t):
    """P[N(t) = k] for counts k, evaluated in log space.

    Supports broadcasting of k against t. k must be nonnegative integers.
    At t = 0 the count is 0 with probability 1.
    """
    karr = np.asarray(k)
    if not np.issubdtype(karr.dtype, np.integer):
        kfloat = np.asarray(k, dtype=float)
        if np.any(kfloat != np.floor(kfloat)):
            raise ValueError("counts k must be integers")
        karr = kfloat.astype(np.int64)
    if np.any(karr < 0):
        raise ValueError("counts k must be nonnegative")
    tarr = np.asarray(t, dtype=float)
    if np.any(tarr < 0) or not np.all(np.isfinite(tarr)):
        raise ValueError("times must be finite and nonnegative")
    karr, tarr = np.broadcast_arrays(karr, tarr)
    mean = model.rho * tarr
    out = np.zeros(karr.shape, dtype=float)
    live = mean > 0
    # exp(k*ln(mean) - mean - ln(k!)) avoids overflow for large counts.
    with np.errstate(divide="ignore", invalid="ignore"):
        logpmf = karr * np.log(np.where(live, mean, 1.0)) - mean - _lgamma(karr + 1)
    out[live] = np.exp(logpmf[live])
    out[~live] = (karr[~live] == 0).astype(float)
    if out.ndim == 0:
        return float(out)
    return out


def poisson_expected(model: PoissonModel, t):
    """E[N(t)] = rho*t."""
    return model.rho * np.asarray(t, dtype=float)


def poisson_event_probability(model: PoissonModel, t):
    """Share of window-T0 events that landed by time t: exactly t/T0.

    Arrival times of a constant-rate process are uniform on the window, so
    the expected event curve is linear, not saturating. Values above 1
    (t past T0) are reported as is; the curve is only meaningful on [0, T0].
    """
    return np.asarray(t, dtype=float) / model.T0


def fit_linear(t, values) -> tuple[float, float, float]:
    """Ordinary least squares line. Returns (slope, intercept, r_squared)."""
    x = np.asarray(t, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("need two equal-length vectors of at least 2 points")
    slope, intercept = np.polyfit(x, y, 1)
    total = float(np.sum((y - y.mean()) ** 2))
    if total == 0.0:
        raise ValueError("values are constant, r_squared is undefined")
    resid = float(np.sum((y - (slope * x + intercept)) ** 2))
    return float(slope), float(intercept), 1.0 - resid / total


@dataclass(frozen=True)
class PowerLawModel:
    """Self-similar hierarchy: branching b per level, level spacing delta_h."""

    b: int
    delta_h: float

    def __post_init__(self) -> None:
        if not isinstance(self.b, (int, np.integer)) or isinstance(self.b, bool):
            raise ValueError("branching b must be an integer")
        object.__setattr__(self, "b", int(self.b))
        object.__setattr__(self, "delta_h", float(self.delta_h))
        if self.b < 2:
            raise ValueError(f"branching b must be at least 2, got {self.b}")
        if not math.isfinite(self.delta_h) or self.delta_h <= 0:
            raise ValueError(f"level spacing delta_h must be positive, got {self.delta_h}")

    @property
    def s(self) -> float:
        """ln(b)/delta_h; the series converges to a power law only for s < 1."""
        return math.log(self.b) / self.delta_h

    @property
    def v(self) -> float:
        """Decay exponent s/(1-s) of the intermediate-time power law."""
        s = self.s
        if s >= 1:
            raise ValueError(f"s = ln(b)/delta_h = {s:.4g} is not below 1: no power law")
        return s / (1.0 - s)

    @property
    def amplitude(self) -> float:
        """Constant D in the asymptote D*t^(-v)."""
        v = self.v
        b, dh = self.b, self.delta_h
        c = (math.exp(dh) - 1.0) / (math.exp(dh) - b)
        return math.gamma(v) * c ** (-v) * ((b - 1) / math.log(b)) * v


class PowerLawCurve(NamedTuple):
    series: np.ndarray
    asymptote: np.ndarray
    truncation_bound: float


def power_law_curve(model: PowerLawModel, t, terms: int = 60) -> PowerLawCurve:
    """Level-sum relaxation and its power-law asymptote on times `t`.

    The series is sum over levels m >= 1 of (b-1)*b^(-m)*e^(-t*c*q^m) with
    q = b*e^(-delta_h) and c = (e^delta_h - 1)/(e^delta_h - b), truncated at
    `terms` levels; the neglected tail is below b^(-terms) pointwise, which
    is returned as the truncation bound. The asymptote is D*t^(-v).
    """
    if model.s >= 1:
        raise ValueError(
            f"s = ln(b)/delta_h = {model.s:.4g} is not below 1: "
            "level weights decay too slowly for a power law"
        )
    if terms < 1:
        raise ValueError("terms must be at least 1")
    times = np.asarray(t, dtype=float)
    if np.any(times <= 0):
        raise ValueError("power-law evaluation needs strictly positive times")
    b, dh = model.b, model.delta_h
    q = b * math.exp(-dh)
    c = (math.exp(dh) - 1.0) / (math.exp(dh) - b)
    m = np.arange(1, terms + 1)
    weights = (b - 1.0) * np.power(float(b), -m.astype(float))
    rates = c * np.power(q, m.astype(float))
    series = np.exp(-np.multiply.outer(times, rates)) @ weights
    asymptote = model.amplitude * np.power(times, -model.v)
    return PowerLawCurve(
        series=series,
        asymptote=asymptote,
        truncation_bound=float(b) ** (-terms),
    )


def loglog_slope(t, values) -> float:
    """Least-squares slope of ln(values) against ln(t)."""
    x = np.log(np.asarray(t, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("need two equal-length vectors of at least 2 points")
    return float(np.polyfit(x, y, 1)[0])
