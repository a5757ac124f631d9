"""Two reference regimes: memoryless growth and hierarchical power laws.

A homogeneous Poisson process grows linearly in expectation, so a linear
fit beats the saturating exponential on such data; that contrast is the
discriminator. Deep uniform trees relax as a power law t^(-v) whose
exponent follows from the branching factor and level spacing.
"""

import numpy as np

from ultradiffusion.baselines import (
    PoissonModel,
    PowerLawModel,
    fit_linear,
    loglog_slope,
    poisson_event_probability,
    poisson_pmf,
    power_law_curve,
)
from ultradiffusion.fitting import fit_exponential
from ultradiffusion.traces import PopularityCurve, uniform_grid


def banner(title: str) -> None:
    print(f"\n=== {title} ===")


def main() -> None:
    banner("Poisson counting statistics")
    model = PoissonModel(rho=2.0, T0=1.0)
    t = 1.5
    probs = poisson_pmf(model, np.arange(6), t)
    print(f"rate rho = {model.rho} per unit time; P(k events by t = {t}):")
    print("  " + "  ".join(f"k={k}: {p:.4f}" for k, p in enumerate(probs)))
    print(f"sum over k = 0..5: {probs.sum():.4f} (tail beyond 5 is the rest)")

    banner("Memoryless growth is linear, not saturating")
    window = 10.0
    grid = uniform_grid(window, 200)
    line = poisson_event_probability(PoissonModel(rho=1.0, T0=window), grid)
    curve = PopularityCurve(grid=grid, values=line, saturation_count=1)
    slope, intercept, r2_lin = fit_linear(grid, line)
    r2_exp = fit_exponential(curve).r2
    print(f"normalized Poisson curve on (0, {window:g}]: value = t/{window:g}")
    print(f"linear fit:                r2 = {r2_lin:.12f}")
    print(f"saturating-exponential fit: r2 = {r2_exp:.12f}")
    verdict = "memoryless" if r2_lin > r2_exp else "saturating"
    print(f"the better fit calls this curve {verdict}")

    banner("Power-law relaxation on a deep binary hierarchy")
    plaw = PowerLawModel(b=2, delta_h=1.0)
    print(f"branching b = {plaw.b}, level spacing delta_h = {plaw.delta_h}")
    print(f"silhouette s = ln(b)/delta_h = {plaw.s:.6f} (< 1, power-law regime)")
    print(f"exponent v = s/(1 - s) = {plaw.v:.5f}")
    t = np.geomspace(1e2, 1e4, 200)
    curve60 = power_law_curve(plaw, t, terms=60)
    slope = loglog_slope(t, curve60.series)
    gap = np.max(np.abs(curve60.series / curve60.asymptote - 1.0))
    print(f"\n60-term series over t in [1e2, 1e4]:")
    print(f"log-log slope = {slope:.5f} (asymptote -v = {-plaw.v:.5f})")
    print(f"worst series-vs-asymptote gap = {gap:.2e} (relative)")
    print(f"series truncation bound = {curve60.truncation_bound:.2e}")


if __name__ == "__main__":
    main()
