"""Command-line batch driver.

Five subcommands: `fit` ingests an event CSV and writes per-story fit tables,
`aggregate` runs the same pipeline on the mean curve, `simulate` draws
synthetic traces from given parameters, `compare` scores the saturating
exponential against a straight line (the memoryless-arrivals signature), and
`oracle-check` runs the pinned self-check suite and prints its report.

Exit codes: 0 success, 1 input error, 2 numerical failure, 3 self-check
failure. Given the same inputs and seed, re-runs write byte-identical files;
outputs are written to a temporary name and renamed, so interrupted runs
leave no partial files.
"""

from __future__ import annotations

import argparse
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import checks
from .baselines import fit_linear
from .fitting import (
    FitError,
    UltradiffusionParams,
    decay_rate,
    exponential_model,
    fit_exponential,
    infer_params,
    r_squared,
    sample_events,
    simulate_curve,
)
from .generator import build_generator
from .serialize import (
    write_curve_tsv,
    write_distance_tsv,
    write_fit_curve_tsv,
    write_generator_tsv,
    write_json,
    write_spectrum_tsv,
    write_trace_csv,
)
from .spectral import chain_spectrum
from .traces import (
    TraceFormatError,
    aggregate_mean,
    empirical_curve,
    parse_trace_csv,
    uniform_grid,
)
from .ultrametric import build_from_trace, rescale_distances

__all__ = ["CommandError", "RunConfig", "build_parser", "main"]

MATRIX_EXPORT_CAP = 500


class CommandError(Exception):
    """Failure with a designated process exit code."""

    def __init__(self, exit_code: int, message: str):
        super().__init__(message)
        self.exit_code = exit_code


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by the trace-processing subcommands."""

    input_path: Path
    out_dir: Path
    grid_points: int = 200
    offset: bool = False
    mapping_mode: str = "roundtrip"
    min_events: int = 50
    rescale: bool = False
    seed: int = 0
    horizon: float | None = None
    paper_prefactor: bool = False

    def __post_init__(self) -> None:
        if self.grid_points < 2:
            raise CommandError(1, "grid points must be at least 2")
        if self.min_events < 1:
            raise CommandError(1, "minimum event count must be at least 1")
        if self.horizon is not None and self.horizon <= 0:
            raise CommandError(1, "horizon must be positive")


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        input_path=Path(args.input),
        out_dir=Path(args.out_dir),
        grid_points=args.grid_points,
        offset=args.offset,
        mapping_mode=args.mapping,
        min_events=args.min_events,
        rescale=getattr(args, "rescale_distances", False),
        seed=args.seed,
        horizon=args.horizon,
        paper_prefactor=args.paper_prefactor,
    )


def _safe_name(story_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", story_id).strip("._") or "story"


def _unique_names(story_ids: list[str]) -> dict[str, str]:
    # Sorted input keeps collision suffixes stable across runs.
    names: dict[str, str] = {}
    used: set[str] = set()
    for sid in story_ids:
        base = _safe_name(sid)
        name, k = base, 2
        while name in used:
            name = f"{base}_{k}"
            k += 1
        used.add(name)
        names[sid] = name
    return names


def _load_qualifying(cfg: RunConfig):
    traces = parse_trace_csv(cfg.input_path, horizon=cfg.horizon)
    if not traces:
        raise CommandError(1, f"{cfg.input_path}: input contains no stories")
    kept = []
    for trace in traces:
        if trace.count < cfg.min_events:
            print(
                f"skipping story {trace.story_id!r}: {trace.count} events "
                f"is below the minimum of {cfg.min_events}",
                file=sys.stderr,
            )
            continue
        kept.append(trace)
    if not kept:
        raise CommandError(
            1, f"no stories pass the {cfg.min_events}-event filter"
        )
    return kept


def _fit_record(trace, cfg: RunConfig):
    curve = empirical_curve(trace, grid_points=cfg.grid_points)
    fit = fit_exponential(curve, offset=cfg.offset)
    params = infer_params(fit, M=trace.count, mode=cfg.mapping_mode)
    simulated = simulate_curve(params, curve.grid, paper_prefactor=cfg.paper_prefactor)
    fitted = exponential_model(curve.grid, fit.h1, fit.h2, fit.h3)
    record = {
        "story_id": trace.story_id,
        "h1": fit.h1,
        "h2": fit.h2,
        "h3": fit.h3,
        "r2": fit.r2,
        "t_N": params.t_N,
        "mu": params.mu,
        "M": params.M,
        "mode": params.mode,
        "r2_simulated": r_squared(curve.values, simulated.values),
    }
    return record, curve, fitted, simulated.values


def _run_pool(items, worker):
    """Apply `worker` to each item; return ({story_id: result}, [(id, error)])."""
    results: dict[str, object] = {}
    failures: list[tuple[str, str]] = []
    with ThreadPoolExecutor(max_workers=min(8, len(items))) as pool:
        futures = {pool.submit(worker, item): item.story_id for item in items}
        for future, sid in futures.items():
            try:
                results[sid] = future.result()
            except Exception as err:
                failures.append((sid, f"{type(err).__name__}: {err}"))
    return results, sorted(failures)


def cmd_fit(args: argparse.Namespace) -> int:
    cfg = _config(args)
    kept = _load_qualifying(cfg)
    results, failures = _run_pool(kept, lambda trace: _fit_record(trace, cfg))
    for sid, message in failures:
        print(f"story {sid!r} failed: {message}", file=sys.stderr)
    if not results:
        raise CommandError(2, "every qualifying story failed to fit")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    order = sorted(results)
    names = _unique_names(order)
    records = []
    for sid in order:
        record, curve, fitted, simulated = results[sid]
        records.append(record)
        write_fit_curve_tsv(
            cfg.out_dir / f"{names[sid]}_curve.tsv",
            curve.grid,
            curve.values,
            fitted,
            simulated,
        )
    write_json(cfg.out_dir / "fits.json", records)
    print(f"fitted {len(records)} of {len(kept)} stories -> {cfg.out_dir}")
    return 0


def cmd_aggregate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    kept = _load_qualifying(cfg)
    curves = [empirical_curve(t, grid_points=cfg.grid_points) for t in kept]
    mean = aggregate_mean(curves, grid_points=cfg.grid_points)
    try:
        fit = fit_exponential(mean, offset=cfg.offset)
        params = infer_params(fit, M=mean.saturation_count, mode=cfg.mapping_mode)
    except (FitError, ValueError) as err:
        raise CommandError(2, f"aggregate curve: {err}") from err
    simulated = simulate_curve(params, mean.grid, paper_prefactor=cfg.paper_prefactor)
    fitted = exponential_model(mean.grid, fit.h1, fit.h2, fit.h3)
    record = {
        "story_id": "aggregate",
        "n_stories": len(kept),
        "h1": fit.h1,
        "h2": fit.h2,
        "h3": fit.h3,
        "r2": fit.r2,
        "t_N": params.t_N,
        "mu": params.mu,
        "M": params.M,
        "mode": params.mode,
        "r2_simulated": r_squared(mean.values, simulated.values),
    }
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_fit_curve_tsv(
        cfg.out_dir / "aggregate_curve.tsv", mean.grid, mean.values, fitted, simulated.values
    )
    write_json(cfg.out_dir / "aggregate_fit.json", record)
    print(f"aggregated {len(kept)} stories -> {cfg.out_dir}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.horizon is not None and args.horizon <= 0:
        raise CommandError(1, "horizon must be positive")
    if args.grid_points < 2:
        raise CommandError(1, "grid points must be at least 2")
    if args.stories < 1:
        raise CommandError(1, "need at least one story")
    try:
        params = UltradiffusionParams(t_N=args.t_n, mu=args.mu, M=args.m_events)
    except ValueError as err:
        raise CommandError(1, str(err)) from err
    span = 5.0 / decay_rate(params) if args.horizon is None else args.horizon
    children = np.random.SeedSequence(args.seed).spawn(args.stories)
    traces = [
        sample_events(params, seed=child, horizon=span, story_id=f"story_{k + 1:03d}")
        for k, child in enumerate(children)
    ]
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(out / "trace.csv", traces)
    grid = uniform_grid(span, args.grid_points)
    write_curve_tsv(
        out / "model_curve.tsv",
        simulate_curve(params, grid, paper_prefactor=args.paper_prefactor),
    )
    write_spectrum_tsv(out / "spectrum.tsv", chain_spectrum(args.t_n, args.mu).eigenvalues)
    print(
        f"wrote {args.stories} stories x {args.m_events} events "
        f"(t_N={args.t_n}, mu={args.mu:g}, horizon={span:g}) -> {out}"
    )
    return 0


def _compare_record(trace, cfg: RunConfig):
    curve = empirical_curve(trace, grid_points=cfg.grid_points)
    fit = fit_exponential(curve, offset=cfg.offset)
    _, _, r2_lin = fit_linear(curve.grid, curve.values)
    record = {
        "story_id": trace.story_id,
        "r2_exponential": fit.r2,
        "r2_linear": r2_lin,
        "r2_simulated": None,
        "t_N": None,
        "mu": None,
        "verdict": "saturating" if fit.r2 > r2_lin else "memoryless",
        "note": "",
    }
    try:
        params = infer_params(fit, M=trace.count, mode=cfg.mapping_mode)
    except ValueError as err:
        record["note"] = f"parameter mapping failed: {err}"
        return record, None
    simulated = simulate_curve(params, curve.grid, paper_prefactor=cfg.paper_prefactor)
    record["r2_simulated"] = r_squared(curve.values, simulated.values)
    record["t_N"] = params.t_N
    record["mu"] = params.mu
    return record, params.mu


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = _config(args)
    kept = _load_qualifying(cfg)
    results, failures = _run_pool(kept, lambda trace: _compare_record(trace, cfg))
    for sid, message in failures:
        print(f"story {sid!r} failed: {message}", file=sys.stderr)
    if not results:
        raise CommandError(2, "every qualifying story failed to fit")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    order = sorted(results)
    names = _unique_names(order)
    records = [results[sid][0] for sid in order]
    write_json(cfg.out_dir / "comparison.json", records)
    if args.export_matrices:
        by_id = {trace.story_id: trace for trace in kept}
        for sid in order:
            space = build_from_trace(by_id[sid])
            if space.size > MATRIX_EXPORT_CAP:
                print(
                    f"story {sid!r}: {space.size} states exceeds the "
                    f"{MATRIX_EXPORT_CAP}-state matrix export cap, skipping",
                    file=sys.stderr,
                )
                continue
            if cfg.rescale:
                space = rescale_distances(space)
            write_distance_tsv(cfg.out_dir / f"{names[sid]}_distance.tsv", space)
            mu = results[sid][1]
            if mu is None:
                print(
                    f"story {sid!r}: no inferred mu, skipping rate-matrix export",
                    file=sys.stderr,
                )
                continue
            write_generator_tsv(
                cfg.out_dir / f"{names[sid]}_generator.tsv",
                build_generator(space, mu),
            )
    print(f"compared {len(records)} of {len(kept)} stories -> {cfg.out_dir}")
    return 0


def _format_runtime(seconds: float) -> str:
    if seconds < 1.0:
        return f"{seconds * 1e3:.1f} ms"
    return f"{seconds:.2f} s"


def cmd_oracle_check(args: argparse.Namespace) -> int:
    overrides: dict[str, float] = {}
    for item in args.override_tolerance or []:
        name, _, value = item.partition("=")
        try:
            overrides[name] = float(value)
        except ValueError as err:
            raise CommandError(1, f"bad tolerance override {item!r}") from err
    try:
        results = checks.run_all(overrides)
    except ValueError as err:
        raise CommandError(1, str(err)) from err
    width = max(len(r.name) for r in results) + 2
    print(f"{'check':<{width}}{'measured':>13}{'tolerance':>11}{'runtime':>11}  verdict")
    for r in results:
        verdict = "PASS" if r.passed else "FAIL"
        print(
            f"{r.name:<{width}}{r.measured:>13.4e}{r.tolerance:>11.1e}"
            f"{_format_runtime(r.runtime_s):>11}  {verdict}"
        )
    print()
    print(results[0].detail)
    for r in results[1:]:
        if not r.passed:
            print(f"\n{r.name}: {r.detail}")
    n_pass = sum(r.passed for r in results)
    print(f"\n{n_pass}/{len(results)} checks passed")
    if args.out_dir is not None:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(
            out / "oracle_report.json",
            [
                {
                    "name": r.name,
                    "passed": r.passed,
                    "measured": r.measured,
                    "tolerance": r.tolerance,
                    "runtime_s": r.runtime_s,
                    "budget_s": r.budget_s,
                }
                for r in results
            ],
        )
    return 0 if n_pass == len(results) else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ultradiffusion",
        description="Fit, simulate, and verify relaxation curves of event traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_trace_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", required=True, help="event CSV with header story_id,timestamp")
        p.add_argument("--out-dir", required=True, help="directory for output tables")
        p.add_argument("--grid-points", type=int, default=200, help="curve grid size")
        p.add_argument("--offset", action="store_true", help="fit the additive constant h3")
        p.add_argument(
            "--mapping",
            choices=("paper", "roundtrip"),
            default="roundtrip",
            help="variant of the (h1, h2) -> (t_N, mu) mapping",
        )
        p.add_argument("--min-events", type=int, default=50, help="skip smaller stories")
        p.add_argument(
            "--horizon",
            type=float,
            default=None,
            help="observation window; default is each story's last event",
        )
        p.add_argument(
            "--paper-prefactor",
            action="store_true",
            help="use the printed 1/t_N curve amplitude instead of (t_N-1)/t_N",
        )
        p.add_argument("--seed", type=int, default=0, help="unused here; accepted for symmetry")

    p_fit = sub.add_parser("fit", help="fit each story's curve and map parameters")
    add_trace_flags(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_agg = sub.add_parser("aggregate", help="fit the mean curve over all stories")
    add_trace_flags(p_agg)
    p_agg.set_defaults(func=cmd_aggregate)

    p_sim = sub.add_parser("simulate", help="draw synthetic event traces")
    p_sim.add_argument("--out-dir", required=True, help="directory for output tables")
    p_sim.add_argument("--t-n", type=int, default=50, help="chain length t_N")
    p_sim.add_argument("--mu", type=float, default=0.1, help="distance decay mu")
    p_sim.add_argument("--m-events", type=int, default=1000, help="events per story")
    p_sim.add_argument("--stories", type=int, default=1, help="number of stories")
    p_sim.add_argument("--grid-points", type=int, default=200, help="curve grid size")
    p_sim.add_argument(
        "--horizon", type=float, default=None, help="window; default five relaxation times"
    )
    p_sim.add_argument(
        "--paper-prefactor",
        action="store_true",
        help="use the printed 1/t_N curve amplitude instead of (t_N-1)/t_N",
    )
    p_sim.add_argument("--seed", type=int, default=0, help="base seed, split per story")
    p_sim.set_defaults(func=cmd_simulate)

    p_cmp = sub.add_parser(
        "compare", help="score saturating vs linear explanations per story"
    )
    add_trace_flags(p_cmp)
    p_cmp.add_argument(
        "--export-matrices",
        action="store_true",
        help="also write per-story distance and rate matrices",
    )
    p_cmp.add_argument(
        "--rescale-distances",
        action="store_true",
        help="rescale exported distances to a unit maximum",
    )
    p_cmp.set_defaults(func=cmd_compare)

    p_chk = sub.add_parser("oracle-check", help="run the pinned self-check suite")
    p_chk.add_argument(
        "--out-dir", default=None, help="optionally write the report as JSON"
    )
    p_chk.add_argument(
        "--override-tolerance",
        action="append",
        metavar="NAME=VALUE",
        help=argparse.SUPPRESS,  # test hook: replace a named check's tolerance
    )
    p_chk.set_defaults(func=cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; our contract reserves 2 for
        # numerical failures, so usage problems map to the input-error code.
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except CommandError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code
    except TraceFormatError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (FitError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
