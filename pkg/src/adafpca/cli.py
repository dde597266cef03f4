"""Command-line front end: simulate, fit, eval, and bench subcommands.

Exit codes: 0 success, 2 parse error, 3 infeasible configuration,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io as fio
from .data_model import Grid, make_uniform_grid
from .errors import AdafpcaError, InfeasibleError, NumericalError, ParseError
from .metrics import metrics_report
from .pipeline import FitConfig, fit
from .simulator import simulate, truth_on_grid

TRIM_QUANTILES = (0.05, 0.95)
REPORT_QUANTILES = {"q05": 0.05, "q25": 0.25, "median": 0.5, "q75": 0.75, "q95": 0.95}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adafpca",
        description="Adaptive eigen-element estimation for noisy functional data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="draw a sample from a scenario file")
    p_sim.add_argument("--scenario", required=True)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--seed", type=int, required=True)

    p_fit = sub.add_parser("fit", help="run the adaptive fit on a curve file")
    p_fit.add_argument("--data", required=True)
    p_fit.add_argument("--config", default=None)
    p_fit.add_argument("--out", required=True)

    p_eval = sub.add_parser("eval", help="compare a fit against known eigen-elements")
    p_eval.add_argument("--fit", required=True)
    p_eval.add_argument("--truth", required=True)
    p_eval.add_argument("--baseline-h", type=float, required=True)
    p_eval.add_argument("--out", required=True)

    p_bench = sub.add_parser("bench", help="replicated simulate/fit/eval benchmark")
    p_bench.add_argument("--scenario", required=True)
    p_bench.add_argument("--replications", type=int, required=True)
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--config", default=None)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--baseline-h", type=float, default=0.1)
    p_bench.add_argument("--workers", type=int, default=1)
    return parser


def _cmd_simulate(args) -> int:
    spec, design = fio.read_scenario(args.scenario)
    sample = simulate(spec, design, args.seed)
    fio.write_curves(sample, args.out)
    print(f"wrote {sample.n_curves} curves to {args.out}")
    return 0


def _cmd_fit(args) -> int:
    sample = fio.read_curves(args.data)
    config = fio.read_config(args.config) if args.config else FitConfig()
    result = fit(sample, config)
    fio.write_fit_result(result, args.out)
    print(f"fit of {sample.n_curves} curves written to {args.out}")
    return 0


def _evaluate_payload(fit_payload: dict, lam_true, psi_true, truth_grid: Grid, baseline_h: float) -> dict:
    grid = Grid(
        points=fit_payload["grid"]["points"],
        quad_weights=fit_payload["grid"]["quad_weights"],
    )
    if len(grid) != len(truth_grid) or not np.allclose(grid.points, truth_grid.points):
        raise ParseError("truth grid does not match the fit grid")
    key = repr(float(baseline_h))
    baselines = fit_payload.get("baselines", {})
    if key not in baselines:
        known = ", ".join(sorted(baselines)) or "none"
        raise InfeasibleError(
            f"fit file has no baseline at h={baseline_h!r} (available: {known})"
        )
    base = baselines[key]
    j = len(fit_payload["final_eigenvalues"])
    return metrics_report(
        eigenvalues=np.asarray(fit_payload["final_eigenvalues"]),
        eigenfunctions=np.asarray(fit_payload["final_eigenfunctions"]),
        baseline_eigenvalues=np.asarray(base["eigenvalues"])[:j],
        baseline_eigenfunctions=np.asarray(base["eigenfunctions"])[:j],
        true_eigenvalues=np.asarray(lam_true),
        true_eigenfunctions=np.asarray(psi_true),
        grid=grid,
        baseline_h=baseline_h,
        timings=fit_payload.get("timings"),
    )


def _cmd_eval(args) -> int:
    fit_payload = fio.read_fit_payload(args.fit)
    lam_true, psi_true, truth_grid = fio.read_truth(args.truth)
    report = _evaluate_payload(fit_payload, lam_true, psi_true, truth_grid, args.baseline_h)
    fio.write_report(report, args.out)
    print(f"metrics written to {args.out}")
    return 0


def _bench_one(scenario_path: str, config_payload: dict | None, seed: int,
               baseline_h: float, truth: tuple) -> dict:
    """One replication: simulate, fit, evaluate.  Runs in worker processes."""
    spec, design = fio.read_scenario(scenario_path)
    config = FitConfig(**config_payload) if config_payload else FitConfig()
    if baseline_h not in config.baseline_h:
        config.baseline_h = tuple(config.baseline_h) + (baseline_h,)
    sample = simulate(spec, design, seed)
    result = fit(sample, config)
    lam_true, psi_true, grid_points, grid_weights = truth
    grid = Grid(points=grid_points, quad_weights=grid_weights)
    baseline = result.baselines[baseline_h]
    report = metrics_report(
        eigenvalues=result.final_eigenvalues,
        eigenfunctions=result.final_eigenfunctions,
        baseline_eigenvalues=baseline.eigenvalues[: config.J],
        baseline_eigenfunctions=baseline.eigenfunctions[: config.J],
        true_eigenvalues=np.asarray(lam_true),
        true_eigenfunctions=np.asarray(psi_true),
        grid=grid,
        baseline_h=baseline_h,
        timings=result.timings,
    )
    report["seed"] = seed
    return report


def _trimmed_quantile_table(values: list) -> dict:
    """Quantile summary after dropping values outside the 5th-95th range."""
    finite = np.array([v for v in values if v is not None and np.isfinite(v)])
    dropped = len(values) - len(finite)
    if len(finite) == 0:
        return {"n": 0, "n_missing": dropped}
    # order-statistic quantiles so the trim never empties small samples
    lo = np.quantile(finite, TRIM_QUANTILES[0], method="lower")
    hi = np.quantile(finite, TRIM_QUANTILES[1], method="higher")
    trimmed = finite[(finite >= lo) & (finite <= hi)]
    table = {name: float(np.quantile(trimmed, q)) for name, q in REPORT_QUANTILES.items()}
    table.update(
        {
            "mean": float(np.mean(trimmed)),
            "n": int(len(trimmed)),
            "n_missing": dropped,
        }
    )
    return table


METRIC_FIELDS = ("lambda_abs_error", "psi_l2_error", "lambda_ratio", "psi_ratio")


def _cmd_bench(args) -> int:
    if args.replications < 1:
        raise InfeasibleError("replications must be at least 1")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec, design = fio.read_scenario(args.scenario)
    config = fio.read_config(args.config) if args.config else FitConfig()
    config_payload = None
    if args.config:
        config_payload = dataclasses.asdict(config)
        config_payload["baseline_h"] = list(config.baseline_h)

    grid = make_uniform_grid(config.fine_grid_size)
    lam_true, psi_true = truth_on_grid(spec, config.J, grid)
    fio.write_truth(lam_true, psi_true, grid, out_dir / "truth.json")
    truth = (lam_true.tolist(), psi_true.tolist(), grid.points.tolist(), grid.quad_weights.tolist())

    seeds = [args.seed + r for r in range(args.replications)]
    jobs = [(args.scenario, config_payload, s, args.baseline_h, truth) for s in seeds]
    if args.workers <= 1:
        reports = [_bench_one(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            reports = list(pool.map(_bench_one, *zip(*jobs)))

    # aggregate files must not depend on wall-clock timings, so those are
    # split out into a separate, non-deterministic file
    timings = [rep.pop("timings", {}) for rep in reports]
    lines = [fio.dumps(rep) for rep in reports]
    (out_dir / "replications.jsonl").write_text("\n".join(lines) + "\n")

    aggregate = {
        "schema_version": 1,
        "kind": "bench",
        "replications": args.replications,
        "seed": args.seed,
        "baseline_h": args.baseline_h,
        "metrics": {},
    }
    n_elements = len(reports[0]["lambda_abs_error"])
    for field in METRIC_FIELDS:
        aggregate["metrics"][field] = {
            f"j{j + 1}": _trimmed_quantile_table([rep[field][j] for rep in reports])
            for j in range(n_elements)
        }
    fio.write_report(aggregate, out_dir / "aggregate.json")

    timing_summary = {
        "schema_version": 1,
        "kind": "bench-timings",
        "stage_totals": {},
    }
    for t in timings:
        for stage, secs in t.items():
            timing_summary["stage_totals"][stage] = (
                timing_summary["stage_totals"].get(stage, 0.0) + secs
            )
    fio.write_report(timing_summary, out_dir / "timings.json")
    med = aggregate["metrics"]["lambda_ratio"]["j1"].get("median")
    print(
        f"bench: {args.replications} replications aggregated to {out_dir} "
        f"(median lambda_1 error ratio: {med if med is not None else 'NA'})"
    )
    return 0


def cli_main(argv=None) -> int:
    """Entry point returning an exit code instead of raising."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "eval":
            return _cmd_eval(args)
        return _cmd_bench(args)
    except ParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (InfeasibleError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except NumericalError as err:
        print(f"error: {err}", file=sys.stderr)
        return 4
    except AdafpcaError as err:
        print(f"error: {err}", file=sys.stderr)
        return 4
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
