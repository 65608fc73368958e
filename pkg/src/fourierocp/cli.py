"""Command-line front end.

Subcommands:

* ``solve-uav``          -- run the mesh-refined endurance optimisation and
                            write report.json, trajectory.csv,
                            thrust_corrected.csv and a gnuplot script.
* ``edge-bench``         -- run the jump detector on the built-in two-level
                            benchmark signals and tabulate localisation
                            errors.
* ``sensitivity-table``  -- conditioning study of the thrust saturation law.
* ``fim-convergence``    -- spectral convergence-rate suites with slope fits.
* ``detect-edges``       -- detect and rebuild a two-level signal from a CSV
                            of (t, value) samples.

Defaults follow the stock study configuration (N_in=150, N_inc=50, M=1000,
epsilon=0.01, r1=1, r2=2). A JSON or TOML config file overrides the
defaults and explicit flags override the file; the output directory falls
back to the FOURIEROCP_OUT environment variable. Exit codes: 0 success,
2 invalid configuration, 3 solver unconverged, 4 structural edge-detection
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from fourierocp.benchmarks import BENCHMARK_SIGNALS
from fourierocp.convergence import (
    fit_order,
    geometric_quadrature_errors,
    l2_interpolation_error,
    smooth_family,
)
from fourierocp.edges import EdgeConfig, EdgeStructureError, detect_edges, reconstruct
from fourierocp.fourier import build_grid, interpolate
from fourierocp.nlp import NlpSolverHandle
from fourierocp.transcription import RefineConfig, refine, sample_physical
from fourierocp.uav import default_parameters, load_parameters, sensitivity_table

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_EDGES = 4

_FMT = "%.17g"


@dataclass
class RunConfig:
    """Tunable knobs shared by the subcommands."""

    n_in: int = 150
    n_inc: int = 50
    m: int = 1000
    epsilon: float = 0.01
    r1: int = 1
    r2: int = 2
    max_meshes: int = 8
    t_f_guess: float = 10.0
    seed: int = 0
    tol_fun: float = 1e-12  # TolFun
    tol_step: float = 1e-12  # TolX
    verbose: bool = False


_CONFIG_ALIASES = {"TolFun": "tol_fun", "TolX": "tol_x"}


def _load_config_file(path: Path) -> dict:
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        data = tomllib.loads(path.read_text())
    else:
        data = json.loads(path.read_text())
    if not isinstance(data, dict):
        raise ValueError("config file must contain a table of settings")
    out = {}
    valid = {f.name for f in fields(RunConfig)}
    for key, value in data.items():
        name = {"TolFun": "tol_fun", "TolX": "tol_step"}.get(key, key)
        if name not in valid:
            raise ValueError(f"unknown config key {key!r}")
        out[name] = value
    return out


def build_run_config(args) -> RunConfig:
    config = RunConfig()
    if getattr(args, "config", None):
        for key, value in _load_config_file(Path(args.config)).items():
            setattr(config, key, value)
    for field in fields(RunConfig):
        flag = getattr(args, field.name, None)
        if flag is not None:
            setattr(config, field.name, flag)
    return config


def _out_dir(args) -> Path:
    out = getattr(args, "out", None) or os.environ.get("FOURIEROCP_OUT", "out")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = zip(*[np.asarray(c, dtype=float) for c in columns])
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_FMT % v for v in row])


def _solver_handle(config: RunConfig) -> NlpSolverHandle:
    return NlpSolverHandle(
        tol_fun=config.tol_fun,
        tol_step=config.tol_step,
        rho_init=1e3,
        rho_max=1e7,
        max_outer=40,
        max_inner=6000,
        log=(lambda msg: print(msg, file=sys.stderr)) if config.verbose else None,
    )


# ----------------------------------------------------------- solve-uav


def cmd_solve_uav(args) -> int:
    try:
        config = build_run_config(args)
        params = load_parameters(args.params) if args.params else default_parameters()
        out = _out_dir(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    refine_config = RefineConfig(
        n_in=config.n_in,
        n_inc=config.n_inc,
        epsilon=config.epsilon,
        max_meshes=config.max_meshes,
        fine_grid_size=config.m,
        r1=config.r1,
        r2=config.r2,
        t_f_guess=config.t_f_guess,
        seed=config.seed,
    )
    report = refine(params, refine_config, _solver_handle(config))
    solution = report.solution

    payload = {
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "converged": report.converged,
        "fuel_rate_kg_per_s": report.fuel_rate,
        "period_s": report.T_f,
        "switch_times_s": report.switch_times.tolist(),
        "gamma0": float(solution.gamma[0]),
        "V0": float(solution.V[0]),
        "history": [
            {
                "n": row.n,
                "T_f": row.T_f,
                "objective_scaled": row.objective_scaled,
                "fuel_rate": row.fuel_rate,
                "status": row.status,
                "feasibility": row.feasibility,
            }
            for row in report.history
        ],
        "edge_failure": report.edge_failure,
        "config": asdict(config),
    }
    (out / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True))

    times = np.linspace(0.0, solution.T_f, 2000)
    table = sample_physical(solution, params, times)
    corrected = (
        report.corrected_thrust.evaluate(times)
        if report.corrected_thrust is not None
        else np.full(times.size, np.nan)
    )
    _write_csv(
        out / "trajectory.csv",
        ["t", "x", "z", "gamma", "V", "alpha", "T_predicted", "T_corrected"],
        [table.t, table.x, table.z, table.gamma, table.V, table.alpha, table.T_predicted, corrected],
    )
    if report.corrected_thrust is not None:
        bp = report.corrected_thrust.breakpoints
        vals = np.append(report.corrected_thrust.values, report.corrected_thrust.values[-1])
        _write_csv(out / "thrust_corrected.csv", ["t", "T"], [bp, vals])
    (out / "plots.gp").write_text(_gnuplot_script())

    if report.edge_failure is not None:
        print(f"edge detection failed: {report.edge_failure}", file=sys.stderr)
        return EXIT_EDGES
    if not report.converged:
        print("warning: run flagged unconverged; artifacts retained", file=sys.stderr)
        return EXIT_SOLVER
    print(
        f"fuel rate {report.fuel_rate:.6f} kg/s over period {report.T_f:.4f} s "
        f"with {report.switch_times.size} thrust switches"
    )
    return EXIT_OK


def _gnuplot_script() -> str:
    return """# Six-panel summary of the optimised flight cycle.
set datafile separator ','
set terminal pngcairo size 1400,1600
set output 'flight_summary.png'
set multiplot layout 3,2
set key off
set xlabel 'x [m]'
set ylabel 'z [m]'
plot 'trajectory.csv' using 2:3 skip 1 with lines
set xlabel 't [s]'
set ylabel 'gamma [rad]'
plot 'trajectory.csv' using 1:4 skip 1 with lines
set ylabel 'V [m/s]'
plot 'trajectory.csv' using 1:5 skip 1 with lines
set ylabel 'alpha [rad]'
plot 'trajectory.csv' using 1:6 skip 1 with lines
set ylabel 'thrust (predicted) [N]'
plot 'trajectory.csv' using 1:7 skip 1 with lines
set ylabel 'thrust (corrected) [N]'
plot 'trajectory.csv' using 1:8 skip 1 with steps
unset multiplot
"""


# ---------------------------------------------------------- edge-bench


def cmd_edge_bench(args) -> int:
    try:
        out = _out_dir(args)
        n = args.n
        m = args.m
        if args.function != "all" and args.function not in BENCHMARK_SIGNALS:
            raise ValueError(
                f"unknown benchmark {args.function!r}; "
                f"choose from {sorted(BENCHMARK_SIGNALS)}"
            )
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    names = list(BENCHMARK_SIGNALS) if args.function == "all" else [args.function]
    config = EdgeConfig(fine_grid_size=m, epsilon_tilde=args.epsilon_tilde, r1=args.r1, r2=args.r2)
    grid = build_grid(2.0 * np.pi, n)
    summary = []
    for name in names:
        bench = BENCHMARK_SIGNALS[name]
        itp = interpolate(grid, bench.signal.evaluate(grid.nodes))
        try:
            report = detect_edges(itp, config)
        except EdgeStructureError as exc:
            print(f"{name}: structural failure: {exc}", file=sys.stderr)
            return EXIT_EDGES
        if report.is_empty:
            mae = 0.0 if bench.true_switches.size == 0 else np.nan
            corrected_vals = np.full(2000, report.levels[0])
        else:
            rec = reconstruct(itp, report)
            mae = (
                float(np.max(np.abs(report.ad_points - bench.true_switches)))
                if report.ad_points.size == bench.true_switches.size
                else np.nan
            )
            corrected_vals = None
        dense = np.linspace(0.0, 2.0 * np.pi, 2000)
        if corrected_vals is None:
            corrected_vals = rec.evaluate(dense)
        _write_csv(
            out / f"edge_bench_{name}.csv",
            ["t", "true", "interpolant", "corrected"],
            [dense, bench.signal.evaluate(dense), itp.evaluate(dense), corrected_vals],
        )
        summary.append(
            {
                "function": name,
                "ad_points": report.ad_points.tolist(),
                "L1": report.first_pass_count,
                "L2": report.candidate_count,
                "mae": mae,
            }
        )
        shown = ", ".join(f"{v:.4f}" for v in report.ad_points)
        print(f"{name:14s} points [{shown}] max-abs error {mae:.4e}" if report.ad_points.size else f"{name:14s} no jumps detected")

    with (out / "edge_bench.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["function", "L1", "L2", "mae", "ad_points"])
        for row in summary:
            writer.writerow(
                [row["function"], row["L1"], row["L2"], _FMT % row["mae"] if row["mae"] == row["mae"] else "nan",
                 ";".join(_FMT % v for v in row["ad_points"])]
            )
    return EXIT_OK


# ---------------------------------------------------- sensitivity-table


def cmd_sensitivity(args) -> int:
    try:
        out = _out_dir(args)
        if any(s <= 0 for s in args.sm):
            raise ValueError("smoothing factors must be strictly positive")
        if len(args.lambda_pair) != 2:
            raise ValueError("exactly two costate values are required")
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    params = default_parameters()
    rows = sensitivity_table(
        params.sigma, params.m, args.tf, tuple(args.lambda_pair), args.sm
    )
    with (out / "sensitivity.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s_m", "phi_base", "phi_perturbed", "relative_change", "amplification"])
        for row in rows:
            writer.writerow(
                [_FMT % row.s_m, _FMT % row.phi_base, _FMT % row.phi_perturbed,
                 _FMT % row.relative_change, _FMT % row.amplification]
            )
    for row in rows:
        print(
            f"s_m={row.s_m:9.3g}  phi={row.phi_base:7.1f} -> {row.phi_perturbed:7.1f}  "
            f"amplification {row.amplification:9.1f}"
        )
    return EXIT_OK


# ---------------------------------------------------- fim-convergence


def cmd_fim_convergence(args) -> int:
    try:
        out = _out_dir(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    geo_ns = (8, 16, 32, 64, 128)
    geo_errs = geometric_quadrature_errors(geo_ns)
    rate_ns = (32, 64, 128, 256, 512)
    slopes = {}
    for s in (0, 1, 2):
        errs = [l2_interpolation_error(smooth_family(s), n) for n in rate_ns]
        slopes[s] = (fit_order(rate_ns, errs), errs)

    with (out / "fim_convergence.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["suite", "n", "error"])
        for n, err in zip(geo_ns, geo_errs):
            writer.writerow(["analytic_quadrature", n, _FMT % err])
        for s, (_, errs) in slopes.items():
            for n, err in zip(rate_ns, errs):
                writer.writerow([f"smooth_s{s}_l2", n, _FMT % err])
    with (out / "fim_slopes.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["suite", "fitted_order", "expected_order"])
        for s, (slope, _) in slopes.items():
            writer.writerow([f"smooth_s{s}", _FMT % slope, _FMT % (-s - 0.5)])

    print("analytic quadrature errors:", ", ".join(f"{e:.2e}" for e in geo_errs))
    for s, (slope, _) in slopes.items():
        print(f"s={s}: fitted order {slope:+.3f} (expected {-s - 0.5:+.1f})")
    return EXIT_OK


# ------------------------------------------------------- detect-edges


def cmd_detect_edges(args) -> int:
    try:
        out = _out_dir(args)
        raw = np.loadtxt(args.input, delimiter=",", skiprows=1)
        if raw.ndim != 2 or raw.shape[1] != 2:
            raise ValueError("input CSV must have two columns: t, value")
        t, values = raw[:, 0], raw[:, 1]
        spacing = np.diff(t)
        if t[0] != 0.0 or np.max(np.abs(spacing - spacing[0])) > 1e-9 * spacing[0]:
            raise ValueError("samples must be equispaced starting at t = 0")
        period = float(t.size * spacing[0])
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    grid = build_grid(period, t.size)
    itp = interpolate(grid, values)
    config = EdgeConfig(
        fine_grid_size=args.m, epsilon_tilde=args.epsilon_tilde, r1=args.r1, r2=args.r2
    )
    known = tuple(args.known_extremes) if args.known_extremes else None
    try:
        report = detect_edges(itp, config, known_extremes=known)
        corrected = None if report.is_empty else reconstruct(itp, report)
    except EdgeStructureError as exc:
        print(f"structural failure: {exc}", file=sys.stderr)
        return EXIT_EDGES

    payload = {
        "ad_points": report.ad_points.tolist(),
        "levels": {"upper": report.levels[0], "lower": report.levels[1]},
        "L1": report.first_pass_count,
        "L2": report.candidate_count,
        "level_source": report.level_source,
    }
    (out / "edge_report.json").write_text(json.dumps(payload, indent=2, sort_keys=True))
    dense = np.linspace(0.0, period, 2000)
    corrected_vals = (
        corrected.evaluate(dense) if corrected is not None else np.full(dense.size, report.levels[0])
    )
    _write_csv(out / "corrected.csv", ["t", "value"], [dense, corrected_vals])
    print(
        f"{report.candidate_count} jumps at "
        + ", ".join(f"{v:.5g}" for v in report.ad_points)
        if not report.is_empty
        else "no jumps detected"
    )
    return EXIT_OK


# --------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fourierocp",
        description="Periodic optimal control by Fourier collocation with bang-bang reconstruction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve-uav", help="run the endurance optimisation")
    solve.add_argument("--params", help="JSON/TOML physical-parameter file")
    solve.add_argument("--config", help="JSON/TOML run-configuration file")
    solve.add_argument("--out", help="output directory")
    solve.add_argument("--n-in", dest="n_in", type=int)
    solve.add_argument("--n-inc", dest="n_inc", type=int)
    solve.add_argument("--m", type=int)
    solve.add_argument("--epsilon", type=float)
    solve.add_argument("--r1", type=int)
    solve.add_argument("--r2", type=int)
    solve.add_argument("--max-meshes", dest="max_meshes", type=int)
    solve.add_argument("--t-f-guess", dest="t_f_guess", type=float)
    solve.add_argument("--seed", type=int)
    solve.add_argument("--verbose", action="store_true", default=None)
    solve.set_defaults(func=cmd_solve_uav)

    bench = sub.add_parser("edge-bench", help="benchmark the jump detector")
    bench.add_argument("--out", help="output directory")
    bench.add_argument("--n", type=int, default=100)
    bench.add_argument("--m", type=int, default=200)
    bench.add_argument("--epsilon-tilde", dest="epsilon_tilde", type=float, default=0.01)
    bench.add_argument("--r1", type=int, default=1)
    bench.add_argument("--r2", type=int, default=2)
    bench.add_argument("--function", default="all")
    bench.set_defaults(func=cmd_edge_bench)

    sens = sub.add_parser("sensitivity-table", help="thrust saturation conditioning study")
    sens.add_argument("--out", help="output directory")
    sens.add_argument("--tf", type=float, default=9.96)
    sens.add_argument(
        "--lambda",
        dest="lambda_pair",
        type=float,
        nargs=2,
        default=[-0.01626, -0.01627],
    )
    sens.add_argument(
        "--sm",
        type=float,
        nargs="+",
        default=[1e5, 1e6, 1e7, 1e8, 1e9, 1e10],
    )
    sens.set_defaults(func=cmd_sensitivity)

    conv = sub.add_parser("fim-convergence", help="spectral convergence-rate suites")
    conv.add_argument("--out", help="output directory")
    conv.set_defaults(func=cmd_fim_convergence)

    detect = sub.add_parser("detect-edges", help="detect jumps in CSV samples")
    detect.add_argument("--input", required=True, help="CSV with columns t,value")
    detect.add_argument("--out", help="output directory")
    detect.add_argument("--m", type=int, default=1000)
    detect.add_argument("--epsilon-tilde", dest="epsilon_tilde", type=float, default=0.01)
    detect.add_argument("--r1", type=int, default=1)
    detect.add_argument("--r2", type=int, default=2)
    detect.add_argument(
        "--known-extremes", dest="known_extremes", type=float, nargs=2, default=None
    )
    detect.set_defaults(func=cmd_detect_edges)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
