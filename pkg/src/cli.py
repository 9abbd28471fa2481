"""
Command-line front end.

    solve    --config run.json [--mode M] [--n-max K] [--out-csv P] [--out-json P]
    bench    --registry NAME|all|heron [--n-max K] [--out-dir D]
    validate --config run.json

Exit codes: 0 success, 1 configuration error, 2 solver error, 3 bound violation.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from src.bench.rates import HERON_NAME, compare_rates, heron_report
from src.bench.registry import RegistryEntry, get_entry, registry_names
from src.exporters.report_exporter import ReportExporter, export_report
from src.expressions.parser import (
    ExpressionError,
    ExpressionEvaluationError,
    compile_rhs,
    parse_expression,
    to_polynomial_field,
)
from src.models.polynomial_field import PolynomialField
from src.models.problem import ComplexIVProblem, IVProblem
from src.models.report import ConvergenceReport, RateReport
from src.models.run_config import MODES, ConfigError, RunConfig
from src.solvers.errors import ProblemValidationError, SolverError
from src.solvers.picard_complex import solve_complex
from src.solvers.picard_real import check_rectangle_bounds, estimate_L_M, solve_ivp
from src.utils.config_manager import ConfigManager

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_VIOLATION = 3


# ---------------------------------------------------------------------------
# Problem construction

def _registry_entry(config: RunConfig) -> RegistryEntry:
    try:
        entry = get_entry(config.problem.registry)
    except KeyError as e:
        raise ConfigError("problem.registry", str(e.args[0])) from e
    if entry.is_complex != (config.mode == "complex"):
        raise ConfigError("mode", f"{config.mode} does not match registry entry {entry.name!r}")
    if config.mode == "real-exact" and entry.backend != "exact":
        raise ConfigError("mode", f"{entry.name!r} has a non-polynomial rhs; use real-grid")
    return entry


def _real_entry(config: RunConfig) -> RegistryEntry:
    spec = config.problem
    y0 = np.asarray(spec.y0, dtype=float)
    try:
        rhs = compile_rhs(spec.rhs, len(y0))
    except ExpressionError as e:
        raise ConfigError("problem.rhs", str(e)) from e

    field = rhs.polynomial_field()
    if config.mode == "real-exact" and field is None:
        raise ConfigError("problem.rhs", "real-exact mode needs a polynomial rhs")

    given = spec.L is not None and spec.M is not None
    L, M = spec.L, spec.M
    if not given:
        L, M = estimate_L_M(spec.t0, y0, spec.a, spec.b, rhs, L=spec.L, M=spec.M)
        logger.info("estimated L=%.6g, M=%.6g", L, M)

    problem = IVProblem(t0=spec.t0, y0=y0, a=spec.a, b=spec.b, rhs=rhs, L=L, M=M,
                        field=field, name=spec.name or "explicit")
    if given:
        check_rectangle_bounds(problem, strict=True)
    return RegistryEntry(problem.name, problem, None, (), list(spec.rhs))


def _complex_entry(config: RunConfig) -> RegistryEntry:
    spec = config.problem
    z0 = np.array([complex(*v) if isinstance(v, list) else complex(v) for v in spec.y0])
    if spec.polynomial is not None:
        try:
            field = PolynomialField.from_dict(spec.polynomial)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError("problem.field", str(e)) from e
    else:
        try:
            field = to_polynomial_field([parse_expression(src, len(z0)) for src in spec.rhs], len(z0))
        except ExpressionError as e:
            raise ConfigError("problem.rhs", str(e)) from e

    problem = ComplexIVProblem(t0=spec.t0, z0=z0, a=spec.a, b=spec.b, field=field,
                               L=spec.L, M=spec.M, name=spec.name or "explicit")
    return RegistryEntry(problem.name, problem, None, (), list(spec.rhs))


def build_entry(config: RunConfig) -> RegistryEntry:
    """
    Resolve the problem block into a registry-style entry.

    Raises:
        ConfigError: unknown entry, mode mismatch or bad expressions
        ProblemValidationError: declared constants contradicted on the rectangle
    """
    if config.problem.is_registry:
        return _registry_entry(config)
    if config.mode == "complex":
        return _complex_entry(config)
    return _real_entry(config)


# ---------------------------------------------------------------------------
# Experiment orchestration

def _solve(entry: RegistryEntry, config: RunConfig) -> ConvergenceReport:
    solver = config.solver
    if config.mode == "complex":
        return solve_complex(entry.problem, solver.n_max, K_max=solver.K_max,
                             kappa_scale=solver.kappa_scale, tol=solver.tol)
    backend = config.mode.split("-", 1)[1]
    return solve_ivp(entry.problem, solver.n_max, backend=backend, N=solver.N, K_max=solver.K_max,
                     reference=entry.closed_form, kappa_scale=solver.kappa_scale, tol=solver.tol)


def _format(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:12.4e}"


def print_summary(report: ConvergenceReport, rates: Optional[RateReport] = None):
    """Print the per-iterate table (n, observed, bounds) and any violations."""
    print("=" * 72)
    print(f"{report.problem_name}  mode={report.mode}  alpha={report.alpha:.6g}  "
          f"L={report.L:.6g}  M={report.M:.6g}")
    print(f"reference: {report.reference_kind}  C={report.series_constant:.6g}  "
          f"noise floor={report.noise_floor:.3e}")
    print("=" * 72)
    print(f"{'n':>3}  {'observed':>12}  {'factorial':>12}  {'chain':>12}  {'geometric':>12}")
    for row in report.rows:
        print(f"{row.n:>3}  {_format(row.observed)}  {_format(row.factorial_bound)}  "
              f"{_format(row.chain_bound)}  {_format(row.geometric_bound)}")
    if rates is not None:
        slope = "-" if rates.euler_slope is None else f"{rates.euler_slope:.3f}"
        print(f"\nPicard decay: {rates.picard_decay}   geometric column: {rates.geometric_decay}   "
              f"Euler slope: {slope}")
    for message in report.warnings:
        print(f"warning: {message}")
    for message in report.violations:
        print(f"VIOLATION: {message}")


def run_experiment(config: RunConfig) -> int:
    """
    Solve the configured problem, write the reports and print a summary.

    Returns:
        exit status: 0 ok, 1 config error, 2 solver error, 3 bound violation
    """
    try:
        entry = build_entry(config)
    except ConfigError as e:
        logger.error("configuration error: %s", e)
        return EXIT_CONFIG
    except ProblemValidationError as e:
        logger.error("problem constants rejected: %s", e)
        return EXIT_CONFIG
    except ExpressionEvaluationError as e:
        logger.error("rhs cannot be evaluated on the rectangle: %s", e)
        return EXIT_SOLVER

    try:
        report = _solve(entry, config)
        rates = None
        if config.solver.compare_rates:
            backend = None if config.mode == "complex" else config.mode.split("-", 1)[1]
            rates = compare_rates(entry, config.solver.n_max, config.solver.euler_levels,
                                  N=config.solver.N, K_max=config.solver.K_max, backend=backend)
    except (SolverError, ExpressionEvaluationError) as e:
        logger.error("solver error: %s", e)
        return EXIT_SOLVER

    output = config.output
    try:
        export_report(report, rates, csv_path=output.csv, json_path=output.json,
                      excel_path=output.excel)
    except OSError as e:
        logger.error("cannot write report: %s", e)
        return EXIT_CONFIG

    print_summary(report, rates)
    if report.has_violations or (rates is not None and rates.violations):
        return EXIT_VIOLATION
    return EXIT_OK


# ---------------------------------------------------------------------------
# Subcommands

def _cmd_solve(args: argparse.Namespace) -> int:
    manager = ConfigManager(args.state_dir)
    try:
        if args.config is not None:
            manager.load_run_config(args.config)
        else:
            manager.run_config = manager.load_last_run()
            if manager.run_config is None:
                raise ConfigError("config", "no --config given and no previous run stored")
        manager.update_run_config(mode=args.mode, n_max=args.n_max, csv=args.out_csv,
                                  json=args.out_json)
        manager.save_last_run()
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return run_experiment(manager.get_run_config())


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        config = RunConfig.load_from_file(Path(args.config))
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    problem = config.problem.registry or f"explicit (d={config.problem.dimension})"
    print(f"OK: mode={config.mode}, problem={problem}, n_max={config.solver.n_max}")
    return EXIT_OK


def _bench_names(selection: str) -> List[str]:
    if selection == "all":
        return registry_names() + [HERON_NAME]
    return [selection]


def _print_rates(report: RateReport):
    print(f"\n{report.entry_name}  alpha={report.alpha:.6g}  reference={report.reference_kind}  "
          f"bound={report.bound_kind}")
    print(f"{'n':>3}  {'observed':>12}  {'bound':>12}  {'geometric':>12}  {'euler':>12}")
    for row in report.rows:
        print(f"{row.n:>3}  {_format(row.observed)}  {_format(row.factorial_bound)}  "
              f"{_format(row.geometric_bound)}  {_format(row.euler_matched)}")
    print(f"decay: picard={report.picard_decay}  geometric={report.geometric_decay}  "
          f"euler slope={report.euler_slope}")
    for message in report.violations:
        print(f"VIOLATION: {message}")


def _cmd_bench(args: argparse.Namespace) -> int:
    if args.registry not in registry_names() + ["all", HERON_NAME]:
        print(f"unknown registry entry {args.registry!r}; known: "
              f"{', '.join(registry_names() + [HERON_NAME])}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    status = EXIT_OK
    for name in _bench_names(args.registry):
        try:
            if name == HERON_NAME:
                report = heron_report()
            else:
                report = compare_rates(get_entry(name), args.n_max, args.euler_levels, N=args.N)
        except SolverError as e:
            logger.error("%s: solver error: %s", name, e)
            return EXIT_SOLVER
        _print_rates(report)
        if out_dir is not None:
            exporter = ReportExporter(report)
            exporter.export_csv(out_dir / f"{name}.csv")
            exporter.export_json(out_dir / f"{name}.json")
        if report.violations:
            status = EXIT_VIOLATION
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="picard-chain",
        description="Picard iteration on a chain of weighted metrics, with certified error bounds.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Solve a configured problem and write the CSV report
  python main.py solve --config run.json --out-csv report.csv

  # Compare rates on every registry entry
  python main.py bench --registry all
        """
    )
    parser.add_argument('--verbose', '-v', action='store_true', help='Debug logging')
    parser.add_argument('--state-dir', type=Path, default=None,
                        help='Directory keeping the last validated run (default ~/.picard-chain)')
    sub = parser.add_subparsers(dest='command', required=True)

    solve = sub.add_parser('solve', help='Run the Picard solver on a configuration')
    solve.add_argument('--config', type=Path, help='Run configuration (JSON); defaults to the last run')
    solve.add_argument('--mode', choices=MODES, help='Override the configured mode')
    solve.add_argument('--n-max', type=int, dest='n_max', help='Override the number of iterations')
    solve.add_argument('--out-csv', dest='out_csv', help='CSV report path')
    solve.add_argument('--out-json', dest='out_json', help='JSON report path')
    solve.set_defaults(handler=_cmd_solve)

    bench = sub.add_parser('bench', help='Rate comparison on registry problems')
    bench.add_argument('--registry', required=True, help="Entry name, 'heron' or 'all'")
    bench.add_argument('--n-max', type=int, dest='n_max', default=10)
    bench.add_argument('--euler-levels', type=int, dest='euler_levels', default=7)
    bench.add_argument('--N', type=int, dest='N', default=1024, help='Grid half-resolution')
    bench.add_argument('--out-dir', dest='out_dir', help='Write <entry>.csv and <entry>.json here')
    bench.set_defaults(handler=_cmd_bench)

    validate = sub.add_parser('validate', help='Check a configuration file without solving')
    validate.add_argument('--config', type=Path, required=True)
    validate.set_defaults(handler=_cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s"
    )
    return args.handler(args)
