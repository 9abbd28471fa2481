"""
Rate comparison: Picard error against factorial and geometric bounds and against Euler.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from src.bench.baselines import euler_polygon
from src.bench.registry import ClosedForm, RegistryEntry
from src.models.chain import ChainSpec, NotAMember, TailKind
from src.models.problem import IVProblem
from src.models.report import RateReport, RateRow
from src.solvers.chain_fixpoint import iterate
from src.solvers.picard_complex import solve_complex
from src.solvers.picard_real import DEFAULT_K_MAX, DEFAULT_N, solve_ivp

logger = logging.getLogger(__name__)

HERON_NAME = "heron"
MIN_ROWS = 4
# RMS of the log-error residual above which neither decay model is accepted
RESIDUAL_LIMIT = 0.5
SUPERLINEAR_RATIO = 1.5


def _fit_rms(x: np.ndarray, y: np.ndarray) -> float:
    coeffs = np.polyfit(x, y, 1)
    residual = y - np.polyval(coeffs, x)
    return float(np.sqrt(np.mean(residual ** 2)))


def classify_decay(ns: Sequence[int], errors: Sequence[Optional[float]], noise_floor: float = 0.0) -> str:
    """
    Label how errors decay with n.

    Rows n >= 1 above the noise floor are fitted with log e linear in n
    (geometric) and log e + log n! linear in n (factorial); the smaller RMS
    residual wins if it is at most RESIDUAL_LIMIT. Otherwise the label is
    'superlinear' when log e_{n+1} / log e_n has median >= 1.5, else
    'indeterminate'. Fewer than four usable rows give 'indeterminate';
    no error above the floor gives 'exact'.
    """
    rows = [(n, e) for n, e in zip(ns, errors) if n >= 1 and e is not None]
    if rows and all(e <= noise_floor for _, e in rows):
        return "exact"
    usable = [(n, e) for n, e in rows if e > noise_floor]
    if len(usable) < MIN_ROWS:
        return "indeterminate"

    n = np.array([row[0] for row in usable], dtype=float)
    log_e = np.log(np.array([row[1] for row in usable], dtype=float))
    geometric = _fit_rms(n, log_e)
    factorial = _fit_rms(n, log_e + gammaln(n + 1))
    logger.debug("decay fit residuals: geometric %.3g, factorial %.3g", geometric, factorial)
    if min(geometric, factorial) <= RESIDUAL_LIMIT:
        return "factorial" if factorial <= geometric else "geometric"

    previous = log_e[:-1]
    ratios = log_e[1:][previous < 0] / previous[previous < 0]
    if ratios.size and float(np.median(ratios)) >= SUPERLINEAR_RATIO:
        return "superlinear"
    return "indeterminate"


def _right_end_error(problem: IVProblem, h: float, reference: ClosedForm) -> float:
    polygon = euler_polygon(problem, h)
    t_end = np.array([problem.t0 + problem.alpha])
    exact = np.asarray(reference(t_end), dtype=float).reshape(problem.dimension)
    return float(problem.norm(polygon.values[-1] - exact))


def euler_convergence(problem: IVProblem, reference: ClosedForm, levels: int = 7,
                      first_level: int = 2) -> Tuple[List[float], List[float], Optional[float]]:
    """
    Euler global error at t0 + alpha for h = alpha / 2^k, k = first_level ...

    Returns:
        (steps, errors, fitted log-log slope or None when fewer than two errors are positive)
    """
    hs = [problem.alpha / 2 ** k for k in range(first_level, first_level + levels)]
    errors = [_right_end_error(problem, h, reference) for h in hs]
    positive = [(h, e) for h, e in zip(hs, errors) if e > 0]
    if len(positive) < 2:
        return hs, errors, None
    slope = np.polyfit(np.log([h for h, _ in positive]), np.log([e for _, e in positive]), 1)[0]
    return hs, errors, float(slope)


def _euler_matched(problem: IVProblem, n: int, N: int, reference: ClosedForm) -> float:
    """Euler sup error with as many rhs evaluations per side as n grid Picard sweeps."""
    steps = max(n, 1) * N
    polygon = euler_polygon(problem, problem.alpha / steps)
    exact = np.asarray(reference(polygon.nodes), dtype=float).reshape(polygon.values.shape)
    return float(np.max(problem.norm(polygon.values - exact)))


def compare_rates(entry: RegistryEntry, n_max: int = 10, euler_levels: int = 7,
                  N: int = DEFAULT_N, K_max: int = DEFAULT_K_MAX,
                  backend: Optional[str] = None) -> RateReport:
    """
    Picard errors, factorial and geometric bounds and Euler at matched cost for one entry.

    Real entries with polynomial rhs use the exact backend unless `backend`
    says otherwise; the others use the grid.
    Complex entries have no Euler column.
    """
    problem = entry.problem
    if entry.is_complex:
        convergence = solve_complex(problem, n_max, K_max=K_max)
    else:
        convergence = solve_ivp(problem, n_max, backend=backend or entry.backend, N=N, K_max=K_max,
                                reference=entry.closed_form)

    reference = entry.closed_form
    if reference is None and not entry.is_complex:
        final = convergence.final_iterate
        reference = final if callable(final) else None

    report = RateReport(entry_name=entry.name, alpha=problem.alpha, L=problem.L,
                        reference_kind=convergence.reference_kind,
                        noise_floor=convergence.noise_floor,
                        violations=list(convergence.violations))
    for row in convergence.rows:
        matched = None
        if not entry.is_complex and reference is not None:
            matched = _euler_matched(problem, row.n, N, reference)
        report.rows.append(RateRow(row.n, row.observed, row.factorial_bound,
                                   row.geometric_bound, matched))

    ns = [row.n for row in report.rows]
    report.picard_decay = classify_decay(ns, [row.observed for row in report.rows],
                                         convergence.noise_floor)
    if problem.alpha * problem.L >= 1.0:
        report.geometric_decay = "inapplicable"
    else:
        report.geometric_decay = classify_decay(ns, [row.geometric_bound for row in report.rows])

    if not entry.is_complex and reference is not None:
        hs, errors, slope = euler_convergence(problem, reference, euler_levels)
        report.euler_steps, report.euler_errors, report.euler_slope = hs, errors, slope
    logger.info("%s: picard %s, geometric %s, euler slope %s", entry.name,
                report.picard_decay, report.geometric_decay, report.euler_slope)
    return report


# ---------------------------------------------------------------------------
# Heron's iteration through the chain engine

def heron_chain(R: float = 2.0, slack: float = 1e-12) -> ChainSpec:
    """
    x -> (x + R/x) / 2 on H_j = [sqrt R, sqrt R + 2^-j] with d_j = 2^j |x - y|.

    alpha_j = 1/2 and kappa_j = 1 - R / (sqrt R + 2^-(j-1))^2, a decreasing tail.
    """
    root = math.sqrt(R)

    def member(level: int, x: float):
        if root - slack <= x <= root + 2.0 ** -level + slack:
            return 0.0
        return NotAMember(level, f"{x!r} outside [sqrt R, sqrt R + 2^-{level}]")

    def metric(level: int, x: float, y: float):
        for point in (x, y):
            found = member(level, point)
            if isinstance(found, NotAMember):
                return found
        return 2.0 ** level * abs(x - y)

    return ChainSpec(
        alpha_seq=lambda k: 0.5,
        kappa_seq=lambda k: 1.0 - R / (root + 2.0 ** -(k - 1)) ** 2,
        metric_eval=metric,
        map_eval=lambda x: 0.5 * (x + R / x),
        tail_kind=TailKind.EVENTUALLY_MONOTONE_DECREASING,
        member_eval=member
    )


def heron_report(R: float = 2.0, x0: float = 2.0, n_max: int = 8) -> RateReport:
    """Heron errors |x_n - sqrt R| next to the chain bound, classified without forcing a model."""
    spec = heron_chain(R)
    trace = iterate(spec, x0, n_max, target_bound=-math.inf)
    root = math.sqrt(R)
    noise_floor = 4 * np.finfo(float).eps * root

    report = RateReport(entry_name=HERON_NAME, alpha=0.5, L=math.nan, reference_kind="closed-form",
                        bound_kind="chain", noise_floor=noise_floor)
    for n, (x, bound) in enumerate(zip(trace.points, trace.bounds)):
        report.rows.append(RateRow(n, abs(x - root), bound))
    report.picard_decay = classify_decay([r.n for r in report.rows],
                                         [r.observed for r in report.rows], noise_floor)
    report.geometric_decay = "inapplicable"
    return report
