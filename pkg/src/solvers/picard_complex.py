"""
Complex-time Picard solver for polynomial fields via truncated power series.

Iterates are holomorphic on the disc |t - t0| < alpha; sup norms over the
closed disc are reported as a certified interval: a boundary-sampled lower
bound and a coefficient-majorant upper bound.
"""
import logging
import math
from typing import Any, List, NamedTuple, Optional

import numpy as np

from src.models.chain import ChainSpec, MetricValue, NotAMember
from src.models.functions import TaylorFunctionC
from src.models.problem import ComplexIVProblem, factorial_bound
from src.models.report import ConvergenceReport, ConvergenceRow
from src.solvers.chain_fixpoint import geometric_tail_bound, iterate
from src.solvers.errors import BallCertificationError
from src.solvers.series import (
    BOUNDARY_SAMPLES,
    ball_certificate,
    boundary_samples,
    picard_series_step,
    series_metric_lower,
    series_metric_upper,
)

logger = logging.getLogger(__name__)

DEFAULT_K_MAX = 64
DEFAULT_N_REF = 30


class DiscNorm(NamedTuple):
    """Certified interval for d_j on the closed disc; upper is inf when z - w is not O(tau^j)."""
    lower: float
    upper: float
    member: bool


def initial_series(problem: ComplexIVProblem) -> TaylorFunctionC:
    return TaylorFunctionC.constant(problem.t0, problem.alpha, problem.z0)


def picard_apply_series(problem: ComplexIVProblem, z: TaylorFunctionC,
                        K_max: int = DEFAULT_K_MAX, strict: bool = False) -> TaylorFunctionC:
    """
    z0 + int_{t0}^{t} F(s, z(s)) ds by termwise composition and integration.

    The integrand is holomorphic on the disc, so the termwise antiderivative
    equals the integral along the segment from t0 to t.

    Raises:
        BallCertificationError: with strict=True, when the coefficient majorant
            cannot place the image inside the b-ball
    """
    coeffs, tail = picard_series_step(problem.field, problem.t0, z.radius, z, problem.z0, K_max)
    image = TaylorFunctionC(coeffs, problem.t0, z.radius, tail, "max")

    sampled, majorant, certified = ball_certificate(image, problem.b, boundary_samples(z.radius))
    image.ball_certified = certified
    if not certified:
        message = f"b-ball not certified: majorant {majorant:.6g} > b = {problem.b:.6g} (sampled {sampled:.6g})"
        if strict:
            raise BallCertificationError(message)
        logger.warning(message)
    return image


def sup_norm_disc(z: TaylorFunctionC, w: TaylorFunctionC, j: int,
                  samples: int = BOUNDARY_SAMPLES) -> DiscNorm:
    """
    Interval for d_j(z, w) = sup_{0 < |t - t0| <= alpha} ||(z - w)(t)|| / |t - t0|^j.

    The lower bound samples the boundary circle (maximum principle on the
    holomorphic quotient); when z - w has a nonzero coefficient below order j
    it samples shrinking circles instead and the upper bound is infinite.
    """
    lower = series_metric_lower(z, w, j, boundary_samples(z.radius, samples))
    upper: MetricValue = series_metric_upper(z, w, j)
    if isinstance(upper, NotAMember):
        return DiscNorm(lower, math.inf, False)
    return DiscNorm(lower, upper, True)


def theorem_bound(problem: ComplexIVProblem, n: int) -> float:
    """e^{alpha L} (alpha L)^n M / n!."""
    return factorial_bound(problem.alpha, problem.L, problem.M, n)


def _membership(problem: ComplexIVProblem, K_max: int):
    def member(level: int, z: TaylorFunctionC) -> MetricValue:
        if not np.allclose(z.coeffs[0], problem.z0, rtol=0.0, atol=1e-12):
            return NotAMember(level, "value at t0 differs from z0")
        sampled, _, _ = ball_certificate(z, problem.b, boundary_samples(z.radius))
        if sampled > problem.b * (1.0 + 1e-9):
            return NotAMember(level, f"leaves the b-ball ({sampled:.6g} > {problem.b:.6g})")
        if level == 0:
            return 0.0
        image = picard_apply_series(problem, z, K_max)
        return series_metric_upper(image, z, level)
    return member


def complex_chain(problem: ComplexIVProblem, K_max: int = DEFAULT_K_MAX,
                  kappa_scale: float = 1.0) -> ChainSpec:
    return ChainSpec.harmonic(
        problem.alpha, problem.L,
        metric_eval=lambda j, x, y: series_metric_upper(x, y, j),
        map_eval=lambda z: picard_apply_series(problem, z, K_max),
        kappa_scale=kappa_scale,
        member_eval=_membership(problem, K_max)
    )


def solve_complex(problem: ComplexIVProblem, n: int, z_start: Optional[TaylorFunctionC] = None,
                  K_max: int = DEFAULT_K_MAX, n_ref: int = DEFAULT_N_REF,
                  reference: Optional[TaylorFunctionC] = None, kappa_scale: float = 1.0,
                  tol: float = 1e-3) -> ConvergenceReport:
    """
    Picard iterates in complex time with d_0 reported as coefficient upper bounds.

    The reference is the supplied series or the iterate max(n_ref, n + 8).
    A warning is recorded whenever the tail majorant of an iterate exceeds
    the theorem bound for that row (truncation degree too small).
    """
    warnings: List[str] = []
    degenerate = problem.L == 0 or problem.M == 0
    if degenerate:
        message = f"degenerate field (L={problem.L}, M={problem.M}): z^1 is the solution"
        logger.warning(message)
        warnings.append(message)

    z0 = z_start if z_start is not None else initial_series(problem)
    spec = complex_chain(problem, K_max, kappa_scale)
    n_total = n if (reference is not None or degenerate) else max(n_ref, n + 8)
    trace = iterate(spec, z0, n_total, target_bound=-math.inf, base_level=0, max_checked_level=n)

    noise_floor = 64 * np.finfo(float).eps * (1.0 + float(np.max(np.abs(problem.z0)))
                                               + problem.alpha * problem.M)
    if reference is not None:
        reference_kind = "closed-form"
        ref = reference
    elif degenerate:
        reference_kind = "degenerate-series-iterate"
        ref = trace.next_point
    else:
        reference_kind = "series-iterate"
        ref = trace.points[n_total]
        noise_floor += trace.bounds[n_total]

    report = ConvergenceReport(
        problem_name=problem.name, mode="complex", alpha=problem.alpha, L=problem.L, M=problem.M,
        series_constant=trace.series_constant, reference_kind=reference_kind,
        first_step=trace.first_step or 0.0, noise_floor=noise_floor, tol=tol, warnings=warnings
    )
    q = problem.alpha * problem.L

    for m in range(n + 1):
        z_m = trace.points[m]
        observed = float(series_metric_upper(z_m, ref, 0))
        factorial = theorem_bound(problem, m)
        defect = series_metric_upper(picard_apply_series(problem, z_m, K_max), z_m, m)
        row = ConvergenceRow(
            n=m, observed=observed, factorial_bound=factorial, chain_bound=trace.bounds[m],
            geometric_bound=geometric_tail_bound(q, m, report.first_step), defect_level=m,
            defect_value=math.inf if isinstance(defect, NotAMember) else defect,
            tail_majorant=z_m.tail_majorant
        )
        report.rows.append(row)

        if z_m.tail_majorant > factorial > 0.0:
            message = (f"n={m}: tail majorant {z_m.tail_majorant:.3e} exceeds the theorem bound "
                       f"{factorial:.3e}; raise K_max")
            logger.warning(message)
            report.warnings.append(message)

        if problem.alpha <= 1.0 and observed > factorial * (1.0 + tol) + noise_floor:
            report.violations.append(
                f"n={m}: observed {observed:.6e} exceeds factorial bound {factorial:.6e}")
        if observed > row.chain_bound * (1.0 + tol) + noise_floor:
            report.violations.append(
                f"n={m}: observed {observed:.6e} exceeds chain bound {row.chain_bound:.6e}")

    for violation in report.violations:
        logger.error("%s: %s", problem.name or "problem", violation)
    report.final_iterate = trace.points[n]
    return report


def reference_series(coefficients: Any, problem: ComplexIVProblem) -> TaylorFunctionC:
    """Wrap explicit reference coefficients (shape (K+1, d)) as a series on the problem's disc."""
    return TaylorFunctionC.from_coefficients(coefficients, problem.t0, problem.alpha)
