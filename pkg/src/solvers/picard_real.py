"""
Real-time Picard solver.

Builds the chain H_0 ⊃ H_1 ⊃ ... of curves y on [t0 - alpha, t0 + alpha]
with y(t0) = y0, ||y - y0|| <= b and finite defect
C_j(f, y) = sup_{t != t0} ||Py(t) - y(t)|| / |t - t0|^j, the weighted
metrics d_j, the Picard operator P and the factorial convergence bound.

Two backends share every operation:
    - GridFunction: cumulative composite trapezoid on a uniform grid, any rhs
    - PolyFunction: exact series arithmetic, polynomial rhs only
"""
import logging
import math
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from src.models.chain import ChainSpec, MetricValue, NotAMember
from src.models.functions import DefectConstant, GridFunction, PolyFunction
from src.models.problem import IVProblem, RightHandSide, compute_alpha, factorial_bound, vector_norm
from src.models.report import ConvergenceReport, ConvergenceRow
from src.solvers.chain_fixpoint import geometric_tail_bound, iterate
from src.solvers.errors import ProblemValidationError, SolverError
from src.solvers.series import (
    ball_certificate,
    picard_series_step,
    real_samples,
    series_metric_lower,
    series_metric_upper,
)

logger = logging.getLogger(__name__)

__all__ = [
    'compute_alpha', 'estimate_L_M', 'check_rectangle_bounds', 'picard_apply',
    'metric_dj', 'metric_bounds', 'picard_defect', 'apply_K', 'apply_RL',
    'finiteness_bound', 'theorem_bound', 'solve_ivp', 'poly_from_grid',
    'uniqueness_gap', 'initial_function',
]

RealFunction = Union[GridFunction, PolyFunction]

SAFETY_FACTOR = 1.01
# Nodes nearest t0 skipped by weighted grid quotients, as a fraction of N
GUARD_DIVISOR = 32
# Log-log slope of the defect quotient below which a grid curve is not in H_j
MEMBERSHIP_SLOPE = -0.5
BALL_TOL = 1e-9
DEFAULT_K_MAX = 64
DEFAULT_N = 1024


def guard_band(N: int) -> int:
    return math.ceil(N / GUARD_DIVISOR)


def _grid_indices(N: int) -> np.ndarray:
    return np.arange(-N, N + 1)


def _cumulative_from_center(values: np.ndarray, N: int, h: float, signed: bool) -> np.ndarray:
    """
    Integral from t0 to every node, marching outward from the center node.

    signed=False integrates against |ds|, so both sides are accumulated with
    a positive step.
    """
    right = cumulative_trapezoid(values[N:], dx=h, axis=0, initial=0)
    left = cumulative_trapezoid(values[N::-1], dx=-h if signed else h, axis=0, initial=0)
    out = np.empty_like(values, dtype=float)
    out[N:] = right
    out[:N + 1] = left[::-1]
    return out


# ---------------------------------------------------------------------------
# Rectangle data

def _rectangle_samples(t0: float, y0: np.ndarray, a: float, b: float, grid_density: int,
                       norm_kind: str) -> Tuple[np.ndarray, np.ndarray, float]:
    """Times across [t0-a, t0+a], states inside the b-ball and the axis spacing used for pairs."""
    d = y0.shape[0]
    times = np.linspace(t0 - a, t0 + a, grid_density)
    per_axis = grid_density if grid_density ** d <= 20_000 else max(3, int(20_000 ** (1.0 / d)))
    axis = np.linspace(-b, b, per_axis)
    mesh = np.stack(np.meshgrid(*([axis] * d), indexing='ij'), axis=-1).reshape(-1, d)
    inside = vector_norm(mesh, norm_kind) <= b * (1.0 + 1e-12)
    return times, y0 + mesh[inside], axis[1] - axis[0]


def estimate_L_M(t0: float, y0: Any, a: float, b: float, rhs: RightHandSide,
                 grid_density: int = 33, norm_kind: str = "euclidean",
                 L: Optional[float] = None, M: Optional[float] = None,
                 safety: float = SAFETY_FACTOR) -> Tuple[float, float]:
    """
    Sampled estimates of the Lipschitz constant and sup bound on R.

    Both are inflated by the safety factor; a supplied L or M is returned as is.
    """
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    times, states, spacing = _rectangle_samples(t0, y0, a, b, grid_density, norm_kind)
    d = y0.shape[0]

    sup_f = 0.0
    lipschitz = 0.0
    for t in times:
        values = np.asarray(rhs(np.full(len(states), t), states), dtype=float).reshape(states.shape)
        sup_f = max(sup_f, float(np.max(vector_norm(values, norm_kind))))
        for k in range(d):
            shifted = states.copy()
            shifted[:, k] += spacing
            keep = vector_norm(shifted - y0, norm_kind) <= b * (1.0 + 1e-12)
            if not np.any(keep):
                continue
            moved = np.asarray(rhs(np.full(int(keep.sum()), t), shifted[keep]), dtype=float)
            moved = moved.reshape(-1, d)
            quotient = vector_norm(moved - values[keep], norm_kind) / spacing
            lipschitz = max(lipschitz, float(np.max(quotient)))

    L_est = L if L is not None else lipschitz * safety
    M_est = M if M is not None else sup_f * safety
    logger.debug("estimated L=%.6g, M=%.6g on %d states", L_est, M_est, len(states))
    return L_est, M_est


def check_rectangle_bounds(problem: IVProblem, grid_density: int = 17, tol_M: float = 1e-9,
                           tol_L: float = 1e-6, strict: bool = False) -> List[str]:
    """
    Sample R and compare against the problem's M and L.

    Problems with declared_bounds skip the check. With strict=True the first
    contradiction raises ProblemValidationError; otherwise messages are returned.
    """
    if problem.declared_bounds:
        logger.warning("%s: L and M are declared along the solution; rectangle check skipped",
                       problem.name or "problem")
        return []

    L_seen, M_seen = estimate_L_M(problem.t0, problem.y0, problem.a, problem.b, problem.rhs,
                                  grid_density, problem.norm_kind, safety=1.0)
    problems = []
    if M_seen > problem.M * (1.0 + tol_M):
        problems.append(f"sampled sup of ||rhs|| is {M_seen:.6g}, above M = {problem.M:.6g}")
    if L_seen > problem.L * (1.0 + tol_L):
        problems.append(f"sampled Lipschitz quotient is {L_seen:.6g}, above L = {problem.L:.6g}")

    for message in problems:
        logger.warning("%s: %s", problem.name or "problem", message)
    if strict and problems:
        raise ProblemValidationError(problems[0])
    return problems


# ---------------------------------------------------------------------------
# Picard operator and metrics

def initial_function(problem: IVProblem, backend: str = "exact", N: int = DEFAULT_N) -> RealFunction:
    """The constant curve y ≡ y0 on the requested backend."""
    if backend == "grid":
        return GridFunction.constant(problem.t0, problem.alpha, N, problem.y0, problem.norm_kind)
    if backend == "exact":
        return PolyFunction.constant(problem.t0, problem.alpha, problem.y0, problem.norm_kind)
    raise ValueError(f"unknown backend: {backend}")


def _picard_grid(problem: IVProblem, y: GridFunction) -> GridFunction:
    f = problem.evaluate(y.nodes, y.values)
    values = problem.y0 + _cumulative_from_center(f, y.N, y.step, signed=True)

    offsets = values - problem.y0
    norms = problem.norm(offsets)
    outside = norms > problem.b
    if np.any(outside):
        logger.warning("grid Picard image leaves the b-ball at %d nodes (max %.6g > %.6g); clamped",
                       int(outside.sum()), float(norms.max()), problem.b)
        values[outside] = problem.y0 + offsets[outside] * (problem.b / norms[outside])[:, None]
    return y.with_values(values)


def _picard_poly(problem: IVProblem, y: PolyFunction, K_max: int) -> PolyFunction:
    if problem.field is None:
        raise SolverError("the exact backend needs a polynomial right-hand side")
    coeffs, tail = picard_series_step(problem.field, problem.t0, y.radius, y, problem.y0, K_max)
    image = PolyFunction(np.real(coeffs), problem.t0, y.radius, tail, y.norm_kind)

    sampled, majorant, certified = ball_certificate(image, problem.b, real_samples(y.radius))
    image.ball_certified = certified
    if sampled > problem.b * (1.0 + BALL_TOL):
        logger.warning("Picard image leaves the b-ball: sampled %.6g > %.6g", sampled, problem.b)
    elif not certified:
        logger.debug("b-ball not certified by the coefficient majorant %.6g", majorant)
    return image


def picard_apply(problem: IVProblem, y: RealFunction, K_max: int = DEFAULT_K_MAX) -> RealFunction:
    """(Py)(t) = y0 + int_{t0}^{t} f(s, y(s)) ds in the representation of y."""
    if isinstance(y, GridFunction):
        return _picard_grid(problem, y)
    if isinstance(y, PolyFunction):
        return _picard_poly(problem, y, K_max)
    raise TypeError(f"unsupported function representation: {type(y).__name__}")


def _grid_mask(N: int, j: int) -> np.ndarray:
    k = np.abs(_grid_indices(N))
    return k > guard_band(N) if j >= 1 else k > 0


def _grid_quotient(x: GridFunction, y: GridFunction, j: int) -> Tuple[np.ndarray, np.ndarray]:
    """Weighted quotient ||x - y|| / |t - t0|^j on the nodes kept for level j, with those offsets."""
    if x.N != y.N or x.alpha != y.alpha:
        raise ValueError("grid functions live on different grids")
    mask = _grid_mask(x.N, j)
    distances = np.abs(x.offsets[mask])
    numerators = vector_norm(x.values[mask] - y.values[mask], x.norm_kind)
    return numerators / distances ** j, distances


def metric_dj(x: RealFunction, y: RealFunction, j: int) -> MetricValue:
    """
    d_j(x, y) = sup_{t != t0} ||x(t) - y(t)|| / |t - t0|^j.

    Grid backend: sup over the nodes (for j >= 1 outside the guard band).
    Exact backend: the coefficient majorant, or NotAMember when x - y has a
    nonzero coefficient below order j.
    """
    if isinstance(x, GridFunction) and isinstance(y, GridFunction):
        quotient, _ = _grid_quotient(x, y, j)
        return float(np.max(quotient)) if quotient.size else 0.0
    if isinstance(x, PolyFunction) and isinstance(y, PolyFunction):
        return series_metric_upper(x, y, j)
    raise TypeError("metric_dj needs two functions of the same representation")


def metric_bounds(x: RealFunction, y: RealFunction, j: int) -> Tuple[float, MetricValue]:
    """(sampled lower bound, upper bound) for d_j; both equal the grid sup on the grid backend."""
    if isinstance(x, GridFunction):
        value = metric_dj(x, y, j)
        return value, value
    lower = series_metric_lower(x, y, j, real_samples(x.radius))
    return lower, series_metric_upper(x, y, j)


def _grid_defect(image: GridFunction, y: GridFunction, j: int) -> DefectConstant:
    quotient, distances = _grid_quotient(image, y, j)
    value = float(np.max(quotient)) if quotient.size else 0.0
    if j == 0:
        return DefectConstant(j, value)

    # Growth of the quotient just outside the guard band signals y not in H_j
    inner = distances <= 4 * guard_band(y.N) * y.step
    numerators = quotient[inner] * distances[inner] ** j
    floor = 64 * np.finfo(float).eps * (1.0 + float(np.max(np.abs(y.values))))
    usable = numerators > floor
    if np.count_nonzero(usable) >= 4:
        slope = np.polyfit(np.log(distances[inner][usable]), np.log(quotient[inner][usable]), 1)[0]
        if slope < MEMBERSHIP_SLOPE:
            return DefectConstant(j, math.inf, f"defect quotient grows towards t0 (slope {slope:.2f})")
    return DefectConstant(j, value)


def picard_defect(problem: IVProblem, y: RealFunction, j: int,
                  K_max: int = DEFAULT_K_MAX) -> DefectConstant:
    """C_j(f, y); infinite (with a reason) when y is not in H_j."""
    image = picard_apply(problem, y, K_max)
    if isinstance(y, GridFunction):
        return _grid_defect(image, y, j)
    value = series_metric_upper(image, y, j)
    if isinstance(value, NotAMember):
        return DefectConstant(j, math.inf, value.reason)
    return DefectConstant(j, value)


# ---------------------------------------------------------------------------
# Operators K and R_L on scalar grid functions

def apply_K(g: GridFunction, n: int = 1) -> GridFunction:
    """K^n g where (K g)(t) = int_{t0}^{t} g(s) |ds|."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    values = g.values
    for _ in range(n):
        values = _cumulative_from_center(values, g.N, g.step, signed=False)
    return g.with_values(values)


def apply_RL(g: GridFunction, L: float) -> GridFunction:
    """
    R_L g = g + L int_{t0}^{t} g(s) e^{L|t-s|} |ds|, the inverse of (Id - L K).

    Evaluated in one pass as g + L e^{L|t-t0|} K[g e^{-L|s-t0|}].
    """
    weight = np.exp(L * np.abs(g.offsets))[:, None]
    damped = g.with_values(g.values / weight)
    return g.with_values(g.values + L * weight * apply_K(damped, 1).values)


def finiteness_bound(problem: IVProblem, x: RealFunction, y: RealFunction, j: int,
                     K_max: int = DEFAULT_K_MAX) -> float:
    """(C_j(f,x) + C_j(f,y)) (1 + L^j (e^{L alpha} - 1)); infinite if either defect is."""
    cx = picard_defect(problem, x, j, K_max)
    cy = picard_defect(problem, y, j, K_max)
    if not (cx.is_member and cy.is_member):
        return math.inf
    return (cx.value + cy.value) * (1.0 + problem.L ** j * math.expm1(problem.L * problem.alpha))


def theorem_bound(problem: IVProblem, n: int) -> float:
    """e^{alpha L} (alpha L)^n M / n!."""
    return factorial_bound(problem.alpha, problem.L, problem.M, n)


# ---------------------------------------------------------------------------
# Solver

def _membership(problem: IVProblem, K_max: int) -> Callable[[int, Any], MetricValue]:
    # H_j sits inside H_0, so the b-ball test runs at every level
    def member(level: int, y: RealFunction) -> MetricValue:
        start = y.coeffs[0] if isinstance(y, PolyFunction) else y.center
        if not np.allclose(start, problem.y0, rtol=0.0, atol=1e-12):
            return NotAMember(level, "value at t0 differs from y0")
        if isinstance(y, PolyFunction):
            sampled, _, _ = ball_certificate(y, problem.b, real_samples(y.radius))
        else:
            sampled = float(np.max(problem.norm(y.values - problem.y0)))
        if sampled > problem.b * (1.0 + BALL_TOL):
            return NotAMember(level, f"leaves the b-ball ({sampled:.6g} > {problem.b:.6g})")
        if level == 0:
            return 0.0
        defect = picard_defect(problem, y, level, K_max)
        return defect.value if defect.is_member else NotAMember(level, defect.reason or "")
    return member


def picard_chain(problem: IVProblem, K_max: int = DEFAULT_K_MAX,
                 kappa_scale: float = 1.0) -> ChainSpec:
    """alpha_j ≡ alpha, kappa_j = L/j with this module's metrics and operator."""
    return ChainSpec.harmonic(
        problem.alpha, problem.L,
        metric_eval=lambda j, x, y: metric_dj(x, y, j),
        map_eval=lambda y: picard_apply(problem, y, K_max),
        kappa_scale=kappa_scale,
        member_eval=_membership(problem, K_max)
    )


def _sample_times(y: RealFunction) -> np.ndarray:
    if isinstance(y, GridFunction):
        return y.nodes
    return y.t0 + real_samples(y.radius)


def _values_at(y: RealFunction, times: np.ndarray) -> np.ndarray:
    return y.values if isinstance(y, GridFunction) else y(times)


def _check_zero_field(problem: IVProblem):
    _, sup_f = estimate_L_M(problem.t0, problem.y0, problem.a, problem.b, problem.rhs,
                            grid_density=9, norm_kind=problem.norm_kind, L=0.0, safety=1.0)
    if sup_f > 0.0:
        raise ProblemValidationError(f"M = 0 but the right-hand side reaches {sup_f:.6g} on R")


def solve_ivp(problem: IVProblem, n: int, y_start: Optional[RealFunction] = None,
              backend: str = "exact", N: int = DEFAULT_N, K_max: int = DEFAULT_K_MAX,
              reference: Optional[Callable[[np.ndarray], Any]] = None,
              n_ref_extra: int = 8, kappa_scale: float = 1.0,
              tol: float = 1e-3) -> ConvergenceReport:
    """
    Run n Picard iterations through the chain engine and compare with a reference.

    The reference is the closed form when given, otherwise the iterate
    n + n_ref_extra on the same backend. Each row carries the observed
    sampled d_0(y^n, y^ref), the factorial bound, the chain bound with the
    measured first step, the geometric bound when alpha L < 1 and the
    defect constant C_j(f, y^n). Any row exceeding a bound beyond
    tol + noise floor is recorded as a violation.
    """
    if backend == "exact" and problem.field is None:
        raise SolverError("the exact backend needs a polynomial right-hand side")
    mode = f"real-{backend}"
    warnings: List[str] = []

    degenerate = problem.L == 0 or problem.M == 0
    if problem.M == 0:
        _check_zero_field(problem)
    if degenerate:
        message = f"degenerate field (L={problem.L}, M={problem.M}): y^1 is the solution"
        logger.warning(message)
        warnings.append(message)

    x0 = y_start if y_start is not None else initial_function(problem, backend, N)
    spec = picard_chain(problem, K_max, kappa_scale)
    n_total = n if (reference is not None or degenerate) else n + n_ref_extra
    trace = iterate(spec, x0, n_total, target_bound=-math.inf, base_level=0,
                    max_checked_level=1 if backend == "grid" else None)

    times = _sample_times(x0)
    noise_floor = 64 * np.finfo(float).eps * (1.0 + float(np.max(np.abs(problem.y0)))
                                               + problem.alpha * problem.M)
    if reference is not None:
        reference_kind = "closed-form"
        ref_values = np.asarray(reference(times), dtype=float).reshape(len(times), problem.dimension)
        ref_function = x0.with_values(ref_values) if isinstance(x0, GridFunction) else None
    else:
        ref_function = trace.next_point if degenerate else trace.points[n_total]
        reference_kind = ("degenerate-" if degenerate else "") + (
            "grid-iterate" if backend == "grid" else "exact-iterate")
        ref_values = _values_at(ref_function, times)
        if not degenerate:
            noise_floor += trace.bounds[n_total]
        if isinstance(ref_function, PolyFunction):
            noise_floor += ref_function.tail_majorant
    if ref_function is not None and isinstance(ref_function, GridFunction):
        residual = metric_dj(picard_apply(problem, ref_function), ref_function, 0)
        noise_floor += math.exp(problem.alpha * problem.L) * residual

    report = ConvergenceReport(
        problem_name=problem.name, mode=mode, alpha=problem.alpha, L=problem.L, M=problem.M,
        series_constant=trace.series_constant, reference_kind=reference_kind,
        first_step=trace.first_step or 0.0, noise_floor=noise_floor, tol=tol, warnings=warnings
    )

    q = problem.alpha * problem.L
    check_factorial = problem.alpha <= 1.0
    if not check_factorial:
        warnings.append("alpha > 1: factorial bound reported but not enforced")

    for m in range(n + 1):
        y_m = trace.points[m]
        observed = float(np.max(problem.norm(_values_at(y_m, times) - ref_values)))
        level = min(m, 1) if backend == "grid" else m
        defect = picard_defect(problem, y_m, level, K_max)
        tail = y_m.tail_majorant if isinstance(y_m, PolyFunction) else 0.0
        row = ConvergenceRow(
            n=m, observed=observed, factorial_bound=theorem_bound(problem, m),
            chain_bound=trace.bounds[m],
            geometric_bound=geometric_tail_bound(q, m, report.first_step),
            defect_level=level, defect_value=defect.value, tail_majorant=tail
        )
        report.rows.append(row)

        slack = noise_floor + tail
        if check_factorial and observed > row.factorial_bound * (1.0 + tol) + slack:
            report.violations.append(
                f"n={m}: observed {observed:.6e} exceeds factorial bound {row.factorial_bound:.6e}")
        if observed > row.chain_bound * (1.0 + tol) + slack:
            report.violations.append(
                f"n={m}: observed {observed:.6e} exceeds chain bound {row.chain_bound:.6e}")

    for violation in report.violations:
        logger.error("%s: %s", problem.name or "problem", violation)
    report.final_iterate = trace.points[n]
    return report


# ---------------------------------------------------------------------------
# Starts from other representations and uniqueness evidence

def poly_from_grid(problem: IVProblem, g: GridFunction, degree: int = 12) -> PolyFunction:
    """
    Least-squares polynomial through the grid samples with c_0 pinned to y0.

    Fitting is done in the scaled variable (t - t0) / alpha.
    """
    s = g.offsets / g.alpha
    design = np.vander(s, degree + 1, increasing=True)[:, 1:]
    solution, *_ = np.linalg.lstsq(design, g.values - problem.y0, rcond=None)
    coeffs = np.vstack([problem.y0[None, :], solution / g.alpha ** np.arange(1, degree + 1)[:, None]])
    return PolyFunction.from_coefficients(coeffs, problem.t0, problem.alpha, problem.norm_kind)


def uniqueness_gap(problem: IVProblem, starts: Sequence[RealFunction], n: int,
                   K_max: int = DEFAULT_K_MAX) -> List[Tuple[int, int, float]]:
    """
    Pairwise d_0 distances between the n-th iterates from several starts.

    This is evidence among iteration-reachable limits only.
    """
    finals = []
    for start in starts:
        y = start
        for _ in range(n):
            y = picard_apply(problem, y, K_max)
        finals.append(y)

    gaps = []
    for i in range(len(finals)):
        for k in range(i + 1, len(finals)):
            value = metric_dj(finals[i], finals[k], 0)
            gaps.append((i, k, float(value) if not isinstance(value, NotAMember) else math.inf))
    return gaps
