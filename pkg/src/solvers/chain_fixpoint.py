"""
Fixed-point engine for a map contracting along a decreasing chain of metric spaces.

Given d_j <= alpha_{j+1} d_{j+1}, P H_j ⊂ H_{j+1},
d_{j+1}(Px, Py) <= kappa_{j+1} d_j(x, y) and limsup alpha_j kappa_j < 1, the
iterates x_m = P^m x converge to the unique fixed point and

    d_j(x_inf, x_n) <= C * alpha_n kappa_n ... alpha_{j+1} kappa_{j+1} * d_j(x_{j+1}, x_j)

with C = sup_n sum_m prod_{k=n+1}^{n+m} alpha_k kappa_k.
"""
import logging
import math
from typing import Any, Iterable, Optional, Sequence, Tuple

from src.models.chain import (
    AxiomViolation,
    ChainAxiomReport,
    ChainSpec,
    IterationTrace,
    NotAMember,
    TailKind,
)
from src.solvers.errors import ChainDivergenceError, ChainMembershipError

logger = logging.getLogger(__name__)

# Search window used to locate the first tail index with alpha_k kappa_k < 1
MONOTONE_SEARCH_LIMIT = 100_000
# Hard cap on terms summed for one S(n)
MAX_SERIES_TERMS = 1_000_000


def tail_ratio_bound(spec: ChainSpec, n: int) -> float:
    """
    Upper bound on sup_{k >= n} alpha_k kappa_k from the declared tail model.

    Only valid for n >= spec.tail_start.
    """
    if n < spec.tail_start:
        raise ValueError(f"tail model starts at {spec.tail_start}, asked for {n}")

    if spec.tail_kind == TailKind.EVENTUALLY_CONSTANT:
        if spec.tail_value is None:
            raise ChainDivergenceError("eventually-constant tail requires tail_value")
        return spec.tail_value
    if spec.tail_kind == TailKind.EVENTUALLY_MONOTONE_DECREASING:
        return spec.product_at(n)
    if spec.tail_kind == TailKind.EXPLICIT_FORMULA:
        if spec.tail_sup is None:
            raise ChainDivergenceError("explicit-formula tail requires tail_sup")
        return spec.tail_sup(n)
    raise ChainDivergenceError(f"unknown tail kind: {spec.tail_kind}")


def certify_limsup(spec: ChainSpec) -> Tuple[float, int]:
    """
    Certify limsup_j alpha_j kappa_j < 1 from the tail model.

    Returns:
        (q, n0): every alpha_k kappa_k with k >= n0 is at most q < 1.

    Raises:
        ChainDivergenceError: the declared tail cannot certify the condition
    """
    start = spec.tail_start

    if spec.tail_kind == TailKind.EVENTUALLY_CONSTANT:
        q = tail_ratio_bound(spec, start)
        if not q < 1.0:
            raise ChainDivergenceError(f"constant tail alpha*kappa = {q} is not below 1")
        return q, start

    if spec.tail_kind == TailKind.EVENTUALLY_MONOTONE_DECREASING:
        for n in range(start, start + MONOTONE_SEARCH_LIMIT):
            q = spec.product_at(n)
            if q < 1.0:
                return q, n
        raise ChainDivergenceError(
            f"monotone tail stays >= 1 up to index {start + MONOTONE_SEARCH_LIMIT}")

    if spec.tail_kind == TailKind.EXPLICIT_FORMULA:
        if spec.tail_limsup is None or not spec.tail_limsup < 1.0:
            raise ChainDivergenceError(
                f"explicit tail declares limsup {spec.tail_limsup}, which is not below 1")
        # The formula bounds a decreasing envelope; walk until it drops under 1
        for n in range(start, start + MONOTONE_SEARCH_LIMIT):
            q = tail_ratio_bound(spec, n)
            if q < 1.0:
                return q, n
        raise ChainDivergenceError("explicit tail envelope never drops below 1")

    raise ChainDivergenceError(f"unknown tail kind: {spec.tail_kind}")


def partial_product(spec: ChainSpec, j: int, n: int) -> float:
    """
    Return prod_{k=j+1}^{n} alpha_k kappa_k (1 for the empty product j == n).

    Raises:
        IndexError: if j > n or j < 0
    """
    if j < 0 or j > n:
        raise IndexError(f"partial product needs 0 <= j <= n, got j={j}, n={n}")
    return math.prod(spec.product_at(k) for k in range(j + 1, n + 1))


def _tail_sum(spec: ChainSpec, n: int, tol: float) -> float:
    """
    Upper bound on S(n) = sum_{m>=0} prod_{k=n+1}^{n+m} alpha_k kappa_k.

    Terms are summed until the geometric majorant of the remainder is below tol;
    the majorant is then added so the result over-approximates S(n).
    """
    total = 0.0
    term = 1.0
    k = n
    for _ in range(MAX_SERIES_TERMS):
        total += term
        if term == 0.0:
            return total
        k += 1
        if k >= spec.tail_start:
            q = tail_ratio_bound(spec, k)
            if q < 1.0:
                majorant = term * q / (1.0 - q)
                if majorant < tol:
                    return total + majorant
        term *= spec.product_at(k)
    raise ChainDivergenceError(f"S({n}) did not converge within {MAX_SERIES_TERMS} terms")


def series_constant(spec: ChainSpec, n_max: int = 64, tol: float = 1e-12) -> float:
    """
    Upper bound on C = sup_n S(n).

    S(n) is bounded explicitly for n up to the point where the tail majorant
    1/(1 - q) no longer exceeds the running maximum, or up to n_max; beyond
    that, 1/(1 - q) bounds every remaining S(n).

    Raises:
        ChainDivergenceError: if the tail model does not certify the limsup condition
        ValueError: if tol is not positive
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    _, n0 = certify_limsup(spec)

    best = 0.0
    n = 0
    while True:
        best = max(best, _tail_sum(spec, n, tol))
        if n + 1 >= max(n0, spec.tail_start):
            q = tail_ratio_bound(spec, n + 1)
            if q < 1.0:
                envelope = 1.0 / (1.0 - q)
                if envelope <= best or n >= n_max:
                    logger.debug("series constant %.6e after %d sums", max(best, envelope), n + 1)
                    return max(best, envelope)
        n += 1


def a_priori_bound(spec: ChainSpec, j: int, n: int, first_step: float, C: float) -> float:
    """Return C * partial_product(j, n) * d_j(x_{j+1}, x_j)."""
    if first_step == 0.0:
        return 0.0
    return C * partial_product(spec, j, n) * first_step


def geometric_tail_bound(q: float, n: int, first_step: float) -> Optional[float]:
    """
    Classical Banach estimate q^n / (1 - q) * d(x_1, x_0).

    Returns None when q >= 1, where the plain contraction argument does not apply.
    """
    if q >= 1.0:
        return None
    return q ** n / (1.0 - q) * first_step


def _require_member(spec: ChainSpec, level: int, x: Any):
    found = spec.membership(level, x)
    if isinstance(found, NotAMember):
        raise ChainMembershipError(level, found.reason)


def _distance(spec: ChainSpec, level: int, x: Any, y: Any) -> float:
    value = spec.metric_eval(level, x, y)
    if isinstance(value, NotAMember):
        raise ChainMembershipError(value.level, value.reason)
    return value


def iterate(spec: ChainSpec, x0: Any, n_max: int, target_bound: float = 0.0,
            base_level: int = 0, max_checked_level: Optional[int] = None,
            C: Optional[float] = None) -> IterationTrace:
    """
    Iterate P from x0 recording steps and a-priori bounds at base_level.

    Stops after row n_max or once the bound on d_j(x_inf, x_m) is at most
    target_bound. Membership x_m ∈ H_m is checked up to max_checked_level
    (all levels when None).

    Raises:
        ChainMembershipError: if x0 is not in H_0 or an iterate leaves its level
    """
    _require_member(spec, 0, x0)
    if C is None:
        C = series_constant(spec)
    trace = IterationTrace(base_level=base_level, series_constant=C)

    x = x0
    for m in range(n_max + 1):
        level = m if max_checked_level is None else min(m, max_checked_level)
        if level > 0:
            _require_member(spec, level, x)

        image = spec.map_eval(x)
        step = _distance(spec, base_level, image, x)
        if m == base_level:
            trace.first_step = step

        if m < base_level or trace.first_step is None:
            bound = math.inf
        else:
            bound = a_priori_bound(spec, base_level, m, trace.first_step, C)

        trace.points.append(x)
        trace.step_distances.append(step)
        trace.bounds.append(bound)
        trace.next_point = image
        logger.debug("iteration %d: step %.6e, bound %.6e", m, step, bound)

        if bound <= target_bound:
            break
        x = image

    return trace


def validate_chain_axioms(spec: ChainSpec, samples: Iterable[Tuple[Any, Any]],
                          j_max: int, tol: float = 1e-9) -> ChainAxiomReport:
    """
    Check d_j <= alpha_{j+1} d_{j+1} and d_{j+1}(Px, Py) <= kappa_{j+1} d_j on samples.

    Reported ratios are raw: d_j / d_{j+1} (compare with alpha_{j+1}) and
    d_{j+1}(Px, Py) / d_j(x, y) (compare with kappa_{j+1}). Violations are
    collected with their witness pair rather than raised.
    """
    report = ChainAxiomReport()
    pairs: Sequence[Tuple[Any, Any]] = list(samples)

    for x, y in pairs:
        px, py = spec.map_eval(x), spec.map_eval(y)
        for j in range(j_max):
            d_j = spec.metric_eval(j, x, y)
            d_next = spec.metric_eval(j + 1, x, y)
            if isinstance(d_j, NotAMember) or isinstance(d_next, NotAMember):
                report.skipped_pairs += 1
                continue

            alpha = spec.alpha_seq(j + 1)
            if d_next > 0:
                ratio = d_j / d_next
                report.worst_metric_ratio[j + 1] = max(report.worst_metric_ratio.get(j + 1, 0.0), ratio)
            if d_j > alpha * d_next * (1.0 + tol):
                report.violations.append(AxiomViolation(j + 1, 'metric', x, y, d_j, alpha * d_next))

            d_image = spec.metric_eval(j + 1, px, py)
            if isinstance(d_image, NotAMember):
                report.violations.append(AxiomViolation(j + 1, 'contraction', x, y, math.inf, math.nan))
                continue
            kappa = spec.kappa_seq(j + 1)
            if d_j > 0:
                ratio = d_image / d_j
                report.worst_contraction_ratio[j + 1] = max(
                    report.worst_contraction_ratio.get(j + 1, 0.0), ratio)
            if d_image > kappa * d_j * (1.0 + tol):
                report.violations.append(AxiomViolation(j + 1, 'contraction', x, y, d_image, kappa * d_j))

    for violation in report.violations:
        logger.warning(violation.describe())
    return report


def uniqueness_evidence(spec: ChainSpec, starts: Sequence[Any], n_max: int,
                        level: int = 0) -> Tuple[float, float]:
    """
    Iterate from several starts and compare the limits.

    Only fixed points reachable by iteration are compared; a fixed point outside
    every H_j is not covered.

    Returns:
        (largest pairwise d_level between final images, sum of the two largest bounds)
    """
    traces = [iterate(spec, x, n_max, base_level=level) for x in starts]
    finals = [t.next_point for t in traces]
    gap = 0.0
    for i in range(len(finals)):
        for k in range(i + 1, len(finals)):
            gap = max(gap, _distance(spec, level, finals[i], finals[k]))
    bounds = sorted((t.final_bound for t in traces), reverse=True)
    return gap, sum(bounds[:2])
