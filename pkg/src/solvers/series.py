"""
Truncated power-series arithmetic shared by the real and complex exact backends.

Series are coefficient arrays of shape (K+1, d) in powers of tau = t - t0.
The Picard image of a polynomial field is computed by composing the field
with the series, keeping the integrand up to degree K-1 and integrating
termwise. Everything dropped on the way is charged to a tail majorant.
"""
import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from src.models.chain import MetricValue, NotAMember
from src.models.functions import TaylorSeries
from src.models.polynomial_field import PolynomialField
from src.models.problem import vector_norm

logger = logging.getLogger(__name__)

# Coefficients below order j smaller than this, relative to the largest
# coefficient of either operand, count as zero
ZERO_TOLERANCE = 1e-13
REAL_SAMPLES = 512
BOUNDARY_SAMPLES = 360
INTERIOR_RADII = 8


def truncated_product(a: np.ndarray, b: np.ndarray, degree: int) -> np.ndarray:
    """Cauchy product of two scalar series, cut after the given degree."""
    return np.convolve(a, b)[:degree + 1]


def shifted_time_power(t0, p: int, degree: int) -> np.ndarray:
    """Coefficients of (t0 + tau)^p in powers of tau."""
    top = min(p, degree)
    return np.array([math.comb(p, i) * t0 ** (p - i) for i in range(top + 1)])


def composed_degree(field: PolynomialField, degrees) -> int:
    """Exact degree bound in tau of F(t0 + tau, z(tau)) for untruncated composition."""
    best = 0
    for terms in field.components:
        for term in terms:
            best = max(best, term.t_power + sum(p * deg for p, deg in zip(term.y_powers, degrees)))
    return best


def compose_field(field: PolynomialField, t0, coeffs: np.ndarray, degree: int) -> np.ndarray:
    """
    Coefficients of F(t0 + tau, z(tau)) up to the given degree.

    coeffs holds the series z with shape (k+1, d); the result has shape (degree+1, d).
    """
    complex_valued = (not field.is_real) or np.iscomplexobj(coeffs) or complex(t0).imag != 0.0
    dtype = complex if complex_valued else float
    coeffs = np.asarray(coeffs, dtype=dtype)
    out = np.zeros((degree + 1, field.dimension), dtype=dtype)

    unit = np.ones(1, dtype=dtype)
    state_powers: Dict[Tuple[int, int], np.ndarray] = {}
    time_powers: Dict[int, np.ndarray] = {}

    def state_power(k: int, p: int) -> np.ndarray:
        if p == 0:
            return unit
        key = (k, p)
        if key not in state_powers:
            state_powers[key] = truncated_product(state_power(k, p - 1), coeffs[:, k], degree)
        return state_powers[key]

    def time_power(p: int) -> np.ndarray:
        if p not in time_powers:
            base = t0 if complex_valued else complex(t0).real
            time_powers[p] = shifted_time_power(base, p, degree).astype(dtype)
        return time_powers[p]

    for i, terms in enumerate(field.components):
        for term in terms:
            coefficient = term.coefficient if complex_valued else term.coefficient.real
            part = coefficient * time_power(term.t_power)
            for k, p in enumerate(term.y_powers):
                if p:
                    part = truncated_product(part, state_power(k, p), degree)
            out[:len(part), i] += part
    return out


def integrate_series(integrand: np.ndarray, c0: np.ndarray) -> np.ndarray:
    """Termwise antiderivative vanishing at tau = 0, plus the constant c0."""
    out = np.zeros((integrand.shape[0] + 1, integrand.shape[1]), dtype=integrand.dtype)
    out[0] = c0
    out[1:] = integrand / np.arange(1, integrand.shape[0] + 1)[:, None]
    return out


def _abs_radius_sums(coeffs: np.ndarray, radius: float) -> np.ndarray:
    """Per component sum_m |c_m| radius^m."""
    powers = radius ** np.arange(coeffs.shape[0])
    return np.abs(coeffs).T @ powers


def picard_series_step(field: PolynomialField, t0, radius: float, z: TaylorSeries,
                       c0: np.ndarray, K_max: int) -> Tuple[np.ndarray, float]:
    """
    One Picard step c0 + int_{t0}^{t} F(s, z(s)) ds on the series z.

    Returns the new coefficients (degree <= K_max) and the new tail majorant:
    radius times the summed bound on everything the integrand drops, namely
    the coefficients of order >= K_max and the effect of the incoming tail.
    """
    degrees = [_component_degree(z.coeffs[:, k]) for k in range(z.dimension)]
    full_degree = composed_degree(field, degrees)
    keep = min(full_degree, K_max - 1)

    integrand = compose_field(field, t0, z.coeffs, keep)
    new_coeffs = integrate_series(integrand, c0)

    t_radius = abs(t0) + radius
    z_sizes = _abs_radius_sums(z.coeffs, radius)
    dropped = 0.0
    if full_degree > keep:
        total = field.majorant(t_radius, z_sizes)
        kept = _abs_radius_sums(integrand, radius)
        dropped = float(np.sum(np.maximum(total - kept, 0.0)))
    propagated = 0.0
    if z.tail_majorant > 0.0:
        grown = field.majorant(t_radius, z_sizes + z.tail_majorant)
        propagated = float(np.sum(grown - field.majorant(t_radius, z_sizes)))

    tail = radius * (dropped + propagated)
    if tail > 0.0:
        logger.debug("truncation at degree %d: tail majorant %.3e", K_max, tail)
    return new_coeffs, tail


def _component_degree(column: np.ndarray) -> int:
    nonzero = np.flatnonzero(column)
    return int(nonzero[-1]) if nonzero.size else 0


def difference_coefficients(x: TaylorSeries, y: TaylorSeries) -> np.ndarray:
    degree = max(x.degree, y.degree)
    return x.padded(degree) - y.padded(degree)


def _zero_threshold(x: TaylorSeries, y: TaylorSeries) -> float:
    scale = max(float(np.max(x.coefficient_norms())), float(np.max(y.coefficient_norms())), 1.0)
    return ZERO_TOLERANCE * scale


def lowest_surviving_order(x: TaylorSeries, y: TaylorSeries) -> Optional[int]:
    """First order m at which x - y has a coefficient above the zero threshold."""
    norms = vector_norm(difference_coefficients(x, y), x.norm_kind)
    above = np.flatnonzero(norms > _zero_threshold(x, y))
    return int(above[0]) if above.size else None


def series_metric_upper(x: TaylorSeries, y: TaylorSeries, j: int) -> MetricValue:
    """
    Coefficient majorant of sup_{0 < |tau| <= alpha} ||(x - y)(tau)|| / |tau|^j.

    sum_{m >= j} ||c_m|| alpha^{m-j} covers the stored part; both tail
    majorants vanish to an order above j and add (eps_x + eps_y) / alpha^j.
    """
    diff = difference_coefficients(x, y)
    norms = vector_norm(diff, x.norm_kind)
    threshold = _zero_threshold(x, y)
    for m in range(min(j, len(norms))):
        if norms[m] > threshold:
            return NotAMember(j, f"nonzero coefficient of order {m} below level {j}")

    r = x.radius
    body = float(np.sum(norms[j:] * r ** np.arange(len(norms) - j))) if j < len(norms) else 0.0
    return body + (x.tail_majorant + y.tail_majorant) / r ** j


def _quotient_values(diff: np.ndarray, j: int, taus: np.ndarray) -> np.ndarray:
    """(x - y)(tau) / tau^j with the division done on coefficients."""
    shifted = diff[j:] if j < diff.shape[0] else np.zeros((1, diff.shape[1]), dtype=diff.dtype)
    return npoly.polyval(taus, shifted).T


def series_metric_lower(x: TaylorSeries, y: TaylorSeries, j: int, taus: np.ndarray) -> float:
    """
    Sampled lower bound on d_j(x, y) from the stored polynomials.

    When x - y vanishes to order j the quotient is a polynomial and is
    evaluated directly at taus; otherwise the raw quotient is sampled on
    shrinking copies of taus, which shows its growth towards t0.
    """
    diff = difference_coefficients(x, y)
    order = lowest_surviving_order(x, y)
    if order is None or order >= j:
        return float(np.max(vector_norm(_quotient_values(diff, j, taus), x.norm_kind)))

    best = 0.0
    nonzero = taus[taus != 0]
    for k in range(INTERIOR_RADII):
        scaled = nonzero * 0.5 ** k
        values = vector_norm(npoly.polyval(scaled, diff).T, x.norm_kind) / np.abs(scaled) ** j
        best = max(best, float(np.max(values)))
    return best


def real_samples(radius: float, count: int = REAL_SAMPLES) -> np.ndarray:
    return radius * np.linspace(-1.0, 1.0, 2 * count + 1)


def boundary_samples(radius: float, count: int = BOUNDARY_SAMPLES) -> np.ndarray:
    return radius * np.exp(2j * np.pi * np.arange(count) / count)


def ball_certificate(z: TaylorSeries, b: float, taus: np.ndarray,
                     tol: float = 1e-9) -> Tuple[float, float, bool]:
    """
    Sup of ||z - z0|| on the disc: (sampled value, coefficient majorant, certified).

    certified is True when the majorant stays within b (1 + tol).
    """
    c0 = z.coeffs[0]
    sampled = float(np.max(vector_norm(z(z.t0 + taus) - c0, z.norm_kind)))
    majorant = z.majorant(start=1)
    return sampled, majorant, majorant <= b * (1.0 + tol)
