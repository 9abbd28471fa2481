"""
Comparison baselines: the forward Euler polygon and the plain geometric contraction bound.
"""
import logging
from typing import Optional

import numpy as np

from src.models.functions import GridFunction
from src.models.problem import IVProblem
from src.solvers.chain_fixpoint import geometric_tail_bound

logger = logging.getLogger(__name__)


def _march(problem: IVProblem, h: float, steps: int) -> np.ndarray:
    """Forward Euler from t0 with signed step h; returns the steps+1 states."""
    states = np.empty((steps + 1, problem.dimension))
    y = problem.y0.copy()
    states[0] = y
    warned = False
    for k in range(steps):
        t = problem.t0 + k * h
        y = y + h * problem.evaluate(t, y)[0]
        offset = y - problem.y0
        distance = float(problem.norm(offset))
        if distance > problem.b:
            if not warned:
                logger.warning("Euler polygon leaves the b-ball at t=%.6g; truncated to the ball", t + h)
                warned = True
            y = problem.y0 + offset * (problem.b / distance)
        states[k + 1] = y
    return states


def euler_polygon(problem: IVProblem, h: float, N: Optional[int] = None) -> GridFunction:
    """
    Forward Euler outward from t0 in both directions, as a grid function.

    The polygon is interpolated linearly onto the grid with half-resolution N
    (by default the Euler nodes themselves).

    Raises:
        ValueError: if h does not divide alpha
    """
    alpha = problem.alpha
    steps = int(round(alpha / h))
    if steps < 1 or abs(steps * h - alpha) > 1e-9 * alpha:
        raise ValueError(f"step {h} does not divide alpha = {alpha}")

    right = _march(problem, h, steps)
    left = _march(problem, -h, steps)
    values = np.vstack([left[:0:-1], right])
    polygon = GridFunction(problem.t0, alpha, steps, values, problem.norm_kind)
    if N is None or N == steps:
        return polygon

    target = problem.t0 + (alpha / N) * np.arange(-N, N + 1)
    resampled = np.column_stack([np.interp(target, polygon.nodes, values[:, k])
                                 for k in range(problem.dimension)])
    return GridFunction(problem.t0, alpha, N, resampled, problem.norm_kind)


def geometric_bound(problem: IVProblem, n: int, first_step: float) -> Optional[float]:
    """(alpha L)^n / (1 - alpha L) * first_step, or None when alpha L >= 1."""
    return geometric_tail_bound(problem.alpha * problem.L, n, first_step)
