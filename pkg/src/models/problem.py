"""
Initial value problem data: rectangle, right-hand side and its constants.
"""
import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Tuple

import numpy as np

from src.models.polynomial_field import PolynomialField
from src.solvers.errors import ProblemValidationError

NORM_KINDS = ("euclidean", "max")

RightHandSide = Callable[[Any, np.ndarray], np.ndarray]


def compute_alpha(a: float, b: float, M: float) -> float:
    """
    Half-width of the guaranteed existence interval, min(a, b/M).

    Raises:
        ValueError: if any argument is not positive
    """
    if a <= 0 or b <= 0 or M <= 0:
        raise ValueError(f"compute_alpha needs positive a, b, M; got a={a}, b={b}, M={M}")
    return min(a, b / M)


def factorial_bound(alpha: float, L: float, M: float, n: int) -> float:
    """e^{alpha L} (alpha L)^n M / n!, evaluated in logs."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    q = alpha * L
    if M == 0:
        return 0.0
    if q == 0:
        return M if n == 0 else 0.0
    return math.exp(q + n * math.log(q) + math.log(M) - math.lgamma(n + 1))


def vector_norm(v: Any, kind: str = "euclidean") -> np.ndarray:
    """Norm over the last axis: Euclidean or max-abs."""
    v = np.asarray(v)
    if kind == "euclidean":
        return np.linalg.norm(v, axis=-1)
    if kind == "max":
        return np.max(np.abs(v), axis=-1)
    raise ValueError(f"unknown norm kind: {kind}")


@dataclass
class IVProblem:
    """
    y' = rhs(t, y), y(t0) = y0 on R = {|t - t0| <= a, ||y - y0|| <= b}.

    rhs is vectorised: rhs(t, y) with t of shape (n,) and y of shape (n, d)
    returns an (n, d) array. field is set when rhs is a polynomial, which
    enables the exact series backend.
    """
    t0: float
    y0: np.ndarray
    a: float
    b: float
    rhs: RightHandSide
    L: float
    M: float
    norm_kind: str = "euclidean"
    field: Optional[PolynomialField] = None
    name: str = ""
    declared_bounds: bool = False  # L, M describe the solution, not all of R

    def __post_init__(self):
        self.y0 = np.atleast_1d(np.asarray(self.y0, dtype=float))
        self.t0 = float(self.t0)
        if self.a <= 0:
            raise ProblemValidationError(f"a must be positive, got {self.a}")
        if self.b <= 0:
            raise ProblemValidationError(f"b must be positive, got {self.b}")
        if self.L < 0 or self.M < 0:
            raise ProblemValidationError(f"L and M must be nonnegative, got L={self.L}, M={self.M}")
        if self.norm_kind not in NORM_KINDS:
            raise ProblemValidationError(f"norm_kind must be one of {NORM_KINDS}")
        if self.field is not None and self.field.dimension != self.dimension:
            raise ProblemValidationError(
                f"field dimension {self.field.dimension} does not match y0 dimension {self.dimension}")

    @property
    def dimension(self) -> int:
        return self.y0.shape[0]

    @property
    def alpha(self) -> float:
        """min(a, b/M); a when M == 0 (the field vanishes on R)."""
        if self.M == 0:
            return self.a
        return compute_alpha(self.a, self.b, self.M)

    def norm(self, v: Any) -> np.ndarray:
        return vector_norm(v, self.norm_kind)

    def evaluate(self, t: Any, y: Any) -> np.ndarray:
        """rhs on an (n, d) batch, always returned as a float array of that shape."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), y.shape[:1])
        return np.asarray(self.rhs(t, y), dtype=float).reshape(y.shape)


@dataclass
class ComplexIVProblem:
    """
    z' = field(t, z), z(t0) = z0 in complex time on the polydisc
    {|t - t0| <= a} x {max_k |z_k - z0_k| <= b}.

    The norm is always the max over components.
    """
    t0: complex
    z0: np.ndarray
    a: float
    b: float
    field: PolynomialField
    L: float
    M: float
    name: str = ""
    declared_bounds: bool = False

    norm_kind = "max"

    def __post_init__(self):
        self.z0 = np.atleast_1d(np.asarray(self.z0, dtype=complex))
        self.t0 = complex(self.t0)
        if self.a <= 0:
            raise ProblemValidationError(f"a must be positive, got {self.a}")
        if self.b <= 0:
            raise ProblemValidationError(f"b must be positive, got {self.b}")
        if self.L < 0 or self.M < 0:
            raise ProblemValidationError(f"L and M must be nonnegative, got L={self.L}, M={self.M}")
        if self.field.dimension != self.dimension:
            raise ProblemValidationError(
                f"field dimension {self.field.dimension} does not match z0 dimension {self.dimension}")
        if not self.declared_bounds:
            self.check_polydisc_bounds()

    @property
    def dimension(self) -> int:
        return self.z0.shape[0]

    @property
    def alpha(self) -> float:
        if self.M == 0:
            return self.a
        return compute_alpha(self.a, self.b, self.M)

    def polydisc_majorants(self) -> Tuple[float, float]:
        """
        Coefficient-majorant bounds (M, L) on the polydisc R.

        The field is re-expanded around (t0, z0). M bounds max_i |F_i| and L
        bounds the max-norm Lipschitz constant max_i sum_k |dF_i/dz_k|.
        """
        local = self.field.centered(self.t0, self.z0)
        radii = np.full(self.dimension, self.b)
        M_major = float(np.max(local.majorant(self.a, radii)))
        gradient = sum(local.partial(k).majorant(self.a, radii) for k in range(self.dimension))
        L_major = float(np.max(gradient))
        return M_major, L_major

    def check_polydisc_bounds(self, tol: float = 1e-9):
        """
        Reject M or L below their coefficient majorants on R.

        Raises:
            ProblemValidationError: naming the first constant that is too small
        """
        M_major, L_major = self.polydisc_majorants()
        if M_major > self.M * (1.0 + tol):
            raise ProblemValidationError(
                f"majorant of ||F|| on the polydisc is {M_major:.6g}, above M = {self.M:.6g}")
        if L_major > self.L * (1.0 + tol):
            raise ProblemValidationError(
                f"majorant of the Lipschitz constant on the polydisc is {L_major:.6g}, above L = {self.L:.6g}")

    def norm(self, v: Any) -> np.ndarray:
        return vector_norm(v, "max")
