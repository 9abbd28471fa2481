"""
Representations of curves t -> y(t) on [t0 - alpha, t0 + alpha].

GridFunction samples the curve on a uniform grid (general backend).
TaylorSeries and its subclasses store coefficients in powers of (t - t0)
(exact backend); tail_majorant bounds whatever truncation discarded.
"""
import math
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np
from numpy.polynomial import polynomial as npoly

from src.models.problem import vector_norm


@dataclass
class GridFunction:
    """Samples at the 2N+1 nodes t0 + k * alpha / N, k = -N..N; values has shape (2N+1, d)."""
    t0: float
    alpha: float
    N: int
    values: np.ndarray
    norm_kind: str = "euclidean"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if self.values.shape[0] != 2 * self.N + 1:
            raise ValueError(f"expected {2 * self.N + 1} samples, got {self.values.shape[0]}")

    @property
    def step(self) -> float:
        return self.alpha / self.N

    @property
    def offsets(self) -> np.ndarray:
        """t_k - t0."""
        return self.step * np.arange(-self.N, self.N + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.t0 + self.offsets

    @property
    def center(self) -> np.ndarray:
        return self.values[self.N]

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray) -> 'GridFunction':
        return GridFunction(self.t0, self.alpha, self.N, values, self.norm_kind)

    @classmethod
    def constant(cls, t0: float, alpha: float, N: int, y0: Any,
                 norm_kind: str = "euclidean") -> 'GridFunction':
        y0 = np.atleast_1d(np.asarray(y0, dtype=float))
        return cls(t0, alpha, N, np.tile(y0, (2 * N + 1, 1)), norm_kind)

    @classmethod
    def from_callable(cls, fn: Callable[[np.ndarray], Any], t0: float, alpha: float, N: int,
                      norm_kind: str = "euclidean") -> 'GridFunction':
        """Sample a vectorised fn(t) -> (n, d) or (n,) on the grid."""
        nodes = t0 + (alpha / N) * np.arange(-N, N + 1)
        return cls(t0, alpha, N, np.asarray(fn(nodes), dtype=float), norm_kind)


@dataclass
class TaylorSeries:
    """
    y(t) = sum_m coeffs[m] (t - t0)^m, coeffs of shape (K+1, d).

    radius is the half-width alpha on which sup norms are taken. tail_majorant
    bounds the sum over components of the sup on the closed disc of radius
    alpha of the part discarded by truncation; that part vanishes to an order
    above the stored degree.
    """
    coeffs: np.ndarray
    t0: Any
    radius: float
    tail_majorant: float = 0.0
    norm_kind: str = "euclidean"
    ball_certified: bool = True

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs)
        if self.coeffs.ndim == 1:
            self.coeffs = self.coeffs[:, None]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def dimension(self) -> int:
        return self.coeffs.shape[1]

    def __call__(self, t: Any) -> np.ndarray:
        """Evaluate the stored polynomial; t scalar gives (d,), t of shape (n,) gives (n, d)."""
        tau = np.asarray(t) - self.t0
        values = npoly.polyval(tau, self.coeffs)
        return values.T if np.ndim(tau) else values

    def coefficient_norms(self) -> np.ndarray:
        return vector_norm(self.coeffs, self.norm_kind)

    def majorant(self, start: int = 1) -> float:
        """sum_{m >= start} ||c_m|| radius^m plus the tail majorant."""
        norms = self.coefficient_norms()[start:]
        powers = self.radius ** np.arange(start, self.degree + 1)
        return float(np.sum(norms * powers)) + self.tail_majorant

    def padded(self, degree: int) -> np.ndarray:
        """Coefficients zero-padded (or cut) to the given degree."""
        out = np.zeros((degree + 1, self.dimension), dtype=self.coeffs.dtype)
        keep = min(degree, self.degree) + 1
        out[:keep] = self.coeffs[:keep]
        return out

    def _replace(self, coeffs: np.ndarray, tail_majorant: float, **kwargs):
        return type(self)(coeffs, self.t0, self.radius, tail_majorant, self.norm_kind, **kwargs)


class PolyFunction(TaylorSeries):
    """Real power series in (t - t0) for the exact real backend."""

    @classmethod
    def constant(cls, t0: float, radius: float, y0: Any, norm_kind: str = "euclidean") -> 'PolyFunction':
        y0 = np.atleast_1d(np.asarray(y0, dtype=float))
        return cls(y0[None, :], float(t0), radius, 0.0, norm_kind)

    @classmethod
    def from_coefficients(cls, coeffs: Any, t0: float, radius: float,
                          norm_kind: str = "euclidean") -> 'PolyFunction':
        return cls(np.asarray(coeffs, dtype=float), float(t0), radius, 0.0, norm_kind)


class TaylorFunctionC(TaylorSeries):
    """Complex power series in (t - t0); the norm is the max over components."""

    def __post_init__(self):
        super().__post_init__()
        self.coeffs = self.coeffs.astype(complex)
        self.norm_kind = "max"

    @classmethod
    def constant(cls, t0: complex, radius: float, z0: Any) -> 'TaylorFunctionC':
        z0 = np.atleast_1d(np.asarray(z0, dtype=complex))
        return cls(z0[None, :], complex(t0), radius, 0.0, "max")

    @classmethod
    def from_coefficients(cls, coeffs: Any, t0: complex, radius: float) -> 'TaylorFunctionC':
        return cls(np.asarray(coeffs, dtype=complex), complex(t0), radius, 0.0, "max")


@dataclass(frozen=True)
class DefectConstant:
    """C_j(f, y) = sup_{t != t0} ||Py(t) - y(t)|| / |t - t0|^j; infinite when y is not in H_j."""
    level: int
    value: float
    reason: Optional[str] = None

    @property
    def is_member(self) -> bool:
        return math.isfinite(self.value)
