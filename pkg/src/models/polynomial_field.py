"""
Polynomial vector fields F(t, y) with real or complex coefficients.
"""
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np


def _encode_number(value: complex) -> Any:
    """Real numbers stay plain; complex numbers become [re, im] pairs."""
    value = complex(value)
    if value.imag == 0.0:
        return value.real
    return [value.real, value.imag]


def _decode_number(value: Any) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex number must be a [re, im] pair, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    return complex(float(value))


@dataclass(frozen=True)
class Monomial:
    """
    One term coefficient * (t - 0)^t_power * y_1^p_1 ... y_d^p_d.

    Powers of t are taken in absolute time, not relative to t0.
    """
    coefficient: complex
    t_power: int = 0
    y_powers: Tuple[int, ...] = ()

    def degree(self) -> int:
        return self.t_power + sum(self.y_powers)

    def to_dict(self) -> dict:
        return {
            'coefficient': _encode_number(self.coefficient),
            't_power': self.t_power,
            'y_powers': list(self.y_powers)
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'Monomial':
        return cls(
            coefficient=_decode_number(data['coefficient']),
            t_power=int(data.get('t_power', 0)),
            y_powers=tuple(int(p) for p in data.get('y_powers', []))
        )


@dataclass
class PolynomialField:
    """
    F: (t, y) -> C^d with every component a sum of monomials.

    components[i] lists the monomials of F_i. Monomials with fewer y_powers
    than the dimension are padded with zeros.
    """
    dimension: int
    components: List[List[Monomial]] = field(default_factory=list)

    def __post_init__(self):
        if len(self.components) != self.dimension:
            raise ValueError(
                f"field has {len(self.components)} components for dimension {self.dimension}")
        padded = []
        for terms in self.components:
            row = []
            for term in terms:
                if len(term.y_powers) > self.dimension:
                    raise ValueError(f"monomial {term} uses more than {self.dimension} state variables")
                if term.t_power < 0 or any(p < 0 for p in term.y_powers):
                    raise ValueError(f"monomial {term} has a negative power")
                powers = tuple(term.y_powers) + (0,) * (self.dimension - len(term.y_powers))
                row.append(Monomial(complex(term.coefficient), term.t_power, powers))
            padded.append(row)
        self.components = padded

    @property
    def is_real(self) -> bool:
        return all(term.coefficient.imag == 0.0 for terms in self.components for term in terms)

    @property
    def degree(self) -> int:
        return max((term.degree() for terms in self.components for term in terms), default=0)

    def __call__(self, t: Any, y: Any) -> np.ndarray:
        """
        Evaluate F at time t and state y.

        y has shape (d,) or (n, d) with t scalar or of shape (n,). The result
        has the shape of y and is real whenever the field and inputs are real.
        """
        y = np.asarray(y)
        t = np.asarray(t)
        dtype = complex if (not self.is_real or np.iscomplexobj(y) or np.iscomplexobj(t)) else float
        out = np.zeros(np.broadcast_shapes(y.shape, t.shape + (self.dimension,)), dtype=dtype)

        for i, terms in enumerate(self.components):
            for term in terms:
                value = term.coefficient if dtype is complex else term.coefficient.real
                part = value * t ** term.t_power
                for k, power in enumerate(term.y_powers):
                    if power:
                        part = part * y[..., k] ** power
                out[..., i] += part
        return out

    def majorant(self, t_radius: float, y_radius: np.ndarray) -> np.ndarray:
        """
        Componentwise majorant: sum |coef| * t_radius^p * prod y_radius_k^p_k.

        Bounds |F_i(t, y)| whenever |t| <= t_radius and |y_k| <= y_radius_k.
        """
        y_radius = np.asarray(y_radius, dtype=float)
        out = np.zeros(self.dimension)
        for i, terms in enumerate(self.components):
            for term in terms:
                out[i] += abs(term.coefficient) * t_radius ** term.t_power * np.prod(
                    y_radius ** np.asarray(term.y_powers))
        return out

    def centered(self, t0: complex, z0: Any) -> 'PolynomialField':
        """The same field in local variables s = t - t0, w = y - z0 (binomial re-expansion)."""
        z0 = [complex(v) for v in np.broadcast_to(np.asarray(z0, dtype=complex), (self.dimension,))]
        t0 = complex(t0)
        components = []
        for terms in self.components:
            collected: Dict[Tuple[int, Tuple[int, ...]], complex] = {}
            for term in terms:
                for i in range(term.t_power + 1):
                    t_part = term.coefficient * math.comb(term.t_power, i) * t0 ** (term.t_power - i)
                    for r in itertools.product(*(range(p + 1) for p in term.y_powers)):
                        value = t_part
                        for k, (p, r_k) in enumerate(zip(term.y_powers, r)):
                            value *= math.comb(p, r_k) * z0[k] ** (p - r_k)
                        collected[(i, r)] = collected.get((i, r), 0.0) + value
            components.append([Monomial(c, i, r) for (i, r), c in sorted(collected.items()) if c != 0])
        return PolynomialField(self.dimension, components)

    def partial(self, k: int) -> 'PolynomialField':
        """dF/dy_k, with k counted from 0."""
        components = []
        for terms in self.components:
            row = []
            for term in terms:
                p = term.y_powers[k]
                if p:
                    powers = term.y_powers[:k] + (p - 1,) + term.y_powers[k + 1:]
                    row.append(Monomial(term.coefficient * p, term.t_power, powers))
            components.append(row)
        return PolynomialField(self.dimension, components)

    def to_dict(self) -> dict:
        return {
            'dimension': self.dimension,
            'components': [[term.to_dict() for term in terms] for terms in self.components]
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PolynomialField':
        components = [[Monomial.from_dict(term) for term in terms] for terms in data['components']]
        return cls(dimension=int(data.get('dimension', len(components))), components=components)
