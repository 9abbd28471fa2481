"""
Registry of benchmark problems with known solutions.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from src.expressions.parser import compile_rhs, parse_expression, to_polynomial_field
from src.models.problem import ComplexIVProblem, IVProblem

logger = logging.getLogger(__name__)

ClosedForm = Callable[[np.ndarray], np.ndarray]

RESIDUAL_TOL = 1e-9
RESIDUAL_STEP = 1e-3


@dataclass
class RegistryEntry:
    """A named problem, its exact solution when known and descriptive tags."""
    name: str
    problem: Union[IVProblem, ComplexIVProblem]
    closed_form: Optional[ClosedForm] = None
    tags: Tuple[str, ...] = ()
    sources: List[str] = field(default_factory=list)

    @property
    def is_complex(self) -> bool:
        return isinstance(self.problem, ComplexIVProblem)

    @property
    def declared_bounds(self) -> bool:
        return self.problem.declared_bounds

    @property
    def backend(self) -> str:
        if self.is_complex:
            return "complex"
        return "exact" if self.problem.field is not None else "grid"


def _column(fn: Callable[[np.ndarray], np.ndarray]) -> ClosedForm:
    """Lift a scalar solution t -> y(t) to the (n, 1) layout."""
    return lambda t: np.asarray(fn(np.asarray(t)))[..., None]


def _real_entry(name: str, sources: List[str], y0, a: float, b: float, L: float, M: float,
                closed_form: Optional[ClosedForm], tags: Tuple[str, ...],
                declared_bounds: bool = False) -> RegistryEntry:
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    rhs = compile_rhs(sources, len(y0))
    problem = IVProblem(t0=0.0, y0=y0, a=a, b=b, rhs=rhs, L=L, M=M,
                        field=rhs.polynomial_field(), name=name, declared_bounds=declared_bounds)
    return RegistryEntry(name, problem, closed_form, tags, list(sources))


def _complex_entry(name: str, sources: List[str], z0, a: float, b: float, L: float, M: float,
                   closed_form: Optional[ClosedForm], tags: Tuple[str, ...],
                   declared_bounds: bool = False) -> RegistryEntry:
    z0 = np.atleast_1d(np.asarray(z0, dtype=complex))
    trees = [parse_expression(src, len(z0)) for src in sources]
    problem = ComplexIVProblem(t0=0.0, z0=z0, a=a, b=b, field=to_polynomial_field(trees, len(z0)),
                               L=L, M=M, name=name, declared_bounds=declared_bounds)
    return RegistryEntry(name, problem, closed_form, tags, list(sources))


def _build() -> Dict[str, RegistryEntry]:
    entries = [
        # sup |y| along e^t on [-1, 1] is e; the whole rectangle would force alpha < 1
        _real_entry("exp", ["y1"], 1.0, a=1.0, b=math.e, L=1.0, M=math.e,
                    closed_form=_column(np.exp), tags=("linear", "polynomial-rhs"),
                    declared_bounds=True),
        _real_entry("exp-half", ["y1"], 1.0, a=0.5, b=1.0, L=1.0, M=2.0,
                    closed_form=_column(np.exp), tags=("linear", "polynomial-rhs")),
        _real_entry("gaussian", ["-2*t*y1"], 1.0, a=0.5, b=1.0, L=1.0, M=2.0,
                    closed_form=_column(lambda t: np.exp(-t ** 2)), tags=("linear", "polynomial-rhs")),
        _real_entry("zero", ["0"], 1.0, a=1.0, b=1.0, L=0.0, M=0.0,
                    closed_form=_column(np.ones_like), tags=("linear", "polynomial-rhs")),
        _real_entry("riccati", ["y1^2"], 1.0, a=0.25, b=1.0, L=4.0, M=4.0,
                    closed_form=_column(lambda t: 1.0 / (1.0 - t)), tags=("polynomial-rhs",)),
        _real_entry("rotation", ["-y2", "y1"], [1.0, 0.0], a=1.0, b=1.0, L=1.0, M=2.0,
                    closed_form=lambda t: np.stack([np.cos(t), np.sin(t)], axis=-1),
                    tags=("linear", "polynomial-rhs")),
        _real_entry("sine", ["sin(y1)"], 1.0, a=1.0, b=1.0, L=1.0, M=1.0,
                    closed_form=_column(lambda t: 2.0 * np.arctan(np.tan(0.5) * np.exp(t))),
                    tags=("trig",)),
        # same constants as exp; the polydisc majorant 1 + e would force alpha < 1
        # same constants as exp; the polydisc majorant 1 + e would force alpha < 1
        _complex_entry("exp-complex", ["y1"], 1.0, a=1.0, b=math.e, L=1.0, M=math.e,
                       closed_form=_column(np.exp), tags=("linear", "polynomial-rhs"),
                       declared_bounds=True),
        _complex_entry("riccati-complex", ["y1^2"], 1.0, a=0.25, b=1.0, L=4.0, M=4.0,
                       closed_form=_column(lambda t: 1.0 / (1.0 - t)), tags=("polynomial-rhs",)),
    ]
    return {entry.name: entry for entry in entries}


_REGISTRY: Optional[Dict[str, RegistryEntry]] = None


def registry() -> Dict[str, RegistryEntry]:
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = _build()
    return _REGISTRY


def registry_names() -> List[str]:
    return list(registry())


def get_entry(name: str) -> RegistryEntry:
    """
    Raises:
        KeyError: unknown entry name (message lists the known names)
    """
    entries = registry()
    if name not in entries:
        raise KeyError(f"unknown registry entry {name!r}; known: {', '.join(entries)}")
    return entries[name]


def closed_form_residual(entry: RegistryEntry, samples: int = 41, h: float = RESIDUAL_STEP) -> float:
    """
    max ||y'(t) - f(t, y(t))|| over interior nodes, y' by the five-point stencil.
    """
    if entry.closed_form is None:
        raise ValueError(f"{entry.name} has no closed form")
    problem = entry.problem
    reach = problem.alpha - 2 * h
    times = problem.t0 + reach * np.linspace(-1.0, 1.0, samples)
    y = entry.closed_form

    derivative = (-y(times + 2 * h) + 8 * y(times + h) - 8 * y(times - h) + y(times - 2 * h)) / (12 * h)
    if entry.is_complex:
        field_values = problem.field(times, y(times))
    else:
        field_values = problem.evaluate(np.real(times), np.real(y(times)))
    residual = float(np.max(np.abs(derivative - field_values)))
    if residual > RESIDUAL_TOL:
        logger.warning("%s: closed form residual %.3e", entry.name, residual)
    return residual
