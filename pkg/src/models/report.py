"""
Result records produced by the solvers and the comparison bench.
"""
import math
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    """JSON has no inf/nan; those become null."""
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


@dataclass
class ConvergenceRow:
    """One Picard iterate: observed d_0 error and the bounds it is checked against."""
    n: int
    observed: float
    factorial_bound: float
    chain_bound: float
    geometric_bound: Optional[float] = None
    defect_level: Optional[int] = None
    defect_value: Optional[float] = None
    tail_majorant: float = 0.0

    def to_dict(self) -> dict:
        data = asdict(self)
        for key in ('observed', 'factorial_bound', 'chain_bound', 'geometric_bound',
                    'defect_value', 'tail_majorant'):
            data[key] = _finite_or_none(data[key])
        return data


@dataclass
class ConvergenceReport:
    """
    Per-iteration observations for one solver run.

    factorial_bound is e^{alpha L} (alpha L)^n M / n!; chain_bound is the
    chain estimate with the measured first step d_0(y^1, y^0). Both are
    reported; neither replaces the other.
    """
    problem_name: str
    mode: str
    alpha: float
    L: float
    M: float
    series_constant: float
    reference_kind: str
    first_step: float = 0.0
    noise_floor: float = 0.0
    tol: float = 1e-3
    rows: List[ConvergenceRow] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)
    final_iterate: Any = None

    @property
    def has_violations(self) -> bool:
        return bool(self.violations)

    @property
    def observed(self) -> List[float]:
        return [row.observed for row in self.rows]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'problem_name': self.problem_name,
            'mode': self.mode,
            'alpha': self.alpha,
            'L': self.L,
            'M': self.M,
            'series_constant': _finite_or_none(self.series_constant),
            'reference_kind': self.reference_kind,
            'first_step': _finite_or_none(self.first_step),
            'noise_floor': self.noise_floor,
            'tol': self.tol,
            'rows': [row.to_dict() for row in self.rows],
            'warnings': list(self.warnings),
            'violations': list(self.violations)
        }


@dataclass
class RateRow:
    n: int
    observed: float
    factorial_bound: float
    geometric_bound: Optional[float] = None
    euler_matched: Optional[float] = None

    def to_dict(self) -> dict:
        return {key: _finite_or_none(value) if key != 'n' else value
                for key, value in asdict(self).items()}


@dataclass
class RateReport:
    """
    Picard error against the factorial and geometric bounds and a cost-matched Euler run.

    Decay labels are one of 'exact', 'factorial', 'geometric', 'superlinear',
    'indeterminate' or 'inapplicable'.
    """
    entry_name: str
    alpha: float
    L: float
    reference_kind: str
    bound_kind: str = "factorial"
    rows: List[RateRow] = field(default_factory=list)
    picard_decay: str = "indeterminate"
    geometric_decay: str = "inapplicable"
    euler_slope: Optional[float] = None
    euler_steps: List[float] = field(default_factory=list)
    euler_errors: List[float] = field(default_factory=list)
    noise_floor: float = 0.0
    violations: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'entry_name': self.entry_name,
            'alpha': self.alpha,
            'L': _finite_or_none(self.L),
            'reference_kind': self.reference_kind,
            'bound_kind': self.bound_kind,
            'rows': [row.to_dict() for row in self.rows],
            'picard_decay': self.picard_decay,
            'geometric_decay': self.geometric_decay,
            'euler_slope': _finite_or_none(self.euler_slope),
            'euler_steps': list(self.euler_steps),
            'euler_errors': [_finite_or_none(e) for e in self.euler_errors],
            'noise_floor': self.noise_floor,
            'violations': list(self.violations)
        }
