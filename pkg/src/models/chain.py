"""
Data models for a decreasing chain of metric spaces H_0 ⊃ H_1 ⊃ ...

Chain points are opaque here: the metric d_j and the map P are injected as
callables, so the same engine drives numbers, sampled curves and power series.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Union


class TailKind(str, Enum):
    """Declared behaviour of the products alpha_j * kappa_j for large j."""
    EVENTUALLY_CONSTANT = "eventually-constant"
    EVENTUALLY_MONOTONE_DECREASING = "eventually-monotone-decreasing"
    EXPLICIT_FORMULA = "explicit-formula"


@dataclass(frozen=True)
class NotAMember:
    """
    Outcome returned by a metric when a point does not belong to H_j.

    Kept distinct from +inf so reports can tell non-membership from divergence.
    """
    level: int
    reason: str = ""


MetricValue = Union[float, NotAMember]


@dataclass
class ChainSpec:
    """
    Data of a contraction chain (H_j, d_j) with factors alpha_k kappa_k.

    alpha_seq(k) and kappa_seq(k) are defined for k >= 1. metric_eval(j, x, y)
    returns d_j(x, y) or NotAMember; map_eval(x) returns P(x).

    Tail certificate, by tail_kind:
      - EVENTUALLY_CONSTANT: alpha_k * kappa_k == tail_value for k >= tail_start
      - EVENTUALLY_MONOTONE_DECREASING: alpha_k * kappa_k is nonincreasing for k >= tail_start
      - EXPLICIT_FORMULA: tail_sup(n) bounds sup_{k >= n} alpha_k * kappa_k for
        n >= tail_start, and tail_limsup is the analytic limsup
    """
    alpha_seq: Callable[[int], float]
    kappa_seq: Callable[[int], float]
    metric_eval: Callable[[int, Any, Any], MetricValue]
    map_eval: Callable[[Any], Any]
    tail_kind: TailKind
    tail_start: int = 1
    tail_value: Optional[float] = None
    tail_sup: Optional[Callable[[int], float]] = None
    tail_limsup: Optional[float] = None
    member_eval: Optional[Callable[[int, Any], MetricValue]] = None

    def product_at(self, k: int) -> float:
        """alpha_k * kappa_k."""
        return self.alpha_seq(k) * self.kappa_seq(k)

    def membership(self, level: int, x: Any) -> MetricValue:
        """Membership test: 0.0 (or any float) when x is in H_level, NotAMember otherwise."""
        if self.member_eval is not None:
            return self.member_eval(level, x)
        return self.metric_eval(level, x, x)

    @classmethod
    def constant(cls, alpha: float, kappa: float,
                 metric_eval: Callable[[int, Any, Any], MetricValue],
                 map_eval: Callable[[Any], Any], **kwargs) -> 'ChainSpec':
        """Chain with alpha_j ≡ alpha and kappa_j ≡ kappa."""
        return cls(
            alpha_seq=lambda k: alpha,
            kappa_seq=lambda k: kappa,
            metric_eval=metric_eval,
            map_eval=map_eval,
            tail_kind=TailKind.EVENTUALLY_CONSTANT,
            tail_value=alpha * kappa,
            **kwargs
        )

    @classmethod
    def single_metric(cls, kappa: float,
                      metric_eval: Callable[[Any, Any], float],
                      map_eval: Callable[[Any], Any],
                      member_eval: Optional[Callable[[int, Any], MetricValue]] = None) -> 'ChainSpec':
        """
        Introductory scheme: one metric d on every level (alpha_j = 1) and T H_n ⊂ H_{n+1}.

        metric_eval here takes only the two points; membership is delegated to member_eval.
        """
        return cls.constant(
            1.0, kappa,
            metric_eval=lambda j, x, y: metric_eval(x, y),
            map_eval=map_eval,
            member_eval=member_eval
        )

    @classmethod
    def harmonic(cls, alpha: float, lipschitz: float,
                 metric_eval: Callable[[int, Any, Any], MetricValue],
                 map_eval: Callable[[Any], Any],
                 kappa_scale: float = 1.0, **kwargs) -> 'ChainSpec':
        """
        Picard chain: alpha_j ≡ alpha, kappa_j = L/j.

        kappa_scale multiplies every kappa_j; anything other than 1.0 is a test hook.
        """
        q = alpha * lipschitz * kappa_scale
        return cls(
            alpha_seq=lambda k: alpha,
            kappa_seq=lambda k: lipschitz * kappa_scale / k,
            metric_eval=metric_eval,
            map_eval=map_eval,
            tail_kind=TailKind.EXPLICIT_FORMULA,
            tail_sup=lambda n: q / max(n, 1),
            tail_limsup=0.0,
            **kwargs
        )


@dataclass
class IterationTrace:
    """
    Record of x_m = P^m x_0.

    Row m holds the point x_m, the step d_j(x_{m+1}, x_m) at the base level and
    the a-priori bound on d_j(x_inf, x_m). next_point is x_{n+1}, the last image computed.
    """
    base_level: int
    series_constant: float
    points: List[Any] = field(default_factory=list)
    step_distances: List[float] = field(default_factory=list)
    bounds: List[float] = field(default_factory=list)
    next_point: Any = None
    first_step: Optional[float] = None

    @property
    def iterations(self) -> int:
        """Number of rows recorded."""
        return len(self.points)

    @property
    def final_bound(self) -> float:
        return self.bounds[-1] if self.bounds else float('inf')


@dataclass
class AxiomViolation:
    """One violated inequality found by the chain-axiom validator."""
    level: int
    kind: str  # 'metric' or 'contraction'
    x: Any
    y: Any
    lhs: float
    rhs: float

    def describe(self) -> str:
        return (f"level {self.level}: {self.kind} inequality violated "
                f"({float(self.lhs):.6g} > {float(self.rhs):.6g})")


@dataclass
class ChainAxiomReport:
    """Worst observed ratios per level and every violation with its witness pair."""
    worst_metric_ratio: Dict[int, float] = field(default_factory=dict)
    worst_contraction_ratio: Dict[int, float] = field(default_factory=dict)
    violations: List[AxiomViolation] = field(default_factory=list)
    skipped_pairs: int = 0

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def violations_at(self, level: int) -> List[AxiomViolation]:
        return [v for v in self.violations if v.level == level]
