"""Unit tests for the chain contraction fixed-point engine."""
import math
from fractions import Fraction

import pytest

from src.models.chain import ChainSpec, NotAMember, TailKind
from src.solvers.chain_fixpoint import (
    certify_limsup,
    geometric_tail_bound,
    iterate,
    partial_product,
    series_constant,
    uniqueness_evidence,
    validate_chain_axioms,
)
from src.solvers.errors import ChainDivergenceError, ChainMembershipError

HALF = Fraction(1, 2)


def _member(level, x):
    if 0 <= x <= Fraction(1, 2 ** level):
        return Fraction(0)
    return NotAMember(level, f"{x} above 2^-{level}")


def _metric(level, x, y):
    for point in (x, y):
        found = _member(level, point)
        if isinstance(found, NotAMember):
            return found
    return 2 ** level * abs(x - y)


def _quarter_chain(kappa=HALF):
    """H_j = [0, 2^-j], d_j = 2^j |x - y|, P x = x / 4: alpha_j = kappa_j = 1/2."""
    return ChainSpec.constant(HALF, kappa, metric_eval=_metric, map_eval=lambda x: x / 4,
                              member_eval=_member)


def _dummy(**kwargs):
    return dict(metric_eval=lambda j, x, y: abs(x - y), map_eval=lambda x: x, **kwargs)


def test_bounds_are_exact_on_quarter_chain():
    spec = _quarter_chain()
    trace = iterate(spec, Fraction(1), n_max=8, C=Fraction(4, 3))

    assert trace.iterations == 9
    assert trace.first_step == Fraction(3, 4)
    for m, (x, bound) in enumerate(zip(trace.points, trace.bounds)):
        assert bound == Fraction(1, 4 ** m)
        # fixed point is 0, so d_0(x_inf, x_m) = x_m
        assert x == bound


def test_iterate_stops_at_target_bound():
    trace = iterate(_quarter_chain(), Fraction(1), n_max=50, target_bound=1e-3, C=Fraction(4, 3))

    assert trace.iterations == 6
    assert trace.final_bound == Fraction(1, 1024)


def test_iterate_rejects_start_outside_h0():
    with pytest.raises(ChainMembershipError) as excinfo:
        iterate(_quarter_chain(), Fraction(2), n_max=3)
    assert excinfo.value.level == 0


def test_series_constant_for_constant_chain():
    assert float(series_constant(_quarter_chain())) == pytest.approx(4 / 3, abs=1e-9)
    spec = ChainSpec.constant(0.5, 1.0, **_dummy())
    assert series_constant(spec) == pytest.approx(2.0, abs=1e-9)


@pytest.mark.parametrize("lipschitz, expected", [(1.0, math.e), (2.0, math.e ** 2)])
def test_series_constant_for_harmonic_chain(lipschitz, expected):
    spec = ChainSpec.harmonic(1.0, lipschitz, **_dummy())
    assert series_constant(spec) == pytest.approx(expected, abs=1e-9)


def test_series_constant_rejects_tail_at_one():
    spec = ChainSpec.constant(1.0, 1.0, **_dummy())
    with pytest.raises(ChainDivergenceError):
        series_constant(spec)
    with pytest.raises(ValueError):
        series_constant(_quarter_chain(), tol=0.0)


def test_explicit_tail_needs_limsup_below_one():
    spec = ChainSpec(alpha_seq=lambda k: 1.0, kappa_seq=lambda k: 1.0, tail_kind=TailKind.EXPLICIT_FORMULA,
                     tail_sup=lambda n: 1.0, tail_limsup=1.0, **_dummy())
    with pytest.raises(ChainDivergenceError):
        certify_limsup(spec)


def test_monotone_tail_finds_first_index_below_one():
    spec = ChainSpec(alpha_seq=lambda k: 1.0, kappa_seq=lambda k: 3.0 / k,
                     tail_kind=TailKind.EVENTUALLY_MONOTONE_DECREASING, **_dummy())
    q, n0 = certify_limsup(spec)
    assert n0 == 4
    assert q == pytest.approx(0.75)


def test_partial_product():
    spec = _quarter_chain()
    assert partial_product(spec, 0, 3) == Fraction(1, 64)
    assert partial_product(spec, 2, 2) == 1
    with pytest.raises(IndexError):
        partial_product(spec, 3, 2)

    harmonic = ChainSpec.harmonic(1.0, 1.0, **_dummy())
    assert partial_product(harmonic, 0, 5) == pytest.approx(1 / 120)


def test_geometric_tail_bound():
    assert geometric_tail_bound(0.5, 3, 1.0) == pytest.approx(0.25)
    assert geometric_tail_bound(1.0, 3, 1.0) is None


def test_axioms_hold_on_quarter_chain():
    samples = [(Fraction(1, 8), Fraction(1, 16)), (Fraction(1, 16), Fraction(0)),
               (Fraction(0), Fraction(1, 8))]
    report = validate_chain_axioms(_quarter_chain(), samples, j_max=3)

    assert report.is_valid
    assert report.worst_metric_ratio[1] == HALF
    assert report.worst_contraction_ratio[3] == HALF


def test_axiom_validator_reports_understated_kappa():
    samples = [(Fraction(1, 8), Fraction(1, 16))]
    report = validate_chain_axioms(_quarter_chain(kappa=0.1), samples, j_max=3)

    assert not report.is_valid
    assert {v.kind for v in report.violations} == {'contraction'}
    assert len(report.violations_at(1)) == 1
    assert "contraction inequality violated" in report.violations[0].describe()


def test_uniqueness_evidence_on_quarter_chain():
    gap, bound = uniqueness_evidence(_quarter_chain(), [Fraction(1), HALF, Fraction(0)], n_max=10)
    assert gap <= bound
    assert gap < 1e-6
