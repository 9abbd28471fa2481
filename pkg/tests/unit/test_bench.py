"""Unit tests for the registry, the Euler baseline and decay classification."""
import math

import numpy as np
import pytest

from src.bench.baselines import euler_polygon, geometric_bound
from src.bench.rates import classify_decay, euler_convergence, heron_chain, heron_report
from src.bench.registry import closed_form_residual, get_entry, registry_names
from src.expressions.parser import compile_rhs
from src.models.problem import IVProblem
from src.solvers.chain_fixpoint import certify_limsup
from src.solvers.picard_real import initial_function, metric_dj, picard_apply, theorem_bound


@pytest.mark.parametrize("name", registry_names())
def test_closed_forms_solve_their_problems(name):
    entry = get_entry(name)
    assert closed_form_residual(entry) <= 1e-9


@pytest.mark.parametrize("name, alpha", [("exp", 1.0), ("exp-half", 0.5), ("gaussian", 0.5),
                                         ("riccati", 0.25), ("exp-complex", 1.0)])
def test_registry_alphas(name, alpha):
    assert get_entry(name).problem.alpha == pytest.approx(alpha)


def test_registry_backends():
    assert get_entry("sine").backend == "grid"
    assert get_entry("exp").backend == "exact"
    assert get_entry("riccati-complex").backend == "complex"
    with pytest.raises(KeyError):
        get_entry("missing")


def test_euler_single_step():
    problem = get_entry("exp-half").problem
    polygon = euler_polygon(problem, 0.5)

    assert polygon.N == 1
    np.testing.assert_allclose(polygon.values[:, 0], [0.5, 1.0, 1.5])
    assert abs(polygon.values[-1, 0] - math.exp(0.5)) == pytest.approx(0.14872, abs=1e-5)


def test_euler_on_zero_field_is_constant():
    problem = get_entry("zero").problem
    np.testing.assert_allclose(euler_polygon(problem, 0.125).values, 1.0)


def test_euler_step_must_divide_alpha():
    with pytest.raises(ValueError):
        euler_polygon(get_entry("exp-half").problem, 0.3)


def test_euler_resampled_onto_grid():
    problem = get_entry("exp-half").problem
    polygon = euler_polygon(problem, 0.125, N=16)
    assert polygon.values.shape == (33, 1)
    assert polygon.center[0] == 1.0


def test_geometric_bound():
    problem = get_entry("exp-half").problem
    assert geometric_bound(problem, 5, 1.0) == pytest.approx(0.0625)

    wide = IVProblem(t0=0.0, y0=[1.0], a=1.0, b=10.0, rhs=compile_rhs(["1.2*y1"], 1), L=1.2, M=1.0)
    assert geometric_bound(wide, 5, 1.0) is None


def test_classify_decay_models():
    ns = list(range(11))
    assert classify_decay(ns, [1.0 / math.factorial(n) for n in ns]) == "factorial"
    assert classify_decay(ns, [0.5 ** n for n in ns]) == "geometric"
    assert classify_decay(ns, [1.0] + [0.0] * 10) == "exact"
    assert classify_decay([0, 1, 2, 3], [1.0, 0.5, 0.25, 0.125]) == "indeterminate"
    assert classify_decay([1, 2, 3, 4], [1e-2, 1e-4, 1e-8, 1e-16]) == "superlinear"


def test_classify_decay_ignores_rows_below_floor():
    ns = list(range(8))
    errors = [0.5 ** n for n in range(5)] + [1e-17, 1e-17, 1e-17]
    assert classify_decay(ns, errors, noise_floor=1e-15) == "geometric"


def test_heron_chain_is_certified():
    spec = heron_chain()
    q, n0 = certify_limsup(spec)
    assert n0 == 1
    assert q < 0.5


def test_heron_report():
    report = heron_report(R=2.0, x0=2.0, n_max=8)

    assert report.picard_decay == "superlinear"
    assert report.bound_kind == "chain"
    assert len(report.rows) == 9
    for row in report.rows:
        assert row.observed <= row.factorial_bound + report.noise_floor
    assert report.rows[1].observed == pytest.approx(1.5 - math.sqrt(2.0))


def test_factorial_bound_beats_geometric_bound():
    problem = get_entry("exp-half").problem
    start = initial_function(problem, "exact")
    first_step = metric_dj(picard_apply(problem, start), start, 0)
    assert first_step == pytest.approx(0.5)
    assert theorem_bound(problem, 10) / geometric_bound(problem, 10, first_step) < 1e-3


def test_heron_reaches_sqrt2_within_six_iterations():
    report = heron_report(R=2.0, x0=2.0, n_max=8)
    converged = [row.n for row in report.rows if row.observed < 1e-12]
    assert converged and converged[0] <= 6


def test_euler_convergence_is_first_order():
    entry = get_entry("exp-half")
    steps, errors, slope = euler_convergence(entry.problem, entry.closed_form, levels=7)
    alpha = entry.problem.alpha
    assert steps[0] == pytest.approx(alpha / 4)
    assert steps[-1] == pytest.approx(alpha / 256)
    assert all(fine < coarse for coarse, fine in zip(errors, errors[1:]))
    assert 0.8 <= slope <= 1.2
