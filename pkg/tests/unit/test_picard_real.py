"""Unit tests for the real-time Picard solver (grid and exact backends)."""
import math

import numpy as np
import pytest

from src.bench.baselines import euler_polygon
from src.bench.registry import get_entry
from src.expressions.parser import compile_rhs
from src.models.chain import NotAMember
from src.models.functions import GridFunction, PolyFunction
from src.models.problem import IVProblem, compute_alpha, factorial_bound
from src.solvers.errors import ChainMembershipError, SolverError
from src.solvers.picard_real import (
    apply_K,
    apply_RL,
    estimate_L_M,
    finiteness_bound,
    initial_function,
    metric_dj,
    picard_apply,
    picard_defect,
    poly_from_grid,
    solve_ivp,
    theorem_bound,
    uniqueness_gap,
)


@pytest.fixture
def exp_half():
    return get_entry("exp-half")


def _poly(coeffs, radius):
    return PolyFunction.from_coefficients(coeffs, 0.0, radius)


@pytest.mark.parametrize("a, b, M, expected", [(1, 1, 2, 0.5), (0.3, 4, 10, 0.3), (2, 2, 1, 2)])
def test_compute_alpha(a, b, M, expected):
    assert compute_alpha(a, b, M) == expected


def test_compute_alpha_rejects_nonpositive():
    with pytest.raises(ValueError):
        compute_alpha(1.0, 0.0, 1.0)


def test_theorem_bound():
    problem = IVProblem(t0=0.0, y0=[1.0], a=1.0, b=1.0, rhs=compile_rhs(["y1"], 1), L=1.0, M=1.0)
    assert theorem_bound(problem, 5) == pytest.approx(math.e / 120, rel=1e-12)
    assert theorem_bound(problem, 0) == pytest.approx(math.e, rel=1e-12)


def test_estimate_L_M_linear_field():
    L, M = estimate_L_M(0.0, [1.0], 1.0, 1.0, compile_rhs(["y1"], 1))
    assert 2.0 <= M <= 2.03
    assert 1.0 <= L <= 1.02


def test_estimate_L_M_sine_and_precedence():
    L, _ = estimate_L_M(0.0, [0.0], 1.0, 1.0, compile_rhs(["sin(y1)"], 1))
    assert 0.99 <= L <= 1.02
    assert estimate_L_M(0.0, [0.0], 1.0, 1.0, compile_rhs(["sin(y1)"], 1), L=3.0, M=5.0) == (3.0, 5.0)


def test_picard_apply_exact_backend(exp_half):
    problem = exp_half.problem
    y = initial_function(problem, "exact")
    y1 = picard_apply(problem, y)
    y2 = picard_apply(problem, y1)

    np.testing.assert_allclose(y1.coeffs[:, 0], [1.0, 1.0])
    np.testing.assert_allclose(y2.coeffs[:, 0], [1.0, 1.0, 0.5])


def test_picard_apply_zero_field_returns_y0():
    problem = get_entry("zero").problem
    y = GridFunction.from_callable(lambda t: 1.0 + 0.3 * t, 0.0, problem.alpha, 32)
    image = picard_apply(problem, y)
    np.testing.assert_allclose(image.values, 1.0)


def test_exact_backend_needs_polynomial_rhs():
    problem = get_entry("sine").problem
    with pytest.raises(SolverError):
        picard_apply(problem, initial_function(problem, "exact"))


def test_metric_examples_exact():
    x = _poly([1.0, 1.0], 0.5)
    y = PolyFunction.constant(0.0, 0.5, 1.0)

    assert metric_dj(x, y, 0) == pytest.approx(0.5)
    assert metric_dj(x, y, 1) == pytest.approx(1.0)
    assert isinstance(metric_dj(x, y, 2), NotAMember)
    assert metric_dj(x, x, 3) == 0.0


def test_metric_examples_grid():
    x = GridFunction.from_callable(lambda t: 1.0 + t, 0.0, 0.5, 64)
    y = GridFunction.constant(0.0, 0.5, 64, 1.0)

    assert metric_dj(x, y, 0) == pytest.approx(0.5)
    assert metric_dj(x, y, 1) == pytest.approx(1.0)
    assert metric_dj(x, x, 2) == 0.0


def test_picard_defect_examples(exp_half):
    problem = exp_half.problem
    y = _poly([1.0, 1.0], problem.alpha)

    assert picard_defect(problem, y, 1).value == pytest.approx(0.25)
    assert picard_defect(problem, y, 2).value == pytest.approx(0.5)
    beyond = picard_defect(problem, y, 3)
    assert not beyond.is_member
    assert math.isinf(beyond.value)


def test_picard_defect_of_exact_solution_vanishes():
    problem = get_entry("exp-half").problem
    coeffs = [1.0 / math.factorial(m) for m in range(25)]
    y = _poly(coeffs, problem.alpha)
    for j in range(4):
        assert picard_defect(problem, y, j).value < 1e-12


def test_apply_K_power_formula():
    g = GridFunction.constant(0.0, 1.0, 4096, 1.0)
    t = np.abs(g.offsets)
    for n in range(1, 5):
        np.testing.assert_allclose(apply_K(g, n).values[:, 0], t ** n / math.factorial(n), atol=1e-6)

    zero = GridFunction.constant(0.0, 1.0, 64, 0.0)
    assert np.all(apply_K(zero, 3).values == 0.0)


def test_apply_RL_of_one_is_exponential():
    g = GridFunction.constant(0.0, 1.0, 1024, 1.0)
    result = apply_RL(g, 1.0).values[:, 0]
    np.testing.assert_allclose(result, np.exp(np.abs(g.offsets)), rtol=1e-5)
    assert result[-1] == pytest.approx(math.e, rel=1e-5)


def test_apply_RL_inverts_id_minus_LK():
    g = GridFunction.from_callable(np.cos, 0.0, 1.0, 1024)
    reduced = g.with_values(g.values - apply_K(g, 1).values)
    np.testing.assert_allclose(apply_RL(reduced, 1.0).values, g.values, atol=1e-5)


def test_finiteness_bound_examples(exp_half):
    problem = exp_half.problem
    x = _poly([1.0, 1.0], problem.alpha)
    y = PolyFunction.constant(0.0, problem.alpha, 1.0)

    bound0 = finiteness_bound(problem, x, y, 0)
    assert bound0 == pytest.approx(0.625 * math.exp(0.5), rel=1e-9)
    assert metric_dj(x, y, 0) <= bound0

    bound1 = finiteness_bound(problem, x, y, 1)
    assert metric_dj(x, y, 1) <= bound1
    assert math.isinf(finiteness_bound(problem, x, y, 2))


def test_finiteness_bound_on_alpha_one():
    problem = get_entry("exp").problem
    x = _poly([1.0, 1.0], 1.0)
    y = PolyFunction.constant(0.0, 1.0, 1.0)
    for j in (0, 1):
        assert metric_dj(x, y, j) == pytest.approx(1.0)
        assert finiteness_bound(problem, x, y, j) == pytest.approx(1.5 * math.e, rel=1e-9)


def test_finiteness_bound_second_pair():
    problem = get_entry("exp").problem
    x = _poly([1.0, 1.0, 0.5], 1.0)
    y = _poly([1.0, 1.0], 1.0)
    assert metric_dj(x, y, 2) == pytest.approx(0.5)
    assert metric_dj(x, y, 2) <= finiteness_bound(problem, x, y, 2)


def test_metric_chain_inequality_exact():
    rng = np.random.default_rng(7)
    alpha = 0.5
    for j in range(5):
        for _ in range(10):
            x = rng.normal(size=(12, 2))
            y = x.copy()
            y[j + 1:] += rng.normal(size=(11 - j, 2))
            px, py = _poly(x, alpha), _poly(y, alpha)
            assert metric_dj(px, py, j) <= alpha * metric_dj(px, py, j + 1) * (1 + 1e-12)


@pytest.mark.parametrize("name", ["exp-half", "gaussian"])
def test_contraction_gain_exact(name):
    problem = get_entry(name).problem
    rng = np.random.default_rng(11)
    for j in range(5):
        for _ in range(10):
            x = rng.normal(scale=0.1, size=(10, 1))
            x[0] = problem.y0
            y = x.copy()
            y[j:] += rng.normal(scale=0.1, size=(10 - j, 1))
            px = picard_apply(problem, _poly(x, problem.alpha))
            py = picard_apply(problem, _poly(y, problem.alpha))
            d_j = metric_dj(_poly(x, problem.alpha), _poly(y, problem.alpha), j)
            assert metric_dj(px, py, j + 1) <= problem.L / (j + 1) * d_j * (1 + 1e-12)


def test_metric_chain_inequality_grid():
    rng = np.random.default_rng(3)
    alpha, N = 0.5, 256
    for j in range(4):
        deltas = np.abs(rng.normal(size=8))
        deltas[:j + 1] = 0.0

        def diff(t, deltas=deltas):
            return sum(d * t ** m for m, d in enumerate(deltas))

        x = GridFunction.from_callable(lambda t: 1.0 + np.sin(t), 0.0, alpha, N)
        y = x.with_values(x.values[:, 0] + diff(x.offsets))
        assert metric_dj(x, y, j) <= alpha * metric_dj(x, y, j + 1) * (1 + 1e-9)


def test_metric_triangle_inequality_grid():
    rng = np.random.default_rng(5)
    base = GridFunction.constant(0.0, 1.0, 64, 0.0)
    for _ in range(10):
        x, y, z = (base.with_values(rng.normal(size=(129, 2))) for _ in range(3))
        for j in range(3):
            assert metric_dj(x, y, j) == metric_dj(y, x, j)
            assert metric_dj(x, z, j) <= (metric_dj(x, y, j) + metric_dj(y, z, j)) * (1 + 1e-12)


def test_solve_ivp_exp_respects_factorial_bound():
    entry = get_entry("exp")
    report = solve_ivp(entry.problem, 12, backend="exact", reference=entry.closed_form)

    assert not report.violations
    assert len(report.rows) == 13
    for row in report.rows:
        assert row.observed <= row.factorial_bound
    tail = sum(1.0 / math.factorial(k) for k in range(4, 30))
    assert report.rows[3].observed == pytest.approx(tail, rel=1e-9)
    assert report.rows[3].observed == pytest.approx(0.0516, abs=1e-4)


def test_solve_ivp_zero_field_converges_at_once():
    entry = get_entry("zero")
    report = solve_ivp(entry.problem, 4, backend="exact", reference=entry.closed_form)

    assert report.warnings
    assert all(row.observed == 0.0 for row in report.rows)
    assert not report.violations


def test_solve_ivp_gaussian():
    entry = get_entry("gaussian")
    report = solve_ivp(entry.problem, 8, backend="exact", reference=entry.closed_form)
    assert not report.violations
    assert report.rows[8].observed <= theorem_bound(entry.problem, 8)


def test_solve_ivp_grid_backend():
    entry = get_entry("exp-half")
    report = solve_ivp(entry.problem, 6, backend="grid", N=256, reference=entry.closed_form)
    assert report.mode == "real-grid"
    assert len(report.rows) == 7
    assert not report.violations


def test_solve_ivp_kappa_scale_exposes_violations():
    entry = get_entry("exp")
    report = solve_ivp(entry.problem, 4, backend="exact", reference=entry.closed_form,
                       kappa_scale=1e-3)
    assert report.has_violations


def test_uniqueness_from_euler_polygon_start():
    problem = get_entry("gaussian").problem
    polygon = euler_polygon(problem, problem.alpha / 64)
    fitted = poly_from_grid(problem, polygon)
    start = initial_function(problem, "exact")

    assert fitted.coeffs[0, 0] == 1.0
    gaps = uniqueness_gap(problem, [start, fitted], 15)
    assert len(gaps) == 1
    assert gaps[0][2] < 1e-8


def test_theorem_bound_matches_factorial_bound(exp_half):
    problem = exp_half.problem
    for n in range(8):
        assert theorem_bound(problem, n) == factorial_bound(problem.alpha, problem.L, problem.M, n)


def _level_member(problem, j, rng, size=12):
    """P^j of the constant start plus noise from order max(j, 1) on: a point of H_j."""
    base = initial_function(problem, "exact")
    for _ in range(j):
        base = picard_apply(problem, base)
    coeffs = np.zeros((size, problem.dimension))
    coeffs[:len(base.coeffs)] = base.coeffs
    start = max(j, 1)
    coeffs[start:] += rng.normal(scale=0.05, size=(size - start, problem.dimension))
    return _poly(coeffs, problem.alpha)


@pytest.mark.parametrize("name", ["exp-half", "gaussian"])
def test_defect_constant_is_stable(name):
    problem = get_entry(name).problem
    rng = np.random.default_rng(23)
    for j in range(4):
        for _ in range(10):
            x, y = _level_member(problem, j, rng), _level_member(problem, j, rng)
            c_x = picard_defect(problem, x, j).value
            c_y = picard_defect(problem, y, j).value
            assert math.isfinite(c_x) and math.isfinite(c_y)
            gap = (1 + problem.alpha * problem.L) * metric_dj(x, y, j)
            assert abs(c_x - c_y) <= gap * (1 + 1e-9) + 1e-14


@pytest.mark.parametrize("name", ["exp-half", "gaussian"])
def test_defect_shrinks_along_images(name):
    problem = get_entry(name).problem
    rng = np.random.default_rng(29)
    for j in range(4):
        for _ in range(10):
            y = _level_member(problem, j, rng)
            image = picard_apply(problem, y)
            nested = picard_defect(problem, image, j + 1).value
            assert nested <= problem.L / (j + 1) * picard_defect(problem, y, j).value * (1 + 1e-9) + 1e-14


def test_contraction_gain_grid_fine():
    problem = get_entry("exp").problem
    rng = np.random.default_rng(31)
    N = 1024
    x = GridFunction.from_callable(lambda t: 1.0 + 0.1 * np.sin(t), problem.t0, problem.alpha, N)
    for j in range(4):
        for _ in range(20):
            deltas = 0.1 * np.abs(rng.normal(size=6))

            def diff(t, deltas=deltas, j=j):
                return sum(d * np.abs(t) ** (j + m) for m, d in enumerate(deltas))

            y = x.with_values(x.values[:, 0] + diff(x.offsets))
            d_j = metric_dj(x, y, j)
            image_gap = metric_dj(picard_apply(problem, x), picard_apply(problem, y), j + 1)
            assert image_gap <= problem.L / (j + 1) * d_j * (1 + 1e-2)


def test_exact_iterates_leaving_the_ball_are_rejected():
    # M understated: alpha = 1 sends y^1 = 1 + t far outside the 0.1-ball
    rhs = compile_rhs(["y1"], 1)
    problem = IVProblem(t0=0.0, y0=[1.0], a=1.0, b=0.1, rhs=rhs, L=1.0, M=0.1,
                        field=rhs.polynomial_field(), declared_bounds=True)
    assert problem.alpha == 1.0
    with pytest.raises(ChainMembershipError) as excinfo:
        solve_ivp(problem, 3, backend="exact", reference=np.exp)
    assert "b-ball" in str(excinfo.value)


def test_factorial_bound_edge_cases():
    assert factorial_bound(0.5, 1.0, 0.0, 3) == 0.0
    assert factorial_bound(0.5, 0.0, 2.0, 0) == 2.0
    assert factorial_bound(0.5, 0.0, 2.0, 4) == 0.0
    assert factorial_bound(1.0, 1.0, 1.0, 170) > 0.0
    with pytest.raises(ValueError):
        factorial_bound(0.5, 1.0, 2.0, -1)
