"""Unit tests for truncated power-series arithmetic."""
import numpy as np
import pytest

from src.bench.registry import get_entry
from src.models.functions import PolyFunction
from src.solvers.series import (
    compose_field,
    integrate_series,
    picard_series_step,
    shifted_time_power,
    truncated_product,
)


def test_truncated_product():
    np.testing.assert_allclose(truncated_product(np.array([1.0, 1.0]), np.array([1.0, 1.0]), 1), [1.0, 2.0])


def test_shifted_time_power():
    np.testing.assert_allclose(shifted_time_power(1.0, 2, 5), [1.0, 2.0, 1.0])
    np.testing.assert_allclose(shifted_time_power(2.0, 3, 1), [8.0, 12.0])


def test_compose_and_integrate():
    field = get_entry("riccati").problem.field
    z = np.array([[1.0], [1.0]])
    integrand = compose_field(field, 0.0, z, 2)
    np.testing.assert_allclose(integrand[:, 0], [1.0, 2.0, 1.0])

    image = integrate_series(integrand, np.array([1.0]))
    np.testing.assert_allclose(image[:, 0], [1.0, 1.0, 1.0, 1.0 / 3.0])


def test_time_dependent_field_with_shifted_origin():
    field = get_entry("gaussian").problem.field
    z = np.array([[1.0]])
    # -2 t y at t = 1 + tau with y = 1
    np.testing.assert_allclose(compose_field(field, 1.0, z, 3)[:, 0], [-2.0, -2.0, 0.0, 0.0])


def test_truncation_charges_a_tail_majorant():
    problem = get_entry("riccati").problem
    z = PolyFunction.from_coefficients([1.0, 1.0], 0.0, 0.25)
    coeffs, tail = picard_series_step(problem.field, 0.0, 0.25, z, problem.y0, K_max=2)

    assert coeffs.shape == (3, 1)
    assert tail == pytest.approx(0.25 * 0.0625)
    # the dropped term tau^3 / 3 has sup 0.25^3 / 3 on the interval
    assert tail >= 0.25 ** 3 / 3
