import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from benchmarks.benchmark import make_benchmark
from fem.exponent import (VariableExponent, check_monotonicity, flux, log_holder_quotient, luxemburg_norm,
                          modular, w1p_norm)
from fem.mesh import build_uniform_rect_mesh, interpolate
from fem.quadrature import get_rule
from utils.errors import ExponentBoundsError, InvalidArgumentError, NormError


def linear_exponent():
    return VariableExponent(lambda x: 1.5 + 0.25 * (x[..., 0] + 1.0), 1.5, 2.0, name="1.5+0.25(x1+1)")


def random_cell_field(rng, mesh, scale=3.0):
    return scale * rng.standard_normal(mesh.n_triangles) * (rng.random(mesh.n_triangles) < 0.8)


@settings(max_examples=30, deadline=None)
@given(c=st.floats(-50.0, 50.0).filter(lambda v: abs(v) > 1e-6), p=st.floats(1.1, 3.0))
def test_constant_exponent_reduces_to_lp_norm(c, p):
    mesh = build_uniform_rect_mesh((-1.0, 1.0), (-1.0, 1.0), 2)
    norm = luxemburg_norm(np.full(mesh.n_triangles, c), VariableExponent.constant(p), mesh)
    assert norm == pytest.approx(abs(c) * 4.0 ** (1.0 / p), rel=1e-12)


def test_l2_norm_of_unit_function_on_square(benchmark_square):
    norm = luxemburg_norm(np.ones(benchmark_square.n_triangles), VariableExponent.constant(2.0), benchmark_square)
    assert norm == pytest.approx(2.0, rel=1e-13)


def test_zero_field_has_zero_norm(benchmark_square):
    assert luxemburg_norm(np.zeros(benchmark_square.n_triangles), linear_exponent(), benchmark_square) == 0.0


def test_non_finite_values_raise(benchmark_square):
    values = np.ones(benchmark_square.n_triangles)
    values[3] = np.nan
    with pytest.raises(NormError):
        luxemburg_norm(values, linear_exponent(), benchmark_square)


def test_variable_exponent_norm_matches_independent_root(benchmark_square):
    # ∫ k^{-p(x)} dx = 2 k^{-3/2} (1 - k^{-1/2}) / (ln(k)/4) для u ≡ 1
    def unit_ball_excess(k):
        return 2.0 * k ** -1.5 * (1.0 - k ** -0.5) / (0.25 * np.log(k)) - 1.0

    expected = brentq(unit_ball_excess, 1.0 + 1e-9, 10.0, xtol=1e-15)
    norm = luxemburg_norm(np.ones(benchmark_square.n_triangles), linear_exponent(), benchmark_square)
    assert norm == pytest.approx(expected, rel=1e-8)


def test_unit_ball_homogeneity_and_modular_bounds(rng, benchmark_square):
    exponent = linear_exponent()
    for _ in range(100):
        values = random_cell_field(rng, benchmark_square, scale=10.0 * rng.random())
        rho = modular(values, exponent, benchmark_square)
        if rho == 0.0:
            continue
        norm = luxemburg_norm(values, exponent, benchmark_square)

        assert abs(modular(values / norm, exponent, benchmark_square) - 1.0) <= 1e-10
        assert luxemburg_norm(3.0 * values, exponent, benchmark_square) == pytest.approx(3.0 * norm, rel=1e-10)
        low = min(rho ** (1 / exponent.p1), rho ** (1 / exponent.p2))
        high = max(rho ** (1 / exponent.p1), rho ** (1 / exponent.p2))
        assert low * (1 - 1e-12) <= norm <= high * (1 + 1e-12)


@pytest.mark.parametrize("p", [1.2, 1.5, 2.0])
def test_constant_exponent_consistency(rng, benchmark_square, p):
    exponent = VariableExponent.constant(p)
    for _ in range(100):
        values = random_cell_field(rng, benchmark_square)
        rho = modular(values, exponent, benchmark_square)
        norm = luxemburg_norm(values, exponent, benchmark_square)
        assert norm == pytest.approx(rho ** (1.0 / p), rel=1e-10, abs=1e-300)


def test_w1p_norm_of_coordinate_function():
    mesh = build_uniform_rect_mesh((-1.0, 1.0), (-1.0, 1.0), 4)
    field = interpolate(lambda x: x[..., 0], mesh)
    assert w1p_norm(field, VariableExponent.constant(2.0)) == pytest.approx(np.sqrt(4.0 / 3.0) + 2.0, rel=1e-12)


def test_w1p_norm_of_zero_field(benchmark_square):
    field = interpolate(lambda x: 0.0, benchmark_square)
    assert w1p_norm(field, linear_exponent(), get_rule(12)) == 0.0


def test_exponent_bounds_are_enforced(benchmark_square):
    too_low = VariableExponent(lambda x: 1.2 + 0.0 * x[..., 0], 1.5, 2.0)
    with pytest.raises(ExponentBoundsError):
        too_low.at_barycenters(benchmark_square)


@pytest.mark.parametrize("p1, p2", [(1.0, 2.0), (1.8, 1.5), (1.5, np.inf)])
def test_invalid_exponent_bounds(p1, p2):
    with pytest.raises(InvalidArgumentError):
        VariableExponent(lambda x: x[..., 0], p1, p2)


def test_dc_range_requires_p2_at_most_two():
    VariableExponent.constant(2.0).require_dc_range()
    with pytest.raises(InvalidArgumentError):
        VariableExponent.constant(2.5).require_dc_range()


def test_flux_examples():
    np.testing.assert_allclose(flux([1.0, 0.0], 2.0), [1.0, 0.0])
    np.testing.assert_array_equal(flux([0.0, 0.0], 1.3), [0.0, 0.0])
    np.testing.assert_allclose(flux([3.0, 4.0], 1.5), np.array([3.0, 4.0]) / np.sqrt(5.0))


def test_monotonicity_examples():
    assert check_monotonicity([1.0, 0.0], [0.0, 0.0], 1.5) == pytest.approx(1.0)
    assert check_monotonicity([1.0, 0.0], [-1.0, 0.0], 2.0) == pytest.approx(4.0)


def test_flux_is_strictly_monotone_on_random_draws(rng):
    xi = rng.standard_normal((10_000, 2)) * rng.choice([1e-3, 1.0, 1e3], size=(10_000, 1))
    eta = rng.standard_normal((10_000, 2))
    p = rng.uniform(1.0 + 1e-6, 2.0, size=10_000)
    assert np.all(check_monotonicity(xi, eta, p) > 0.0)


@settings(max_examples=50, deadline=None)
@given(angle=st.floats(0.0, 2 * np.pi), p=st.floats(1.05, 2.0), delta=st.sampled_from([1e-2, 1e-4]))
def test_flux_is_holder_continuous(angle, p, delta):
    xi = np.array([np.cos(angle), np.sin(angle)])
    shifted = xi + delta * np.array([1.0, 0.0])
    assert np.linalg.norm(flux(xi, p) - flux(shifted, p)) <= 10.0 * delta ** (p - 1.0)


def test_log_holder_quotient(benchmark_square, caplog):
    assert log_holder_quotient(VariableExponent.constant(1.7), benchmark_square) == 0.0

    exponent = make_benchmark(1.0).exponent
    quotient = log_holder_quotient(exponent, benchmark_square)
    assert 0.0 < quotient < np.inf
    with caplog.at_level(logging.WARNING):
        log_holder_quotient(exponent, benchmark_square, threshold=quotient / 2)
    assert "log-Holder" in caplog.text
