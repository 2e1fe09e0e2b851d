import numpy as np
import pytest

from fem.mesh import build_uniform_rect_mesh
from fem.quadrature import RULES, get_rule
from utils.errors import InvalidArgumentError


def integrate_monomial(rule, a, b):
    mesh = build_uniform_rect_mesh((0.0, 1.0), (0.0, 1.0), 3)
    points = mesh.quadrature_points(rule)
    values = points[..., 0] ** a * points[..., 1] ** b
    return float(np.sum(mesh.quadrature_weights(rule) * values))


@pytest.mark.parametrize("key", sorted(RULES))
def test_weights_sum_to_one(key):
    rule = get_rule(key)
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.all(rule.weights > 0)


@pytest.mark.parametrize("key", sorted(RULES))
def test_rule_is_exact_up_to_its_degree(key):
    rule = get_rule(key)
    for total in range(rule.degree + 1):
        for a in range(total + 1):
            b = total - a
            exact = 1.0 / ((a + 1) * (b + 1))
            assert integrate_monomial(rule, a, b) == pytest.approx(exact, rel=1e-13)


def test_default_rule_is_seven_point_degree_five():
    rule = get_rule()
    assert rule.size == 7
    assert rule.degree == 5


def test_rule_arrays_are_read_only():
    rule = get_rule(12)
    with pytest.raises(ValueError):
        rule.weights[0] = 1.0


def test_unknown_key_is_rejected():
    with pytest.raises(InvalidArgumentError):
        get_rule(3)
