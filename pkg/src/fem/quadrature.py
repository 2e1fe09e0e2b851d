"""Симметричные квадратурные формулы на треугольнике в барицентрических координатах."""

from dataclasses import dataclass

import numpy as np

from utils.errors import InvalidArgumentError


@dataclass(frozen=True)
class QuadratureRule:
    """
    Квадратурная формула на эталонном треугольнике.

    Attributes:
        name (str): Имя формулы
        points (np.ndarray): Барицентрические координаты узлов, форма (nq, 3)
        weights (np.ndarray): Веса, нормированные на площадь (сумма равна 1)
        degree (int): Степень точности
    """
    name: str
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if points.ndim != 2 or points.shape[1] != 3 or points.shape[0] != weights.shape[0]:
            raise InvalidArgumentError(f"Malformed quadrature rule {self.name}")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-14:
            raise InvalidArgumentError(f"Quadrature weights of {self.name} must be positive and sum to 1")
        if np.any(np.abs(points.sum(axis=1) - 1.0) > 1e-14):
            raise InvalidArgumentError(f"Barycentric points of {self.name} must sum to 1")
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return self.weights.shape[0]


def _orbit3(a: float) -> list:
    b = 1.0 - 2.0 * a
    return [(a, a, b), (a, b, a), (b, a, a)]


def _orbit6(a: float, b: float) -> list:
    c = 1.0 - a - b
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


def centroid_rule() -> QuadratureRule:
    return QuadratureRule("centroid-1", [(1 / 3, 1 / 3, 1 / 3)], [1.0], 1)


def seven_point_rule() -> QuadratureRule:
    """7-точечная формула степени 5 (Радон)."""
    s15 = np.sqrt(15.0)
    a1 = (6.0 - s15) / 21.0
    a2 = (6.0 + s15) / 21.0
    w1 = (155.0 - s15) / 1200.0
    w2 = (155.0 + s15) / 1200.0
    points = [(1 / 3, 1 / 3, 1 / 3)] + _orbit3(a1) + _orbit3(a2)
    weights = [9.0 / 40.0] + [w1] * 3 + [w2] * 3
    return QuadratureRule("radon-7", points, weights, 5)


def twelve_point_rule() -> QuadratureRule:
    """12-точечная формула Данаванта степени 6."""
    points = (
        _orbit3(0.063089014491502228)
        + _orbit3(0.249286745170910421)
        + _orbit6(0.053145049844816947, 0.310352451033784405)
    )
    weights = [0.050844906370206817] * 3 + [0.116786275726379366] * 3 + [0.082851075618373575] * 6
    weights = np.asarray(weights)
    # табличные веса суммируются в 1 с точностью ~1e-15
    weights = weights / weights.sum()
    return QuadratureRule("dunavant-12", points, weights, 6)


# Ключ CLI --quad-degree -> формула
RULES = {
    1: centroid_rule,
    5: seven_point_rule,
    12: twelve_point_rule,
}

DEFAULT_QUAD_DEGREE = 5


def get_rule(key: int = DEFAULT_QUAD_DEGREE) -> QuadratureRule:
    """
    Формула по ключу: 1 (центр масс), 5 (7 точек, степень 5), 12 (12 точек, степень 6).
    """
    try:
        return RULES[int(key)]()
    except (KeyError, ValueError) as e:
        raise InvalidArgumentError(f"Unknown quadrature key {key!r}; expected one of {sorted(RULES)}") from e
