"""
Переменный показатель p(x), модуляр, норма Люксембурга и норма W^{1,p(·)}.

Все интегралы считаются квадратурой по ячейкам; p(x) берется точно
в узлах квадратуры, без интерполяции показателя.
"""

import weakref
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.spatial.distance import pdist

from fem.mesh import Mesh, NodalField
from fem.quadrature import QuadratureRule, get_rule
from utils.errors import ExponentBoundsError, FieldMismatchError, InvalidArgumentError, NormError
from utils.logger import AppLogger

logger = AppLogger("fem.exponent")

# Допуск проверки p1 <= p(x) <= p2 на ошибки округления
BOUND_SLACK = 1e-12
# Верхняя граница показателя, допустимая для DC солвера
DC_MAX_EXPONENT = 2.0


@dataclass(frozen=True, eq=False)
class VariableExponent:
    """
    Показатель p(x) с объявленными границами p1 <= p(x) <= p2.

    Attributes:
        func: Функция точки (..., 2) -> (...)
        p1 (float): Нижняя граница, p1 > 1
        p2 (float): Верхняя граница, p2 < ∞
        name (str): Описание для логов
    """
    func: Callable[[np.ndarray], np.ndarray]
    p1: float
    p2: float
    name: str = "p(x)"
    _cache: weakref.WeakKeyDictionary = field(
        default_factory=weakref.WeakKeyDictionary, init=False, repr=False
    )

    def __post_init__(self):
        if not (np.isfinite(self.p1) and np.isfinite(self.p2)):
            raise InvalidArgumentError(f"{self.name}: exponent bounds must be finite")
        if not 1.0 < self.p1 <= self.p2:
            raise InvalidArgumentError(f"{self.name}: need 1 < p1 <= p2, got p1={self.p1}, p2={self.p2}")

    @classmethod
    def constant(cls, value: float) -> "VariableExponent":
        value = float(value)
        return cls(lambda x: np.full(np.shape(x)[:-1], value), value, value, name=f"p={value:g}")

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """
        Значения p в точках с проверкой границ.

        Raises:
            ExponentBoundsError: значение вне [p1, p2]
        """
        points = np.asarray(points, dtype=float)
        values = np.broadcast_to(np.asarray(self.func(points), dtype=float), points.shape[:-1])
        if not np.all(np.isfinite(values)):
            raise ExponentBoundsError(f"{self.name}: non-finite exponent value")
        low, high = values.min(initial=np.inf), values.max(initial=-np.inf)
        if low < self.p1 - BOUND_SLACK or high > self.p2 + BOUND_SLACK:
            raise ExponentBoundsError(
                f"{self.name}: evaluated range [{low:.15g}, {high:.15g}] "
                f"leaves declared bounds [{self.p1:.15g}, {self.p2:.15g}]"
            )
        return values

    def require_dc_range(self):
        """Проверка p2 <= 2 - область применимости DC солвера."""
        if self.p2 > DC_MAX_EXPONENT + BOUND_SLACK:
            raise InvalidArgumentError(f"{self.name}: DC solver requires p2 <= 2, got p2={self.p2}")

    def at_quadrature(self, mesh: Mesh, rule: QuadratureRule) -> np.ndarray:
        """p в узлах квадратуры, форма (nt, nq); кэшируется на сетку."""
        per_mesh = self._cache.setdefault(mesh, {})
        key = ("quad", rule.name)
        if key not in per_mesh:
            values = self(mesh.quadrature_points(rule))
            values.setflags(write=False)
            per_mesh[key] = values
        return per_mesh[key]

    def at_barycenters(self, mesh: Mesh) -> np.ndarray:
        """p̄_κ = p(x̄_κ), форма (nt,)."""
        per_mesh = self._cache.setdefault(mesh, {})
        if "bary" not in per_mesh:
            values = np.array(self(mesh.barycenters))
            values.setflags(write=False)
            per_mesh["bary"] = values
        return per_mesh["bary"]


def _as_quadrature_values(values, mesh: Mesh, rule: QuadratureRule) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape == (mesh.n_triangles,):
        # постоянное на ячейке значение
        values = values[:, None]
    try:
        return np.broadcast_to(values, (mesh.n_triangles, rule.size))
    except ValueError as e:
        raise FieldMismatchError(
            f"expected values of shape ({mesh.n_triangles}, {rule.size}) or ({mesh.n_triangles},), "
            f"got {values.shape}"
        ) from e


def _modular(abs_values: np.ndarray, p_values: np.ndarray, weights: np.ndarray) -> float:
    # np.sum использует попарное суммирование: результат воспроизводим
    return float(np.sum(weights * abs_values ** p_values))


def modular(values, exponent: VariableExponent, mesh: Mesh, rule: QuadratureRule = None) -> float:
    """
    Модуляр ϱ(u) = ∫ |u|^{p(x)} dx квадратурой.

    Args:
        values: |u| в узлах квадратуры (nt, nq) или постоянные на ячейках (nt,)
        exponent (VariableExponent): Показатель
        mesh (Mesh): Сетка
        rule (QuadratureRule, optional): Квадратура (по умолчанию 7 точек, степень 5)

    Returns:
        float: Значение модуляра (0 только если |u| = 0 во всех узлах)
    """
    rule = rule or get_rule()
    abs_values = np.abs(_as_quadrature_values(values, mesh, rule))
    return _modular(abs_values, exponent.at_quadrature(mesh, rule), mesh.quadrature_weights(rule))


def luxemburg_norm(values, exponent: VariableExponent, mesh: Mesh, rule: QuadratureRule = None) -> float:
    """
    Норма Люксембурга inf{k > 0: ϱ(u/k) <= 1}.

    Отображение k -> ϱ(u/k) строго убывает, поэтому корень ϱ(u/k) = 1
    ищется по гарантированной вилке [k_lo, k_hi] методом Брента.

    Raises:
        NormError: в значениях есть NaN или бесконечности
    """
    rule = rule or get_rule()
    abs_values = np.abs(_as_quadrature_values(values, mesh, rule))
    if not np.all(np.isfinite(abs_values)):
        raise NormError("field values must be finite")

    p_values = exponent.at_quadrature(mesh, rule)
    weights = mesh.quadrature_weights(rule)
    rho = _modular(abs_values, p_values, weights)
    if rho == 0.0:
        return 0.0

    def excess(k: float) -> float:
        return _modular(abs_values / k, p_values, weights) - 1.0

    k_hi = max(1.0, rho) * (1.0 + float(abs_values.max()))
    while excess(k_hi) >= 0.0:
        k_hi *= 2.0
    k_lo = 1.0
    while excess(k_lo) <= 0.0:
        k_lo *= 0.5

    return brentq(excess, k_lo, k_hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def w1p_norm(nodal: NodalField, exponent: VariableExponent, rule: QuadratureRule = None) -> float:
    """
    Норма ‖u‖_{1,p(·)} = ‖u‖_{p(·)} + ‖∇u‖_{p(·)} P1 поля.

    Градиент постоянен на ячейке, но p(x) внутри ячейки меняется,
    поэтому |∇u| тоже интегрируется по узлам квадратуры.
    """
    rule = rule or get_rule()
    mesh = nodal.mesh
    value_norm = luxemburg_norm(nodal.values_at(rule), exponent, mesh, rule)
    gradient_norm = luxemburg_norm(np.linalg.norm(nodal.cell_gradients(), axis=1), exponent, mesh, rule)
    return value_norm + gradient_norm


def w1p_error_norm(nodal: NodalField, exact_u, exact_gradient, exponent: VariableExponent,
                   rule: QuadratureRule = None) -> float:
    """
    Норма ошибки ‖u - u_h‖_{1,p(·)}.

    Точное решение и его градиент вычисляются в узлах квадратуры, без
    интерполяции π_h: e = u - u_h, ∇e = ∇u - ∇_κ u_h.

    Args:
        nodal (NodalField): Дискретное решение
        exact_u: Функция точки (..., 2) -> (...)
        exact_gradient: Функция точки (..., 2) -> (..., 2)
    """
    rule = rule or get_rule()
    mesh = nodal.mesh
    points = mesh.quadrature_points(rule)
    error = np.asarray(exact_u(points), dtype=float) - nodal.values_at(rule)
    gradient_error = np.asarray(exact_gradient(points), dtype=float) - nodal.cell_gradients()[:, None, :]
    return (luxemburg_norm(error, exponent, mesh, rule)
            + luxemburg_norm(np.linalg.norm(gradient_error, axis=-1), exponent, mesh, rule))


def flux(xi, p_val):
    """
    Монотонный поток |ξ|^{p-2} ξ; в нуле продолжается нулем.

    Args:
        xi: Вектор(ы) формы (..., 2)
        p_val: Показатель(и), скаляр или форма (...)

    Returns:
        np.ndarray: Форма (..., 2)
    """
    xi = np.asarray(xi, dtype=float)
    norm = np.hypot(xi[..., 0], xi[..., 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(norm > 0.0, norm ** (np.asarray(p_val, dtype=float) - 2.0), 0.0)
    return factor[..., None] * xi


def check_monotonicity(xi, eta, p_val):
    """(flux(ξ) - flux(η))·(ξ - η); для ξ != η строго положительно."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return np.sum((flux(xi, p_val) - flux(eta, p_val)) * (xi - eta), axis=-1)


def log_holder_quotient(exponent: VariableExponent, mesh: Mesh, threshold: float = None,
                        max_vertices: int = 1500, seed: int = 0) -> float:
    """
    Оценка константы log-Гёльдера sup |p(x) - p(y)| log(e + 1/|x - y|) по парам вершин.

    На больших сетках берется случайная подвыборка вершин.

    Args:
        threshold (float, optional): Порог, выше которого пишется предупреждение

    Returns:
        float: Оценка константы
    """
    points = mesh.vertices
    if points.shape[0] > max_vertices:
        rng = np.random.default_rng(seed)
        points = points[rng.choice(points.shape[0], size=max_vertices, replace=False)]
    p_values = exponent(points)
    distances = pdist(points)
    jumps = pdist(p_values[:, None])
    quotient = float(np.max(jumps * np.log(np.e + 1.0 / distances)))

    if threshold is not None and quotient > threshold:
        logger.warning(f"{exponent.name}: log-Holder quotient {quotient:.4g} exceeds threshold {threshold:.4g}")
    return quotient
