"""
Радиальный оракул на единичном круге: f(x) = F(r), p(x) = P(r), u = g на границе.

    Z(r)  = -(1/r) ∫₀^r t F(t) dt,        Z(0) = 0
    U'(r) = Z |Z|^{(2-P)/(P-1)}           (так что |U'|^{P-1} = |Z|)
    U(r)  = g - ∫_r^1 U'(t) dt
    U''   = |Z|^a Z'/(P-1) - |Z|^a Z log|Z| P'/(P-1)²,  a = (2-P)/(P-1)

Модуль служит только для проверки формул; МКЭ на круге не решается.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad

from utils.errors import InvalidArgumentError, RadialCaseError
from utils.logger import AppLogger

logger = AppLogger("benchmarks.radial")

RadialFunction = Callable[[float], float]

# Точность вложенных квадратур
INNER_EPSABS = 1e-15
INNER_EPSREL = 1e-13
QUAD_LIMIT = 200
# Радиусы для проверки условия P(r) != 2 при Z(r) = 0
CONDITION_SAMPLES = 64
_ZERO = 1e-14


@dataclass(frozen=True)
class RadialCase:
    """
    Радиальная задача.

    Attributes:
        P: Показатель P(r) на [0, 1]
        F: Правая часть F(r) на [0, 1]
        g (float): Граничное значение U(1)
        dP: Производная P'(r); если не задана, берется центральная разность
        samples (int): Число радиусов для проверки корректности при создании

    Raises:
        RadialCaseError: Z ≡ 0 на всех проверочных радиусах или P(r) = 2 там, где Z(r) = 0
    """
    P: RadialFunction
    F: RadialFunction
    g: float = 0.0
    dP: Optional[RadialFunction] = None
    samples: int = CONDITION_SAMPLES
    name: str = field(default="radial case")

    def __post_init__(self):
        radii = np.linspace(0.0, 1.0, self.samples + 1)[1:]
        z_values = np.array([radial_Z(self, r) for r in radii])
        if np.all(np.abs(z_values) <= _ZERO):
            raise RadialCaseError(f"{self.name}: Z vanishes identically (trivial source F)")
        for r, z in zip(radii, z_values):
            if abs(z) <= _ZERO and abs(self.P(r) - 2.0) <= _ZERO:
                raise RadialCaseError(f"{self.name}: P(r) = 2 where (1/r)∫tF vanishes", radius=r)

    def exponent_derivative(self, r: float) -> float:
        if self.dP is not None:
            return float(self.dP(r))
        step = 1e-6 * max(1.0, abs(r))
        return (self.P(r + step) - self.P(r - step)) / (2.0 * step)


def _check(value: float, what: str, r: float) -> float:
    if not np.isfinite(value):
        raise RadialCaseError(f"non-finite {what}", radius=r)
    return float(value)


def radial_Z(case: RadialCase, r: float) -> float:
    """Z(r) = -(1/r) ∫₀^r t F(t) dt; Z(0) = 0."""
    if r == 0.0:
        return 0.0
    integral, _ = quad(lambda t: t * case.F(t), 0.0, r,
                       epsabs=INNER_EPSABS, epsrel=INNER_EPSREL, limit=QUAD_LIMIT)
    return -integral / r


def radial_Z_prime(case: RadialCase, r: float) -> float:
    """Z'(r) = -F(r) + (1/r²) ∫₀^r t F(t) dt = -F(r) - Z(r)/r; Z'(0) = -F(0)/2."""
    if r == 0.0:
        return -0.5 * case.F(0.0)
    return -case.F(r) - radial_Z(case, r) / r


def radial_U_prime(case: RadialCase, r: float) -> float:
    z = radial_Z(case, r)
    if z == 0.0:
        return 0.0
    return _check(np.sign(z) * abs(z) ** (1.0 / (case.P(r) - 1.0)), "U'", r)


def radial_U(case: RadialCase, r: float) -> float:
    """
    U(r) = g - ∫_r^1 U'(t) dt; U(1) = g точно.

    Raises:
        RadialCaseError: r вне [0, 1] или подынтегральное выражение не конечно
    """
    if not 0.0 <= r <= 1.0:
        raise InvalidArgumentError(f"radius must lie in [0, 1], got {r}")
    if r == 1.0:
        return float(case.g)
    integral, _ = quad(lambda t: radial_U_prime(case, t), r, 1.0,
                       epsabs=INNER_EPSABS, epsrel=INNER_EPSREL, limit=QUAD_LIMIT)
    return _check(case.g - integral, "U", r)


def _second_derivative_factor(case: RadialCase, r: float, z: float):
    """Возвращает (|Z|^a, A), где U'' = |Z|^a · A."""
    P = case.P(r)
    exponent = (2.0 - P) / (P - 1.0)
    z_prime = radial_Z_prime(case, r)
    bracket = z_prime / (P - 1.0)
    if z != 0.0:
        bracket -= z * np.log(abs(z)) * case.exponent_derivative(r) / (P - 1.0) ** 2
    return abs(z) ** exponent, bracket, P


def radial_U_second(case: RadialCase, r: float) -> float:
    """
    U''(r) по явной формуле.

    При Z(r) = 0 и P(r) < 2 используется непрерывное продолжение нулем
    (t log t -> 0).

    Raises:
        RadialCaseError: Z(r) = 0 и P(r) = 2
    """
    z = radial_Z(case, r)
    if z == 0.0:
        if abs(case.P(r) - 2.0) <= _ZERO:
            raise RadialCaseError("U'' undefined: Z = 0 with P = 2", radius=r)
        return 0.0
    weight, bracket, _ = _second_derivative_factor(case, r, z)
    return _check(weight * bracket, "U''", r)


def regularity_integrand(case: RadialCase, r: float) -> float:
    """
    (U'')² |U'|^{P-2} r + |U'|^P / r.

    С учетом |U'| = |Z|^{1/(P-1)}: первое слагаемое равно |Z|^a A² r,
    второе |Z|^{P/(P-1)} / r; обе формы ограничены при r -> 0.
    """
    z = radial_Z(case, r)
    if z == 0.0:
        return 0.0
    weight, bracket, P = _second_derivative_factor(case, r, z)
    value = weight * bracket ** 2 * r + abs(z) ** (P / (P - 1.0)) / r
    return _check(value, "regularity integrand", r)


def regularity_integral(case: RadialCase) -> float:
    """
    2π ∫₀¹ [(U'')² |U'|^{P-2} r + |U'|^P / r] dr.

    Квадратура Гаусса-Кронрода не вычисляет концы отрезка, поэтому
    особенность r = 0 обрабатывается как предел.
    """
    integral, error = quad(lambda r: regularity_integrand(case, r), 0.0, 1.0,
                           epsabs=1e-13, epsrel=1e-11, limit=QUAD_LIMIT)
    logger.debug(f"{case.name}: regularity integral {2 * np.pi * integral:.12g} (quad error {error:.1e})")
    return _check(2.0 * np.pi * integral, "regularity integral", 1.0)


def parse_radial_function(text: str):
    """
    Разбор описания радиальной функции вида "имя:параметры".

    Поддерживаются:
        const:c            c
        linear:a,b         a + b r
        poly:c0,c1,...     c0 + c1 r + c2 r² + ...
        sin:a,w            a sin(w r)

    Returns:
        tuple: (функция, производная)
    """
    name, _, params = str(text).partition(":")
    name = name.strip().lower()
    try:
        values = [float(v) for v in params.split(",") if v.strip()]
    except ValueError as e:
        raise InvalidArgumentError(f"bad parameters in radial function {text!r}") from e

    expected = {"const": 1, "linear": 2, "sin": 2}
    if name in expected and len(values) != expected[name]:
        raise InvalidArgumentError(f"{name} expects {expected[name]} parameter(s), got {len(values)}")

    if name in ("const", "linear", "poly"):
        if not values:
            raise InvalidArgumentError(f"{text!r}: polynomial needs coefficients")
        polynomial = Polynomial(values)
        derivative = polynomial.deriv()
        return (lambda r: float(polynomial(r))), (lambda r: float(derivative(r)))
    if name == "sin":
        a, w = values
        return (lambda r: a * np.sin(w * r)), (lambda r: a * w * np.cos(w * r))
    raise InvalidArgumentError(f"unknown radial function family {name!r}")
