"""
Семейство точных решений на [-1, 1]² с параметром b >= 0 и f ≡ 0.

    p(x) = 1 + ((b/2)(x₁+x₂) + 1 + b)^{-1},  u(x) = (√2 e^{b+1}/b)(e^{(b/2)(x₁+x₂)} - 1)   при b != 0,
    p ≡ 2,                                   u(x) = (√2 e/2)(x₁+x₂)                       при b = 0.

Поток |∇u|^{p-2}∇u постоянен (по модулю равен e), поэтому div = 0.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from fem.exponent import VariableExponent
from utils.errors import InvalidArgumentError

DOMAIN = ((-1.0, 1.0), (-1.0, 1.0))


@dataclass(frozen=True)
class BenchmarkCase:
    """
    Тестовая задача с известным решением.

    Attributes:
        b (float): Параметр семейства
        exponent (VariableExponent): p(x) с границами p1 = 1 + 1/(1+2b), p2 = 2
        exact_u: Точное решение, функция точки (..., 2) -> (...)
        exact_gradient: Градиент точного решения (..., 2) -> (..., 2)
        f: Правая часть (≡ 0)
        g: След точного решения на границе (та же функция, что exact_u)
    """
    b: float
    exponent: VariableExponent
    exact_u: Callable[[np.ndarray], np.ndarray]
    exact_gradient: Callable[[np.ndarray], np.ndarray]
    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]

    @property
    def p1(self) -> float:
        return self.exponent.p1

    @property
    def p2(self) -> float:
        return self.exponent.p2


def _zero(x: np.ndarray) -> np.ndarray:
    return np.zeros(np.shape(x)[:-1])


def make_benchmark(b: float) -> BenchmarkCase:
    """
    Тестовая задача семейства для параметра b.

    Raises:
        InvalidArgumentError: b < 0 или b не конечно
    """
    b = float(b)
    if not np.isfinite(b) or b < 0.0:
        raise InvalidArgumentError(f"benchmark parameter b must be a finite non-negative number, got {b}")

    if b == 0.0:
        slope = np.sqrt(2.0) * np.e / 2.0

        def exact_u(x):
            x = np.asarray(x, dtype=float)
            return slope * (x[..., 0] + x[..., 1])

        def exact_gradient(x):
            x = np.asarray(x, dtype=float)
            return np.full(x.shape, slope)

        exponent = VariableExponent.constant(2.0)
        return BenchmarkCase(b, exponent, exact_u, exact_gradient, _zero, exact_u)

    amplitude = np.sqrt(2.0) * np.exp(b + 1.0) / b

    def p(x):
        x = np.asarray(x, dtype=float)
        return 1.0 + 1.0 / (0.5 * b * (x[..., 0] + x[..., 1]) + 1.0 + b)

    def exact_u(x):
        x = np.asarray(x, dtype=float)
        return amplitude * np.expm1(0.5 * b * (x[..., 0] + x[..., 1]))

    def exact_gradient(x):
        x = np.asarray(x, dtype=float)
        component = 0.5 * b * amplitude * np.exp(0.5 * b * (x[..., 0] + x[..., 1]))
        return np.stack([component, component], axis=-1)

    # минимум в углу x₁+x₂ = 2, максимум в углу x₁+x₂ = -2
    p1 = 1.0 + 1.0 / (1.0 + 2.0 * b)
    exponent = VariableExponent(p, p1, 2.0, name=f"benchmark p(x), b={b:g}")
    return BenchmarkCase(b, exponent, exact_u, exact_gradient, _zero, exact_u)
