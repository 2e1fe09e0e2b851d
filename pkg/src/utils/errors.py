"""Иерархия исключений солвера."""


class PxLaplaceError(Exception):
    """Базовое исключение всех ошибок пакета."""


class InvalidArgumentError(PxLaplaceError, ValueError):
    """Недопустимые параметры: m = 0, вырожденный интервал, q вне (1, 2], b < 0."""


class MeshError(PxLaplaceError, ValueError):
    """Вырожденная или несогласованная триангуляция, испорченный файл сетки."""


class FieldMismatchError(PxLaplaceError, ValueError):
    """Поля заданы на разных сетках или имеют неверную длину."""


class ExponentBoundsError(PxLaplaceError, ValueError):
    """Значение p(x) вышло за объявленные границы [p1, p2]."""


class NormError(PxLaplaceError, ArithmeticError):
    """Нечисловые значения поля при вычислении модуляра или нормы."""


class ConvergenceError(PxLaplaceError, RuntimeError):
    """
    Итерационный метод не сошелся.

    Attributes:
        residual (float): Последняя достигнутая невязка
        iterations (int): Число выполненных итераций
    """

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class RadialCaseError(PxLaplaceError, ValueError):
    """
    Нарушено условие P(r) != 2 при Z(r) = 0 или подынтегральное выражение не конечно.

    Attributes:
        radius (float | None): Радиус, на котором обнаружена проблема
    """

    def __init__(self, message: str, radius: float = None):
        if radius is not None:
            message = f"{message} at r={radius:.6g}"
        super().__init__(message)
        self.radius = radius


class StudyError(PxLaplaceError, RuntimeError):
    """Некорректные входные данные исследования сходимости."""
