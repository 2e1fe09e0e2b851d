"""Оценка порядка сходимости методом наименьших квадратов."""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from utils.errors import StudyError

MIN_FIT_POINTS = 3


@dataclass(frozen=True)
class RateFit:
    """
    Модель ‖e‖ ≈ C (L / N^{1/2})^α.

    Attributes:
        b (float): Параметр семейства
        alpha (float): Порядок α
        C (float): Константа
        ssr (float): Сумма квадратов невязок в логарифмическом масштабе
        points (int): Число точек
        length_scale (float): L; при L = 1 модель ‖e‖ ≈ C (N^{1/2})^{-α}
        p1 (float, optional): Нижняя граница показателя задачи
    """
    b: float
    alpha: float
    C: float
    ssr: float
    points: int
    length_scale: float = 1.0
    p1: Optional[float] = None

    def satisfies_rate_floor(self, slack: float = 0.05) -> bool:
        """Порядок не ниже базового p1/2 (с запасом slack)."""
        if self.p1 is None:
            raise StudyError("p1 is unknown for this fit")
        return self.alpha >= self.p1 / 2.0 - slack


def fit_rate(records: Sequence, length_scale: float = 1.0, min_grid: int = 0,
             p1: float = None) -> RateFit:
    """
    Прямая наименьших квадратов на (log N^{1/2}, log ‖e‖): наклон -α.

    Args:
        records: Записи одного значения b (поля b, grid_side, error)
        length_scale (float): L в модели C (L / N^{1/2})^α
        min_grid (int): Исключить сетки с N^{1/2} < min_grid
        p1 (float, optional): Нижняя граница показателя, сохраняется в результате

    Raises:
        StudyError: меньше трех точек, нулевая ошибка или разные b
    """
    usable = [r for r in records if r.grid_side >= min_grid and not getattr(r, "failed", False)]
    if len(usable) < MIN_FIT_POINTS:
        raise StudyError(f"rate fit needs at least {MIN_FIT_POINTS} points, got {len(usable)}")
    b_values = {r.b for r in usable}
    if len(b_values) != 1:
        raise StudyError(f"rate fit expects records of a single b, got {sorted(b_values)}")
    errors = np.array([r.error for r in usable], dtype=float)
    if np.any(errors <= 0.0) or not np.all(np.isfinite(errors)):
        raise StudyError("rate fit needs strictly positive finite errors (log undefined)")

    x = np.log(np.array([r.grid_side for r in usable], dtype=float))
    y = np.log(errors)
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    alpha = -slope
    # e = exp(intercept) s^{-α} = C (L/s)^α  =>  C = exp(intercept) / L^α
    C = float(np.exp(intercept) / length_scale ** alpha)
    return RateFit(b_values.pop(), float(alpha), C, float(residuals @ residuals),
                   len(usable), length_scale, p1)
