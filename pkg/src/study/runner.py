"""
Исследование сходимости на семействе точных решений: таблица ошибок
по (b, N^{1/2}) и оценка порядков.
"""

import sqlite3
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from benchmarks.benchmark import DOMAIN, make_benchmark
from fem.dc_solver import DCConfig, DCSolver
from fem.exponent import w1p_error_norm
from fem.mesh import build_uniform_rect_mesh, interpolate
from fem.quadrature import DEFAULT_QUAD_DEGREE, get_rule
from study.fitting import MIN_FIT_POINTS, RateFit, fit_rate
from utils.analytics import StudyAnalytics
from utils.config import parse_bool, parse_float_list, parse_int_list
from utils.errors import InvalidArgumentError
from utils.logger import AppLogger
from utils.monitor import PerformanceMonitor

logger = AppLogger("study.runner")

# Оси таблицы ошибок
DEFAULT_B_VALUES = (0.1, 0.5, 1.0, 2.0, 2.5, 3.0)
DEFAULT_GRID_SIDES = (20, 40, 60, 80, 100, 120, 140)
# Сторона квадрата [-1, 1]²: масштаб h = 2 / N^{1/2} в подгонке C
DOMAIN_SIDE = DOMAIN[0][1] - DOMAIN[0][0]


@dataclass(frozen=True)
class StudyConfig:
    """
    Параметры исследования.

    Attributes:
        b_values: Значения параметра семейства (>= 0)
        grid_sides: Значения N^{1/2}, строго возрастают; сетка имеет m = N^{1/2} - 1 отрезков
        dc (DCConfig): Параметры DC итерации
        quad_degree (int): Ключ квадратуры (5 или 12)
        out_dir (str): Директория вывода
        plot (bool): Строить график
        seed (int): Зерно для случайных проверок
        length_scale (float): L в модели подгонки C (L/N^{1/2})^α
        fit_min_grid (int): Исключать из подгонки сетки с N^{1/2} меньше этого
        workers (int): Число потоков для независимых ячеек
        dump_solutions (bool): Сохранять коэффициенты решений в кэш
    """
    b_values: Sequence[float] = DEFAULT_B_VALUES
    grid_sides: Sequence[int] = DEFAULT_GRID_SIDES
    dc: DCConfig = field(default_factory=DCConfig)
    quad_degree: int = DEFAULT_QUAD_DEGREE
    out_dir: str = "results"
    plot: bool = False
    seed: int = 0
    length_scale: float = DOMAIN_SIDE
    fit_min_grid: int = 0
    workers: int = 1
    dump_solutions: bool = False

    def __post_init__(self):
        b_values = tuple(float(b) for b in self.b_values)
        grid_sides = tuple(int(s) for s in self.grid_sides)
        if not b_values or not grid_sides:
            raise InvalidArgumentError("b_values and grid_sides must be non-empty")
        if any(not np.isfinite(b) or b < 0 for b in b_values):
            raise InvalidArgumentError(f"b values must be non-negative, got {b_values}")
        if any(s < 2 for s in grid_sides) or any(a >= b for a, b in zip(grid_sides, grid_sides[1:])):
            raise InvalidArgumentError(f"grid sides must be >= 2 and strictly increasing, got {grid_sides}")
        if self.workers < 1:
            raise InvalidArgumentError(f"workers must be >= 1, got {self.workers}")
        if not self.length_scale > 0:
            raise InvalidArgumentError(f"length_scale must be positive, got {self.length_scale}")
        get_rule(self.quad_degree)
        object.__setattr__(self, "b_values", b_values)
        object.__setattr__(self, "grid_sides", grid_sides)

    @classmethod
    def from_settings(cls, values: dict, **overrides) -> "StudyConfig":
        """
        Конфигурация из словаря файла --config и переопределений CLI.

        Args:
            values (dict): {КЛЮЧ: строка} из utils.config.load_study_file
            overrides: Значения из командной строки (None пропускается)
        """
        merged = {k.upper(): v for k, v in values.items()}
        merged.update({k.upper(): v for k, v in overrides.items() if v is not None})

        dc_fields = {}
        for key, name, kind in (("TOL", "tol", float), ("MAX_ITER", "max_iter", int), ("RHO", "rho", float),
                                ("R", "r", float), ("CG_TOL", "cg_tol", float),
                                ("SCALAR_TOL", "scalar_tol", float),
                                ("LOG_HOLDER_THRESHOLD", "log_holder_threshold", float)):
            if key in merged:
                dc_fields[name] = _convert(merged[key], kind, key)

        kwargs = {"dc": DCConfig(**dc_fields)}
        if "B_VALUES" in merged:
            kwargs["b_values"] = parse_float_list(merged["B_VALUES"])
        if "GRIDS" in merged:
            kwargs["grid_sides"] = parse_int_list(merged["GRIDS"])
        for key, name, kind in (("QUAD_DEGREE", "quad_degree", int), ("OUT", "out_dir", str),
                                ("SEED", "seed", int), ("LENGTH_SCALE", "length_scale", float),
                                ("FIT_MIN_GRID", "fit_min_grid", int), ("WORKERS", "workers", int)):
            if key in merged:
                kwargs[name] = _convert(merged[key], kind, key)
        for key, name in (("PLOT", "plot"), ("DUMP_SOLUTIONS", "dump_solutions")):
            if key in merged:
                kwargs[name] = parse_bool(merged[key])
        return cls(**kwargs)


def _convert(value, kind, key):
    try:
        return kind(float(value)) if kind is int else kind(value)
    except (TypeError, ValueError) as e:
        raise InvalidArgumentError(f"bad value for {key}: {value!r}") from e


@dataclass(frozen=True)
class StudyRecord:
    """
    Одна ячейка таблицы ошибок.

    Attributes:
        b (float): Параметр семейства
        grid_side (int): N^{1/2}
        dof (int): N = (N^{1/2})², все вершины сетки
        error (float): ‖u - u_n^h‖_{1,p(·)} (NaN при сбое)
        iters (int): Число DC итераций
        seconds (float): Время расчета
        converged (bool): Достигнут ли порог DC
        failed (bool): Расчет завершился исключением
        message (str): Текст ошибки при сбое
    """
    b: float
    grid_side: int
    dof: int
    error: float
    iters: int
    seconds: float
    converged: bool = True
    failed: bool = False
    message: str = ""


@dataclass
class CellSolution:
    record: StudyRecord
    coefficients: Optional[np.ndarray] = None


def solve_cell(b: float, grid_side: int, dc_config: DCConfig, quad_degree: int = DEFAULT_QUAD_DEGREE) -> CellSolution:
    """
    Расчет одной ячейки: сетка с m = N^{1/2} - 1, g^h = π_h u, DC итерация, норма ошибки.
    """
    rule = get_rule(quad_degree)
    case = make_benchmark(b)
    mesh = build_uniform_rect_mesh(DOMAIN[0], DOMAIN[1], grid_side - 1)
    boundary = interpolate(case.g, mesh)

    solver = DCSolver(mesh, case.exponent, case.f, dc_config, rule)
    result = solver.run(boundary.coefficients)
    state = result.state
    error = w1p_error_norm(state.u, case.exact_u, case.exact_gradient, case.exponent, rule)
    record = StudyRecord(b, grid_side, mesh.n_vertices, error, state.n, result.seconds, state.converged)
    return CellSolution(record, np.array(state.u.coefficients))


def run_study(config: StudyConfig, cache=None, monitor: PerformanceMonitor = None,
              analytics: StudyAnalytics = None) -> List[StudyRecord]:
    """
    Таблица ошибок по всем (b, N^{1/2}).

    Сбой отдельной ячейки логируется, запись помечается failed=True и
    исследование продолжается. Результат отсортирован по (b, N^{1/2}).

    Args:
        config (StudyConfig): Параметры
        cache (StudyCache, optional): Кэш результатов; найденные ячейки не пересчитываются
        monitor (PerformanceMonitor, optional): Мониторинг ресурсов после каждой ячейки
        analytics (StudyAnalytics, optional): Сбор статистики
    """
    cells = [(b, side) for b in config.b_values for side in config.grid_sides]
    solver_key = config.dc.fingerprint
    logger.info(f"Исследование: {len(config.b_values)} значений b x {len(config.grid_sides)} сеток, "
                f"tol={config.dc.tol:g}, квадратура {config.quad_degree}")

    def lookup(b, side):
        try:
            return cache.get_record(b, side, solver_key, config.quad_degree)
        except sqlite3.Error as e:
            logger.warning(f"b={b:g}, N^1/2={side}: кэш недоступен ({e}), ячейка пересчитывается")
            return None

    def run_cell(cell):
        b, side = cell
        cached = lookup(b, side) if cache is not None else None
        if cached is not None:
            logger.info(f"b={b:g}, N^1/2={side}: результат взят из кэша")
            return StudyRecord(b, side, side * side, cached["error"], cached["iters"],
                               cached["seconds"], cached["converged"])

        started = time.perf_counter()
        try:
            solution = solve_cell(b, side, config.dc, config.quad_degree)
        except Exception as e:
            # сбой ячейки не прерывает исследование
            logger.error(f"b={b:g}, N^1/2={side}: сбой решателя: {e}", exc_info=True)
            return StudyRecord(b, side, side * side, float("nan"), 0, time.perf_counter() - started,
                               converged=False, failed=True, message=f"{type(e).__name__}: {e}")

        record = solution.record
        logger.info(f"b={b:g}, N^1/2={side}: ошибка={record.error:.4e}, итераций={record.iters}, "
                    f"{record.seconds:.1f}s{'' if record.converged else ' (не сошлось)'}")
        if cache is not None:
            coefficients = solution.coefficients if config.dump_solutions else None
            try:
                cache.save_record(record, solver_key, config.quad_degree, coefficients)
            except sqlite3.Error as e:
                logger.error(f"b={b:g}, N^1/2={side}: не удалось сохранить в кэш: {e}")
        if monitor is not None:
            monitor.log_metrics(logger)
        return record

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(run_cell, cells))
    else:
        records = [run_cell(cell) for cell in cells]

    records.sort(key=lambda r: (r.b, r.grid_side))
    if analytics is not None:
        for record in records:
            analytics.track_record(record)
    return records


def fit_all(records: Sequence[StudyRecord], config: StudyConfig) -> List[RateFit]:
    """
    Подгонка порядка для каждого b, где есть хотя бы три пригодные точки.

    Значения b = 0 (ошибка на уровне округления) и b с ошибками пропускаются.
    """
    fits = []
    for b in sorted({r.b for r in records}):
        rows = [r for r in records if r.b == b]
        usable = [r for r in rows if not r.failed and r.grid_side >= config.fit_min_grid and r.error > 0]
        if b == 0.0 or len(usable) < MIN_FIT_POINTS:
            logger.debug(f"b={b:g}: порядок не оценивается ({len(usable)} пригодных точек)")
            continue
        fit = fit_rate(usable, config.length_scale, config.fit_min_grid, p1=make_benchmark(b).p1)
        logger.info(f"b={b:g}: alpha={fit.alpha:.4f}, C={fit.C:.4f}, p1={fit.p1:.3f}, ssr={fit.ssr:.2e}")
        if not fit.satisfies_rate_floor():
            logger.warning(f"b={b:g}: измеренный порядок {fit.alpha:.3f} ниже p1/2={fit.p1 / 2:.3f}")
        fits.append(fit)
    return fits
