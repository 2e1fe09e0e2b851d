"""
Метод декомпозиции-координации (расширенный лагранжиан) для дискретной
задачи p(x)-Лапласиана.

Итерация при известных {η_{n-1}, λ_n}:
    1. линейный шаг:  r ∫∇u_n·∇v = ∫ f v + ∫ (r η_{n-1} - λ_n)·∇v  (M U_n = F_n);
    2. шаг по ячейкам: |η|^{p̄-2} η + r η = λ_n + r ∇u_n, через скалярное уравнение
       b^{p̄-1} + r b = |λ_n + r ∇u_n|;
    3. множитель:     λ_{n+1} = λ_n + ρ (∇u_n - η_n).
При ρ = r = 1 получается схема с единичными параметрами.
"""

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from fem.assembly import DEFAULT_CG_TOL, DirichletSystem, assemble_load, assemble_rhs, assemble_stiffness
from fem.exponent import VariableExponent, flux, log_holder_quotient
from fem.mesh import CellVectorField, Mesh, NodalField, ScalarFunction
from fem.quadrature import QuadratureRule, get_rule
from utils.errors import FieldMismatchError, InvalidArgumentError
from utils.logger import AppLogger

logger = AppLogger("fem.dc_solver")

GOLDEN_RATIO = (1.0 + np.sqrt(5.0)) / 2.0
DEFAULT_SCALAR_TOL = 1e-13
_SCALAR_MAX_STEPS = 200
# Поля DCConfig, от которых зависит результат расчета
RESULT_FIELDS = ("rho", "r", "tol", "max_iter", "cg_tol", "scalar_tol")


@dataclass(frozen=True)
class DCConfig:
    """
    Параметры DC итерации.

    Attributes:
        rho (float): Шаг по множителю, 0 < rho < (1+√5)/2
        r (float): Параметр расширенного лагранжиана, r > 0
        tol (float): Порог остановки по ‖∇u_n - η_n‖
        max_iter (int): Предел итераций
        cg_tol (float): Относительная точность CG
        scalar_tol (float): Точность скалярного уравнения по ячейкам
        track_energy (bool): Считать J(u_n) на каждой итерации
        log_every (int): Период отладочного лога прогресса
        log_holder_threshold (float, optional): Порог диагностики log-Гёльдера для p(x);
            None отключает проверку
    """
    rho: float = 1.0
    r: float = 1.0
    tol: float = 1e-8
    max_iter: int = 5000
    cg_tol: float = DEFAULT_CG_TOL
    scalar_tol: float = DEFAULT_SCALAR_TOL
    track_energy: bool = True
    log_every: int = 100
    log_holder_threshold: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.rho < GOLDEN_RATIO:
            raise InvalidArgumentError(f"rho must lie in (0, (1+sqrt(5))/2), got {self.rho}")
        if not self.r > 0.0:
            raise InvalidArgumentError(f"r must be positive, got {self.r}")
        for name in ("tol", "cg_tol", "scalar_tol"):
            if not getattr(self, name) > 0.0:
                raise InvalidArgumentError(f"{name} must be positive, got {getattr(self, name)}")
        if isinstance(self.max_iter, bool) or not isinstance(self.max_iter, (int, np.integer)) or self.max_iter < 1:
            raise InvalidArgumentError(f"max_iter must be a positive integer, got {self.max_iter!r}")
        if self.log_holder_threshold is not None and not self.log_holder_threshold > 0.0:
            raise InvalidArgumentError(f"log_holder_threshold must be positive, got {self.log_holder_threshold}")
        if self.cg_tol >= self.tol:
            logger.warning(f"cg_tol={self.cg_tol:g} is not below the outer tolerance tol={self.tol:g}")

    @property
    def fingerprint(self) -> str:
        """Канонический JSON полей, влияющих на результат; ключ кэша исследования."""
        values = {name: float(getattr(self, name)) for name in RESULT_FIELDS}
        values["max_iter"] = int(self.max_iter)
        return json.dumps(values, sort_keys=True)


@dataclass(frozen=True)
class DCState:
    """
    Состояние после завершенной итерации n.

    Attributes:
        n (int): Номер итерации
        u (NodalField): u_n
        eta (CellVectorField): η_n
        lam (CellVectorField): λ_n, использованный на итерации n
        lam_next (CellVectorField): λ_{n+1} = λ_n + ρ (∇u_n - η_n)
        residual (float): ‖∇u_n - η_n‖ в L² по ячейкам
        converged (bool): Достигнут ли порог tol
    """
    n: int
    u: NodalField
    eta: CellVectorField
    lam: CellVectorField
    lam_next: CellVectorField
    residual: float
    converged: bool


@dataclass
class ConvergenceLog:
    """Журнал итераций: номер, невязка расщепления, значение J(u_n)."""
    iterations: List[int] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)
    energies: List[float] = field(default_factory=list)
    max_multiplier: List[float] = field(default_factory=list)

    def append(self, n: int, residual: float, energy: float, max_multiplier: float):
        self.iterations.append(n)
        self.residuals.append(residual)
        self.energies.append(energy)
        self.max_multiplier.append(max_multiplier)

    def __len__(self) -> int:
        return len(self.iterations)

    def to_csv(self, path) -> None:
        """Запись в CSV: iter,residual,J_value."""
        with Path(path).open("w", newline="", encoding="ascii") as handle:
            writer = csv.writer(handle)
            writer.writerow(["iter", "residual", "J_value"])
            for n, residual, energy in zip(self.iterations, self.residuals, self.energies):
                writer.writerow([n, repr(float(residual)), repr(float(energy))])


@dataclass(frozen=True)
class DCResult:
    state: DCState
    log: ConvergenceLog
    seconds: float

    @property
    def converged(self) -> bool:
        return self.state.converged


def scalar_solve(q: float, c: float, scalar_tol: float = DEFAULT_SCALAR_TOL, r: float = 1.0) -> float:
    """
    Единственный корень b >= 0 уравнения b^{q-1} + r b = c.

    Args:
        q (float): Показатель из (1, 2]
        c (float): Правая часть, c >= 0
        scalar_tol (float): Допуск |b^{q-1} + r b - c| <= scalar_tol·max(1, c)
        r (float): Коэффициент при b (по умолчанию 1)

    Raises:
        InvalidArgumentError: q вне (1, 2] или c < 0
    """
    if not 1.0 < q <= 2.0:
        raise InvalidArgumentError(f"q must lie in (1, 2], got {q}")
    if not c >= 0.0:
        raise InvalidArgumentError(f"c must be non-negative, got {c}")
    return float(solve_scalar_equation(np.array([q]), np.array([c]), scalar_tol, r)[0])


def solve_scalar_equation(q: np.ndarray, c: np.ndarray, scalar_tol: float = DEFAULT_SCALAR_TOL,
                          r: float = 1.0) -> np.ndarray:
    """
    Векторное решение b^{q-1} + r b = c для всех ячеек сразу.

    Метод Ньютона с защитной вилкой [0, c/r]: g(c/r) >= 0, g(0) = -c <= 0.
    Если шаг Ньютона выходит из вилки, делается шаг бисекции.
    Начальное приближение - середина вилки.
    """
    q = np.asarray(q, dtype=float)
    c = np.asarray(c, dtype=float)
    lo = np.zeros_like(c)
    hi = c / r
    b = 0.5 * hi
    target = scalar_tol * np.maximum(1.0, c)
    active = c > 0.0

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(_SCALAR_MAX_STEPS):
            if not np.any(active):
                break
            g = b ** (q - 1.0) + r * b - c
            done = np.abs(g) <= target
            active &= ~done
            if not np.any(active):
                break

            above = active & (g > 0.0)
            below = active & (g < 0.0)
            hi = np.where(above, b, hi)
            lo = np.where(below, b, lo)

            slope = (q - 1.0) * b ** (q - 2.0) + r
            newton = b - g / slope
            inside = (newton > lo) & (newton < hi) & np.isfinite(newton)
            step = np.where(inside, newton, 0.5 * (lo + hi))
            b = np.where(active, step, b)

            # вилка сжалась до машинной точности
            collapsed = active & (hi - lo <= 4.0 * np.finfo(float).eps * np.maximum(hi, 1e-300))
            active &= ~collapsed

    return np.where(c > 0.0, b, 0.0)


def eta_update(lambda_cur: CellVectorField, grad_u: CellVectorField, exponent: VariableExponent,
               mesh: Mesh, r: float = 1.0, scalar_tol: float = DEFAULT_SCALAR_TOL) -> CellVectorField:
    """
    Шаг по ячейкам: η_κ = (λ_κ + r∇_κu) / (b^{p̄_κ-2} + r), где
    b^{p̄_κ-1} + r b = |λ_κ + r∇_κu|. При нулевой правой части η_κ = 0.
    Получается |η_κ| = b.
    """
    if lambda_cur.mesh is not mesh or grad_u.mesh is not mesh:
        raise FieldMismatchError("lambda and grad_u must live on the given mesh")
    q = exponent.at_barycenters(mesh)
    combined = lambda_cur.values + r * grad_u.values
    c = np.hypot(combined[:, 0], combined[:, 1])
    b = solve_scalar_equation(q, c, scalar_tol, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        denominator = b ** (q - 2.0) + r
        eta = np.where((c > 0.0)[:, None], combined / denominator[:, None], 0.0)
    return CellVectorField(mesh, eta)


def discrete_energy(u: NodalField, f: Optional[ScalarFunction], exponent: VariableExponent,
                    rule: QuadratureRule = None, load: np.ndarray = None) -> float:
    """
    Дискретный функционал J(u) = ∫ |∇u|^{p(x)}/p(x) dx - ∫ f u dx.

    Args:
        load (np.ndarray, optional): Собранный вектор ∫ f φ_j, тогда ∫ f u = load·U
    """
    rule = rule or get_rule()
    mesh = u.mesh
    p_values = exponent.at_quadrature(mesh, rule)
    gradient_norm = np.linalg.norm(u.cell_gradients(), axis=1)[:, None]
    energy = float(np.sum(mesh.quadrature_weights(rule) * gradient_norm ** p_values / p_values))
    if load is None:
        load = assemble_load(f, mesh, rule)
    return energy - float(load @ u.coefficients)


def fem_residual(u: NodalField, f: Optional[ScalarFunction], exponent: VariableExponent,
                 rule: QuadratureRule = None, exponent_sampling: str = "quadrature") -> float:
    """
    Невязка слабой формы max_j |∫ |∇u|^{p-2}∇u·∇φ_j - ∫ f φ_j| по внутренним вершинам.

    Args:
        exponent_sampling (str): "quadrature" - p(x) в узлах квадратуры
            (дискретная задача как есть); "barycenter" - p̄_κ в центре ячейки
            (задача, которую решает расщепление)
    """
    rule = rule or get_rule()
    mesh = u.mesh
    gradients = u.cell_gradients()                                  # (nt, 2)
    if exponent_sampling == "quadrature":
        p_values = exponent.at_quadrature(mesh, rule)               # (nt, nq)
        fluxes = flux(np.broadcast_to(gradients[:, None, :], p_values.shape + (2,)), p_values)
        cell_flux = np.einsum("kq,kqd->kd", mesh.quadrature_weights(rule), fluxes)
    elif exponent_sampling == "barycenter":
        cell_flux = mesh.areas[:, None] * flux(gradients, exponent.at_barycenters(mesh))
    else:
        raise InvalidArgumentError(f"unknown exponent sampling {exponent_sampling!r}")

    local = np.einsum("kd,kid->ki", cell_flux, mesh.basis_gradients)
    defect = np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)
    defect -= assemble_load(f, mesh, rule)
    interior = ~mesh.boundary_vertex_flags
    if not np.any(interior):
        return 0.0
    return float(np.max(np.abs(defect[interior])))


class DCSolver:
    """
    Решатель одной задачи на одной сетке.

    Матрица жесткости, вектор нагрузки и p̄_κ вычисляются один раз при
    создании; разные экземпляры независимы и могут работать параллельно.
    """

    def __init__(self, mesh: Mesh, exponent: VariableExponent, f: Optional[ScalarFunction] = None,
                 config: DCConfig = None, rule: QuadratureRule = None):
        exponent.require_dc_range()
        self.mesh = mesh
        self.exponent = exponent
        self.f = f
        self.config = config or DCConfig()
        self.rule = rule or get_rule()
        self.logger = logger

        self.system = DirichletSystem(assemble_stiffness(mesh), mesh.boundary_vertex_flags)
        self.load = assemble_load(f, mesh, self.rule)
        # проверка границ p на всех используемых точках
        exponent.at_barycenters(mesh)
        exponent.at_quadrature(mesh, self.rule)
        if self.config.log_holder_threshold is not None:
            log_holder_quotient(exponent, mesh, self.config.log_holder_threshold)

    def step(self, u_prev: np.ndarray, eta_prev: CellVectorField, lam: CellVectorField,
             boundary_values: np.ndarray, n: int) -> DCState:
        """Одна итерация: линейный шаг, шаг по ячейкам, обновление множителя."""
        cfg = self.config
        rhs = assemble_rhs(self.f, eta_prev, lam, self.mesh, self.rule, r=cfg.r, load=self.load)
        coefficients = self.system.solve(rhs, boundary_values, tol=cfg.cg_tol, x0=u_prev)
        u = NodalField(self.mesh, coefficients)
        grad_u = CellVectorField.gradient_of(u)
        eta = eta_update(lam, grad_u, self.exponent, self.mesh, r=cfg.r, scalar_tol=cfg.scalar_tol)

        splitting = grad_u.values - eta.values
        residual = CellVectorField(self.mesh, splitting).l2_norm()
        lam_next = CellVectorField(self.mesh, lam.values + cfg.rho * splitting)
        return DCState(n, u, eta, lam, lam_next, residual, residual <= cfg.tol)

    def run(self, boundary_values: np.ndarray, eta0: CellVectorField = None,
            lambda1: CellVectorField = None) -> DCResult:
        """
        Итерации до ‖∇u_n - η_n‖ <= tol или n = max_iter.

        Args:
            boundary_values (np.ndarray): Узловой вектор g^h (nv,); используются граничные значения
            eta0, lambda1: Начальные η_0, λ_1 (по умолчанию нули)

        Returns:
            DCResult: Конечное состояние, журнал и время; несошедшийся расчет
                      помечается converged=False без исключения
        """
        cfg = self.config
        mesh = self.mesh
        boundary_values = np.asarray(boundary_values, dtype=float)
        if boundary_values.shape != (mesh.n_vertices,):
            raise FieldMismatchError(f"boundary values must have length {mesh.n_vertices}")

        eta = eta0 if eta0 is not None else CellVectorField.zeros(mesh)
        lam = lambda1 if lambda1 is not None else CellVectorField.zeros(mesh)
        u_prev = boundary_values.copy()
        log = ConvergenceLog()
        started = time.perf_counter()
        self.logger.info(
            f"DC run: {mesh.n_vertices} vertices, {self.exponent.name}, "
            f"rho={cfg.rho:g}, r={cfg.r:g}, tol={cfg.tol:g}, max_iter={cfg.max_iter}"
        )

        state = None
        for n in range(1, cfg.max_iter + 1):
            state = self.step(u_prev, eta, lam, boundary_values, n)
            energy = discrete_energy(state.u, self.f, self.exponent, self.rule, self.load) \
                if cfg.track_energy else float("nan")
            log.append(n, state.residual, energy, float(state.lam_next.norms().max()))

            if n % cfg.log_every == 0:
                self.logger.debug(f"DC iteration {n}: residual={state.residual:.3e}, J={energy:.10g}")
            if state.converged:
                break
            u_prev, eta, lam = state.u.coefficients, state.eta, state.lam_next

        seconds = time.perf_counter() - started
        if state.converged:
            self.logger.info(f"DC converged in {state.n} iterations, residual={state.residual:.3e}, {seconds:.2f}s")
        else:
            self.logger.warning(
                f"DC stopped at max_iter={cfg.max_iter} without reaching tol={cfg.tol:g} "
                f"(residual={state.residual:.3e})"
            )
        return DCResult(state, log, seconds)


def dc_iterate(f: Optional[ScalarFunction], exponent: VariableExponent, boundary_field: NodalField,
               mesh: Mesh, config: DCConfig = None, rule: QuadratureRule = None) -> DCResult:
    """
    Полный прогон DC метода с нулевой инициализацией η_0 = 0, λ_1 = 0.

    Args:
        f: Правая часть (None означает f ≡ 0)
        exponent (VariableExponent): Показатель с 1 < p1 <= p2 <= 2
        boundary_field (NodalField): g^h; значения во внутренних вершинах игнорируются
        mesh (Mesh): Сетка
        config (DCConfig, optional): Параметры

    Raises:
        ConvergenceError: внутренний CG не сошелся
    """
    if boundary_field.mesh is not mesh:
        raise FieldMismatchError("boundary field must live on the given mesh")
    solver = DCSolver(mesh, exponent, f, config, rule)
    return solver.run(boundary_field.coefficients)
