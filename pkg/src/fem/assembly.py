"""
Матрица жесткости P1, правая часть линейного шага и решение задачи Дирихле.

Матрица M не зависит ни от номера итерации, ни от p(x): собирается
один раз на сетку и переиспользуется на всех итерациях DC метода.
"""

from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, cg

from fem.mesh import CellVectorField, Mesh, ScalarFunction
from fem.quadrature import QuadratureRule, get_rule
from utils.errors import ConvergenceError, FieldMismatchError, InvalidArgumentError
from utils.logger import AppLogger

logger = AppLogger("fem.assembly")

DEFAULT_CG_TOL = 1e-10


def _scatter(mesh: Mesh, local: np.ndarray) -> np.ndarray:
    # фиксированный порядок накопления по ячейкам
    return np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)


def assemble_stiffness(mesh: Mesh) -> sparse.csr_matrix:
    """
    Матрица M_ij = ∫ ∇φ_i·∇φ_j dx.

    Градиенты постоянны на ячейке, поэтому элементы точны до округления.
    Суммы по строкам равны нулю (константы лежат в ядре до учета
    граничных условий).

    Returns:
        scipy.sparse.csr_matrix: Симметричная матрица (nv, nv)
    """
    grads = mesh.basis_gradients                               # (nt, 3, 2)
    local = mesh.areas[:, None, None] * np.einsum("kid,kjd->kij", grads, grads)
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    matrix = sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(mesh.n_vertices,) * 2).tocsr()
    matrix.sort_indices()
    logger.debug(f"Assembled stiffness matrix: n={mesh.n_vertices}, nnz={matrix.nnz}")
    return matrix


def assemble_load(f: Optional[ScalarFunction], mesh: Mesh, rule: QuadratureRule = None) -> np.ndarray:
    """
    Вектор ∫ f φ_j dx (значения φ_j в узлах - барицентрические координаты).

    Args:
        f: Правая часть; None означает f ≡ 0
    """
    if f is None:
        return np.zeros(mesh.n_vertices)
    rule = rule or get_rule()
    f_values = np.broadcast_to(np.asarray(f(mesh.quadrature_points(rule)), dtype=float),
                               (mesh.n_triangles, rule.size))
    weighted = f_values * mesh.quadrature_weights(rule)        # (nt, nq)
    return _scatter(mesh, weighted @ rule.points)              # (nt, 3)


def assemble_rhs(f: Optional[ScalarFunction], eta_prev: CellVectorField, lambda_cur: CellVectorField,
                 mesh: Mesh, rule: QuadratureRule = None, r: float = 1.0,
                 load: np.ndarray = None) -> np.ndarray:
    """
    Правая часть линейного шага M U_n = F_n.

    F_{n,j} = (1/r) ∫ f φ_j + ∫ (η_{n-1} - λ_n / r)·∇φ_j; при r = 1 это
    ∫ f φ_j + ∫ (η_{n-1} - λ_n)·∇φ_j. Второе слагаемое точно.

    Args:
        load (np.ndarray, optional): Заранее собранный вектор ∫ f φ_j

    Raises:
        FieldMismatchError: поля заданы на другой сетке
    """
    if eta_prev.mesh is not mesh or lambda_cur.mesh is not mesh:
        raise FieldMismatchError("eta and lambda must live on the same mesh as the system")
    if load is None:
        load = assemble_load(f, mesh, rule)
    elif load.shape != (mesh.n_vertices,):
        raise FieldMismatchError(f"load vector must have length {mesh.n_vertices}")

    coupling = eta_prev.values - lambda_cur.values / r           # (nt, 2)
    local = mesh.areas[:, None] * np.einsum("kd,kid->ki", coupling, mesh.basis_gradients)
    return load / r + _scatter(mesh, local)


class DirichletSystem:
    """
    Система M U = F с условиями Дирихле, исключенными симметрично.

    Известные граничные значения переносятся в правую часть, система
    сужается на свободные вершины и остается симметричной положительно
    определенной, что позволяет применять метод сопряженных градиентов.
    """

    def __init__(self, matrix: sparse.spmatrix, boundary_mask: np.ndarray, jacobi: bool = False):
        """
        Args:
            matrix: Матрица жесткости (nv, nv)
            boundary_mask (np.ndarray): Признаки граничных вершин (nv,)
            jacobi (bool): Использовать диагональный предобусловливатель
        """
        boundary_mask = np.asarray(boundary_mask, dtype=bool)
        if matrix.shape != (boundary_mask.size,) * 2:
            raise FieldMismatchError("matrix and boundary mask sizes differ")
        self.n = boundary_mask.size
        self.boundary_mask = boundary_mask
        self.free = np.flatnonzero(~boundary_mask)
        self.fixed = np.flatnonzero(boundary_mask)

        csr = sparse.csr_matrix(matrix)
        self.free_block = csr[self.free][:, self.free].tocsr()
        self.coupling_block = csr[self.free][:, self.fixed].tocsr()
        self.preconditioner = None
        if jacobi and self.free.size:
            inverse_diagonal = 1.0 / self.free_block.diagonal()
            self.preconditioner = LinearOperator(
                self.free_block.shape, matvec=lambda v: inverse_diagonal * v, dtype=float
            )
        self.last_iterations = 0
        self.last_energies = []

    def solve(self, rhs: np.ndarray, boundary_values: np.ndarray, tol: float = DEFAULT_CG_TOL,
              max_iter: int = None, x0: np.ndarray = None, track_energy: bool = False) -> np.ndarray:
        """
        Решение методом сопряженных градиентов.

        Args:
            rhs (np.ndarray): Правая часть (nv,)
            boundary_values (np.ndarray): Вектор (nv,); используются только граничные компоненты
            tol (float): Относительная невязка на свободных вершинах
            max_iter (int, optional): Предел итераций CG (по умолчанию 10·n_free)
            x0 (np.ndarray, optional): Начальное приближение (nv,)
            track_energy (bool): Сохранять значения ½xᵀAx - bᵀx на каждой итерации

        Returns:
            np.ndarray: Узловые коэффициенты (nv,), граничные равны boundary_values

        Raises:
            ConvergenceError: превышен предел итераций
        """
        if tol <= 0:
            raise InvalidArgumentError(f"CG tolerance must be positive, got {tol}")
        rhs = np.asarray(rhs, dtype=float)
        boundary_values = np.asarray(boundary_values, dtype=float)
        if rhs.shape != (self.n,) or boundary_values.shape != (self.n,):
            raise FieldMismatchError(f"rhs and boundary values must have length {self.n}")

        solution = np.zeros(self.n)
        solution[self.fixed] = boundary_values[self.fixed]
        self.last_iterations = 0
        self.last_energies = []
        if self.free.size == 0:
            return solution

        reduced_rhs = rhs[self.free] - self.coupling_block @ boundary_values[self.fixed]
        start = None if x0 is None else np.asarray(x0, dtype=float)[self.free]
        max_iter = max_iter or 10 * self.free.size

        def callback(xk):
            self.last_iterations += 1
            if track_energy:
                self.last_energies.append(0.5 * xk @ (self.free_block @ xk) - reduced_rhs @ xk)

        reduced, info = cg(self.free_block, reduced_rhs, x0=start, rtol=tol, atol=0.0,
                           maxiter=max_iter, M=self.preconditioner, callback=callback)
        if info != 0:
            residual = np.linalg.norm(reduced_rhs - self.free_block @ reduced)
            scale = np.linalg.norm(reduced_rhs) or 1.0
            logger.error(f"CG failed after {self.last_iterations} iterations, relative residual {residual / scale:.3e}")
            raise ConvergenceError("conjugate gradient did not converge", residual / scale, self.last_iterations)

        solution[self.free] = reduced
        return solution


def solve_dirichlet(matrix: sparse.spmatrix, rhs: np.ndarray, boundary_mask: np.ndarray,
                    boundary_values: np.ndarray, tol: float = DEFAULT_CG_TOL,
                    max_iter: int = None) -> np.ndarray:
    """Однократное решение M U = F с условиями Дирихле (см. DirichletSystem.solve)."""
    return DirichletSystem(matrix, boundary_mask).solve(rhs, boundary_values, tol=tol, max_iter=max_iter)
