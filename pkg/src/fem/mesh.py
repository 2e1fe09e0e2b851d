"""
Триангуляции прямоугольников, P1 поля и интерполяционный оператор π_h.

Сетка и поля неизменяемы после создания (массивы только для чтения),
поэтому их можно читать из нескольких потоков одновременно.
"""

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from utils.errors import FieldMismatchError, InvalidArgumentError, MeshError
from utils.logger import AppLogger

logger = AppLogger("fem.mesh")

# Функция точки: массив (..., 2) -> массив (...)
ScalarFunction = Callable[[np.ndarray], np.ndarray]

# Относительный порог вырожденности треугольника
_DEGENERATE_AREA = 1e-14


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Согласованная триангуляция выпуклого многоугольника.

    Attributes:
        vertices (np.ndarray): Координаты вершин, форма (nv, 2)
        triangles (np.ndarray): Индексы вершин треугольников (nt, 3), ориентация положительная
        boundary_vertex_flags (np.ndarray): Признак граничной вершины, форма (nv,)
        h_max (float): Максимальный диаметр треугольника (длина наибольшего ребра)
    """
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_vertex_flags: np.ndarray = field(init=False)
    h_max: float = field(init=False)

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=float)
        triangles = np.asarray(self.triangles)
        if vertices.ndim != 2 or vertices.shape[1] != 2 or vertices.shape[0] < 3:
            raise MeshError(f"vertices must have shape (nv, 2), got {vertices.shape}")
        if triangles.ndim != 2 or triangles.shape[1] != 3 or triangles.shape[0] < 1:
            raise MeshError(f"triangles must have shape (nt, 3), got {triangles.shape}")
        if not np.all(np.isfinite(vertices)):
            raise MeshError("vertex coordinates must be finite")
        if not np.issubdtype(triangles.dtype, np.integer):
            if np.any(triangles != np.round(triangles)):
                raise MeshError("triangle indices must be integers")
        triangles = triangles.astype(np.int64)
        if triangles.min() < 0 or triangles.max() >= vertices.shape[0]:
            raise MeshError("triangle index out of range")

        # Ориентация: треугольники с отрицательной площадью переворачиваем
        signed = _signed_areas(vertices, triangles)
        scale = np.ptp(vertices, axis=0).max() ** 2
        if np.any(np.abs(signed) <= _DEGENERATE_AREA * scale):
            bad = int(np.argmin(np.abs(signed)))
            raise MeshError(f"triangle {bad} has zero area")
        flipped = signed < 0
        if np.any(flipped):
            triangles = triangles.copy()
            triangles[flipped] = triangles[flipped][:, [0, 2, 1]]

        edges, counts = _unique_edges(triangles)
        if np.any(counts > 2):
            raise MeshError("non-conforming triangulation: an edge is shared by more than two triangles")
        # Соседние ячейки обходят общее ребро в противоположных направлениях
        directed, directed_counts = np.unique(_directed_edges(triangles), axis=0, return_counts=True)
        if np.any(directed_counts > 1):
            i, j = directed[np.argmax(directed_counts)]
            raise MeshError(f"overlapping cells: edge ({i}, {j}) is traversed twice in the same direction")
        used = np.zeros(vertices.shape[0], dtype=bool)
        used[triangles.ravel()] = True
        if not np.all(used):
            raise MeshError(f"{int((~used).sum())} vertices do not belong to any triangle")
        hanging = _hanging_vertex(vertices, edges[counts == 1])
        if hanging is not None:
            vertex, (i, j) = hanging
            raise MeshError(f"non-conforming triangulation: vertex {vertex} lies inside edge ({i}, {j})")

        flags = np.zeros(vertices.shape[0], dtype=bool)
        flags[edges[counts == 1].ravel()] = True
        lengths = np.linalg.norm(vertices[edges[:, 0]] - vertices[edges[:, 1]], axis=1)

        object.__setattr__(self, "vertices", _readonly(vertices))
        object.__setattr__(self, "triangles", _readonly(triangles))
        object.__setattr__(self, "boundary_vertex_flags", _readonly(flags))
        object.__setattr__(self, "h_max", float(lengths.max()))

    @classmethod
    def from_arrays(cls, vertices, triangles) -> "Mesh":
        """Сетка из внешних массивов; ориентация и согласованность проверяются."""
        return cls(vertices, triangles)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @cached_property
    def areas(self) -> np.ndarray:
        return _readonly(_signed_areas(self.vertices, self.triangles))

    @property
    def area(self) -> float:
        return float(self.areas.sum())

    @cached_property
    def barycenters(self) -> np.ndarray:
        return _readonly(self.vertices[self.triangles].mean(axis=1))

    @cached_property
    def basis_gradients(self) -> np.ndarray:
        """
        Градиенты трех барицентрических базисных функций на каждой ячейке.

        Returns:
            np.ndarray: Форма (nt, 3, 2); строка i - градиент φ_i локальной вершины i
        """
        p = self.vertices[self.triangles]
        x, y = p[..., 0], p[..., 1]
        twice_area = 2.0 * self.areas
        grads = np.empty((self.n_triangles, 3, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            grads[:, i, 0] = (y[:, j] - y[:, k]) / twice_area
            grads[:, i, 1] = (x[:, k] - x[:, j]) / twice_area
        return _readonly(grads)

    def edges(self):
        """
        Уникальные ребра и число содержащих их треугольников.

        Returns:
            tuple[np.ndarray, np.ndarray]: ребра (ne, 2) с упорядоченными концами и кратности (ne,)
        """
        return _unique_edges(self.triangles)

    def quadrature_points(self, rule) -> np.ndarray:
        """Физические координаты узлов квадратуры, форма (nt, nq, 2)."""
        cache = self.__dict__.setdefault("_quad_points", {})
        if rule.name not in cache:
            corners = self.vertices[self.triangles]          # (nt, 3, 2)
            cache[rule.name] = _readonly(np.einsum("qi,kid->kqd", rule.points, corners))
        return cache[rule.name]

    def quadrature_weights(self, rule) -> np.ndarray:
        """Веса квадратуры, умноженные на площади ячеек, форма (nt, nq)."""
        return self.areas[:, None] * rule.weights[None, :]


def _signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p0, p1, p2 = (vertices[triangles[:, i]] for i in range(3))
    d1, d2 = p1 - p0, p2 - p0
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _unique_edges(triangles: np.ndarray):
    all_edges = _directed_edges(triangles)
    all_edges.sort(axis=1)
    return np.unique(all_edges, axis=0, return_counts=True)


def _directed_edges(triangles: np.ndarray) -> np.ndarray:
    return np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])


def _hanging_vertex(vertices: np.ndarray, boundary_edges: np.ndarray, tol: float = 1e-10):
    """
    Вершина, лежащая строго внутри ребра кратности 1.

    Висячий узел всегда делит ребро соседней ячейки, которое поэтому
    считается граничным; достаточно проверить только такие ребра.

    Returns:
        tuple | None: (индекс вершины, ребро) или None
    """
    starts = vertices[boundary_edges[:, 0]]
    directions = vertices[boundary_edges[:, 1]] - starts
    for (i, j), start, d in zip(boundary_edges, starts, directions):
        length2 = d @ d
        rel = vertices - start
        t = rel @ d / length2
        cross = d[0] * rel[:, 1] - d[1] * rel[:, 0]
        inside = (np.abs(cross) <= tol * length2) & (t > tol) & (t < 1.0 - tol)
        if np.any(inside):
            return int(np.argmax(inside)), (int(i), int(j))
    return None


@dataclass(frozen=True, eq=False)
class NodalField:
    """
    Непрерывное кусочно-линейное поле, заданное значениями в вершинах.

    Attributes:
        mesh (Mesh): Сетка
        coefficients (np.ndarray): Значения в вершинах, форма (nv,)
    """
    mesh: Mesh
    coefficients: np.ndarray

    def __post_init__(self):
        coefficients = np.asarray(self.coefficients, dtype=float)
        if coefficients.shape != (self.mesh.n_vertices,):
            raise FieldMismatchError(
                f"expected {self.mesh.n_vertices} nodal coefficients, got shape {coefficients.shape}"
            )
        object.__setattr__(self, "coefficients", _readonly(coefficients))

    def cell_gradients(self) -> np.ndarray:
        """Постоянные градиенты на ячейках, форма (nt, 2)."""
        local = self.coefficients[self.mesh.triangles]
        return np.einsum("ki,kid->kd", local, self.mesh.basis_gradients)

    def values_at(self, rule) -> np.ndarray:
        """Значения в узлах квадратуры, форма (nt, nq)."""
        local = self.coefficients[self.mesh.triangles]
        return local @ rule.points.T

    def __sub__(self, other: "NodalField") -> "NodalField":
        if other.mesh is not self.mesh:
            raise FieldMismatchError("fields live on different meshes")
        return NodalField(self.mesh, self.coefficients - other.coefficients)


@dataclass(frozen=True, eq=False)
class CellVectorField:
    """
    Кусочно-постоянное векторное поле (η, λ, ∇_κ u).

    Attributes:
        mesh (Mesh): Сетка
        values (np.ndarray): Вектор на каждой ячейке, форма (nt, 2)
    """
    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.mesh.n_triangles, 2):
            raise FieldMismatchError(
                f"expected values of shape ({self.mesh.n_triangles}, 2), got {values.shape}"
            )
        object.__setattr__(self, "values", _readonly(values))

    @classmethod
    def zeros(cls, mesh: Mesh) -> "CellVectorField":
        return cls(mesh, np.zeros((mesh.n_triangles, 2)))

    @classmethod
    def gradient_of(cls, nodal: NodalField) -> "CellVectorField":
        return cls(nodal.mesh, nodal.cell_gradients())

    def norms(self) -> np.ndarray:
        return np.hypot(self.values[:, 0], self.values[:, 1])

    def l2_norm(self) -> float:
        """Норма в L² по ячейкам: sqrt(Σ |κ| |v_κ|²)."""
        squared = self.values[:, 0] ** 2 + self.values[:, 1] ** 2
        return float(np.sqrt(np.sum(self.mesh.areas * squared)))


def build_uniform_rect_mesh(x_range: Sequence[float], y_range: Sequence[float], m: int) -> Mesh:
    """
    Равномерная сетка прямоугольника: (m+1)² вершин, 2m² треугольников.

    Вершины нумеруются построчно (сначала x₂, затем x₁); каждый квадрат
    делится диагональю из левого нижнего угла в правый верхний.

    Args:
        x_range: Интервал (x₀, x₁)
        y_range: Интервал (y₀, y₁)
        m (int): Число отрезков разбиения по каждой стороне

    Raises:
        InvalidArgumentError: m < 1 или вырожденный интервал
    """
    if isinstance(m, bool) or not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidArgumentError(f"m must be a positive integer, got {m!r}")
    (x0, x1), (y0, y1) = _interval(x_range, "x_range"), _interval(y_range, "y_range")

    xs = np.linspace(x0, x1, m + 1)
    ys = np.linspace(y0, y1, m + 1)
    gx, gy = np.meshgrid(xs, ys)               # строки соответствуют x₂
    vertices = np.column_stack([gx.ravel(), gy.ravel()])

    i, j = np.meshgrid(np.arange(m), np.arange(m))
    lower_left = (j * (m + 1) + i).ravel()
    lower_right = lower_left + 1
    upper_left = lower_left + (m + 1)
    upper_right = upper_left + 1
    first = np.column_stack([lower_left, lower_right, upper_right])
    second = np.column_stack([lower_left, upper_right, upper_left])
    # треугольники одного квадрата идут подряд
    triangles = np.stack([first, second], axis=1).reshape(-1, 3)

    mesh = Mesh(vertices, triangles)
    logger.debug(
        f"Uniform mesh [{x0}, {x1}]x[{y0}, {y1}], m={m}: "
        f"{mesh.n_vertices} vertices, {mesh.n_triangles} triangles, h_max={mesh.h_max:.4g}"
    )
    return mesh


def _interval(bounds, name: str):
    try:
        lo, hi = (float(v) for v in bounds)
    except (TypeError, ValueError) as e:
        raise InvalidArgumentError(f"{name} must be a pair of numbers") from e
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
        raise InvalidArgumentError(f"{name} is degenerate: [{lo}, {hi}]")
    return lo, hi


def gradient_on_cell(nodal: NodalField, cell_index: int) -> np.ndarray:
    """
    Градиент линейного интерполянта на одной ячейке.

    Raises:
        InvalidArgumentError: индекс ячейки вне диапазона
    """
    mesh = nodal.mesh
    if isinstance(cell_index, bool) or not isinstance(cell_index, (int, np.integer)) \
            or not 0 <= cell_index < mesh.n_triangles:
        raise InvalidArgumentError(f"cell index {cell_index!r} out of range [0, {mesh.n_triangles})")
    local = nodal.coefficients[mesh.triangles[cell_index]]
    return local @ mesh.basis_gradients[cell_index]


def interpolate(v: ScalarFunction, mesh: Mesh) -> NodalField:
    """
    Интерполяционный оператор π_h: значения v в вершинах.

    Args:
        v: Функция точки; принимает массив (nv, 2), может вернуть скаляр
        mesh (Mesh): Сетка
    """
    values = np.asarray(v(mesh.vertices), dtype=float)
    return NodalField(mesh, np.broadcast_to(values, (mesh.n_vertices,)))


def boundary_vertices(mesh: Mesh) -> np.ndarray:
    """Индексы граничных вершин в порядке возрастания."""
    return np.flatnonzero(mesh.boundary_vertex_flags)


def save_mesh(mesh: Mesh, path) -> None:
    """
    Запись сетки в текстовый формат.

    Формат: строка "nv nt", затем nv строк "x y flag", затем nt строк "i j k" (с нуля).
    """
    lines = [f"{mesh.n_vertices} {mesh.n_triangles}"]
    for (x, y), flag in zip(mesh.vertices, mesh.boundary_vertex_flags):
        lines.append(f"{x:.17g} {y:.17g} {int(flag)}")
    for i, j, k in mesh.triangles:
        lines.append(f"{i} {j} {k}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_mesh(path) -> Mesh:
    """
    Чтение сетки из текстового формата (см. save_mesh).

    Признаки граничных вершин пересчитываются по триангуляции;
    расхождение с файлом логируется как предупреждение.

    Raises:
        MeshError: файл не соответствует формату
    """
    try:
        rows = [line.split() for line in Path(path).read_text(encoding="ascii").splitlines() if line.strip()]
        nv, nt = (int(v) for v in rows[0])
        vertex_rows = rows[1:1 + nv]
        triangle_rows = rows[1 + nv:1 + nv + nt]
        if len(vertex_rows) != nv or len(triangle_rows) != nt or len(rows) != 1 + nv + nt:
            raise MeshError(f"{path}: expected {nv} vertex and {nt} triangle lines")
        vertices = np.array([[float(r[0]), float(r[1])] for r in vertex_rows])
        flags = np.array([int(r[2]) != 0 for r in vertex_rows])
        triangles = np.array([[int(v) for v in r] for r in triangle_rows])
    except (IndexError, ValueError) as e:
        if isinstance(e, MeshError):
            raise
        raise MeshError(f"{path}: malformed mesh file ({e})") from e

    mesh = Mesh.from_arrays(vertices, triangles)
    if not np.array_equal(flags, mesh.boundary_vertex_flags):
        logger.warning(f"{path}: boundary flags in file disagree with the triangulation; recomputed")
    return mesh
