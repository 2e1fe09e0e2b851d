# Импорт необходимых библиотек
import sqlite3      # Библиотека для работы с SQLite базой данных
import json        # Коэффициенты решений хранятся как JSON список
from datetime import datetime  # Время записи результата
import threading   # Библиотека для обеспечения потокобезопасности


class StudyCache:
    """
    Кэш результатов исследования сходимости в SQLite базе данных.

    Обеспечивает:
    - Потокобезопасное хранение (отдельное соединение на поток)
    - Пропуск уже посчитанных ячеек (b, N^{1/2}) при повторном запуске
    - Хранение узловых коэффициентов решения для проверки самосогласованности
    """

    def __init__(self, db_name: str = 'study_cache.db'):
        """
        Args:
            db_name (str): Путь к файлу базы данных
        """
        self.db_name = db_name

        # Каждый поток будет иметь свое собственное соединение с базой
        self.local = threading.local()
        self._connections = []
        self._lock = threading.Lock()

        self.create_tables()

    def get_connection(self):
        """
        Получение соединения с базой данных для текущего потока.

        Returns:
            sqlite3.Connection: Объект соединения с базой данных
        """
        if not hasattr(self.local, 'connection'):
            # close() вызывается из главного потока, поэтому check_same_thread=False
            self.local.connection = sqlite3.connect(self.db_name, check_same_thread=False)
            with self._lock:
                self._connections.append(self.local.connection)
        return self.local.connection

    def create_tables(self):
        """
        Создание таблицы cells.

        Ключ записи: (b, grid_side, solver_key, quad_degree); solver_key -
        DCConfig.fingerprint, поэтому смена любого параметра итерации дает новую запись.
        """
        conn = self.get_connection()
        cursor = conn.cursor()
        cursor.execute('''
            CREATE TABLE IF NOT EXISTS cells (
                b REAL,
                grid_side INTEGER,
                solver_key TEXT,           -- JSON параметров DC итерации
                quad_degree INTEGER,
                error REAL,
                iters INTEGER,
                seconds REAL,
                converged INTEGER,
                coefficients TEXT,               -- JSON список узловых значений
                created_at DATETIME,
                PRIMARY KEY (b, grid_side, solver_key, quad_degree)
            )
        ''')
        conn.commit()

    def save_record(self, record, solver_key: str, quad_degree: int, coefficients=None):
        """
        Сохранение результата одной ячейки исследования.

        Args:
            record (StudyRecord): Результат
            solver_key (str): DCConfig.fingerprint расчета
            quad_degree (int): Использованное правило квадратуры
            coefficients (array-like, optional): Узловые коэффициенты решения
        """
        payload = None
        if coefficients is not None:
            # repr сохраняет float без потерь
            payload = json.dumps([float(c) for c in coefficients])

        conn = self.get_connection()
        conn.execute('''
            INSERT OR REPLACE INTO cells
            (b, grid_side, solver_key, quad_degree, error, iters, seconds, converged, coefficients, created_at)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        ''', (record.b, record.grid_side, solver_key, quad_degree, record.error, record.iters,
              record.seconds, int(record.converged), payload, datetime.now()))
        conn.commit()

    def get_record(self, b: float, grid_side: int, solver_key: str, quad_degree: int):
        """
        Поиск сохраненного результата.

        Returns:
            dict | None: Поля записи или None, если ячейка еще не считалась
        """
        cursor = self.get_connection().execute('''
            SELECT error, iters, seconds, converged FROM cells
            WHERE b = ? AND grid_side = ? AND solver_key = ? AND quad_degree = ?
        ''', (b, grid_side, solver_key, quad_degree))
        row = cursor.fetchone()
        if row is None:
            return None
        return {
            "error": row[0],
            "iters": row[1],
            "seconds": row[2],
            "converged": bool(row[3]),
        }

    def load_solution(self, b: float, grid_side: int, solver_key: str, quad_degree: int):
        """
        Получение сохраненных узловых коэффициентов.

        Returns:
            list[float] | None: Коэффициенты или None, если они не сохранялись
        """
        cursor = self.get_connection().execute('''
            SELECT coefficients FROM cells
            WHERE b = ? AND grid_side = ? AND solver_key = ? AND quad_degree = ?
        ''', (b, grid_side, solver_key, quad_degree))
        row = cursor.fetchone()
        if row is None or row[0] is None:
            return None
        return json.loads(row[0])

    def clear(self):
        """Удаление всех сохраненных результатов."""
        conn = self.get_connection()
        conn.execute('DELETE FROM cells')
        conn.commit()

    def close(self):
        """Закрытие всех соединений, открытых этим кэшем."""
        with self._lock:
            for connection in self._connections:
                connection.close()
            self._connections.clear()
        if hasattr(self.local, 'connection'):
            del self.local.connection
