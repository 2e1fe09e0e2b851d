# Импорт необходимых библиотек
import time                  # Длительность сессии


class StudyAnalytics:
    """
    Сбор статистики по ячейкам исследования сходимости.

    Отслеживает:
    - Число посчитанных ячеек и ошибок
    - Итерации DC метода и время по каждому b
    - Общую длительность сессии
    """

    def __init__(self):
        self.start_time = time.time()
        self.b_usage = {}

    def track_record(self, record):
        """
        Учет результата одной ячейки.

        Args:
            record (StudyRecord): Результат расчета
        """
        stats = self.b_usage.setdefault(record.b, {
            'count': 0,
            'failed': 0,
            'iterations': 0,
            'seconds': 0.0,
        })
        stats['count'] += 1
        stats['failed'] += int(record.failed or not record.converged)
        stats['iterations'] += record.iters
        stats['seconds'] += record.seconds

    def get_statistics(self) -> dict:
        """
        Агрегированная статистика.

        Returns:
            dict: total_cells, failed_cells, total_iterations, session_duration,
                  seconds_per_cell, iterations_per_b (словарь b -> среднее число итераций)
        """
        total_time = time.time() - self.start_time
        total_cells = sum(s['count'] for s in self.b_usage.values())
        total_seconds = sum(s['seconds'] for s in self.b_usage.values())

        return {
            'total_cells': total_cells,
            'failed_cells': sum(s['failed'] for s in self.b_usage.values()),
            'total_iterations': sum(s['iterations'] for s in self.b_usage.values()),
            'session_duration': total_time,
            # Если ячеек нет, возвращаем 0 чтобы избежать деления на ноль
            'seconds_per_cell': total_seconds / total_cells if total_cells > 0 else 0.0,
            'iterations_per_b': {
                b: s['iterations'] / s['count'] for b, s in sorted(self.b_usage.items())
            },
        }
