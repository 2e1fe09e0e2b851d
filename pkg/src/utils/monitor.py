"""Метрики ресурсов процесса решателя (psutil)."""

import time
from datetime import datetime

import psutil


class PerformanceMonitor:
    """
    Мониторинг ресурсов процесса во время исследования сходимости.

    Отслеживает:
    - Использование CPU
    - Использование памяти (процент и RSS)
    - Количество активных потоков
    - Время работы
    """

    def __init__(self, thresholds: dict = None):
        """
        Args:
            thresholds (dict, optional): Пороговые значения метрик
        """
        self.start_time = time.time()  # Время запуска для расчета uptime
        self.metrics_history = []      # История метрик
        self.process = psutil.Process()  # Объект текущего процесса

        # Пороговые значения для определения проблем с производительностью
        self.thresholds = {
            'cpu_percent': 95.0,
            'memory_percent': 75.0,
            'thread_count': 64,
        }
        if thresholds:
            self.thresholds.update(thresholds)

    def get_metrics(self) -> dict:
        """
        Получение текущих метрик производительности.

        Returns:
            dict: timestamp, cpu_percent, memory_percent, rss_mb, thread_count, uptime.
                  В случае ошибки psutil возвращает словарь с ключом 'error'.
        """
        try:
            metrics = {
                'timestamp': datetime.now(),
                'cpu_percent': self.process.cpu_percent(),
                'memory_percent': self.process.memory_percent(),
                'rss_mb': self.process.memory_info().rss / 2**20,
                'thread_count': self.process.num_threads(),
                'uptime': time.time() - self.start_time,
            }

            self.metrics_history.append(metrics)
            # Храним только последние 1000 замеров
            if len(self.metrics_history) > 1000:
                self.metrics_history.pop(0)

            return metrics

        except psutil.Error as e:
            return {
                'error': str(e),
                'timestamp': datetime.now()
            }

    def check_health(self, metrics: dict = None) -> dict:
        """
        Сравнение метрик с порогами.

        Args:
            metrics (dict, optional): Уже снятые метрики; если не заданы, снимаются заново

        Returns:
            dict: status ('healthy', 'warning', 'error'), warnings, timestamp
        """
        metrics = metrics or self.get_metrics()

        if 'error' in metrics:
            return {'status': 'error', 'error': metrics['error'], 'warnings': []}

        health_status = {
            'status': 'healthy',
            'warnings': [],
            'timestamp': metrics['timestamp']
        }

        for key, label, unit in (
            ('cpu_percent', 'High CPU usage', '%'),
            ('memory_percent', 'High memory usage', '%'),
            ('thread_count', 'High thread count', ''),
        ):
            if metrics[key] > self.thresholds[key]:
                health_status['warnings'].append(f"{label}: {metrics[key]}{unit}")
                health_status['status'] = 'warning'

        return health_status

    def get_average_metrics(self) -> dict:
        """Средние значения метрик по всей истории наблюдений."""
        if not self.metrics_history:
            return {"error": "No metrics available"}

        count = len(self.metrics_history)
        return {
            'avg_cpu': sum(m['cpu_percent'] for m in self.metrics_history) / count,
            'avg_memory': sum(m['memory_percent'] for m in self.metrics_history) / count,
            'peak_rss_mb': max(m['rss_mb'] for m in self.metrics_history),
            'samples_count': count,
        }

    def log_metrics(self, logger) -> None:
        """
        Запись текущих метрик и предупреждений в лог.

        Args:
            logger (AppLogger): Логгер для записи
        """
        metrics = self.get_metrics()
        health = self.check_health(metrics)

        if 'error' not in metrics:
            logger.debug(
                f"Performance metrics - "
                f"CPU: {metrics['cpu_percent']:.1f}%, "
                f"Memory: {metrics['memory_percent']:.1f}% ({metrics['rss_mb']:.0f} MB), "
                f"Threads: {metrics['thread_count']}, "
                f"Uptime: {metrics['uptime']:.0f}s"
            )

        if health['status'] == 'warning':
            for warning in health['warnings']:
                logger.warning(f"Performance warning: {warning}")
