# Импорт необходимых библиотек
import logging     # Стандартная библиотека Python для логирования
import os         # Библиотека для работы с операционной системой и файлами
from datetime import datetime  # Библиотека для работы с датой и временем

ROOT_LOGGER_NAME = "PxLaplace"
LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


class AppLogger:
    """
    Класс для логирования работы солвера.

    Обеспечивает:
    - Дочерние логгеры для каждого компонента (PxLaplace.fem.dc_solver и т.д.)
    - Вывод логов в консоль
    - Сохранение логов в файлы с датой в имени (после вызова configure)
    - Различные уровни логирования (debug, info, warning, error)
    """

    _configured = False

    def __init__(self, component: str = None):
        """
        Создание логгера компонента.

        Обработчики подключаются только к корневому логгеру PxLaplace,
        поэтому повторное создание AppLogger не дублирует сообщения.

        Args:
            component (str, optional): Имя компонента, например "fem.mesh"
        """
        name = f"{ROOT_LOGGER_NAME}.{component}" if component else ROOT_LOGGER_NAME
        self.logger = logging.getLogger(name)
        AppLogger._ensure_console()

    @staticmethod
    def _formatter() -> logging.Formatter:
        # Формат: YYYY-MM-DD HH:MM:SS - LEVEL - Message
        return logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    @classmethod
    def _ensure_console(cls):
        root = logging.getLogger(ROOT_LOGGER_NAME)
        if any(getattr(h, "_pxl_console", False) for h in root.handlers):
            return
        console_handler = logging.StreamHandler()
        console_handler.setFormatter(cls._formatter())
        console_handler._pxl_console = True
        root.addHandler(console_handler)
        root.setLevel(logging.INFO)

    @classmethod
    def configure(cls, logs_dir: str = "logs", level: str = "INFO") -> str:
        """
        Подключение файлового обработчика и установка уровня.

        Вызывается один раз из точки входа CLI. Библиотечный код
        файлов не создает.

        Args:
            logs_dir (str): Директория для хранения логов
            level (str): Уровень логирования (DEBUG, INFO, WARNING, ERROR)

        Returns:
            str: Путь к файлу лога
        """
        cls._ensure_console()
        root = logging.getLogger(ROOT_LOGGER_NAME)
        root.setLevel(getattr(logging, str(level).upper(), logging.INFO))

        # Формат имени: pxlaplace_YYYY-MM-DD.log
        os.makedirs(logs_dir, exist_ok=True)
        current_date = datetime.now().strftime("%Y-%m-%d")
        log_file = os.path.join(logs_dir, f"pxlaplace_{current_date}.log")

        if not cls._configured:
            file_handler = logging.FileHandler(log_file, encoding='utf-8')
            file_handler.setFormatter(cls._formatter())
            root.addHandler(file_handler)
            cls._configured = True
        return log_file

    def info(self, message: str):
        """Информационное сообщение: старт/финиш расчетов, итоги."""
        self.logger.info(message)

    def error(self, message: str, exc_info=None):
        """
        Логирование ошибки.

        Args:
            message (str): Текст сообщения об ошибке
            exc_info: Если передано True, добавляется стек вызовов
        """
        self.logger.error(message, exc_info=exc_info)

    def debug(self, message: str):
        """Отладочная информация: размеры сеток, промежуточные невязки."""
        self.logger.debug(message)

    def warning(self, message: str):
        """Предупреждение: несошедшиеся итерации, превышение порогов."""
        self.logger.warning(message)
