# Импорт необходимых библиотек
import os                          # Доступ к переменным окружения
from dataclasses import dataclass  # Неизменяемые контейнеры настроек
from dotenv import load_dotenv, dotenv_values  # Загрузка .env и key-value файлов

from utils.errors import InvalidArgumentError
from utils.logger import AppLogger

# Загрузка переменных окружения из .env файла при импорте модуля
load_dotenv()

logger = AppLogger("utils.config")

# Ключи, которые понимает файл конфигурации исследования (--config)
STUDY_KEYS = {
    "B_VALUES", "GRIDS", "TOL", "MAX_ITER", "RHO", "R", "CG_TOL", "SCALAR_TOL",
    "QUAD_DEGREE", "OUT", "PLOT", "SEED", "LENGTH_SCALE", "FIT_MIN_GRID",
    "WORKERS", "DUMP_SOLUTIONS", "LOG_HOLDER_THRESHOLD",
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off", ""}


def parse_bool(value) -> bool:
    """Разбор логического значения из строки конфигурации."""
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise InvalidArgumentError(f"Not a boolean value: {value!r}")


def parse_float_list(value) -> list:
    """
    Разбор списка чисел вида "0.1,0.5, 1".

    Returns:
        list[float]: Список значений в исходном порядке
    """
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    try:
        return [float(item) for item in str(value).replace(";", ",").split(",") if item.strip()]
    except ValueError as e:
        raise InvalidArgumentError(f"Cannot parse number list {value!r}: {e}") from e


def parse_int_list(value) -> list:
    values = parse_float_list(value)
    if any(v != int(v) for v in values):
        raise InvalidArgumentError(f"Expected integers, got {value!r}")
    return [int(v) for v in values]


@dataclass(frozen=True)
class Settings:
    """
    Настройки окружения (логи, кэш), читаются из переменных PXL_*.

    Attributes:
        logs_dir (str): Директория файлов логов
        log_level (str): Уровень логирования
        cache_db (str): Путь к sqlite базе кэша результатов
        use_cache (bool): Использовать ли кэш в исследованиях сходимости
    """
    logs_dir: str = "logs"
    log_level: str = "INFO"
    cache_db: str = "study_cache.db"
    use_cache: bool = False

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            logs_dir=os.getenv("PXL_LOGS_DIR", "logs"),
            log_level=os.getenv("PXL_LOG_LEVEL", "INFO"),
            cache_db=os.getenv("PXL_CACHE_DB", "study_cache.db"),
            use_cache=parse_bool(os.getenv("PXL_USE_CACHE", "false")),
        )


def load_study_file(path: str) -> dict:
    """
    Чтение key-value файла конфигурации исследования.

    Ключи нечувствительны к регистру; неизвестные ключи пропускаются
    с предупреждением.

    Args:
        path (str): Путь к файлу

    Returns:
        dict: Словарь {КЛЮЧ: строковое значение}
    """
    if not os.path.exists(path):
        raise InvalidArgumentError(f"Config file not found: {path}")

    values = {}
    for key, value in dotenv_values(path).items():
        normalized = key.strip().upper()
        if normalized not in STUDY_KEYS:
            logger.warning(f"Неизвестный ключ конфигурации пропущен: {key}")
            continue
        values[normalized] = "" if value is None else value
    logger.debug(f"Загружено настроек исследования: {len(values)} из {path}")
    return values
