import logging

import numpy as np
import pytest

from fem.mesh import build_uniform_rect_mesh
from utils.logger import ROOT_LOGGER_NAME, AppLogger


@pytest.fixture(autouse=True)
def isolated_logging():
    """Файловые обработчики, добавленные в тесте, снимаются после него."""
    root = logging.getLogger(ROOT_LOGGER_NAME)
    handlers = list(root.handlers)
    level = root.level
    configured = AppLogger._configured
    yield
    for handler in root.handlers:
        if handler not in handlers:
            handler.close()
    root.handlers[:] = handlers
    root.setLevel(level)
    AppLogger._configured = configured


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_square():
    """Единичный квадрат, m = 4."""
    return build_uniform_rect_mesh((0.0, 1.0), (0.0, 1.0), 4)


@pytest.fixture
def benchmark_square():
    """[-1, 1]², m = 8."""
    return build_uniform_rect_mesh((-1.0, 1.0), (-1.0, 1.0), 8)
