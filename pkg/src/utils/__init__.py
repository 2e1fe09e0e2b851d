from .analytics import StudyAnalytics
from .cache import StudyCache
from .logger import AppLogger
from .monitor import PerformanceMonitor

__all__ = [
    'StudyAnalytics',
    'StudyCache',
    'AppLogger',
    'PerformanceMonitor'
]
