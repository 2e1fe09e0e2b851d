import logging
from concurrent.futures import ThreadPoolExecutor

import pytest

from fem.dc_solver import DCConfig
from study.runner import StudyRecord
from utils.analytics import StudyAnalytics
from utils.cache import StudyCache
from utils.config import Settings, load_study_file, parse_bool, parse_float_list, parse_int_list
from utils.errors import InvalidArgumentError
from utils.logger import AppLogger
from utils.monitor import PerformanceMonitor


KEY = DCConfig(tol=1e-8).fingerprint


def record(b=0.5, side=20, error=0.08, iters=120, converged=True, failed=False):
    return StudyRecord(b, side, side * side, error, iters, 1.5, converged, failed)


@pytest.mark.parametrize("text, expected", [("yes", True), ("ON", True), ("1", True),
                                            ("no", False), ("", False), ("false", False)])
def test_parse_bool(text, expected):
    assert parse_bool(text) is expected


def test_parse_bool_rejects_garbage():
    with pytest.raises(InvalidArgumentError):
        parse_bool("maybe")


def test_parse_lists():
    assert parse_float_list("0.1, 0.5;1") == [0.1, 0.5, 1.0]
    assert parse_int_list("20,40,60") == [20, 40, 60]
    with pytest.raises(InvalidArgumentError):
        parse_int_list("20,40.5")
    with pytest.raises(InvalidArgumentError):
        parse_float_list("1,two")


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("PXL_LOGS_DIR", "custom_logs")
    monkeypatch.setenv("PXL_USE_CACHE", "true")
    monkeypatch.delenv("PXL_LOG_LEVEL", raising=False)
    settings = Settings.from_env()
    assert settings.logs_dir == "custom_logs"
    assert settings.use_cache is True
    assert settings.log_level == "INFO"


def test_load_study_file(tmp_path, caplog):
    path = tmp_path / "study.cfg"
    path.write_text("# table rows\nb_values=0.1,0.5\nGRIDS=20,40\nCOLOR=blue\n", encoding="utf-8")
    with caplog.at_level(logging.WARNING):
        values = load_study_file(str(path))
    assert values == {"B_VALUES": "0.1,0.5", "GRIDS": "20,40"}
    assert "COLOR" in caplog.text


def test_missing_study_file(tmp_path):
    with pytest.raises(InvalidArgumentError):
        load_study_file(str(tmp_path / "absent.cfg"))


def test_logger_writes_dated_file(tmp_path):
    log_file = AppLogger.configure(str(tmp_path / "logs"), "DEBUG")
    logger = AppLogger("tests")
    logger.debug("mesh ready")
    logger.error("solver failed")
    for handler in logging.getLogger("PxLaplace").handlers:
        handler.flush()
    with open(log_file, encoding="utf-8") as handle:
        content = handle.read()
    assert "DEBUG - mesh ready" in content
    assert "ERROR - solver failed" in content


def test_cache_round_trip(tmp_path):
    cache = StudyCache(str(tmp_path / "cache.db"))
    try:
        assert cache.get_record(0.5, 20, KEY, 5) is None
        cache.save_record(record(), KEY, 5, coefficients=[0.1, 0.25, 1.0 / 3.0])
        cached = cache.get_record(0.5, 20, KEY, 5)
        assert cached == {"error": 0.08, "iters": 120, "seconds": 1.5, "converged": True}
        assert cache.load_solution(0.5, 20, KEY, 5) == [0.1, 0.25, 1.0 / 3.0]
        assert cache.get_record(0.5, 20, DCConfig(tol=1e-9).fingerprint, 5) is None

        cache.clear()
        assert cache.get_record(0.5, 20, KEY, 5) is None
    finally:
        cache.close()


def test_cache_is_usable_from_worker_threads(tmp_path):
    cache = StudyCache(str(tmp_path / "cache.db"))
    try:
        with ThreadPoolExecutor(max_workers=4) as pool:
            list(pool.map(lambda side: cache.save_record(record(side=side), KEY, 5), range(10, 50, 5)))
        assert all(cache.get_record(0.5, side, KEY, 5) is not None for side in range(10, 50, 5))
    finally:
        cache.close()


def test_analytics_statistics():
    analytics = StudyAnalytics()
    analytics.track_record(record(b=0.1, iters=100))
    analytics.track_record(record(b=0.1, iters=300, converged=False))
    analytics.track_record(record(b=1.0, iters=50, failed=True))
    stats = analytics.get_statistics()
    assert stats["total_cells"] == 3
    assert stats["failed_cells"] == 2
    assert stats["total_iterations"] == 450
    assert stats["iterations_per_b"] == {0.1: 200.0, 1.0: 50.0}
    assert stats["seconds_per_cell"] == pytest.approx(1.5)


def test_monitor_metrics_and_health():
    monitor = PerformanceMonitor(thresholds={"thread_count": 1})
    metrics = monitor.get_metrics()
    assert {"cpu_percent", "memory_percent", "rss_mb", "thread_count", "uptime"} <= set(metrics)
    assert monitor.get_average_metrics()["samples_count"] == 1

    overloaded = dict(metrics, cpu_percent=99.0, thread_count=4)
    health = monitor.check_health(overloaded)
    assert health["status"] == "warning"
    assert len(health["warnings"]) >= 2


def test_monitor_logs_threshold_warnings():
    messages = []

    class Recorder:
        def debug(self, message):
            messages.append(("debug", message))

        def warning(self, message):
            messages.append(("warning", message))

    PerformanceMonitor(thresholds={"memory_percent": -1.0}).log_metrics(Recorder())
    assert "debug" in {level for level, _ in messages}
    assert any(level == "warning" and "memory" in text for level, text in messages)


def test_average_metrics_without_samples():
    assert "error" in PerformanceMonitor().get_average_metrics()
