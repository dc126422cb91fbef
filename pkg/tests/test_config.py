import logging

import pytest

from config.config import ProductionConfig, configure_logging, get_settings


@pytest.fixture
def pacal_logger():
    logger = logging.getLogger("pacal")
    level = logger.level
    yield logger
    logger.setLevel(level)


def test_defaults(monkeypatch):
    for name in ("PACAL_ENV", "PACAL_THREADS", "PACAL_LOG_LEVEL", "REDIS_URL", "REDIS_HOST"):
        monkeypatch.delenv(name, raising=False)
    settings = get_settings()
    assert settings.THREADS == 1
    assert settings.LOG_LEVEL == "INFO"
    assert settings.REDIS_URL is None


def test_production_logs_warnings(monkeypatch, pacal_logger):
    monkeypatch.setenv("PACAL_ENV", "production")
    monkeypatch.delenv("PACAL_LOG_LEVEL", raising=False)
    settings = get_settings()
    assert isinstance(settings, ProductionConfig)
    assert configure_logging(settings) == logging.WARNING
    assert pacal_logger.level == logging.WARNING


def test_log_level_from_the_environment(monkeypatch, pacal_logger):
    monkeypatch.setenv("PACAL_LOG_LEVEL", "debug")
    configure_logging(get_settings())
    assert logging.getLogger("pacal.verify").getEffectiveLevel() == logging.DEBUG


@pytest.mark.parametrize("value", ["0", "many"])
def test_bad_thread_counts(monkeypatch, value):
    monkeypatch.setenv("PACAL_THREADS", value)
    with pytest.raises(ValueError):
        get_settings()
