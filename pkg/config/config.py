import logging
import os
import sys

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _int_env(name: str, default: int, minimum: int = 0) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")
    if value < minimum:
        raise ValueError(f"{name} must be at least {minimum}, got {value}")
    return value


class Config:
    LOG_LEVEL_DEFAULT = "INFO"

    def __init__(self):
        self.THREADS = _int_env("PACAL_THREADS", 1, minimum=1)
        self.LOG_LEVEL = os.environ.get("PACAL_LOG_LEVEL", self.LOG_LEVEL_DEFAULT).upper()
        self.REDIS_URL = os.environ.get("REDIS_URL")
        self.REDIS_HOST = os.environ.get("REDIS_HOST")
        self.REDIS_PORT = _int_env("REDIS_PORT", 6379, minimum=1)
        self.CACHE_TTL = _int_env("PACAL_CACHE_TTL", 24 * 60 * 60, minimum=1)


class DevelopmentConfig(Config):
    DEBUG = True


class ProductionConfig(Config):
    DEBUG = False
    LOG_LEVEL_DEFAULT = "WARNING"


config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'default': DevelopmentConfig
}


def get_settings():
    """Get settings instance based on environment"""
    env = os.environ.get('PACAL_ENV', 'development')
    config_class = config.get(env, config['default'])
    return config_class()


def configure_logging(settings) -> int:
    """One stderr handler on the root logger; the pacal loggers follow settings.LOG_LEVEL."""
    level = getattr(logging, settings.LOG_LEVEL, logging.INFO)
    logging.basicConfig(stream=sys.stderr, level=level, format=LOG_FORMAT)
    logging.getLogger("pacal").setLevel(level)
    return level
