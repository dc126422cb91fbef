import hashlib
import json
import logging
from typing import Any, Dict, Optional

import redis

from .emitters import jsonable

logger = logging.getLogger(__name__)


class ResultCache:
    """
    Optional redis cache for deterministic results. Every failure (no server,
    timeouts, bad payloads) degrades to a cache miss.
    """

    def __init__(self, redis_url: Optional[str] = None, redis_host: Optional[str] = None, redis_port: int = 6379, ttl: int = 24 * 60 * 60):
        self.ttl = ttl
        self.redis_client = None
        try:
            if redis_url:
                self.redis_client = redis.from_url(
                    redis_url,
                    decode_responses=True,
                    socket_timeout=5,
                    socket_connect_timeout=5
                )
            elif redis_host:
                self.redis_client = redis.Redis(
                    host=redis_host,
                    port=int(redis_port),
                    decode_responses=True,
                    socket_timeout=5,
                    socket_connect_timeout=5
                )
            if self.redis_client:
                self.redis_client.ping()
        except Exception as e:
            logger.warning("redis cache unavailable: %s", e)
            self.redis_client = None

    @classmethod
    def from_settings(cls, settings) -> "ResultCache":
        return cls(settings.REDIS_URL, settings.REDIS_HOST, settings.REDIS_PORT, settings.CACHE_TTL)

    @property
    def enabled(self) -> bool:
        return self.redis_client is not None

    @staticmethod
    def key(endpoint: str, payload: Dict[str, Any]) -> str:
        canonical = json.dumps(jsonable(payload), sort_keys=True, separators=(",", ":"))
        return f"pacal:{endpoint}:{hashlib.sha256(canonical.encode()).hexdigest()}"

    def get(self, endpoint: str, payload: Dict[str, Any]) -> Optional[Any]:
        if not self.redis_client:
            return None
        try:
            cached = self.redis_client.get(self.key(endpoint, payload))
            return json.loads(cached) if cached else None
        except Exception as e:
            logger.warning("cache read failed for %s: %s", endpoint, e)
            return None

    def set(self, endpoint: str, payload: Dict[str, Any], result: Any):
        if not self.redis_client:
            return
        try:
            self.redis_client.setex(self.key(endpoint, payload), self.ttl, json.dumps(jsonable(result), sort_keys=True))
        except Exception as e:
            logger.warning("cache write failed for %s: %s", endpoint, e)
