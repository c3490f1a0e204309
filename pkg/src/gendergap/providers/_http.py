from __future__ import annotations

import logging
import time
from typing import Callable

import httpx

from ..errors import ProviderUnavailable, QuotaExceeded
from .ratelimit import RateLimiter

log = logging.getLogger(__name__)

ATTEMPTS = 3
BACKOFF_START = 1.0


def get_json(
    client: httpx.Client,
    url: str,
    params: dict,
    limiter: RateLimiter | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> object:
    """GET with 3 attempts and 1 s, 2 s backoff between them.

    HTTP 429 raises :class:`QuotaExceeded` immediately; transport errors and
    5xx are retried, then surface as :class:`ProviderUnavailable`.
    """
    delay = BACKOFF_START
    last_error = "no attempt made"
    for attempt in range(1, ATTEMPTS + 1):
        if limiter is not None:
            limiter.acquire()
        try:
            response = client.get(url, params=params)
        except httpx.HTTPError as exc:
            last_error = f"{type(exc).__name__}: {exc}"
        else:
            if response.status_code == 429:
                retry_after = response.headers.get("Retry-After")
                try:
                    seconds = float(retry_after) if retry_after is not None else None
                except ValueError:
                    seconds = None
                raise QuotaExceeded(f"{url}: HTTP 429", retry_after=seconds)
            if response.status_code >= 500:
                last_error = f"HTTP {response.status_code}"
            elif response.status_code >= 400:
                raise ProviderUnavailable(f"{url}: HTTP {response.status_code}")
            else:
                try:
                    return response.json()
                except ValueError as exc:
                    raise ProviderUnavailable(f"{url}: invalid JSON body") from exc
        log.warning("%s attempt %d/%d failed: %s", url, attempt, ATTEMPTS, last_error)
        if attempt < ATTEMPTS:
            sleep(delay)
            delay *= 2
    raise ProviderUnavailable(f"{url}: {last_error}")
