"""Institution-to-country providers.

HTTP protocol::

    GET <endpoint>?q=<institution>
    -> {"candidates": [{"country": "<CC>", "confidence": c}, ...]}   (descending confidence)

Only the top-ranked candidate is kept. The gazetteer provider reads a TSV
``normalized_institution<TAB>country`` and answers with confidence 1.0.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import httpx

from ..countries import is_country_code
from ..errors import IoFailure, ProviderUnavailable
from ._http import get_json
from .cache import ResponseCache
from .ratelimit import RateLimiter


@dataclass(frozen=True)
class GeoResponse:
    country: str | None
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.country is None and self.confidence != 0:
            raise ValueError("absent country requires confidence 0")

    def to_json(self) -> str:
        return json.dumps({"country": self.country, "confidence": self.confidence}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GeoResponse":
        obj = json.loads(text)
        return cls(obj["country"], float(obj["confidence"]))


NO_LOCATION = GeoResponse(None, 0.0)


def gazetteer_key(normalized: str) -> str:
    return normalized.casefold()


class GazetteerProvider:
    """Offline institution table. Matching is case-insensitive on the cleaned name."""

    name = "gazetteer"

    def __init__(self, table: dict[str, str]):
        self.table = {gazetteer_key(k): v for k, v in table.items()}
        self.calls = 0
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "GazetteerProvider":
        table: dict[str, str] = {}
        try:
            fh = open(path, encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot read gazetteer {path}: {exc}") from exc
        with fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                cols = line.split("\t")
                if len(cols) != 2:
                    raise IoFailure(f"{path}:{line_no}: expected 2 columns, got {len(cols)}")
                institution, country = cols
                if not is_country_code(country):
                    raise IoFailure(f"{path}:{line_no}: unknown country code {country!r}")
                # first entry wins: the headquarters row is listed first
                table.setdefault(institution, country)
        return cls(table)

    def locate(self, institution: str) -> GeoResponse:
        with self._lock:
            self.calls += 1
        country = self.table.get(gazetteer_key(institution))
        return GeoResponse(country, 1.0) if country else NO_LOCATION


class HttpGeoProvider:
    name = "http"

    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        client: httpx.Client | None = None,
        limiter: RateLimiter | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.api_key = api_key if api_key is not None else os.environ.get("GEO_API_KEY")
        self.client = client or httpx.Client(timeout=30.0)
        self.limiter = limiter
        self.sleep = sleep
        self.calls = 0
        self._lock = threading.Lock()

    def locate(self, institution: str) -> GeoResponse:
        params = {"q": institution}
        if self.api_key:
            params["key"] = self.api_key
        with self._lock:
            self.calls += 1
        body = get_json(self.client, self.endpoint, params, self.limiter, self.sleep)
        try:
            candidates = body["candidates"]
            if not candidates:
                return NO_LOCATION
            top = candidates[0]
            country = top.get("country")
            if not country:
                return NO_LOCATION
            return GeoResponse(country.upper(), float(top["confidence"]))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ProviderUnavailable(f"unexpected geo response {body!r}") from exc


def geo_lookup(institution, provider, cache: ResponseCache) -> GeoResponse:
    """Cache-first location of a :class:`~gendergap.names.CleanInstitution`."""
    key = institution.normalized
    if not key:
        raise ValueError("institution has no normalized form")
    text = cache.get_or_fetch(key, lambda: provider.locate(key).to_json())
    return GeoResponse.from_json(text)


def geo_cache_path(cache_dir: str | os.PathLike, provider) -> Path:
    return Path(cache_dir) / f"geo-{provider.name}.jsonl"
