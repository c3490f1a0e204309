"""Name-to-gender providers.

The HTTP client speaks the genderize.io protocol::

    GET <endpoint>?name=<name>&country_id=<CC>
    -> {"name": ..., "gender": "male" | "female" | null, "probability": p, "count": n}

The fixture provider reads a TSV dictionary
``name<TAB>country_or_*<TAB>gender<TAB>probability<TAB>count``.
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

GENDERS = ("female", "male", "none")


@dataclass(frozen=True)
class GenderQuery:
    name: str
    country: str | None = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("gender query needs a name")
        if self.country is not None and not is_country_code(self.country):
            raise ValueError(f"invalid country code {self.country!r}")

    @property
    def cache_key(self) -> str:
        return f"{self.name}|{self.country or '*'}"


@dataclass(frozen=True)
class GenderResponse:
    gender: str
    probability: float
    sample_count: int = 0

    def __post_init__(self):
        if self.gender not in GENDERS:
            raise ValueError(f"invalid gender {self.gender!r}")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability {self.probability} outside [0, 1]")
        if self.gender == "none" and self.probability != 0:
            raise ValueError("gender none requires probability 0")
        if self.sample_count < 0:
            raise ValueError("negative sample count")

    def to_json(self) -> str:
        return json.dumps(
            {"gender": self.gender, "probability": self.probability, "count": self.sample_count}, sort_keys=True
        )

    @classmethod
    def from_json(cls, text: str) -> "GenderResponse":
        obj = json.loads(text)
        return cls(obj["gender"], float(obj["probability"]), int(obj["count"]))


NO_GENDER = GenderResponse("none", 0.0, 0)


class FixtureGenderProvider:
    """Offline dictionary provider; ``calls`` counts every estimate made."""

    name = "fixture"

    def __init__(self, table: dict[tuple[str, str], GenderResponse]):
        self.table = table
        self.calls = 0
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "FixtureGenderProvider":
        table: dict[tuple[str, str], GenderResponse] = {}
        try:
            fh = open(path, encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot read gender fixture {path}: {exc}") from exc
        with fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                cols = line.split("\t")
                if len(cols) != 5:
                    raise IoFailure(f"{path}:{line_no}: expected 5 columns, got {len(cols)}")
                name, country, gender, probability, count = cols
                gender = gender or "none"
                table[(name, country)] = GenderResponse(gender, float(probability), int(count))
        return cls(table)

    def estimate(self, query: GenderQuery) -> GenderResponse:
        with self._lock:
            self.calls += 1
        return self.table.get((query.name, query.country or "*"), NO_GENDER)


class HttpGenderProvider:
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
        self.api_key = api_key if api_key is not None else os.environ.get("GENDER_API_KEY")
        self.client = client or httpx.Client(timeout=30.0)
        self.limiter = limiter
        self.sleep = sleep
        self.calls = 0
        self._lock = threading.Lock()

    def estimate(self, query: GenderQuery) -> GenderResponse:
        params = {"name": query.name}
        if query.country:
            params["country_id"] = query.country
        if self.api_key:
            params["apikey"] = self.api_key
        with self._lock:
            self.calls += 1
        body = get_json(self.client, self.endpoint, params, self.limiter, self.sleep)
        try:
            gender = body.get("gender")
            if gender is None:
                return GenderResponse("none", 0.0, int(body.get("count") or 0))
            return GenderResponse(gender, float(body["probability"]), int(body.get("count") or 0))
        except (AttributeError, KeyError, TypeError, ValueError) as exc:
            raise ProviderUnavailable(f"unexpected gender response {body!r}") from exc


def gender_lookup(query: GenderQuery, provider, cache: ResponseCache) -> GenderResponse:
    """Cache-first gender estimate. Provider errors propagate uncached."""
    text = cache.get_or_fetch(query.cache_key, lambda: provider.estimate(query).to_json())
    return GenderResponse.from_json(text)


def gender_cache_path(cache_dir: str | os.PathLike, provider) -> Path:
    return Path(cache_dir) / f"gender-{provider.name}.jsonl"
