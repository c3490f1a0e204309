"""Enrichment service clients, offline fixture providers and the response cache."""

from .cache import ResponseCache
from .gender import (
    FixtureGenderProvider,
    GenderQuery,
    GenderResponse,
    HttpGenderProvider,
    gender_cache_path,
    gender_lookup,
)
from .geo import GazetteerProvider, GeoResponse, HttpGeoProvider, geo_cache_path, geo_lookup
from .ratelimit import RateLimiter

__all__ = [
    "FixtureGenderProvider",
    "GazetteerProvider",
    "GenderQuery",
    "GenderResponse",
    "GeoResponse",
    "HttpGenderProvider",
    "HttpGeoProvider",
    "RateLimiter",
    "ResponseCache",
    "gender_cache_path",
    "gender_lookup",
    "geo_cache_path",
    "geo_lookup",
]
