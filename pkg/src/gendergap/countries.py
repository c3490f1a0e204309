"""Embedded ISO 3166-1 alpha-2 to continent table."""

from __future__ import annotations

import csv
import hashlib
import io
from functools import lru_cache
from importlib import resources

from .errors import IoFailure, UnknownCountryCode

CONTINENTS = ("AF", "AS", "EU", "NA", "OC", "SA")
UNKNOWN = "UNKNOWN"
TABLE_SHA256 = "bb4cf7eedfb80803faf4934b9a1e36ed2d8be7ad3d9233ed5701c73341477899"


@lru_cache(maxsize=1)
def continent_table() -> dict[str, str]:
    data = resources.files("gendergap").joinpath("data/continents.csv").read_bytes()
    digest = hashlib.sha256(data).hexdigest()
    if digest != TABLE_SHA256:
        raise IoFailure(f"continent table checksum mismatch: {digest}")
    lines = [line for line in data.decode("utf-8").splitlines() if not line.startswith("#")]
    table = {}
    for row in csv.DictReader(io.StringIO("\n".join(lines))):
        table[row["code"]] = row["continent"]
    return table


def is_country_code(code: str | None) -> bool:
    return bool(code) and code in continent_table()


def continent_of(code: str) -> str:
    try:
        return continent_table()[code.upper()]
    except (KeyError, AttributeError):
        raise UnknownCountryCode(str(code)) from None
