"""Run configuration: a flat TOML file plus command-line overrides."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

from .countries import is_country_code
from .errors import ConfigError
from .metrics import DEFAULT_TIMELINE_COUNTRIES
from .names import FAMILY_GIVEN, GIVEN_FAMILY

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_PATH_FIELDS = ("authorships", "journals", "gender_fixture", "gazetteer", "cache_dir", "output_dir")


@dataclass
class RunConfig:
    authorships: Path | None = None
    journals: Path | None = None
    authorships_format: str | None = None
    gender_provider: str = "fixture"
    gender_fixture: Path | None = None
    gender_endpoint: str | None = None
    geo_provider: str = "fixture"
    gazetteer: Path | None = None
    geo_endpoint: str | None = None
    cache_dir: Path | None = None
    gender_threshold: float = 0.95
    geo_min_confidence: float = 0.5
    output_dir: Path = Path("out")
    run_id: str = "run"
    jobs: int = 1
    countries: list[str] = field(default_factory=lambda: list(DEFAULT_TIMELINE_COUNTRIES))
    years: tuple[int, int] | None = None
    formats: list[str] = field(default_factory=lambda: ["csv"])
    name_order: str = GIVEN_FAMILY
    rate_limit: float = 10.0

    @property
    def run_dir(self) -> Path:
        return Path(self.output_dir) / self.run_id

    @property
    def cache_path(self) -> Path:
        return Path(self.cache_dir) if self.cache_dir else Path(self.output_dir) / "cache"

    @property
    def input_format(self) -> str:
        if self.authorships_format:
            return self.authorships_format
        return "jsonl" if self.authorships and str(self.authorships).endswith(".jsonl") else "tsv"

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
        return cls().apply(data, base=path.parent)

    def apply(self, values: dict, base: Path | None = None) -> "RunConfig":
        """Overlay ``values`` (None entries ignored); relative paths resolve against ``base``."""
        names = {f.name for f in fields(self)}
        for key, value in values.items():
            key = key.replace("-", "_")
            if key not in names:
                raise ConfigError(f"unknown config key {key!r}")
            if value is None:
                continue
            if key in _PATH_FIELDS:
                value = Path(value)
                if base is not None and not value.is_absolute():
                    value = base / value
            elif key == "years":
                value = parse_years(value)
            elif key == "countries" and isinstance(value, str):
                value = parse_countries(value)
            elif key == "formats" and isinstance(value, str):
                value = [value]
            setattr(self, key, value)
        return self

    def validate(self, need_inputs: bool = True) -> "RunConfig":
        if not 0.0 <= float(self.gender_threshold) <= 1.0:
            raise ConfigError("gender_threshold must be in [0, 1]")
        if not 0.0 <= float(self.geo_min_confidence) <= 1.0:
            raise ConfigError("geo_min_confidence must be in [0, 1]")
        if int(self.jobs) < 1:
            raise ConfigError("jobs must be >= 1")
        if self.name_order not in (GIVEN_FAMILY, FAMILY_GIVEN):
            raise ConfigError(f"name_order must be {GIVEN_FAMILY} or {FAMILY_GIVEN}")
        if self.input_format not in ("tsv", "jsonl"):
            raise ConfigError("authorships_format must be tsv or jsonl")
        for fmt in self.formats:
            if fmt not in ("csv", "json", "svg"):
                raise ConfigError(f"unsupported format {fmt!r}")
        for code in self.countries:
            if not is_country_code(code):
                raise ConfigError(f"unknown country code {code!r}")
        if self.years is not None and self.years[0] > self.years[1]:
            raise ConfigError("years window is reversed")
        if self.gender_provider not in ("fixture", "http"):
            raise ConfigError("gender_provider must be fixture or http")
        if self.geo_provider not in ("fixture", "http"):
            raise ConfigError("geo_provider must be fixture or http")
        if self.rate_limit <= 0:
            raise ConfigError("rate_limit must be positive")
        if need_inputs:
            self.require_file("authorships")
            self.require_file("journals")
        return self

    def require_file(self, name: str) -> Path:
        value = getattr(self, name)
        if value is None:
            raise ConfigError(f"{name} is not configured")
        if not Path(value).is_file():
            raise ConfigError(f"{name}: no such file {value}")
        return Path(value)


def parse_years(value) -> tuple[int, int]:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        first, last = value
    elif isinstance(value, str) and ":" in value:
        first, _, last = value.partition(":")
    else:
        raise ConfigError(f"years must look like FROM:TO, got {value!r}")
    try:
        return int(first), int(last)
    except ValueError:
        raise ConfigError(f"years must be integers, got {value!r}") from None


def parse_countries(value: str) -> list[str]:
    return [c.strip().upper() for c in value.split(",") if c.strip()]
