"""Country and continent tagging of authorships from their affiliation."""

from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

from .countries import CONTINENTS, UNKNOWN, continent_of, is_country_code
from .corpus import Corpus
from .errors import EmptyInstitution, ProviderUnavailable
from .metrics import AggregateRow, TaggedAuthorship, pct
from .names import CleanInstitution, clean_institution
from .providers.cache import ResponseCache
from .providers.geo import geo_lookup

log = logging.getLogger(__name__)

DEFAULT_MIN_CONFIDENCE = 0.5

__all__ = ["CountryTag", "continent_of", "continent_distribution", "resolve_country", "tag_corpus"]


@dataclass(frozen=True)
class CountryTag:
    country: str | None
    continent: str
    confidence: float
    deferred: bool = False

    def __post_init__(self):
        if self.country is None:
            if self.continent != UNKNOWN or self.confidence != 0:
                raise ValueError("absent country must be UNKNOWN with confidence 0")
        elif self.continent != continent_of(self.country):
            raise ValueError(f"{self.country} is not in {self.continent}")


UNKNOWN_TAG = CountryTag(None, UNKNOWN, 0.0)


def resolve_country(
    institution: CleanInstitution | None,
    providers: Sequence,
    caches: Mapping[str, ResponseCache],
    min_confidence: float = DEFAULT_MIN_CONFIDENCE,
) -> CountryTag:
    """Ask each provider in order (gazetteer first) until one answers confidently.

    Answers below ``min_confidence`` or with a code outside the continent
    table count as no answer. If a provider was unavailable and nobody else
    answered, the tag is UNKNOWN with ``deferred`` set so a later run can
    retry.
    """
    if not 0.0 <= min_confidence <= 1.0:
        raise ValueError("min_confidence must be in [0, 1]")
    if institution is None or not institution.normalized:
        return UNKNOWN_TAG
    deferred = False
    for provider in providers:
        try:
            response = geo_lookup(institution, provider, caches[provider.name])
        except ProviderUnavailable as exc:
            log.warning("geo provider %s unavailable for %r: %s", provider.name, institution.normalized, exc)
            deferred = True
            continue
        if response.country is None or response.confidence < min_confidence:
            continue
        if not is_country_code(response.country):
            log.warning("provider %s returned unknown code %r", provider.name, response.country)
            continue
        return CountryTag(response.country, continent_of(response.country), response.confidence)
    return CountryTag(None, UNKNOWN, 0.0, deferred=deferred)


def _clean_or_none(raw: str) -> CleanInstitution | None:
    try:
        return clean_institution(raw)
    except EmptyInstitution:
        return None


def tag_corpus(
    corpus: Corpus,
    providers: Sequence,
    caches: Mapping[str, ResponseCache],
    min_confidence: float = DEFAULT_MIN_CONFIDENCE,
    jobs: int = 1,
) -> tuple[dict[tuple[str, int], CountryTag], dict]:
    """Tag every authorship; lookups run once per distinct cleaned institution."""
    cleaned: dict[str, CleanInstitution | None] = {}
    for record in corpus.authorships:
        if record.affiliation_raw not in cleaned:
            cleaned[record.affiliation_raw] = _clean_or_none(record.affiliation_raw)
    distinct = sorted({c.normalized: c for c in cleaned.values() if c is not None}.items())

    calls_before = sum(p.calls for p in providers)

    def work(item):
        return item[0], resolve_country(item[1], providers, caches, min_confidence)

    if jobs > 1 and len(distinct) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            resolved = dict(pool.map(work, distinct))
    else:
        resolved = dict(map(work, distinct))

    tags: dict[tuple[str, int], CountryTag] = {}
    for record in corpus.authorships:
        clean = cleaned[record.affiliation_raw]
        tags[record.key] = UNKNOWN_TAG if clean is None else resolved[clean.normalized]

    stats = {
        "institutions": len(distinct),
        "resolved_institutions": sum(1 for t in resolved.values() if t.country),
        "deferred_institutions": sum(1 for t in resolved.values() if t.deferred),
        "empty_affiliations": sum(1 for r in corpus.authorships if cleaned[r.affiliation_raw] is None),
        "tagged_authorships": sum(1 for t in tags.values() if t.country),
        "authorships": len(tags),
        "provider_calls": sum(p.calls for p in providers) - calls_before,
    }
    return tags, stats


def continent_distribution(tagged: Sequence[TaggedAuthorship]) -> list[AggregateRow]:
    """Share of authorships per continent, UNKNOWN included."""
    counts = Counter(a.continent for a in tagged)
    total = len(tagged)
    return [
        AggregateRow("continent", c, {"authorships": counts[c], "pct": pct(counts[c], total)})
        for c in (*CONTINENTS, UNKNOWN)
    ]
