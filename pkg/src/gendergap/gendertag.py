"""Two-iteration gender inference from first names."""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import Corpus
from .countries import CONTINENTS, UNKNOWN
from .errors import EmptyName, ProviderUnavailable
from .metrics import AggregateRow, TaggedAuthorship, pct
from .names import GIVEN_FAMILY, CleanName, normalize_name
from .providers.cache import ResponseCache
from .providers.gender import GenderQuery, gender_lookup

DEFAULT_THRESHOLD = 0.95

NAME_AND_COUNTRY = "name_and_country"
NAME_ONLY = "name_only"
INITIALS_EXCLUDED = "initials_excluded"
BELOW_THRESHOLD = "below_threshold"
PROVIDER_UNAVAILABLE = "provider_unavailable"

GENDERS = ("female", "male", "unknown")


@dataclass(frozen=True)
class GenderTag:
    gender: str
    probability: float
    method: str


INITIALS_TAG = GenderTag("unknown", 0.0, INITIALS_EXCLUDED)


def infer_gender_cascade(
    name: CleanName,
    country,
    provider,
    cache: ResponseCache,
    threshold: float = DEFAULT_THRESHOLD,
) -> GenderTag:
    """Tag one name: (name, country) first, then name alone.

    An estimate is accepted iff its probability is >= ``threshold``.
    ``country`` is a :class:`~gendergap.geotag.CountryTag`, a bare ISO code
    or None. Initials-only names never reach the provider. The first iteration is
    skipped when the affiliation country is unknown. If nothing is accepted
    and any attempted lookup failed, the tag is ``provider_unavailable`` so
    the authorship can be retried.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    if name.initials_only or not name.normalized:
        return INITIALS_TAG

    failed = False
    best = 0.0
    code = country if isinstance(country, str) else getattr(country, "country", None)
    queries = [(GenderQuery(name.normalized, code), NAME_AND_COUNTRY)] if code else []
    queries.append((GenderQuery(name.normalized), NAME_ONLY))
    for query, method in queries:
        try:
            response = gender_lookup(query, provider, cache)
        except ProviderUnavailable:
            failed = True
            continue
        if response.gender != "none" and response.probability >= threshold:
            return GenderTag(response.gender, response.probability, method)
        best = max(best, response.probability)
    if failed:
        return GenderTag("unknown", best, PROVIDER_UNAVAILABLE)
    return GenderTag("unknown", best, BELOW_THRESHOLD)


def tag_corpus(
    corpus: Corpus,
    country_tags: Mapping[tuple[str, int], object],
    provider,
    cache: ResponseCache,
    threshold: float = DEFAULT_THRESHOLD,
    jobs: int = 1,
    order: str = GIVEN_FAMILY,
) -> tuple[dict[tuple[str, int], GenderTag], dict]:
    """Run the cascade once per distinct (name, country) and fan out to authorships."""
    keyed: dict[tuple[str, int], tuple[str, str | None] | None] = {}
    clean_by_key: dict[str, CleanName] = {}
    empty_names = 0
    for record in corpus.authorships:
        try:
            clean = normalize_name(record.author_name_raw, order)
        except EmptyName:
            empty_names += 1
            keyed[record.key] = None
            continue
        if clean.initials_only:
            keyed[record.key] = None
            continue
        tag = country_tags.get(record.key)
        country = getattr(tag, "country", None)
        keyed[record.key] = (clean.normalized, country)
        clean_by_key.setdefault(clean.normalized, clean)

    distinct = sorted({k for k in keyed.values() if k is not None}, key=lambda k: (k[0], k[1] or ""))
    calls_before = provider.calls

    def work(key):
        name, country = key
        return key, infer_gender_cascade(clean_by_key[name], country, provider, cache, threshold)

    if jobs > 1 and len(distinct) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            resolved = dict(pool.map(work, distinct))
    else:
        resolved = dict(map(work, distinct))

    tags = {akey: INITIALS_TAG if k is None else resolved[k] for akey, k in keyed.items()}
    methods = Counter(t.method for t in tags.values())
    genders = Counter(t.gender for t in tags.values())
    stats = {
        "authorships": len(tags),
        "distinct_keys": len(distinct),
        "female": genders["female"],
        "male": genders["male"],
        "unknown": genders["unknown"],
        "empty_names": empty_names,
        "methods": dict(sorted(methods.items())),
        "provider_calls": provider.calls - calls_before,
    }
    return tags, stats


def gender_distribution(tagged: Sequence[TaggedAuthorship], group_by: str = "none") -> list[AggregateRow]:
    """Female/male/unknown shares, overall or per continent (one wide row each)."""
    if group_by == "none":
        counts = Counter(a.gender for a in tagged)
        total = len(tagged)
        return [AggregateRow("gender", g, {"authorships": counts[g], "pct": pct(counts[g], total)}) for g in GENDERS]
    if group_by != "continent":
        raise ValueError(f"unsupported grouping {group_by!r}")
    counts = Counter((a.continent, a.gender) for a in tagged)
    rows = []
    for continent in (*CONTINENTS, UNKNOWN):
        n = sum(counts[(continent, g)] for g in GENDERS)
        values: dict = {g: counts[(continent, g)] for g in GENDERS}
        values.update({f"{g}_pct": pct(counts[(continent, g)], n) for g in GENDERS})
        rows.append(AggregateRow("continent", continent, values))
    return rows
