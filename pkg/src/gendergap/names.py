"""Author name and institution string cleaning."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from typing import Mapping

from .errors import EmptyInstitution, EmptyName

GIVEN_FAMILY = "given-family"
FAMILY_GIVEN = "family-given"

# "J", "J.", and dotted runs such as "J.M." or "J.-L."
_INITIAL = re.compile(r"^(?:[^\W\d_]\.?|(?:[^\W\d_]\.-?)+)$")
_REPEATED_PUNCT = re.compile(r"([^\w\s])\1+")
_EDGE_PUNCT = " \t,;:/|-_*#~"


@dataclass(frozen=True)
class CleanName:
    raw: str
    first_token: str
    initials_only: bool
    normalized: str


@dataclass(frozen=True)
class CleanInstitution:
    raw: str
    normalized: str


def strip_diacritics(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text)
    return unicodedata.normalize("NFC", "".join(c for c in decomposed if not unicodedata.combining(c)))


def name_key(token: str) -> str:
    """Cache/lookup key for a given name: NFC, diacritics stripped, lowercase."""
    return strip_diacritics(unicodedata.normalize("NFC", token)).lower()


def is_initial(token: str) -> bool:
    return bool(_INITIAL.match(token))


def _given_tokens(text: str, order: str) -> list[str]:
    if "," in text:
        # "Family, Given" overrides the configured order
        family, _, given = text.partition(",")
        tokens = given.replace(",", " ").split()
        return tokens or family.split()
    tokens = text.split()
    if len(tokens) <= 1:
        return tokens
    if order == FAMILY_GIVEN:
        return tokens[1:]
    return tokens[:-1]


def normalize_name(raw: str, order: str = GIVEN_FAMILY) -> CleanName:
    """Extract the given-name token used as the gender inference key.

    Composed given names keep only their first word ("José María" gives
    "José"); hyphenated names stay whole. Initials are skipped, so
    "J. Michael Smith" yields "Michael". If every given-name token is an
    initial the name is ``initials_only`` and has no key.
    """
    if order not in (GIVEN_FAMILY, FAMILY_GIVEN):
        raise ValueError(f"unknown name order {order!r}")
    if raw is None or not raw.strip():
        raise EmptyName("empty author name")
    text = unicodedata.normalize("NFC", raw)
    tokens = [t.strip(".,;") if not is_initial(t) else t for t in _given_tokens(text, order)]
    tokens = [t for t in tokens if t]
    for token in tokens:
        if not is_initial(token):
            return CleanName(raw, token, False, name_key(token))
    return CleanName(raw, "", True, "")


def clean_institution(raw: str) -> CleanInstitution:
    """Trim and collapse whitespace, drop control characters, keep case and diacritics."""
    text = unicodedata.normalize("NFC", raw or "")
    text = "".join(" " if c.isspace() else c for c in text if c.isspace() or unicodedata.category(c)[0] != "C")
    text = " ".join(text.split())
    text = _REPEATED_PUNCT.sub(r"\1", text)
    text = text.strip(_EDGE_PUNCT)
    if not any(c.isalpha() for c in text):
        raise EmptyInstitution(f"no letters in institution {raw!r}")
    return CleanInstitution(raw, text)


def distinct_name_keys(
    corpus, country_tags: Mapping[tuple[str, int], object] | None = None, order: str = GIVEN_FAMILY
) -> tuple[set[str], set[tuple[str, str]]]:
    """Distinct normalized first names, and distinct (name, country) pairs.

    Pairs are only formed for authorships whose country tag carries a
    country. Initials-only names appear in neither set.
    """
    names: set[str] = set()
    pairs: set[tuple[str, str]] = set()
    for record in corpus.authorships:
        try:
            clean = normalize_name(record.author_name_raw, order)
        except EmptyName:
            continue
        if clean.initials_only:
            continue
        names.add(clean.normalized)
        tag = country_tags.get(record.key) if country_tags else None
        country = getattr(tag, "country", None)
        if country:
            pairs.add((clean.normalized, country))
    return names, pairs

