from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gendergap.corpus import AuthorshipRecord, Corpus
from gendergap.gendertag import (
    BELOW_THRESHOLD,
    INITIALS_EXCLUDED,
    NAME_AND_COUNTRY,
    NAME_ONLY,
    PROVIDER_UNAVAILABLE,
    GenderTag,
    gender_distribution,
    infer_gender_cascade,
    tag_corpus,
)
from gendergap.geotag import CountryTag
from gendergap.metrics import TaggedAuthorship
from gendergap.names import normalize_name
from gendergap.providers.cache import ResponseCache

from conftest import CountingGenderStub


def cascade(raw, country, stub, threshold=0.95):
    return infer_gender_cascade(normalize_name(raw), country, stub, ResponseCache(), threshold)


def test_country_specific_answer_wins():
    stub = CountingGenderStub({("andrea", "IT"): ("male", 0.97), ("andrea", None): ("female", 0.6)})
    tag = cascade("Andrea Rossi", CountryTag("IT", "EU", 1.0), stub)
    assert tag == GenderTag("male", 0.97, NAME_AND_COUNTRY)
    assert stub.queries == [("andrea", "IT")]


def test_falls_back_to_name_only():
    stub = CountingGenderStub({("maria", "ES"): ("female", 0.9), ("maria", None): ("female", 0.99)})
    tag = cascade("María García", "ES", stub)
    assert tag == GenderTag("female", 0.99, NAME_ONLY)
    assert stub.queries == [("maria", "ES"), ("maria", None)]


def test_unknown_country_skips_first_iteration():
    stub = CountingGenderStub({("pat", None): ("male", 0.6)})
    tag = cascade("Pat Doe", None, stub)
    assert tag == GenderTag("unknown", 0.6, BELOW_THRESHOLD)
    assert stub.queries == [("pat", None)]


def test_initials_never_queried():
    stub = CountingGenderStub()
    assert cascade("J. Smith", "GB", stub).method == INITIALS_EXCLUDED
    assert stub.calls == 0


def test_threshold_is_inclusive():
    stub = CountingGenderStub({("kim", None): ("female", 0.95), ("lee", None): ("male", 0.9499)})
    assert cascade("Kim Park", None, stub).gender == "female"
    assert cascade("Lee Park", None, stub).gender == "unknown"


def test_provider_failure_marks_retryable():
    stub = CountingGenderStub(failing={("pat", None)})
    assert cascade("Pat Doe", None, stub).method == PROVIDER_UNAVAILABLE
    stub = CountingGenderStub({("pat", None): ("male", 0.99)}, failing={("pat", "GB")})
    assert cascade("Pat Doe", "GB", stub) == GenderTag("male", 0.99, NAME_ONLY)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_threshold_monotone(p, t1, t2):
    lo, hi = sorted((t1, t2))
    stub = CountingGenderStub({("sam", None): ("female", p)})
    known_hi = cascade("Sam Ray", None, stub, hi).gender != "unknown"
    known_lo = cascade("Sam Ray", None, stub, lo).gender != "unknown"
    assert known_lo or not known_hi


def _corpus(rows):
    recs = [AuthorshipRecord(pid, name, pos, "X", 2000, "J1") for pid, pos, name in rows]
    return Corpus(recs, {}, {r.paper_id: ("J1", 2000) for r in recs})


def test_tag_corpus_deterministic_and_deduplicated():
    corpus = _corpus([("P1", 1, "Ana Lopez"), ("P1", 2, "Ana Ruiz"), ("P2", 1, "Ána Diaz"), ("P2", 2, "A. Diaz")])
    answers = {("ana", "ES"): ("female", 0.99)}
    geo = {r.key: CountryTag("ES", "EU", 1.0) for r in corpus.authorships}
    results = []
    for jobs in (1, 4):
        stub = CountingGenderStub(answers)
        tags, stats = tag_corpus(corpus, geo, stub, ResponseCache(), jobs=jobs)
        results.append(tags)
        assert stub.calls == 1
        assert stats["methods"] == {INITIALS_EXCLUDED: 1, NAME_AND_COUNTRY: 3}
    assert results[0] == results[1]


def test_distribution_overall():
    rows = [TaggedAuthorship(f"P{i}", 1, 2000, "J", "ES", "EU", g) for i, g in enumerate(["female"] * 1 + ["male"] * 2 + ["unknown"] * 1)]
    by = {r.key: r.values for r in gender_distribution(rows)}
    assert by["female"]["pct"] == 25 and by["male"]["pct"] == 50 and by["unknown"]["pct"] == 25


def test_distribution_by_continent_unknown_majority():
    rows = [TaggedAuthorship(f"P{i}", 1, 2000, "J", "JP", "AS", g) for i, g in enumerate(["female", "unknown", "unknown"])]
    by = {r.key: r.values for r in gender_distribution(rows, "continent")}
    assert by["AS"]["unknown_pct"] == Fraction(200, 3)
    assert by["AS"]["unknown_pct"] > 50
    assert by["EU"]["female_pct"] == 0
    with pytest.raises(ValueError):
        gender_distribution(rows, "country")
