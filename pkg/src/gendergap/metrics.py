"""Gender gap index, paper classification and grouped aggregates.

All arithmetic is exact (``fractions.Fraction``); rounding happens only when a
report is rendered.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Sequence, TypeVar

from .corpus import Corpus, JcrArea
from .errors import EmptyPaper, NoKnownGender

DEFAULT_TIMELINE_COUNTRIES = ("GB", "DE", "FR", "IT", "ES")

T = TypeVar("T")


@dataclass
class AggregateRow:
    """One row of a grouped report.

    ``dimension`` names what ``key`` is (continent, country, area, year,
    bucket, gender). ``group`` is set for two-level reports such as the
    per-country timeline, where it holds the outer key.
    """

    dimension: str
    key: str
    values: dict = field(default_factory=dict)
    group: str = ""


class TaggedAuthorship(NamedTuple):
    paper_id: str
    position: int
    year: int
    journal_id: str
    country: str | None
    continent: str
    gender: str  # female | male | unknown


class Bucket(str, Enum):
    ALL_FEMALE = "ALL_FEMALE"
    MAJORITY_FEMALE = "MAJORITY_FEMALE"
    BALANCED = "BALANCED"
    MAJORITY_MALE = "MAJORITY_MALE"
    ALL_MALE = "ALL_MALE"
    UNKNOWN_DOMINANT = "UNKNOWN_DOMINANT"


@dataclass(frozen=True)
class PaperGenderProfile:
    paper_id: str
    f: int
    m: int
    u: int

    @property
    def total(self) -> int:
        return self.f + self.m + self.u

    @property
    def gap_index(self) -> Fraction:
        return gap_index(self.f, self.m, self.u)

    @property
    def known_gap(self) -> Fraction | None:
        if self.f + self.m == 0:
            return None
        return known_gap(self.f, self.m)

    @property
    def bucket(self) -> Bucket:
        return classify(self)


def _check_counts(*counts: int) -> None:
    for c in counts:
        if c < 0:
            raise ValueError(f"negative count {c}")


def gap_index(f: int, m: int, u: int) -> Fraction:
    """``(f - m + u) / (f + m + u)``, unknown authors counted on the female side."""
    _check_counts(f, m, u)
    total = f + m + u
    if total == 0:
        raise EmptyPaper("gap index of a paper with no authors")
    return Fraction(f - m + u, total)


def known_gap(f: int, m: int) -> Fraction:
    """``(f - m) / (f + m)``: the index restricted to known-gender authors."""
    _check_counts(f, m)
    if f + m == 0:
        raise NoKnownGender("no author of known gender")
    return Fraction(f - m, f + m)


def classify(profile: PaperGenderProfile) -> Bucket:
    f, m, u = profile.f, profile.m, profile.u
    total = f + m + u
    if total == 0:
        raise EmptyPaper(f"paper {profile.paper_id!r} has no authors")
    if 2 * u > total:
        return Bucket.UNKNOWN_DOMINANT
    if f == total:
        return Bucket.ALL_FEMALE
    if m == total:
        return Bucket.ALL_MALE
    if f > m:
        return Bucket.MAJORITY_FEMALE
    if m > f:
        return Bucket.MAJORITY_MALE
    return Bucket.BALANCED


def female_pct(f: int, m: int) -> Fraction:
    """Female share of known-gender authorships, in percent."""
    _check_counts(f, m)
    if f + m == 0:
        raise NoKnownGender("female percentage undefined without known-gender authorships")
    return Fraction(100 * f, f + m)


def pct(part: int, whole: int) -> Fraction:
    return Fraction(100 * part, whole) if whole else Fraction(0)


# --------------------------------------------------------------------------
# map-reduce


def _chunks(items: Sequence[T], n: int) -> list[Sequence[T]]:
    n = max(1, min(n, len(items)))
    size = -(-len(items) // n) if items else 0
    return [items[i : i + size] for i in range(0, len(items), size)] if items else []


def map_reduce(items: Sequence[T], mapper: Callable[[Sequence[T]], Counter], jobs: int = 1) -> Counter:
    """Apply ``mapper`` to contiguous chunks and sum the resulting counters.

    Counter addition is associative and commutative, so the result does not
    depend on ``jobs``.
    """
    chunks = _chunks(items, jobs)
    total: Counter = Counter()
    if jobs <= 1 or len(chunks) <= 1:
        for chunk in chunks:
            total.update(mapper(chunk))
        return total
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for partial in pool.map(mapper, chunks):
            total.update(partial)
    return total


# --------------------------------------------------------------------------
# per-paper profiles


def _count_genders(chunk: Sequence[TaggedAuthorship]) -> Counter:
    return Counter((a.paper_id, a.gender) for a in chunk)


def paper_profiles(tagged: Sequence[TaggedAuthorship], jobs: int = 1) -> list[PaperGenderProfile]:
    """Order-free female/male/unknown counts per paper, sorted by paper id."""
    counts = map_reduce(tagged, _count_genders, jobs)
    papers = sorted({pid for pid, _ in counts})
    return [
        PaperGenderProfile(pid, counts[(pid, "female")], counts[(pid, "male")], counts[(pid, "unknown")])
        for pid in papers
    ]


def bucket_distribution(profiles: Iterable[PaperGenderProfile]) -> list[AggregateRow]:
    counts = Counter(classify(p) for p in profiles)
    total = sum(counts.values())
    return [
        AggregateRow("bucket", b.value, {"papers": counts[b], "pct": pct(counts[b], total)})
        for b in Bucket
    ]


def area_gap_distribution(profiles: Iterable[PaperGenderProfile], corpus: Corpus) -> list[AggregateRow]:
    """Bucket distribution per JCR area plus mean index values.

    A paper whose journal holds k areas contributes to k rows.
    """
    buckets: dict[JcrArea, Counter] = {area: Counter() for area in JcrArea}
    gap_sum: dict[JcrArea, Fraction] = {area: Fraction(0) for area in JcrArea}
    known_sum: dict[JcrArea, Fraction] = {area: Fraction(0) for area in JcrArea}
    known_n: Counter = Counter()
    for p in profiles:
        bucket = classify(p)
        g = gap_index(p.f, p.m, p.u)
        k = p.known_gap
        for area in corpus.areas_of_paper(p.paper_id):
            buckets[area][bucket] += 1
            gap_sum[area] += g
            if k is not None:
                known_sum[area] += k
                known_n[area] += 1

    rows = []
    for area in JcrArea:
        n = sum(buckets[area].values())
        values: dict = {"papers": n}
        for b in Bucket:
            values[b.value.lower()] = buckets[area][b]
        for b in Bucket:
            values[b.value.lower() + "_pct"] = pct(buckets[area][b], n)
        values["mean_gap_index"] = gap_sum[area] / n if n else None
        values["mean_known_gap"] = known_sum[area] / known_n[area] if known_n[area] else None
        rows.append(AggregateRow("area", area.value, values))
    return rows


def _count_timeline(chunk: Sequence[TaggedAuthorship]) -> Counter:
    return Counter((a.country, a.year, a.gender) for a in chunk if a.gender != "unknown")


def country_timeline(
    tagged: Sequence[TaggedAuthorship],
    countries: Sequence[str] = DEFAULT_TIMELINE_COUNTRIES,
    year_window: tuple[int, int] | None = None,
    jobs: int = 1,
) -> list[AggregateRow]:
    """Female and male authorship percentages per (country, year).

    Unknown-gender authorships are left out, on the assumption that they
    split like the known ones. Every cell of the window is emitted; cells
    without known-gender authorships carry empty percentages.
    """
    if year_window is None:
        year_window = default_year_window(a.year for a in tagged)
    first, last = year_window
    counts = map_reduce(tagged, _count_timeline, jobs)
    rows = []
    for country in countries:
        for year in range(first, last + 1):
            f = counts[(country, year, "female")]
            m = counts[(country, year, "male")]
            rows.append(
                AggregateRow(
                    "year",
                    str(year),
                    {
                        "female": f,
                        "male": m,
                        "female_pct": female_pct(f, m) if f + m else None,
                        "male_pct": female_pct(m, f) if f + m else None,
                    },
                    group=country,
                )
            )
    return rows


def default_year_window(years: Iterable[int], span: int = 50) -> tuple[int, int]:
    """The ``span`` most recent years ending at the latest year present."""
    latest = max(years, default=None)
    if latest is None:
        return (0, -1)
    return (latest - span + 1, latest)
