"""Parsing of JCR journal lists and authorship exports, and the JCR join.

Two authorship encodings are accepted, both UTF-8 with one record per line:

* TSV with the columns ``paper_id author_name_raw author_position
  affiliation_raw year journal_id`` (no quoting);
* JSONL objects with exactly the keys ``paper_id, author_name, position,
  affiliation, year, journal_id``.

Parsing is streaming. A malformed line becomes a :class:`RecordError` in the
output stream and never aborts iteration.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import IO, Iterable, Iterator

from .errors import DuplicateConflict, IoFailure, MalformedRow, UnknownArea

YEAR_MIN = 1900
YEAR_MAX = 2100

TSV_COLUMNS = ("paper_id", "author_name_raw", "author_position", "affiliation_raw", "year", "journal_id")
JSONL_KEYS = ("paper_id", "author_name", "position", "affiliation", "year", "journal_id")
JCR_HEADER = ("journal_id", "name", "area", "impact_factor", "total_cites", "eigenfactor", "jcr_year")


class JcrArea(str, Enum):
    CS_IS = "CS_IS"
    CS_AI = "CS_AI"
    CS_SE = "CS_SE"
    CS_INTER = "CS_INTER"
    CS_TM = "CS_TM"
    CS_HA = "CS_HA"
    CS_CYB = "CS_CYB"

    @classmethod
    def parse(cls, value: str) -> "JcrArea":
        try:
            return cls(value.strip())
        except ValueError:
            raise UnknownArea(value) from None


@dataclass(frozen=True)
class AuthorshipRecord:
    paper_id: str
    author_name_raw: str
    author_position: int
    affiliation_raw: str
    year: int
    journal_id: str

    @property
    def key(self) -> tuple[str, int]:
        return (self.paper_id, self.author_position)


@dataclass(frozen=True)
class RecordError:
    line_no: int
    reason: str


@dataclass(frozen=True)
class JournalRecord:
    journal_id: str
    name: str
    areas: frozenset[JcrArea]
    impact_factor: Decimal
    total_cites: int
    eigenfactor: Decimal
    jcr_year: int


@dataclass
class Corpus:
    authorships: list[AuthorshipRecord]
    journals: dict[str, JournalRecord]
    papers: dict[str, tuple[str, int]]
    drops: Counter = field(default_factory=Counter)

    def areas_of_paper(self, paper_id: str) -> frozenset[JcrArea]:
        return self.journals[self.papers[paper_id][0]].areas


# --------------------------------------------------------------------------
# journals


def _nonneg_decimal(text: str, line_no: int, column: str) -> Decimal:
    try:
        value = Decimal(text.strip())
    except InvalidOperation:
        raise MalformedRow(line_no, f"{column} is not a number") from None
    if value < 0 or not value.is_finite():
        raise MalformedRow(line_no, f"{column} must be non-negative")
    return value


def _nonneg_int(text: str, line_no: int, column: str) -> int:
    try:
        value = int(text.strip())
    except ValueError:
        raise MalformedRow(line_no, f"{column} is not an integer") from None
    if value < 0:
        raise MalformedRow(line_no, f"{column} must be non-negative")
    return value


def parse_journals(stream: IO[bytes] | IO[str]) -> list[JournalRecord]:
    """Parse a JCR CSV with one row per (journal, area) pair.

    Rows sharing a ``journal_id`` are merged and their areas unioned. A
    journal whose rows disagree on ``impact_factor`` raises
    :class:`DuplicateConflict`.
    """
    text = stream.read()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        return []
    if tuple(h.strip() for h in header) != JCR_HEADER:
        raise MalformedRow(1, "unexpected header")

    merged: dict[str, dict] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(JCR_HEADER):
            raise MalformedRow(line_no)
        journal_id, name, area, impact, cites, eigen, jcr_year = (c.strip() for c in row)
        if not journal_id:
            raise MalformedRow(line_no, "empty journal_id")
        area_value = JcrArea.parse(area)
        impact_value = _nonneg_decimal(impact, line_no, "impact_factor")
        entry = merged.get(journal_id)
        if entry is None:
            merged[journal_id] = {
                "name": name,
                "areas": {area_value},
                "impact_factor": impact_value,
                "total_cites": _nonneg_int(cites, line_no, "total_cites"),
                "eigenfactor": _nonneg_decimal(eigen, line_no, "eigenfactor"),
                "jcr_year": _nonneg_int(jcr_year, line_no, "jcr_year"),
            }
            continue
        if entry["impact_factor"] != impact_value:
            raise DuplicateConflict(
                f"journal {journal_id}: impact_factor {entry['impact_factor']} vs {impact_value} (line {line_no})"
            )
        entry["areas"].add(area_value)

    return [
        JournalRecord(journal_id=jid, **{**data, "areas": frozenset(data["areas"])})
        for jid, data in sorted(merged.items())
    ]


# --------------------------------------------------------------------------
# authorships


def _validate(paper_id, name, position, affiliation, year, journal_id) -> AuthorshipRecord | str:
    if not paper_id:
        return "empty paper_id"
    if position < 1:
        return "author_position must be >= 1"
    if not YEAR_MIN <= year <= YEAR_MAX:
        return f"year {year} outside [{YEAR_MIN}, {YEAR_MAX}]"
    return AuthorshipRecord(paper_id, name, position, affiliation, year, journal_id)


def _parse_tsv_line(line: str) -> AuthorshipRecord | str:
    cols = line.split("\t")
    if len(cols) != len(TSV_COLUMNS):
        return "column count"
    paper_id, name, position, affiliation, year, journal_id = cols
    try:
        position_value = int(position)
    except ValueError:
        return "author_position is not an integer"
    try:
        year_value = int(year)
    except ValueError:
        return "year is not an integer"
    return _validate(paper_id, name, position_value, affiliation, year_value, journal_id)


def _parse_jsonl_line(line: str) -> AuthorshipRecord | str:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        return f"invalid JSON: {exc.msg}"
    if not isinstance(obj, dict):
        return "not a JSON object"
    if set(obj) != set(JSONL_KEYS):
        return "key set mismatch"
    for key in ("paper_id", "author_name", "affiliation", "journal_id"):
        if not isinstance(obj[key], str):
            return f"{key} must be a string"
    for key in ("position", "year"):
        if type(obj[key]) is not int:
            return f"{key} must be an integer"
    return _validate(
        obj["paper_id"], obj["author_name"], obj["position"], obj["affiliation"], obj["year"], obj["journal_id"]
    )


def parse_authorships(stream: IO[bytes], format: str = "tsv") -> Iterator[AuthorshipRecord | RecordError]:
    """Stream authorship records from a binary stream.

    Blank lines are skipped. An ``OSError`` while reading ends iteration with
    :class:`IoFailure`.
    """
    if format == "tsv":
        parse_line = _parse_tsv_line
    elif format == "jsonl":
        parse_line = _parse_jsonl_line
    else:
        raise ValueError(f"unsupported authorship format {format!r}")

    line_no = 0
    while True:
        try:
            raw = stream.readline()
        except OSError as exc:
            raise IoFailure(f"read failed after line {line_no}: {exc}") from exc
        if not raw:
            return
        line_no += 1
        try:
            line = raw.decode("utf-8")
        except UnicodeDecodeError:
            yield RecordError(line_no, "invalid UTF-8")
            continue
        line = line.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        result = parse_line(line)
        if isinstance(result, str):
            yield RecordError(line_no, result)
        else:
            yield result


def authorship_to_json(record: AuthorshipRecord) -> str:
    return json.dumps(
        {
            "paper_id": record.paper_id,
            "author_name": record.author_name_raw,
            "position": record.author_position,
            "affiliation": record.affiliation_raw,
            "year": record.year,
            "journal_id": record.journal_id,
        },
        ensure_ascii=False,
    )


def authorship_to_tsv(record: AuthorshipRecord) -> str:
    fields = (
        record.paper_id,
        record.author_name_raw,
        str(record.author_position),
        record.affiliation_raw,
        str(record.year),
        record.journal_id,
    )
    for value in fields:
        if "\t" in value or "\n" in value:
            raise ValueError(f"value {value!r} cannot be written to unquoted TSV")
    return "\t".join(fields)


def write_authorships_jsonl(records: Iterable[AuthorshipRecord], stream: IO[str]) -> int:
    n = 0
    for record in records:
        stream.write(authorship_to_json(record))
        stream.write("\n")
        n += 1
    return n


def write_journals_csv(journals: Iterable[JournalRecord], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(JCR_HEADER)
    for j in sorted(journals, key=lambda j: j.journal_id):
        for area in sorted(j.areas, key=lambda a: a.value):
            writer.writerow(
                [j.journal_id, j.name, area.value, str(j.impact_factor), j.total_cites, str(j.eigenfactor), j.jcr_year]
            )


# --------------------------------------------------------------------------
# join


def join_jcr(
    authorships: Iterable[AuthorshipRecord | RecordError], journals: Iterable[JournalRecord]
) -> Corpus:
    """Keep authorships published in a JCR journal; count everything else.

    Drop reasons: ``malformed`` (a :class:`RecordError` in the input),
    ``not_in_jcr``, ``duplicate`` (repeated ``(paper_id, author_position)``;
    first occurrence wins) and ``paper_conflict`` (a paper seen earlier with a
    different journal or year).
    """
    journal_map = {j.journal_id: j for j in journals}
    kept: list[AuthorshipRecord] = []
    papers: dict[str, tuple[str, int]] = {}
    seen: set[tuple[str, int]] = set()
    drops: Counter = Counter()
    for record in authorships:
        if isinstance(record, RecordError):
            drops["malformed"] += 1
            continue
        if record.journal_id not in journal_map:
            drops["not_in_jcr"] += 1
            continue
        if record.key in seen:
            drops["duplicate"] += 1
            continue
        meta = (record.journal_id, record.year)
        known = papers.setdefault(record.paper_id, meta)
        if known != meta:
            drops["paper_conflict"] += 1
            continue
        seen.add(record.key)
        kept.append(record)
    return Corpus(authorships=kept, journals=journal_map, papers=papers, drops=drops)


def corpus_stats(corpus: Corpus) -> list:
    """Journals, publications and authorships per JCR area.

    A paper in a journal with k areas counts once in each of those k areas.
    """
    from .metrics import AggregateRow

    journals: Counter = Counter()
    for j in corpus.journals.values():
        journals.update(j.areas)
    publications: Counter = Counter()
    for journal_id, _year in corpus.papers.values():
        publications.update(corpus.journals[journal_id].areas)
    authorships: Counter = Counter()
    for record in corpus.authorships:
        authorships.update(corpus.journals[record.journal_id].areas)
    return [
        AggregateRow(
            "area",
            area.value,
            {"journals": journals[area], "publications": publications[area], "authorships": authorships[area]},
        )
        for area in JcrArea
    ]
