"""Synthetic authorship corpora with ground truth, and a brute-force oracle.

``generate`` writes a corpus plus offline fixtures built so that the
pipeline recovers every ground-truth gender and country exactly: known
authors get dictionary names whose fixture entries clear the 0.95
threshold in one of the two cascade iterations, unknown authors are
written as initials. ``oracle_aggregates`` recomputes every report from the
truth table with plain loops and exact fractions; it deliberately shares no
aggregation code with :mod:`gendergap.metrics`.

Randomness comes only from ``random.Random(seed).random()`` (MT19937),
whose output stream is fixed across platforms and Python versions.
"""

from __future__ import annotations

import csv
import json
import math
import os
import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from .corpus import JcrArea
from .countries import CONTINENTS, UNKNOWN, continent_of, is_country_code
from .errors import InvalidManifest
from .metrics import AggregateRow, Bucket

RNG_NAME = "python-mt19937"
UNRESOLVED = "-"  # country-mix key for institutions absent from the gazetteer

AUTHORSHIPS_FILE = "authorships.tsv"
JOURNALS_FILE = "journals.csv"
GENDER_FIXTURE_FILE = "gender_fixture.tsv"
GAZETTEER_FILE = "gazetteer.tsv"
TRUTH_FILE = "truth.tsv"
MANIFEST_FILE = "manifest.json"
TRUTH_HEADER = ("paper_id", "author_position", "true_gender", "true_country", "year", "areas")

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"
_ACCENTED = {"a": "á", "e": "é", "i": "í", "o": "ó", "u": "ú"}
_SYLLABLES = [c + v for c in _CONSONANTS for v in _VOWELS]


@dataclass
class SynthManifest:
    seed: int = 42
    paper_count: int = 1000
    authors_per_paper: dict = field(default_factory=lambda: {"min": 1, "max": 9})
    pf: float = 0.2
    pm: float = 0.6
    pu: float = 0.2
    country_mix: dict = field(default_factory=lambda: {"GB": 1, "DE": 1, "FR": 1, "IT": 1, "ES": 1, "US": 1})
    area_mix: dict = field(default_factory=lambda: {a.value: 1 for a in JcrArea})
    year_range: list = field(default_factory=lambda: [1970, 2019])
    journal_count: int = 70
    multi_area_share: float = 0.2
    names_per_gender: int = 250
    institutions_per_country: int = 5
    composed_name_share: float = 0.1
    noise: dict = field(default_factory=lambda: {"offscope_papers": 0, "malformed_lines": 0, "duplicate_lines": 0})
    rng: str = RNG_NAME

    def validate(self) -> "SynthManifest":
        def bad(msg):
            raise InvalidManifest(msg)

        if self.rng != RNG_NAME:
            bad(f"unsupported rng {self.rng!r}; only {RNG_NAME!r}")
        if not isinstance(self.seed, int):
            bad("seed must be an integer")
        if self.paper_count < 0:
            bad("paper_count must be >= 0")
        lo, hi = self.authors_per_paper.get("min"), self.authors_per_paper.get("max")
        if not (isinstance(lo, int) and isinstance(hi, int) and 1 <= lo <= hi):
            bad("authors_per_paper needs integers 1 <= min <= max")
        shares = (self.pf, self.pm, self.pu)
        if any(s < 0 for s in shares) or abs(sum(shares) - 1.0) > 1e-9:
            bad("pf + pm + pu must equal 1 with non-negative parts")
        for label, mix in (("country_mix", self.country_mix), ("area_mix", self.area_mix)):
            if not mix or any(w < 0 for w in mix.values()) or not any(w > 0 for w in mix.values()):
                bad(f"{label} weights must be non-negative with at least one positive")
        for code in self.country_mix:
            if code != UNRESOLVED and not is_country_code(code):
                bad(f"unknown country code {code!r}")
        for area in self.area_mix:
            if area not in JcrArea.__members__:
                bad(f"unknown area {area!r}")
        first, last = self.year_range
        if not 1900 <= first <= last <= 2100:
            bad("year_range must lie within [1900, 2100] and be ordered")
        if self.journal_count < 1:
            bad("journal_count must be >= 1")
        if self.names_per_gender < 1 or self.names_per_gender > len(_SYLLABLES) ** 2:
            bad("names_per_gender out of range")
        if self.institutions_per_country < 1:
            bad("institutions_per_country must be >= 1")
        for key in ("offscope_papers", "malformed_lines", "duplicate_lines"):
            if self.noise.get(key, 0) < 0:
                bad(f"noise.{key} must be >= 0")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "SynthManifest":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InvalidManifest(f"unknown manifest fields: {sorted(unknown)}")
        manifest = cls(**data)
        manifest.noise = {"offscope_papers": 0, "malformed_lines": 0, "duplicate_lines": 0, **manifest.noise}
        return manifest.validate()

    @classmethod
    def load(cls, path: str | os.PathLike) -> "SynthManifest":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise InvalidManifest(f"cannot read manifest {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


@dataclass
class GeneratedCorpus:
    root: Path

    @property
    def authorships(self) -> Path:
        return self.root / AUTHORSHIPS_FILE

    @property
    def journals(self) -> Path:
        return self.root / JOURNALS_FILE

    @property
    def gender_fixture(self) -> Path:
        return self.root / GENDER_FIXTURE_FILE

    @property
    def gazetteer(self) -> Path:
        return self.root / GAZETTEER_FILE

    @property
    def truth(self) -> Path:
        return self.root / TRUTH_FILE

    @property
    def manifest(self) -> Path:
        return self.root / MANIFEST_FILE


# --------------------------------------------------------------------------
# generation


class _Draws:
    def __init__(self, seed: int):
        self._rng = random.Random(seed)

    def uniform_int(self, lo: int, hi: int) -> int:
        return min(hi, lo + int(self._rng.random() * (hi - lo + 1)))

    def chance(self, p: float) -> bool:
        return self._rng.random() < p

    def pick(self, items):
        return items[self.uniform_int(0, len(items) - 1)]

    def weighted(self, keys, weights):
        total = math.fsum(weights)
        x = self._rng.random() * total
        acc = 0.0
        for key, w in zip(keys, weights):
            acc += w
            if x < acc and w > 0:
                return key
        return [k for k, w in zip(keys, weights) if w > 0][-1]


def _given_name(i: int, suffix: str) -> str:
    k = len(_SYLLABLES)
    return (_SYLLABLES[i % k] + _SYLLABLES[(i // k) % k] + suffix).capitalize()


def _accented(name: str) -> str:
    for j, ch in enumerate(name):
        if ch in _ACCENTED:
            return name[:j] + _ACCENTED[ch] + name[j + 1 :]
    return name


def name_pools(n: int) -> dict[str, list[str]]:
    """Display forms of the female and male given names; every 7th carries an accent."""
    pools = {}
    for gender, suffix in (("female", "na"), ("male", "ro")):
        names = [_given_name(i, suffix) for i in range(n)]
        pools[gender] = [_accented(s) if i % 7 == 3 else s for i, s in enumerate(names)]
    return pools


def _family_names(n: int = 300) -> list[str]:
    k = len(_SYLLABLES)
    return [(_SYLLABLES[(7 * i) % k] + _SYLLABLES[(3 * i + 11) % k] + "ler").capitalize() for i in range(n)]


def institution_names(country_mix: dict, per_country: int) -> dict[str, list[str]]:
    out = {}
    for code in sorted(country_mix):
        if code == UNRESOLVED:
            out[code] = [f"Independent Research Collective {k + 1}" for k in range(per_country)]
        else:
            out[code] = [f"Institute of Computing {code}-{k + 1}" for k in range(per_country)]
    return out


def _noisy(institution: str, draws: _Draws) -> str:
    roll = draws.uniform_int(0, 9)
    if roll == 0:
        return "  " + institution.replace(" ", "  ", 1) + " "
    if roll == 1:
        return institution + ",,"
    return institution


def _fixture_rows(pools: dict[str, list[str]], countries: list[str]) -> list[tuple[str, str, str, str, int]]:
    from .names import name_key

    rows = []
    for gender, names in sorted(pools.items()):
        other = "male" if gender == "female" else "female"
        for i, display in enumerate(names):
            key = name_key(display)
            pattern = i % 3
            if pattern == 0:
                rows.append((key, "*", gender, "0.99", 100 + i))
            elif pattern == 1:
                for cc in countries:
                    rows.append((key, cc, gender, "0.97", 50 + i))
                rows.append((key, "*", gender, "0.95", 80 + i))
            else:
                # the country-specific estimate points the wrong way but below threshold
                for cc in countries:
                    rows.append((key, cc, other, "0.9", 20 + i))
                rows.append((key, "*", gender, "0.96", 90 + i))
    return sorted(rows)


def generate(manifest: SynthManifest, out_dir: str | os.PathLike) -> GeneratedCorpus:
    """Write corpus, fixtures, truth table and manifest copy into ``out_dir``."""
    manifest.validate()
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    draws = _Draws(manifest.seed)

    areas = [a.value for a in JcrArea if manifest.area_mix.get(a.value, 0) > 0]
    area_weights = [manifest.area_mix[a] for a in areas]
    countries = sorted(manifest.country_mix)
    country_weights = [manifest.country_mix[c] for c in countries]
    genders = ["female", "male", "unknown"]
    gender_weights = [manifest.pf, manifest.pm, manifest.pu]

    journals = []
    for j in range(manifest.journal_count):
        first = draws.weighted(areas, area_weights)
        jareas = {first}
        if len(areas) > 1 and draws.chance(manifest.multi_area_share):
            second = draws.weighted(areas, area_weights)
            if second != first:
                jareas.add(second)
        impact = f"{draws.uniform_int(100, 9999) / 1000:.3f}"
        cites = draws.uniform_int(10, 50000)
        eigen = f"{draws.uniform_int(1, 99999) / 10**6:.6f}"
        journals.append((f"J{j + 1:04d}", f"Journal of Synthetic Computing {j + 1}", sorted(jareas), impact, cites, eigen))

    pools = name_pools(manifest.names_per_gender)
    family = _family_names()
    institutions = institution_names(manifest.country_mix, manifest.institutions_per_country)
    lo, hi = manifest.authors_per_paper["min"], manifest.authors_per_paper["max"]
    first_year, last_year = manifest.year_range

    lines: list[str] = []
    truth: list[tuple] = []
    for p in range(manifest.paper_count):
        paper_id = f"P{p + 1:07d}"
        jid, _name, jareas, *_ = journals[draws.uniform_int(0, len(journals) - 1)]
        year = draws.uniform_int(first_year, last_year)
        for pos in range(1, draws.uniform_int(lo, hi) + 1):
            gender = draws.weighted(genders, gender_weights)
            country = draws.weighted(countries, country_weights)
            institution = _noisy(draws.pick(institutions[country]), draws)
            surname = draws.pick(family)
            if gender == "unknown":
                initial = chr(ord("A") + draws.uniform_int(0, 25))
                if draws.chance(0.3):
                    given = f"{initial}. {chr(ord('A') + draws.uniform_int(0, 25))}."
                else:
                    given = f"{initial}."
            else:
                given = draws.pick(pools[gender])
                if draws.chance(manifest.composed_name_share):
                    given = f"{given} {draws.pick(pools[gender])}"
            lines.append(f"{paper_id}\t{given} {surname}\t{pos}\t{institution}\t{year}\t{jid}")
            truth.append(
                (paper_id, pos, gender, "" if country == UNRESOLVED else country, year, ";".join(jareas))
            )

    noise = manifest.noise
    for k in range(noise.get("offscope_papers", 0)):
        year = draws.uniform_int(first_year, last_year)
        for pos in range(1, draws.uniform_int(lo, hi) + 1):
            lines.append(
                f"X{k + 1:07d}\t{draws.pick(pools['female'])} {draws.pick(family)}\t{pos}\t"
                f"{draws.pick(institutions[countries[0]])}\t{year}\tJX{k % 7 + 1:03d}"
            )
    for _ in range(noise.get("duplicate_lines", 0)):
        if lines:
            lines.append(lines[draws.uniform_int(0, len(truth) - 1)] if truth else lines[0])
    for k in range(noise.get("malformed_lines", 0)):
        lines.append(f"M{k + 1:07d}\tBroken Line\t1\tNowhere")

    with open(root / AUTHORSHIPS_FILE, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")

    with open(root / JOURNALS_FILE, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["journal_id", "name", "area", "impact_factor", "total_cites", "eigenfactor", "jcr_year"])
        for jid, name, jareas, impact, cites, eigen in journals:
            for area in jareas:
                writer.writerow([jid, name, area, impact, cites, eigen, 2016])

    resolvable = [c for c in countries if c != UNRESOLVED]
    with open(root / GENDER_FIXTURE_FILE, "w", encoding="utf-8", newline="\n") as fh:
        for row in _fixture_rows(pools, resolvable):
            fh.write("\t".join(str(c) for c in row) + "\n")

    with open(root / GAZETTEER_FILE, "w", encoding="utf-8", newline="\n") as fh:
        for code in resolvable:
            for inst in institutions[code]:
                fh.write(f"{inst}\t{code}\n")

    with open(root / TRUTH_FILE, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(TRUTH_HEADER) + "\n")
        for row in truth:
            fh.write("\t".join(str(c) for c in row) + "\n")

    (root / MANIFEST_FILE).write_text(manifest.to_json(), encoding="utf-8")
    return GeneratedCorpus(root)


# --------------------------------------------------------------------------
# oracle


def read_truth(path: str | os.PathLike) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        for line in fh:
            cells = line.rstrip("\n").split("\t")
            rec = dict(zip(header, cells))
            rec["author_position"] = int(rec["author_position"])
            rec["year"] = int(rec["year"])
            rec["areas"] = [a for a in rec["areas"].split(";") if a]
            rows.append(rec)
    return rows


def _percent(part: int, whole: int) -> Fraction:
    if whole == 0:
        return Fraction(0)
    return Fraction(part * 100, whole)


def _bucket_by_scan(f: int, m: int, u: int) -> Bucket:
    n = f + m + u
    if Fraction(u, n) > Fraction(1, 2):
        return Bucket.UNKNOWN_DOMINANT
    if m == 0 and u == 0:
        return Bucket.ALL_FEMALE
    if f == 0 and u == 0:
        return Bucket.ALL_MALE
    if f == m:
        return Bucket.BALANCED
    return Bucket.MAJORITY_FEMALE if f > m else Bucket.MAJORITY_MALE


def oracle_aggregates(
    truth_path: str | os.PathLike,
    journals_path: str | os.PathLike,
    countries: tuple[str, ...] = ("GB", "DE", "FR", "IT", "ES"),
    year_window: tuple[int, int] | None = None,
) -> dict[str, list[AggregateRow]]:
    """Every report recomputed from the ground truth by naive full scans."""
    truth = read_truth(truth_path)
    area_names = [a.value for a in JcrArea]
    continent_names = list(CONTINENTS) + [UNKNOWN]
    reports: dict[str, list[AggregateRow]] = {}

    # journals per area: distinct (journal, area) rows of the JCR file
    pairs = set()
    with open(journals_path, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            pairs.add((rec["journal_id"], rec["area"]))
    reports["journals_per_area"] = [
        AggregateRow("area", a, {"journals": sum(1 for _, pa in pairs if pa == a)}) for a in area_names
    ]

    papers: dict[str, dict] = {}
    for rec in truth:
        paper = papers.setdefault(rec["paper_id"], {"f": 0, "m": 0, "u": 0, "areas": rec["areas"]})
        paper[{"female": "f", "male": "m", "unknown": "u"}[rec["true_gender"]]] += 1

    rows = []
    for a in area_names:
        pubs = sum(1 for p in papers.values() if a in p["areas"])
        auths = sum(1 for rec in truth if a in rec["areas"])
        rows.append(AggregateRow("area", a, {"publications": pubs, "authorships": auths}))
    reports["area_volume"] = rows

    def continent(rec):
        return continent_of(rec["true_country"]) if rec["true_country"] else UNKNOWN

    n = len(truth)
    rows = []
    for c in continent_names:
        k = sum(1 for rec in truth if continent(rec) == c)
        rows.append(AggregateRow("continent", c, {"authorships": k, "pct": _percent(k, n)}))
    reports["continent_distribution"] = rows

    rows = []
    for g in ("female", "male", "unknown"):
        k = sum(1 for rec in truth if rec["true_gender"] == g)
        rows.append(AggregateRow("gender", g, {"authorships": k, "pct": _percent(k, n)}))
    reports["gender_distribution"] = rows

    rows = []
    for c in continent_names:
        members = [rec for rec in truth if continent(rec) == c]
        f = sum(1 for rec in members if rec["true_gender"] == "female")
        m = sum(1 for rec in members if rec["true_gender"] == "male")
        u = sum(1 for rec in members if rec["true_gender"] == "unknown")
        t = len(members)
        rows.append(
            AggregateRow(
                "continent",
                c,
                {
                    "female": f,
                    "male": m,
                    "unknown": u,
                    "female_pct": _percent(f, t),
                    "male_pct": _percent(m, t),
                    "unknown_pct": _percent(u, t),
                },
            )
        )
    reports["gender_by_continent"] = rows

    buckets = {pid: _bucket_by_scan(p["f"], p["m"], p["u"]) for pid, p in papers.items()}
    rows = []
    for b in Bucket:
        k = sum(1 for v in buckets.values() if v == b)
        rows.append(AggregateRow("bucket", b.value, {"papers": k, "pct": _percent(k, len(papers))}))
    reports["bucket_distribution"] = rows

    rows = []
    for a in area_names:
        in_area = [pid for pid, p in papers.items() if a in p["areas"]]
        values: dict = {"papers": len(in_area)}
        for b in Bucket:
            values[b.value.lower()] = sum(1 for pid in in_area if buckets[pid] == b)
        for b in Bucket:
            values[b.value.lower() + "_pct"] = _percent(values[b.value.lower()], len(in_area))
        gap_total = Fraction(0)
        known_total, known_papers = Fraction(0), 0
        for pid in in_area:
            p = papers[pid]
            gap_total += Fraction(p["f"] - p["m"] + p["u"], p["f"] + p["m"] + p["u"])
            if p["f"] + p["m"]:
                known_total += Fraction(p["f"] - p["m"], p["f"] + p["m"])
                known_papers += 1
        values["mean_gap_index"] = gap_total / len(in_area) if in_area else None
        values["mean_known_gap"] = known_total / known_papers if known_papers else None
        rows.append(AggregateRow("area", a, values))
    reports["area_gap_distribution"] = rows

    if year_window is None:
        latest = max((rec["year"] for rec in truth), default=None)
        year_window = (latest - 49, latest) if latest is not None else (0, -1)
    rows = []
    for cc in countries:
        for year in range(year_window[0], year_window[1] + 1):
            f = sum(1 for rec in truth if rec["true_country"] == cc and rec["year"] == year and rec["true_gender"] == "female")
            m = sum(1 for rec in truth if rec["true_country"] == cc and rec["year"] == year and rec["true_gender"] == "male")
            known = f + m
            rows.append(
                AggregateRow(
                    "year",
                    str(year),
                    {
                        "female": f,
                        "male": m,
                        "female_pct": Fraction(100 * f, known) if known else None,
                        "male_pct": Fraction(100 * m, known) if known else None,
                    },
                    group=cc,
                )
            )
    reports["country_timeline"] = rows
    return reports


def write_oracle_bundle(
    generated_dir: str | os.PathLike,
    out_dir: str | os.PathLike,
    countries: tuple[str, ...] = ("GB", "DE", "FR", "IT", "ES"),
    year_window: tuple[int, int] | None = None,
    formats: tuple[str, ...] = ("csv",),
):
    from .report import emit_bundle

    gen = GeneratedCorpus(Path(generated_dir))
    reports = oracle_aggregates(gen.truth, gen.journals, countries, year_window)
    return emit_bundle(reports, out_dir, formats)
