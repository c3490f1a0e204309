from __future__ import annotations

import threading
from pathlib import Path

import pytest

from gendergap.errors import ProviderUnavailable
from gendergap.providers import GenderResponse, GeoResponse
from gendergap.synth import SynthManifest, generate

# --------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion

_AC_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_ac"):
        return
    label = name[len("test_"):].split("_", 1)[0].upper()
    outcome = "PASS" if report.outcome == "passed" else "FAIL"
    if _AC_RESULTS.get(label) != "FAIL":
        _AC_RESULTS[label] = outcome


def pytest_terminal_summary(terminalreporter):
    if not _AC_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_AC_RESULTS, key=lambda s: int(s[2:])):
        terminalreporter.write_line(f"{label}: {_AC_RESULTS[label]}")


# --------------------------------------------------------------------------
# provider stubs


class CountingGenderStub:
    """Gender provider answering from a dict and logging every query."""

    name = "stub"

    def __init__(self, answers: dict | None = None, failing: set | None = None):
        self.answers = answers or {}
        self.failing = failing or set()
        self.queries: list[tuple[str, str | None]] = []
        self.calls = 0
        self._lock = threading.Lock()

    def estimate(self, query):
        key = (query.name, query.country)
        with self._lock:
            self.calls += 1
            self.queries.append(key)
        if key in self.failing:
            raise ProviderUnavailable(f"stub failure for {key}")
        gender, p = self.answers.get(key, ("none", 0.0))
        return GenderResponse(gender, p, 10)


class CountingGeoStub:
    def __init__(self, answers: dict | None = None, name: str = "geostub", failing: set | None = None):
        self.name = name
        self.answers = answers or {}
        self.failing = failing or set()
        self.calls = 0
        self.queries: list[str] = []

    def locate(self, institution: str):
        self.calls += 1
        self.queries.append(institution)
        if institution in self.failing:
            raise ProviderUnavailable("stub geo failure")
        country, conf = self.answers.get(institution, (None, 0.0))
        return GeoResponse(country, conf)


# --------------------------------------------------------------------------
# synthetic corpora


def write_run_config(path: Path, gen_dir: Path, out_dir: Path, **extra) -> Path:
    lines = [
        f'authorships = "{gen_dir / "authorships.tsv"}"',
        f'journals = "{gen_dir / "journals.csv"}"',
        f'gender_fixture = "{gen_dir / "gender_fixture.tsv"}"',
        f'gazetteer = "{gen_dir / "gazetteer.tsv"}"',
        f'output_dir = "{out_dir}"',
    ]
    for key, value in extra.items():
        lines.append(f"{key} = {value!r}".replace("'", '"'))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    manifest = SynthManifest(
        seed=7,
        paper_count=300,
        country_mix={"ES": 2, "IT": 1, "JP": 1, "BR": 1, "-": 1},
        noise={"offscope_papers": 5, "malformed_lines": 2, "duplicate_lines": 3},
    )
    return generate(manifest, tmp_path_factory.mktemp("small"))


AC3_MANIFEST = dict(
    seed=2024,
    paper_count=10_000,
    authors_per_paper={"min": 1, "max": 9},
    pf=0.2,
    pm=0.6,
    pu=0.2,
    country_mix={"GB": 1, "DE": 1, "FR": 1, "IT": 1, "ES": 1, "US": 1},
    year_range=[1970, 2019],
    noise={"offscope_papers": 100, "malformed_lines": 10, "duplicate_lines": 10},
)


@pytest.fixture(scope="session")
def ac3_corpus(tmp_path_factory):
    return generate(SynthManifest.from_dict(AC3_MANIFEST), tmp_path_factory.mktemp("ac3"))
