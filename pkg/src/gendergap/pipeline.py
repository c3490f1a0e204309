"""Checkpointed pipeline stages: ingest -> geotag -> gendertag -> metrics -> report.

Each stage reads the files written by earlier stages under
``<output_dir>/<run_id>/stages`` and appends a JSONL checkpoint line to
``<run_dir>/checkpoints/<stage>.jsonl`` recording its input and output
checksums. A stage whose inputs and parameters match its last checkpoint,
and whose outputs are intact, is skipped.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from .config import RunConfig
from .corpus import (
    Corpus,
    corpus_stats,
    join_jcr,
    parse_authorships,
    parse_journals,
    write_authorships_jsonl,
    write_journals_csv,
)
from .countries import UNKNOWN
from .errors import ConfigError, IoFailure, MissingCheckpoint
from .gendertag import GenderTag, gender_distribution
from .gendertag import tag_corpus as gender_tag_corpus
from .geotag import CountryTag, continent_distribution
from .geotag import tag_corpus as geo_tag_corpus
from .metrics import (
    AggregateRow,
    TaggedAuthorship,
    area_gap_distribution,
    bucket_distribution,
    country_timeline,
    default_year_window,
    paper_profiles,
)
from .providers import (
    FixtureGenderProvider,
    GazetteerProvider,
    HttpGenderProvider,
    HttpGeoProvider,
    RateLimiter,
    ResponseCache,
    gender_cache_path,
    geo_cache_path,
)
from .report import dump_exact, emit_bundle, load_exact, sha256_file

log = logging.getLogger(__name__)

STAGES = ("ingest", "geotag", "gendertag", "metrics", "report")
DEPENDS = {
    "ingest": (),
    "geotag": ("ingest",),
    "gendertag": ("ingest", "geotag"),
    "metrics": ("ingest", "geotag", "gendertag"),
    "report": ("metrics",),
}

CORPUS_FILE = "corpus.jsonl"
JOURNALS_FILE = "journals.csv"
INGEST_STATS_FILE = "ingest.json"
GEOTAGS_FILE = "geotags.jsonl"
GENDERTAGS_FILE = "gendertags.jsonl"
AGGREGATES_FILE = "aggregates.json"


@dataclass
class StageResult:
    stage: str
    skipped: bool
    summary: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"stage": self.stage, "skipped": self.skipped, **self.summary}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(text, encoding="utf-8", newline="\n")
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def compute_reports(
    corpus: Corpus,
    geotags: dict[tuple[str, int], CountryTag],
    gendertags: dict[tuple[str, int], GenderTag],
    countries,
    years: tuple[int, int] | None = None,
    jobs: int = 1,
) -> dict[str, list[AggregateRow]]:
    """All eight report tables from a tagged corpus."""
    tagged = tagged_authorships(corpus, geotags, gendertags)
    stats = corpus_stats(corpus)
    profiles = paper_profiles(tagged, jobs)
    if years is None:
        years = default_year_window(a.year for a in tagged)
    return {
        "journals_per_area": [AggregateRow("area", r.key, {"journals": r.values["journals"]}) for r in stats],
        "area_volume": [
            AggregateRow(
                "area", r.key, {"publications": r.values["publications"], "authorships": r.values["authorships"]}
            )
            for r in stats
        ],
        "continent_distribution": continent_distribution(tagged),
        "gender_distribution": gender_distribution(tagged),
        "gender_by_continent": gender_distribution(tagged, "continent"),
        "bucket_distribution": bucket_distribution(profiles),
        "area_gap_distribution": area_gap_distribution(profiles, corpus),
        "country_timeline": country_timeline(tagged, countries, years, jobs),
    }


def tagged_authorships(corpus: Corpus, geotags, gendertags) -> list[TaggedAuthorship]:
    out = []
    for r in corpus.authorships:
        geo = geotags.get(r.key)
        gender = gendertags.get(r.key)
        out.append(
            TaggedAuthorship(
                r.paper_id,
                r.author_position,
                r.year,
                r.journal_id,
                geo.country if geo else None,
                geo.continent if geo else UNKNOWN,
                gender.gender if gender else "unknown",
            )
        )
    return out


class Pipeline:
    """Stage runner bound to one :class:`RunConfig`.

    Providers are built from the config on first use; tests may inject
    ``gender_provider`` and ``geo_providers`` directly.
    """

    def __init__(self, config: RunConfig, gender_provider=None, geo_providers=None, clock: Callable[[], str] = _now):
        self.config = config
        self._gender_provider = gender_provider
        self._geo_providers = geo_providers
        self._clock = clock

    # -- paths

    @property
    def run_dir(self) -> Path:
        return self.config.run_dir

    @property
    def stage_dir(self) -> Path:
        return self.run_dir / "stages"

    def checkpoint_path(self, stage: str) -> Path:
        return self.run_dir / "checkpoints" / f"{stage}.jsonl"

    # -- providers

    def gender_provider(self):
        if self._gender_provider is None:
            cfg = self.config
            if cfg.gender_provider == "fixture":
                self._gender_provider = FixtureGenderProvider.from_file(cfg.require_file("gender_fixture"))
            else:
                if not cfg.gender_endpoint:
                    raise ConfigError("gender_endpoint is required for the http gender provider")
                self._gender_provider = HttpGenderProvider(cfg.gender_endpoint, limiter=RateLimiter(cfg.rate_limit))
        return self._gender_provider

    def geo_providers(self) -> list:
        if self._geo_providers is None:
            cfg = self.config
            providers = []
            if cfg.gazetteer is not None:
                providers.append(GazetteerProvider.from_file(cfg.require_file("gazetteer")))
            if cfg.geo_provider == "http":
                if not cfg.geo_endpoint:
                    raise ConfigError("geo_endpoint is required for the http geo provider")
                providers.append(HttpGeoProvider(cfg.geo_endpoint, limiter=RateLimiter(cfg.rate_limit)))
            elif not providers:
                raise ConfigError("the fixture geo provider needs a gazetteer")
            self._geo_providers = providers
        return self._geo_providers

    # -- checkpoints

    def last_checkpoint(self, stage: str) -> dict | None:
        path = self.checkpoint_path(stage)
        if not path.exists():
            return None
        last = None
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    last = json.loads(line)
        return last

    def _outputs_intact(self, checkpoint: dict) -> bool:
        for rel, digest in checkpoint["outputs"].items():
            path = self.run_dir / rel
            if not path.exists() or sha256_file(path) != digest:
                return False
        return True

    def _require(self, stage: str) -> None:
        for dep in DEPENDS[stage]:
            cp = self.last_checkpoint(dep)
            if cp is None or not self._outputs_intact(cp):
                raise MissingCheckpoint(f"stage {stage!r} needs a completed {dep!r} stage in {self.run_dir}")

    def _digest_inputs(self, paths: dict[str, Path]) -> dict[str, str]:
        return {name: sha256_file(p) for name, p in sorted(paths.items())}

    def _record(self, stage, inputs, params, outputs: list[Path], started, summary) -> None:
        line = {
            "stage": stage,
            "inputs": inputs,
            "params": params,
            "outputs": {str(p.relative_to(self.run_dir)): sha256_file(p) for p in outputs},
            "started_at": started,
            "finished_at": self._clock(),
            "summary": summary,
        }
        path = self.checkpoint_path(stage)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(line, sort_keys=True) + "\n")

    def _gated(self, stage: str, inputs: dict, params: dict, force: bool) -> dict | None:
        cp = self.last_checkpoint(stage)
        if force or cp is None:
            return None
        if cp["inputs"] == inputs and cp["params"] == params and self._outputs_intact(cp):
            return cp
        return None

    # -- loading stage products

    def load_corpus(self) -> Corpus:
        with open(self.stage_dir / JOURNALS_FILE, "rb") as fh:
            journals = parse_journals(fh)
        with open(self.stage_dir / CORPUS_FILE, "rb") as fh:
            corpus = join_jcr(parse_authorships(fh, "jsonl"), journals)
        if corpus.drops:
            raise IoFailure(f"stage corpus file is inconsistent: {dict(corpus.drops)}")
        return corpus

    def load_geotags(self) -> dict[tuple[str, int], CountryTag]:
        tags = {}
        with open(self.stage_dir / GEOTAGS_FILE, encoding="utf-8") as fh:
            for line in fh:
                d = json.loads(line)
                tags[(d["paper_id"], d["position"])] = CountryTag(
                    d["country"], d["continent"], d["confidence"], d["deferred"]
                )
        return tags

    def load_gendertags(self) -> dict[tuple[str, int], GenderTag]:
        tags = {}
        with open(self.stage_dir / GENDERTAGS_FILE, encoding="utf-8") as fh:
            for line in fh:
                d = json.loads(line)
                tags[(d["paper_id"], d["position"])] = GenderTag(d["gender"], d["probability"], d["method"])
        return tags

    # -- stages

    def run(self, stage: str, force: bool = False) -> list[StageResult]:
        if stage == "all":
            return [self.run_stage(s, force) for s in STAGES]
        if stage not in STAGES:
            raise ConfigError(f"unknown stage {stage!r}")
        return [self.run_stage(stage, force)]

    def run_stage(self, stage: str, force: bool = False) -> StageResult:
        self._require(stage)
        return getattr(self, f"_stage_{stage}")(force)

    def _finish(self, stage, inputs, params, outputs, started, summary) -> StageResult:
        self._record(stage, inputs, params, outputs, started, summary)
        log.info("%s: %s", stage, summary)
        return StageResult(stage, False, summary)

    def _skipped(self, stage: str, cp: dict) -> StageResult:
        summary = dict(cp.get("summary", {}))
        if "provider_calls" in summary:
            summary["provider_calls"] = 0
        log.info("%s: inputs unchanged, skipped", stage)
        return StageResult(stage, True, summary)

    def _stage_ingest(self, force: bool) -> StageResult:
        cfg = self.config
        cfg.validate(need_inputs=True)
        inputs = self._digest_inputs({"authorships": cfg.authorships, "journals": cfg.journals})
        params = {"format": cfg.input_format}
        cp = self._gated("ingest", inputs, params, force)
        if cp:
            return self._skipped("ingest", cp)
        started = self._clock()
        try:
            with open(cfg.journals, "rb") as fh:
                journals = parse_journals(fh)
            with open(cfg.authorships, "rb") as fh:
                read = 0

                def counted(records):
                    nonlocal read
                    for rec in records:
                        read += 1
                        yield rec

                corpus = join_jcr(counted(parse_authorships(fh, cfg.input_format)), journals)
        except OSError as exc:
            raise IoFailure(f"cannot read inputs: {exc}") from exc
        self.stage_dir.mkdir(parents=True, exist_ok=True)
        corpus_path = self.stage_dir / CORPUS_FILE
        tmp = corpus_path.with_name(corpus_path.name + ".tmp")
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            write_authorships_jsonl(corpus.authorships, fh)
        os.replace(tmp, corpus_path)
        journals_path = self.stage_dir / JOURNALS_FILE
        with open(journals_path, "w", encoding="utf-8", newline="") as fh:
            write_journals_csv(journals, fh)
        summary = {
            "records_read": read,
            "authorships": len(corpus.authorships),
            "papers": len(corpus.papers),
            "journals": len(journals),
            "drops": dict(sorted(corpus.drops.items())),
        }
        stats_path = self.stage_dir / INGEST_STATS_FILE
        _write_text(stats_path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
        return self._finish("ingest", inputs, params, [corpus_path, journals_path, stats_path], started, summary)

    def _stage_geotag(self, force: bool) -> StageResult:
        cfg = self.config
        cfg.validate(need_inputs=False)
        providers = self.geo_providers()
        files = {"corpus": self.stage_dir / CORPUS_FILE}
        if cfg.gazetteer is not None:
            files["gazetteer"] = cfg.gazetteer
        inputs = self._digest_inputs(files)
        params = {
            "min_confidence": float(cfg.geo_min_confidence),
            "providers": [p.name for p in providers],
            "endpoint": cfg.geo_endpoint if cfg.geo_provider == "http" else None,
        }
        cp = self._gated("geotag", inputs, params, force)
        if cp:
            return self._skipped("geotag", cp)
        started = self._clock()
        corpus = self.load_corpus()
        caches = {p.name: ResponseCache(geo_cache_path(cfg.cache_path, p)) for p in providers}
        try:
            tags, stats = geo_tag_corpus(corpus, providers, caches, float(cfg.geo_min_confidence), int(cfg.jobs))
        finally:
            for cache in caches.values():
                cache.flush()
        lines = []
        for r in corpus.authorships:
            t = tags[r.key]
            lines.append(
                json.dumps(
                    {
                        "paper_id": r.paper_id,
                        "position": r.author_position,
                        "country": t.country,
                        "continent": t.continent,
                        "confidence": t.confidence,
                        "deferred": t.deferred,
                    },
                    ensure_ascii=False,
                )
            )
        out = self.stage_dir / GEOTAGS_FILE
        _write_text(out, "".join(line + "\n" for line in lines))
        n = stats["authorships"]
        stats["tag_coverage_pct"] = round(100 * stats["tagged_authorships"] / n, 4) if n else 0.0
        return self._finish("geotag", inputs, params, [out], started, stats)

    def _stage_gendertag(self, force: bool) -> StageResult:
        cfg = self.config
        cfg.validate(need_inputs=False)
        provider = self.gender_provider()
        files = {"corpus": self.stage_dir / CORPUS_FILE, "geotags": self.stage_dir / GEOTAGS_FILE}
        if cfg.gender_provider == "fixture" and cfg.gender_fixture is not None:
            files["gender_fixture"] = cfg.gender_fixture
        inputs = self._digest_inputs(files)
        params = {
            "threshold": float(cfg.gender_threshold),
            "provider": provider.name,
            "endpoint": cfg.gender_endpoint if cfg.gender_provider == "http" else None,
            "name_order": cfg.name_order,
        }
        cp = self._gated("gendertag", inputs, params, force)
        if cp:
            return self._skipped("gendertag", cp)
        started = self._clock()
        corpus = self.load_corpus()
        geotags = self.load_geotags()
        cache = ResponseCache(gender_cache_path(cfg.cache_path, provider))
        try:
            tags, stats = gender_tag_corpus(
                corpus, geotags, provider, cache, float(cfg.gender_threshold), int(cfg.jobs), cfg.name_order
            )
        finally:
            cache.flush()
        lines = []
        for r in corpus.authorships:
            t = tags[r.key]
            lines.append(
                json.dumps(
                    {
                        "paper_id": r.paper_id,
                        "position": r.author_position,
                        "gender": t.gender,
                        "probability": t.probability,
                        "method": t.method,
                    },
                    ensure_ascii=False,
                )
            )
        out = self.stage_dir / GENDERTAGS_FILE
        _write_text(out, "".join(line + "\n" for line in lines))
        n = stats["authorships"]
        stats["tag_coverage_pct"] = round(100 * (stats["female"] + stats["male"]) / n, 4) if n else 0.0
        return self._finish("gendertag", inputs, params, [out], started, stats)

    def _stage_metrics(self, force: bool) -> StageResult:
        cfg = self.config
        cfg.validate(need_inputs=False)
        inputs = self._digest_inputs(
            {
                "corpus": self.stage_dir / CORPUS_FILE,
                "journals": self.stage_dir / JOURNALS_FILE,
                "geotags": self.stage_dir / GEOTAGS_FILE,
                "gendertags": self.stage_dir / GENDERTAGS_FILE,
            }
        )
        params = {"countries": list(cfg.countries), "years": list(cfg.years) if cfg.years else None}
        cp = self._gated("metrics", inputs, params, force)
        if cp:
            return self._skipped("metrics", cp)
        started = self._clock()
        corpus = self.load_corpus()
        reports = compute_reports(
            corpus, self.load_geotags(), self.load_gendertags(), list(cfg.countries), cfg.years, int(cfg.jobs)
        )
        out = self.stage_dir / AGGREGATES_FILE
        _write_text(out, dump_exact(reports))
        buckets = {r.key: r.values["papers"] for r in reports["bucket_distribution"]}
        summary = {"reports": len(reports), "papers": sum(buckets.values()), "buckets": buckets}
        return self._finish("metrics", inputs, params, [out], started, summary)

    def _stage_report(self, force: bool) -> StageResult:
        cfg = self.config
        cfg.validate(need_inputs=False)
        inputs = self._digest_inputs({"aggregates": self.stage_dir / AGGREGATES_FILE})
        params = {"formats": list(cfg.formats)}
        cp = self._gated("report", inputs, params, force)
        if cp:
            return self._skipped("report", cp)
        started = self._clock()
        reports = load_exact((self.stage_dir / AGGREGATES_FILE).read_text(encoding="utf-8"))
        bundle = emit_bundle(reports, self.run_dir, cfg.formats)
        outputs = [self.run_dir / e["path"] for e in bundle.entries] + [bundle.manifest_path]
        summary = {"files": len(bundle.entries), "manifest": str(bundle.manifest_path.relative_to(self.run_dir))}
        return self._finish("report", inputs, params, outputs, started, summary)
