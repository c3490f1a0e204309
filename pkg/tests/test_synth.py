import json

import pytest

from gendergap.config import RunConfig
from gendergap.errors import InvalidManifest
from gendergap.pipeline import Pipeline
from gendergap.report import parse_report_csv
from gendergap.synth import (
    SynthManifest,
    TRUTH_HEADER,
    generate,
    name_pools,
    oracle_aggregates,
    read_truth,
)


def run_pipeline(gen, out):
    config = RunConfig(
        authorships=gen.authorships,
        journals=gen.journals,
        gender_fixture=gen.gender_fixture,
        gazetteer=gen.gazetteer,
        output_dir=out,
    )
    results = Pipeline(config).run("all")
    return config.run_dir, results


def test_same_seed_same_bytes(tmp_path):
    m = SynthManifest(seed=11, paper_count=50)
    a, b = generate(m, tmp_path / "a"), generate(m, tmp_path / "b")
    for name in ("authorships", "journals", "gender_fixture", "gazetteer", "truth", "manifest"):
        assert getattr(a, name).read_bytes() == getattr(b, name).read_bytes()
    c = generate(SynthManifest(seed=12, paper_count=50), tmp_path / "c")
    assert c.authorships.read_bytes() != a.authorships.read_bytes()


@pytest.mark.parametrize(
    "patch",
    [
        {"pf": 0.5, "pm": 0.5, "pu": 0.5},
        {"pf": -0.1, "pm": 0.9, "pu": 0.2},
        {"country_mix": {"ZZ": 1}},
        {"country_mix": {"ES": 0}},
        {"authors_per_paper": {"min": 3, "max": 2}},
        {"year_range": [2020, 2010]},
        {"rng": "pcg64"},
        {"paper_count": -1},
        {"colour": "blue"},
    ],
)
def test_invalid_manifest(patch):
    with pytest.raises(InvalidManifest):
        SynthManifest.from_dict({**SynthManifest().__dict__, **patch})


def test_manifest_round_trip(tmp_path):
    m = SynthManifest(seed=5, paper_count=3)
    path = tmp_path / "m.json"
    path.write_text(m.to_json())
    assert SynthManifest.load(path) == m


def test_name_pools_distinct():
    pools = name_pools(250)
    names = pools["female"] + pools["male"]
    assert len(set(names)) == len(names) == 500


def test_truth_has_one_row_per_authorship(small_corpus):
    truth = read_truth(small_corpus.truth)
    header = small_corpus.truth.read_text().splitlines()[0].split("\t")
    assert tuple(header) == TRUTH_HEADER
    keys = {(t["paper_id"], t["author_position"]) for t in truth}
    assert len(keys) == len(truth)


def test_oracle_single_balanced_paper(tmp_path):
    truth = tmp_path / "truth.tsv"
    truth.write_text("\t".join(TRUTH_HEADER) + "\nP1\t1\tfemale\tES\t2000\tCS_AI\nP1\t2\tmale\tIT\t2000\tCS_AI\n")
    journals = tmp_path / "journals.csv"
    journals.write_text("journal_id,name,area,impact_factor,total_cites,eigenfactor,jcr_year\nJ1,A,CS_AI,1,1,0.1,2016\n")
    reports = oracle_aggregates(truth, journals)
    buckets = {r.key: r.values["papers"] for r in reports["bucket_distribution"]}
    assert buckets["BALANCED"] == 1 and sum(buckets.values()) == 1


def test_no_unknowns_means_everyone_tagged(tmp_path):
    gen = generate(SynthManifest(seed=3, paper_count=150, pf=0.5, pm=0.5, pu=0.0), tmp_path / "gen")
    run_dir, _ = run_pipeline(gen, tmp_path / "out")
    rows = {r.key: r.values for r in parse_report_csv((run_dir / "gender_distribution.csv").read_bytes(), "gender_distribution")}
    assert rows["unknown"]["authorships"] == 0
    assert rows["female"]["authorships"] + rows["male"]["authorships"] == len(read_truth(gen.truth))


def test_single_country_all_in_europe(tmp_path):
    gen = generate(SynthManifest(seed=4, paper_count=80, country_mix={"ES": 1}), tmp_path / "gen")
    run_dir, _ = run_pipeline(gen, tmp_path / "out")
    rows = {r.key: r.values for r in parse_report_csv((run_dir / "continent_distribution.csv").read_bytes(), "continent_distribution")}
    assert rows["EU"]["pct"] == 100
    assert rows["UNKNOWN"]["authorships"] == 0


def test_unresolvable_institutions_land_in_unknown(small_corpus, tmp_path):
    run_dir, _ = run_pipeline(small_corpus, tmp_path / "out")
    truth = read_truth(small_corpus.truth)
    rows = {r.key: r.values for r in parse_report_csv((run_dir / "continent_distribution.csv").read_bytes(), "continent_distribution")}
    assert rows["UNKNOWN"]["authorships"] == sum(1 for t in truth if not t["true_country"])
    assert rows["SA"]["authorships"] == sum(1 for t in truth if t["true_country"] == "BR")
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert len(manifest["reports"]) == 8
