import json

import httpx
import pytest
from click.testing import CliRunner

from gendergap.cli import main
from gendergap.pipeline import STAGES

from conftest import write_run_config


@pytest.fixture
def runner():
    return CliRunner()


def summaries(output):
    return [json.loads(line) for line in output.splitlines() if line.startswith("{")]


@pytest.fixture
def config(small_corpus, tmp_path):
    return write_run_config(tmp_path / "run.toml", small_corpus.root, tmp_path / "out")


def test_run_all_writes_checkpoints_and_reports(runner, config, tmp_path):
    result = runner.invoke(main, ["run", "all", "--config", str(config)])
    assert result.exit_code == 0, result.output
    assert [s["stage"] for s in summaries(result.output)] == list(STAGES)
    run_dir = tmp_path / "out" / "run"
    assert sorted(p.stem for p in (run_dir / "checkpoints").iterdir()) == sorted(STAGES)
    assert (run_dir / "manifest.json").exists()

    again = runner.invoke(main, ["run", "all", "--config", str(config)])
    assert all(s["skipped"] for s in summaries(again.output))


def test_warm_cache_makes_no_calls(runner, config):
    runner.invoke(main, ["run", "all", "--config", str(config)])
    result = runner.invoke(main, ["run", "gendertag", "--config", str(config), "--force"])
    assert result.exit_code == 0, result.output
    (summary,) = summaries(result.output)
    assert summary["skipped"] is False
    assert summary["provider_calls"] == 0


def test_missing_dependency_exit_3(runner, config):
    result = runner.invoke(main, ["metrics", "--config", str(config)])
    assert result.exit_code == 3
    assert "MissingCheckpoint" in result.output


def test_verify_exit_codes(runner, config, tmp_path):
    runner.invoke(main, ["run", "all", "--config", str(config)])
    run_dir = tmp_path / "out" / "run"
    ok = runner.invoke(main, ["verify", str(run_dir)])
    assert (ok.exit_code, ok.output.strip()) == (0, "ok")
    target = run_dir / "bucket_distribution.csv"
    target.write_bytes(target.read_bytes() + b"x")
    bad = runner.invoke(main, ["verify", str(run_dir)])
    assert bad.exit_code == 1
    assert "checksum mismatch: bucket_distribution.csv" in bad.output
    assert runner.invoke(main, ["verify", str(tmp_path / "nowhere")]).exit_code == 2


@pytest.mark.parametrize(
    "args",
    [
        ["--gender-threshold", "1.5"],
        ["--countries", "ZZ"],
        ["--years", "2010"],
        ["--config", "/nonexistent.toml"],
    ],
)
def test_config_errors_exit_2(runner, config, args):
    base = [] if "--config" in args else ["--config", str(config)]
    result = runner.invoke(main, ["run", "ingest", *base, *args])
    assert result.exit_code == 2, result.output


def test_missing_input_exit_2(runner, tmp_path):
    result = runner.invoke(main, ["ingest", "--authorships", str(tmp_path / "none.tsv"), "--journals", str(tmp_path / "none.csv"), "--output-dir", str(tmp_path)])
    assert result.exit_code == 2


def test_quota_exit_4(runner, small_corpus, tmp_path, monkeypatch):
    real_client = httpx.Client

    def limited_client(*args, **kwargs):
        return real_client(transport=httpx.MockTransport(lambda r: httpx.Response(429, headers={"Retry-After": "60"})))

    monkeypatch.setattr(httpx, "Client", limited_client)
    config = write_run_config(
        tmp_path / "run.toml", small_corpus.root, tmp_path / "out", gender_provider="http", gender_endpoint="https://g.test/"
    )
    assert runner.invoke(main, ["run", "geotag", "--config", str(config)]).exit_code == 3
    runner.invoke(main, ["ingest", "--config", str(config)])
    runner.invoke(main, ["geotag", "--config", str(config)])
    result = runner.invoke(main, ["gendertag", "--config", str(config)])
    assert result.exit_code == 4, result.output
    assert "QuotaExceeded" in result.output


def test_synth_generate_and_oracle(runner, tmp_path):
    gen = tmp_path / "gen"
    result = runner.invoke(main, ["synth", "generate", "--seed", "9", "--papers", "40", "--out", str(gen)])
    assert result.exit_code == 0, result.output
    assert (gen / "truth.tsv").exists()
    oracle = runner.invoke(main, ["synth", "oracle", "--generated", str(gen), "--out", str(tmp_path / "oracle")])
    assert oracle.exit_code == 0, oracle.output
    assert json.loads(oracle.output)["files"] == 8


def test_synth_invalid_manifest_exit_2(runner, tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"pf": 0.9, "pm": 0.9, "pu": 0.9}))
    assert runner.invoke(main, ["synth", "generate", "--manifest", str(path), "--out", str(tmp_path / "g")]).exit_code == 2
