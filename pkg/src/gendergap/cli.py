"""Command-line entry point.

Exit codes: 0 ok, 1 verification failure, 2 config or I/O error,
3 missing dependency stage, 4 provider quota exhausted.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path

import click

from .config import RunConfig, parse_countries, parse_years
from .errors import GenderGapError, IoFailure, MissingCheckpoint, QuotaExceeded
from .pipeline import STAGES, Pipeline
from .report import verify_bundle
from .synth import SynthManifest, generate, write_oracle_bundle

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_MISSING_STAGE = 3
EXIT_PROVIDER = 4


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, MissingCheckpoint):
        return EXIT_MISSING_STAGE
    if isinstance(exc, QuotaExceeded):
        return EXIT_PROVIDER
    return EXIT_CONFIG


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (GenderGapError, OSError) as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(_exit_code(exc))

    return wrapper


def run_options(fn):
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="TOML run configuration."),
        click.option("--authorships", type=click.Path(dir_okay=False)),
        click.option("--journals", type=click.Path(dir_okay=False)),
        click.option("--gender-fixture", type=click.Path(dir_okay=False)),
        click.option("--gazetteer", type=click.Path(dir_okay=False)),
        click.option("--gender-provider", type=click.Choice(["http", "fixture"])),
        click.option("--geo-provider", type=click.Choice(["http", "fixture"])),
        click.option("--cache-dir", type=click.Path(file_okay=False)),
        click.option("--output-dir", type=click.Path(file_okay=False)),
        click.option("--run-id"),
        click.option("--jobs", type=click.IntRange(min=1)),
        click.option("--gender-threshold", type=float),
        click.option("--geo-min-confidence", type=float),
        click.option("--countries", help="Comma-separated ISO codes for the timeline."),
        click.option("--years", help="Inclusive timeline window FROM:TO."),
        click.option("--format", "formats", multiple=True, type=click.Choice(["csv", "json", "svg"])),
        click.option("--force", is_flag=True, help="Ignore checkpoints and recompute."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def build_config(config_path=None, **overrides) -> RunConfig:
    config = RunConfig.load(config_path) if config_path else RunConfig()
    if overrides.get("formats") == ():
        overrides["formats"] = None
    if overrides.get("formats"):
        overrides["formats"] = list(overrides["formats"])
    return config.apply(overrides).validate(need_inputs=False)


def _run(stage: str, force: bool, **kwargs) -> None:
    config = build_config(**kwargs)
    for result in Pipeline(config).run(stage, force=force):
        click.echo(json.dumps(result.as_dict(), sort_keys=True))


@click.group()
@click.option("-v", "--verbose", count=True)
def main(verbose: int) -> None:
    """Geo-gender tagging and gender gap reports for journal authorships."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command("run")
@click.argument("stage", type=click.Choice([*STAGES, "all"]))
@run_options
@handle_errors
def run_cmd(stage, force, **kwargs):
    """Run one stage, or `all` of them in order."""
    _run(stage, force, **kwargs)


def _stage_command(stage: str):
    @run_options
    @handle_errors
    def cmd(force, **kwargs):
        _run(stage, force, **kwargs)

    cmd.__doc__ = f"Run the {stage} stage."
    return click.command(stage)(cmd)


for _stage in STAGES:
    main.add_command(_stage_command(_stage))


@main.command("verify")
@click.argument("run_dir", type=click.Path(file_okay=False))
def verify_cmd(run_dir):
    """Recompute report checksums against the run manifest."""
    try:
        bad = verify_bundle(run_dir)
    except FileNotFoundError:
        click.echo(f"error: no manifest in {run_dir}", err=True)
        sys.exit(EXIT_CONFIG)
    except IoFailure as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if bad:
        for path in bad:
            click.echo(f"checksum mismatch: {path}")
        sys.exit(EXIT_VERIFY)
    click.echo("ok")


@main.group()
def synth():
    """Synthetic corpora with ground truth."""


@synth.command("generate")
@click.option("--manifest", "manifest_path", type=click.Path(dir_okay=False), help="JSON SynthManifest.")
@click.option("--seed", type=int)
@click.option("--papers", type=int)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@handle_errors
def synth_generate(manifest_path, seed, papers, out_dir):
    """Write corpus, fixtures and truth table."""
    manifest = SynthManifest.load(manifest_path) if manifest_path else SynthManifest()
    if seed is not None:
        manifest.seed = seed
    if papers is not None:
        manifest.paper_count = papers
    manifest.validate()
    gen = generate(manifest, out_dir)
    click.echo(json.dumps({"out": str(gen.root), "seed": manifest.seed, "papers": manifest.paper_count}))


@synth.command("oracle")
@click.option("--generated", "generated_dir", required=True, type=click.Path(file_okay=False, exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--countries")
@click.option("--years")
@click.option("--format", "formats", multiple=True, type=click.Choice(["csv", "json", "svg"]))
@handle_errors
def synth_oracle(generated_dir, out_dir, countries, years, formats):
    """Brute-force reference reports from the truth table."""
    countries = tuple(parse_countries(countries)) if countries else ("GB", "DE", "FR", "IT", "ES")
    window = parse_years(years) if years else None
    bundle = write_oracle_bundle(generated_dir, out_dir, countries, window, tuple(formats) or ("csv",))
    click.echo(json.dumps({"out": str(Path(out_dir)), "files": len(bundle.entries)}))


if __name__ == "__main__":
    main()
