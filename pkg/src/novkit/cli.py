"""Command-line entry points.

Exit codes: 0 success, 1 config error, 2 data error, 3 numeric or
convergence error.
"""

from __future__ import annotations

import sys

import click

from .errors import ConfigError, DataError, NumericError
from .pipeline import load_config, run_pipeline

EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_CONFIG_OPTIONS = [
    click.option("--config", "config_path", required=True, type=click.Path(), help="Pipeline config JSON."),
    click.option("--output", "output_dir", default=None, type=click.Path(), help="Override the output directory."),
    click.option("--seed", default=None, type=int, help="Override the config seed."),
    click.option("--threads", default=1, type=int, show_default=True, help="Worker threads for scoring."),
]


def _with_config_options(func):
    for option in reversed(_CONFIG_OPTIONS):
        func = option(func)
    return func


def _execute(config_path, output_dir, seed, threads, until):
    try:
        config = load_config(config_path, output_override=output_dir, seed_override=seed)
        manifest = run_pipeline(config, until=until, threads=threads)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    except NumericError as exc:
        click.echo(f"numeric error: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)
    for key, value in manifest.counts.items():
        click.echo(f"{key}: {value}")
    for warning in manifest.warnings:
        click.echo(f"warning: {warning}", err=True)
    click.echo(f"manifest digest: {manifest.digest}")
    return manifest


@click.group()
def main():
    """Entity-pair novelty measurement pipeline."""


def _register(name: str, until: str, doc: str) -> None:
    @main.command(name=name, help=doc)
    @_with_config_options
    def command(config_path, output_dir, seed, threads):
        _execute(config_path, output_dir, seed, threads, until)


_register("validate", "ingest", "Validate the config and corpus file; print counts.")
_register("normalize", "normalize", "Cluster entity surface forms; write the normalization map.")
_register("classify", "classify", "Classify institutions and documents; write the review list.")
_register("distances", "threshold", "Compute pair distances and the novelty threshold.")
_register("score", "ns_top", "Score documents and flag the annual top decile.")
_register("regress", "models", "Build variables and fit the regression battery.")
_register("report", "reports", "Run everything and emit report tables and figures.")
_register("run", "reports", "Run the full pipeline end to end.")


if __name__ == "__main__":
    main()
