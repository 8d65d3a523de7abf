"""Command-line entry point wiring ingest / generate / report / label.

Exit codes: 0 success, 1 usage or config error, 2 batch finished with
aborted sessions, 3 I/O failure.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

import click

from . import evaluation, llm, session, units
from .config import BACKEND_LIVE, BACKEND_REPLAY, AppConfig, ConfigError, load_config
from .llm import API_KEY_ENV, LiveBackend, RateLimiter, ReplayBackend, ReplayScript, ResponseCache


class AbortedSessionsError(RuntimeError):
    """The batch completed but some sessions aborted."""


def _build_config(config_file: str | None, overrides: dict) -> AppConfig:
    return load_config(config_file=config_file, overrides=overrides)


def make_backend(config: AppConfig):
    if config.backend == BACKEND_REPLAY:
        return ReplayBackend(ReplayScript.load(config.path("replay_script")))
    if config.backend == BACKEND_LIVE:
        cache = None
        if config["llm.cache"] and config.path("cache"):
            cache = ResponseCache(config.path("cache"))
        api_key = os.environ.get(API_KEY_ENV, "")
        if not api_key:
            raise ConfigError(f"live backend requires {API_KEY_ENV} to be set")
        return LiveBackend(
            config["llm.api_base"],
            api_key,
            cache=cache,
            rate_limiter=RateLimiter(config["llm.requests_per_minute"]),
            max_attempts=config["llm.retry_attempts"],
        )
    raise ConfigError(f"unknown backend {config.backend!r}")


@click.group()
def cli() -> None:
    """Generate executable documentation code examples with a completion
    model, executing candidates in a sandbox and repairing failures with
    their error messages."""


@cli.command("ingest")
@click.option("--source", "sources", multiple=True, help="Source file to parse statically.")
@click.option("--introspect", "targets", multiple=True,
              help="Dotted name or module path for the introspection helper.")
@click.option("--introspect-cmd", default="introspect", show_default=True,
              help="Command used to run the introspection helper.")
@click.option("--module-name", default=None,
              help="Module name for qualified names (default: file stem).")
@click.option("--out", "out_path", default="units.json", show_default=True)
def cmd_ingest(sources, targets, introspect_cmd, module_name, out_path) -> None:
    """Produce a units JSON file from source files and/or runtime introspection."""
    if not sources and not targets:
        raise click.UsageError("nothing to ingest: pass --source and/or --introspect")

    collected: list[units.DocumentationUnit] = []
    for source in sources:
        result = units.parse_source_file(source, module_name=module_name)
        for diag in result.diagnostics:
            click.echo(f"skipped {diag.path}:{diag.line}: {diag.message}", err=True)
        collected.extend(result.units)

    if targets:
        proc = subprocess.run(
            [introspect_cmd, *targets], capture_output=True, text=True
        )
        if proc.stderr.strip():
            click.echo(proc.stderr.rstrip(), err=True)
        if proc.returncode != 0:
            raise ConfigError(
                f"introspection helper {introspect_cmd!r} failed with code {proc.returncode}"
            )
        records = json.loads(proc.stdout)
        if not isinstance(records, list):
            raise units.UnitError("introspection helper did not emit a JSON array")
        collected.extend(
            units.unit_from_record(rec, index=i) for i, rec in enumerate(records)
        )

    corpus = units.UnitCorpus(units=collected)  # re-validates name uniqueness
    units.save_units(corpus.units, out_path)
    click.echo(f"wrote {len(corpus.units)} units to {out_path}", err=True)


_GENERATE_FLAGS = {
    "backend": "run.backend",
    "max_repairs": "run.max_repair_rounds",
    "concurrency": "run.concurrency",
    "prompt_budget": "run.prompt_budget",
    "offline": "run.offline",
    "model": "llm.model",
    "temperature": "llm.temperature",
    "max_tokens": "llm.max_tokens",
    "api_base": "llm.api_base",
    "script": "paths.replay_script",
    "units_path": "paths.units",
    "sessions": "paths.sessions",
    "interpreter": "sandbox.interpreter",
    "timeout": "sandbox.wall_timeout",
    "sample_n": "sample.n",
    "sample_seed": "sample.seed",
}


@cli.command("generate")
@click.option("--config", "config_file", type=click.Path(), default=None)
@click.option("--units", "units_path", default=None, help="Units JSON file.")
@click.option("--backend", type=click.Choice([BACKEND_REPLAY, BACKEND_LIVE]), default=None)
@click.option("--script", default=None, help="Replay script (replay backend).")
@click.option("--sessions", default=None, help="Sessions JSONL output path.")
@click.option("--max-repairs", type=int, default=None)
@click.option("--concurrency", type=int, default=None)
@click.option("--prompt-budget", type=int, default=None)
@click.option("--model", default=None)
@click.option("--temperature", type=float, default=None)
@click.option("--max-tokens", type=int, default=None)
@click.option("--api-base", default=None)
@click.option("--interpreter", default=None)
@click.option("--timeout", type=float, default=None, help="Sandbox wall timeout (s).")
@click.option("--offline", is_flag=True, default=None)
@click.option("--sample-n", type=int, default=None)
@click.option("--sample-seed", type=int, default=None)
def cmd_generate(config_file, **flags) -> None:
    """Run the generate/execute/repair batch over a unit corpus."""
    overrides = {key: flags.get(flag) for flag, key in _GENERATE_FLAGS.items()}
    config = _build_config(config_file, overrides)
    config.validate_for_generate()

    corpus = units.load_units(config.path("units"))
    selected = corpus.units
    sample_n = config["sample.n"]
    if sample_n is not None:
        selected = units.sample_units(corpus, sample_n, config["sample.seed"])

    backend = make_backend(config)
    session_config = config.session_config()

    def progress(record: session.SessionRecord) -> None:
        click.echo(
            f"{record.unit.qualified_name}: {record.final_status} "
            f"({len(record.attempts)} attempt(s))",
            err=True,
        )

    records = session.run_batch(
        selected,
        backend,
        session_config,
        config.path("sessions"),
        concurrency=config["run.concurrency"],
        progress=progress,
    )

    n_pass = sum(1 for r in records if r.final_status == session.FINAL_PASS)
    aborted = [r for r in records if r.final_status == session.FINAL_ABORTED]
    click.echo(
        f"{len(records)} sessions: {n_pass} pass, "
        f"{len(records) - n_pass - len(aborted)} failed, {len(aborted)} aborted",
        err=True,
    )
    if aborted:
        raise AbortedSessionsError(
            f"{len(aborted)} session(s) aborted; see {config.path('sessions')}"
        )


@cli.command("report")
@click.option("--config", "config_file", type=click.Path(), default=None)
@click.option("--sessions", default=None, help="Sessions JSONL file.")
@click.option("--labels", default=None, help="Relevance labels file (CSV or JSON).")
@click.option("--out", "out_path", default=None, help="Report JSON output path.")
def cmd_report(config_file, sessions, labels, out_path) -> None:
    """Summarize passability/relevance and emit the report files."""
    overrides = {
        "paths.sessions": sessions,
        "paths.labels": labels,
        "paths.report": out_path,
    }
    config = _build_config(config_file, overrides)

    records = session.load_records(config.path("sessions"))
    label_list = None
    if config.path("labels"):
        label_list = evaluation.import_labels(config.path("labels"))

    summary = evaluation.summarize(records, label_list)
    if label_list is not None:
        missing = evaluation.missing_label_units(records, label_list)
        if missing:
            click.echo(
                "warning: relevance omitted; units without labels: "
                + ", ".join(missing),
                err=True,
            )

    report, table = evaluation.render_report(summary, records, label_list)
    evaluation.write_report(report, config.path("report"))
    click.echo(table, nl=False)


@cli.command("label")
@click.option("--labels", "labels_path", required=True, help="Labels file to normalize.")
def cmd_label(labels_path) -> None:
    """Validate a labels file and rewrite it in canonical CSV form."""
    labels = evaluation.normalize_labels(labels_path)
    relevant = sum(1 for label in labels if label.relevant)
    click.echo(f"{len(labels)} labels ({relevant} relevant) in {labels_path}", err=True)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        return 130
    except KeyboardInterrupt:
        click.echo("interrupted; partial results were persisted", err=True)
        return 130
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except (ConfigError, units.UnitError, evaluation.LabelError,
            evaluation.SummaryError, llm.BackendError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except AbortedSessionsError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
