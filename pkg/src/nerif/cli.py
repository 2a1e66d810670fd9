"""NERIF CLI: rubric-based proficiency scoring with vision-language models.

Commands:
    tasks       List the built-in task catalog
    sample      Draw example/validation/test splits from a manifest
    compose     Render the reference and test sheets, optionally print the prompt
    run         Score the validation or test split batch by batch
    ablate      Run the Full, NoNotes and NoExamples prompt variants
    parse       Re-parse the transcripts of an existing run
    score       Recompute metrics from an existing run
    report      Aggregate tables across runs

Usage:
    $ nerif sample --task M3-1 --manifest cases.csv --output splits.json
    $ nerif run --task M3-1 --manifest cases.csv --run-dir runs/m3-1 --mode validation
    $ nerif report runs/*/

For detailed help on any command:
    $ nerif <command> --help
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated, NoReturn

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from nerif import __version__
from nerif.core.models import LEVELS
from nerif.core.tasks import list_tasks, resolve_task
from nerif.dataset.manifest import load_manifest, records_for_task
from nerif.dataset.models import SplitSpec
from nerif.dataset.splits import sample_splits
from nerif.errors import NerifError
from nerif.gateway.models import BackendKind, DecodingParams, GatewayConfig
from nerif.metrics.tables import render_text
from nerif.prompt.compiler import compile_prompt
from nerif.prompt.models import PromptVariant
from nerif.runner import orchestrator
from nerif.runner.models import RunConfig, RunMode
from nerif.runner.reporting import load_summaries, render_run, report_tables
from nerif.sheets.composer import (
    compose_reference_sheet,
    compose_test_sheet,
    save_sheet,
    verify_sheet,
)

app = typer.Typer(
    name="nerif",
    help="Rubric-based proficiency scoring of student drawings with vision-language models.",
    no_args_is_help=True,
)
console = Console()

_LOG_LEVELS = {0: logging.WARNING, 1: logging.INFO}


def _error(message: str) -> NoReturn:
    """Print error and exit."""
    typer.echo(f"Error: {message}", err=True)
    raise typer.Exit(code=1)


@contextmanager
def _errors_to_exit() -> Iterator[None]:
    try:
        yield
    except NerifError as exc:
        _error(str(exc))


def _configure_logging(verbosity: int) -> None:
    logger = logging.getLogger("nerif")
    logger.handlers.clear()
    logger.addHandler(RichHandler(console=Console(stderr=True), show_path=False))
    logger.setLevel(_LOG_LEVELS.get(verbosity, logging.DEBUG))
    logger.propagate = False


def _version_callback(value: bool) -> None:
    if value:
        typer.echo(f"nerif {__version__}")
        raise typer.Exit()


@app.callback()
def main(
    verbose: Annotated[
        int,
        typer.Option("--verbose", "-v", count=True, help="-v for INFO, -vv for DEBUG logging."),
    ] = 0,
    version: Annotated[
        bool,
        typer.Option("--version", callback=_version_callback, is_eager=True, help="Show version."),
    ] = False,
) -> None:
    """Rubric-based proficiency scoring of student drawings with vision-language models."""
    _configure_logging(verbose)


# -- shared options -----------------------------------------------------------

TaskOpt = Annotated[str, typer.Option("--task", help="Built-in task id or task file path.")]
ManifestOpt = Annotated[
    Path, typer.Option("--manifest", help="CSV manifest or JSON array of labeled cases.")
]
SeedOpt = Annotated[int, typer.Option("--seed", help="Split sampling seed.")]
VariantOpt = Annotated[
    PromptVariant, typer.Option("--variant", help="Prompt variant.", case_sensitive=False)
]
ModeOpt = Annotated[RunMode, typer.Option("--mode", help="Which split to score.")]
RunDirOpt = Annotated[Path, typer.Option("--run-dir", help="Output directory of the run.")]


def _load_noise(path: Path | None) -> list[list[float]] | None:
    if path is None:
        return None
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        _error(f"Cannot read noise matrix {path}: {exc}")


def _build_config(
    *,
    task: str,
    manifest: Path,
    run_dir: Path,
    seed: int,
    variant: PromptVariant,
    mode: RunMode,
    backend: BackendKind,
    concurrency: int,
    rpm: int,
    exclude_unscored: bool,
    cues: Path | None,
    templates: Path | None,
    fixtures: Path | None,
    noise: Path | None,
    splits: Path | None,
    temperature: float,
) -> RunConfig:
    try:
        return RunConfig(
            task=task,
            manifest=manifest,
            run_dir=run_dir,
            split=SplitSpec(seed=seed),
            splits_path=splits,
            variant=variant,
            mode=mode,
            backend=backend,
            decoding=DecodingParams(temperature=temperature),
            gateway=GatewayConfig(rpm=rpm, concurrency=concurrency),
            fixtures_dir=fixtures,
            noise_matrix=_load_noise(noise),
            cues_path=cues,
            template_dir=templates,
            exclude_unscored=exclude_unscored,
        )
    except ValueError as exc:
        _error(str(exc))


# -- commands -----------------------------------------------------------------


@app.command()
def tasks() -> None:
    """List the built-in task catalog."""
    table = Table(title="Tasks")
    table.add_column("Task", style="cyan")
    table.add_column("Components", justify="right")
    table.add_column("Rule (P, D)", justify="right")
    table.add_column("Examples", justify="right")
    for task in list_tasks():
        rubric = task.rubric
        table.add_row(
            task.task_id,
            str(len(rubric.components)),
            f"{rubric.rule.proficient_min}, {rubric.rule.developing_min}",
            str(len(task.examples)),
        )
    console.print(table)


@app.command()
def sample(
    task: TaskOpt,
    manifest: ManifestOpt,
    output: Annotated[Path, typer.Option("--output", "-o", help="splits.json path.")] = Path(
        "splits.json"
    ),
    seed: SeedOpt = 0,
    n_examples: Annotated[int, typer.Option(help="Examples per class.")] = 3,
    n_validation: Annotated[int, typer.Option(help="Validation cases per class.")] = 3,
    n_test: Annotated[int, typer.Option(help="Test cases per class.")] = 50,
) -> None:
    """Draw disjoint, class-balanced splits and save them as JSON."""
    with _errors_to_exit():
        task_def = resolve_task(task)
        records = records_for_task(load_manifest(manifest), task_def.task_id)
        spec = SplitSpec(
            n_examples=n_examples, n_validation=n_validation, n_test=n_test, seed=seed
        )
        splits = sample_splits(records, spec)
    output.write_text(splits.model_dump_json(indent=2) + "\n", encoding="utf-8")

    table = Table(title=f"Splits {splits.task_id} (seed {seed})")
    table.add_column("Split", style="cyan")
    for level in LEVELS:
        table.add_column(level.label, justify="right")
    for name in ("examples", "validation", "test"):
        counts = Counter(c.human_label for c in splits.split(name))
        table.add_row(name, *(str(counts[level]) for level in LEVELS))
    console.print(table)
    typer.echo(f"Splits written to {output}")


@app.command()
def compose(
    task: TaskOpt,
    manifest: ManifestOpt,
    output: Annotated[Path, typer.Option("--output", "-o", help="Directory for sheets.")] = Path(
        "sheets"
    ),
    seed: SeedOpt = 0,
    variant: VariantOpt = PromptVariant.FULL,
    mode: ModeOpt = RunMode.TEST,
    show_prompt: Annotated[
        bool, typer.Option("--show-prompt", help="Print the compiled prompt.")
    ] = False,
    templates: Annotated[Path | None, typer.Option(help="Custom template directory.")] = None,
    splits: Annotated[Path | None, typer.Option(help="splits.json from `nerif sample`.")] = None,
) -> None:
    """Render the reference sheet and every test sheet of the selected split."""
    config = RunConfig(
        task=task,
        manifest=manifest,
        run_dir=output,
        split=SplitSpec(seed=seed),
        splits_path=splits,
        variant=variant,
        mode=mode,
        template_dir=templates,
    )
    findings = 0
    with _errors_to_exit():
        ctx = orchestrator.load_context(config)
        reference = compose_reference_sheet(ctx.task, include_examples=variant.includes_examples)
        sheets = [("reference", reference)]
        sheets += [(f"batch-{b.batch_id:04d}", compose_test_sheet(b)) for b in ctx.batches]
        for name, sheet in sheets:
            save_sheet(sheet, output / f"{name}.png")
            for finding in verify_sheet(sheet):
                findings += 1
                typer.echo(f"{name}: {finding.kind} {finding.detail}", err=True)
        prompt = compile_prompt(ctx.task, variant, template_dir=templates) if show_prompt else None

    typer.echo(f"Wrote {len(sheets)} sheet(s) to {output}")
    if findings:
        typer.echo(f"{findings} sheet finding(s)", err=True)
    if prompt is not None:
        typer.echo()
        typer.echo(prompt.text)


@app.command()
def run(
    task: TaskOpt,
    manifest: ManifestOpt,
    run_dir: RunDirOpt,
    seed: SeedOpt = 0,
    variant: VariantOpt = PromptVariant.FULL,
    mode: ModeOpt = RunMode.TEST,
    backend: Annotated[BackendKind, typer.Option(help="Gateway backend.")] = BackendKind.REMOTE,
    concurrency: Annotated[int, typer.Option(help="Sessions in flight at once.")] = 1,
    rpm: Annotated[int, typer.Option(help="Requests-per-minute ceiling.")] = 20,
    resume: Annotated[bool, typer.Option("--resume", help="Continue an existing run.")] = False,
    exclude_unscored: Annotated[
        bool, typer.Option("--exclude-unscored", help="Drop unscored cases from metrics.")
    ] = False,
    cues: Annotated[Path | None, typer.Option(help="Custom cue table file.")] = None,
    templates: Annotated[Path | None, typer.Option(help="Custom template directory.")] = None,
    fixtures: Annotated[
        Path | None, typer.Option(help="Transcript directory for the scripted backend.")
    ] = None,
    noise: Annotated[
        Path | None, typer.Option(help="JSON 3x3 noise matrix for the oracle backend.")
    ] = None,
    splits: Annotated[Path | None, typer.Option(help="splits.json from `nerif sample`.")] = None,
    temperature: Annotated[float, typer.Option(help="Sampling temperature.")] = 0.0,
) -> None:
    """Score the validation or test split batch by batch."""
    config = _build_config(
        task=task,
        manifest=manifest,
        run_dir=run_dir,
        seed=seed,
        variant=variant,
        mode=mode,
        backend=backend,
        concurrency=concurrency,
        rpm=rpm,
        exclude_unscored=exclude_unscored,
        cues=cues,
        templates=templates,
        fixtures=fixtures,
        noise=noise,
        splits=splits,
        temperature=temperature,
    )
    with _errors_to_exit():
        summary = orchestrator.run(config, resume=resume)
    typer.echo(render_run(summary))


@app.command()
def ablate(
    task: TaskOpt,
    manifest: ManifestOpt,
    run_dir: RunDirOpt,
    seed: SeedOpt = 0,
    mode: ModeOpt = RunMode.TEST,
    backend: Annotated[BackendKind, typer.Option(help="Gateway backend.")] = BackendKind.REMOTE,
    concurrency: Annotated[int, typer.Option(help="Sessions in flight at once.")] = 1,
    rpm: Annotated[int, typer.Option(help="Requests-per-minute ceiling.")] = 20,
    resume: Annotated[bool, typer.Option("--resume", help="Continue existing runs.")] = False,
    exclude_unscored: Annotated[
        bool, typer.Option("--exclude-unscored", help="Drop unscored cases from metrics.")
    ] = False,
    cues: Annotated[Path | None, typer.Option(help="Custom cue table file.")] = None,
    fixtures: Annotated[
        Path | None, typer.Option(help="Transcript directory for the scripted backend.")
    ] = None,
    noise: Annotated[
        Path | None, typer.Option(help="JSON 3x3 noise matrix for the oracle backend.")
    ] = None,
    splits: Annotated[Path | None, typer.Option(help="splits.json from `nerif sample`.")] = None,
) -> None:
    """Run the Full, NoNotes and NoExamples variants over the same batches."""
    config = _build_config(
        task=task,
        manifest=manifest,
        run_dir=run_dir,
        seed=seed,
        variant=PromptVariant.FULL,
        mode=mode,
        backend=backend,
        concurrency=concurrency,
        rpm=rpm,
        exclude_unscored=exclude_unscored,
        cues=cues,
        templates=None,
        fixtures=fixtures,
        noise=noise,
        splits=splits,
        temperature=0.0,
    )
    with _errors_to_exit():
        orchestrator.ablate(config, resume=resume)
    typer.echo((run_dir / orchestrator.ABLATION_FILE).read_text(encoding="utf-8"))


@app.command("parse")
def parse_cmd(
    run_dir: Annotated[Path, typer.Argument(help="Existing run directory.")],
    cues: Annotated[Path | None, typer.Option(help="Custom cue table file.")] = None,
) -> None:
    """Re-parse the persisted transcripts of a run."""
    with _errors_to_exit():
        summary = orchestrator.reparse(run_dir, cues_path=cues)
    typer.echo(render_run(summary))


@app.command()
def score(
    run_dir: Annotated[Path, typer.Argument(help="Existing run directory.")],
    exclude_unscored: Annotated[
        bool | None,
        typer.Option(
            "--exclude-unscored/--count-unscored",
            help="Override the run's unscored-case policy.",
        ),
    ] = None,
) -> None:
    """Recompute the summary and metrics from persisted batch records."""
    with _errors_to_exit():
        summary = orchestrator.score(run_dir, exclude_unscored)
    typer.echo(render_run(summary))


@app.command()
def report(
    run_dirs: Annotated[list[Path], typer.Argument(help="Run directories to aggregate.")],
    output: Annotated[Path | None, typer.Option("--output", "-o", help="Write text here.")] = None,
) -> None:
    """Validation and testing tables, with mean and SD, across runs."""
    with _errors_to_exit():
        summaries = load_summaries(run_dirs)
        text = render_text(*report_tables(summaries))
    typer.echo(text)
    if output is not None:
        output.write_text(text, encoding="utf-8")
        typer.echo(f"Report written to {output}")
