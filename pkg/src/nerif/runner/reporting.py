"""Rendering of run summaries, cross-item reports and ablation comparisons."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from pathlib import Path

from rich import box
from rich.table import Table

from nerif.core.models import ProficiencyLevel
from nerif.errors import IncompleteRun
from nerif.metrics.agreement import aggregate, validation_row
from nerif.metrics.models import ValidationRow
from nerif.metrics.tables import (
    confusion_table,
    fmt,
    render_text,
    testing_table,
    validation_table,
)
from nerif.prompt.models import PromptVariant
from nerif.runner.models import RunMode, RunSummary
from nerif.runner.store import RunStore


def _label(level: ProficiencyLevel | None) -> str:
    return level.label if level is not None else "-"


def cases_table(summary: RunSummary, only_problems: bool = False) -> Table:
    """Per-case human and predicted labels with any parse issues."""
    table = Table(title=f"Cases {summary.task_id} ({summary.mode}, {summary.variant})")
    table.add_column("Case", style="cyan")
    table.add_column("Batch", justify="right")
    table.add_column("Human")
    table.add_column("Predicted")
    table.add_column("Notes")
    for row in summary.cases:
        if only_problems and not (row.unscored or row.issues or row.error):
            continue
        notes = "; ".join([*([row.error] if row.error else []), *row.issues])
        table.add_row(
            row.case_id,
            str(row.batch_id) if row.batch_id is not None else "-",
            row.human.label,
            _label(row.predicted),
            notes,
        )
    return table


def run_tables(summary: RunSummary) -> list[Table]:
    tables: list[Table] = []
    if summary.confusion is not None and summary.metrics is not None:
        if summary.mode is RunMode.VALIDATION:
            tables.append(validation_table({summary.task_id: validation_row(summary.confusion)}))
        else:
            tables.append(testing_table(aggregate({summary.task_id: summary.metrics})))
        tables.append(confusion_table(summary.task_id, summary.confusion))
    tables.append(cases_table(summary, only_problems=summary.mode is RunMode.TEST))
    return tables


def render_run(summary: RunSummary) -> str:
    """Plain-text report for one run."""
    header = (
        f"Run {summary.run_id}: task {summary.task_id}, {summary.mode}, "
        f"variant {summary.variant}\n"
        f"Batches: {summary.batches}  Cases: {len(summary.cases)}  "
        f"Unscored: {summary.unscored}  "
        f"Retrieval echo: {summary.retrieval_echo_batches}\n"
    )
    if summary.metrics is not None and summary.metrics.kappa_degenerate:
        header += "Kappa undefined: labels and predictions all fall in one class\n"
    return header + "\n" + render_text(*run_tables(summary))


def load_summaries(run_dirs: Sequence[Path]) -> list[RunSummary]:
    """Load ``summary.json`` from every run directory.

    Raises:
        IncompleteRun: If no directories are given or any lacks a summary.
    """
    if not run_dirs:
        raise IncompleteRun(["<no run directories>"])
    missing = [str(d / "summary.json") for d in run_dirs if not (d / "summary.json").is_file()]
    if missing:
        raise IncompleteRun(missing)
    return [RunStore(d).load_summary() for d in run_dirs]


def report_tables(summaries: Sequence[RunSummary]) -> list[Table]:
    """Validation table, testing table with mean/SD, and confusion matrices.

    Summaries are grouped by mode; within a mode the last summary per task wins.
    """
    tables: list[Table] = []
    validation = {s.task_id: s for s in summaries if s.mode is RunMode.VALIDATION and s.confusion}
    testing = {
        s.task_id: s for s in summaries if s.mode is RunMode.TEST and s.confusion and s.metrics
    }
    if validation:
        rows: dict[str, ValidationRow] = {
            task_id: validation_row(s.confusion) for task_id, s in validation.items()
        }
        tables.append(validation_table(rows))
    if testing:
        tables.append(testing_table(aggregate({t: s.metrics for t, s in testing.items()})))
        tables.extend(confusion_table(t, s.confusion) for t, s in testing.items())
    return tables


def label_changes(summaries: Mapping[PromptVariant, RunSummary]) -> list[dict[str, str]]:
    """Per-case labels under every variant, for cases whose label differs."""
    variants = list(summaries)
    if not variants:
        return []
    base = summaries[variants[0]]
    predictions = {v: s.predictions() for v, s in summaries.items()}
    changes = []
    for row in base.cases:
        labels = {v: predictions[v].get(row.case_id) for v in variants}
        if len(set(labels.values())) > 1:
            changes.append(
                {
                    "case_id": row.case_id,
                    "human": row.human.label,
                    **{str(v): _label(label) for v, label in labels.items()},
                }
            )
    return changes


def ablation_table(summaries: Mapping[PromptVariant, RunSummary]) -> Table:
    """Accuracy per variant followed by every case whose label changed.

    Cells that differ from the first variant are marked with ``*``.
    """
    table = Table(title="Prompt Ablation", box=box.SIMPLE)
    table.add_column("Case", style="cyan")
    table.add_column("Human")
    for variant in summaries:
        table.add_column(str(variant))

    accuracy = [fmt(s.metrics.accuracy if s.metrics else None) for s in summaries.values()]
    table.add_row("Accuracy", "", *accuracy)
    table.add_section()
    variants = [str(v) for v in summaries]
    for change in label_changes(summaries):
        base = change[variants[0]]
        cells = [
            change[v] if i == 0 or change[v] == base else f"{change[v]}*"
            for i, v in enumerate(variants)
        ]
        table.add_row(change["case_id"], change["human"], *cells)
    return table
