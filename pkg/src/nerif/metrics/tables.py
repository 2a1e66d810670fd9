"""Rich tables for validation, test and confusion-matrix reports.

Values print at two decimals; JSON outputs keep full precision.
"""

from __future__ import annotations

import io
from collections.abc import Mapping

from rich import box
from rich.console import Console
from rich.table import Table

from nerif.core.models import LEVELS
from nerif.metrics.agreement import kappa_band
from nerif.metrics.models import AggregateReport, ConfusionMatrix, MetricsReport, ValidationRow

_ABBREV = ("Beg", "Dev", "Prof")


def fmt(value: float | None) -> str:
    """Two-decimal value without the leading zero, e.g. ``.45``; ``-`` for None."""
    if value is None:
        return "-"
    text = f"{value:.2f}"
    if text.startswith("0."):
        return text[1:]
    if text.startswith("-0."):
        return "-" + text[2:]
    return text


def validation_table(rows: Mapping[str, ValidationRow]) -> Table:
    """Overall and per-class validation accuracy per item, plus a mean row."""
    table = Table(title="Validation Accuracy", box=box.SIMPLE)
    table.add_column("Task", style="cyan")
    table.add_column("Accuracy", justify="right")
    first = next(iter(rows.values()), None)
    for abbr, count in zip(_ABBREV, first.class_n if first else (0, 0, 0), strict=True):
        table.add_column(f"Acc_{abbr} (n = {count})", justify="right")

    for task_id, row in rows.items():
        table.add_row(task_id, fmt(row.accuracy), *(fmt(v) for v in row.acc_per_class))
    if rows:
        n = len(rows)
        mean_acc = sum(r.accuracy for r in rows.values()) / n
        per_class = [sum(r.acc_per_class[i] for r in rows.values()) / n for i in range(3)]
        table.add_section()
        table.add_row("Mean", fmt(mean_acc), *(fmt(v) for v in per_class))
    return table


def _testing_row(report: MetricsReport) -> list[str]:
    return [
        fmt(report.accuracy),
        *(fmt(v) for v in report.acc_per_class),
        fmt(report.precision_macro),
        fmt(report.recall_macro),
        fmt(report.f1_macro),
        fmt(report.kappa_qw),
    ]


def testing_table(agg: AggregateReport) -> Table:
    """Test-phase metrics per item with mean and SD rows."""
    table = Table(title="Testing Scoring Accuracy", box=box.SIMPLE)
    table.add_column("Task", style="cyan")
    for name in (
        "Accuracy",
        *(f"Acc_{a}" for a in _ABBREV),
        "Precision",
        "Recall",
        "F1",
        "Kappa",
    ):
        table.add_column(name, justify="right")
    table.add_column("Agreement")

    for task_id, report in agg.per_item.items():
        table.add_row(task_id, *_testing_row(report), str(kappa_band(report.kappa_qw)))
    table.add_section()
    table.add_row("Mean", *_testing_row(agg.mean), str(kappa_band(agg.mean.kappa_qw)))
    if agg.sd is not None:
        table.add_row("SD", *_testing_row(agg.sd), "")
    return table


def confusion_table(task_id: str, m: ConfusionMatrix) -> Table:
    """Counts with human labels as rows and predictions as columns."""
    table = Table(title=f"Confusion Matrix {task_id}", box=box.SIMPLE)
    table.add_column("Human \\ Predicted", style="cyan")
    for level in LEVELS:
        table.add_column(level.label, justify="right")
    for level, row in zip(LEVELS, m.counts, strict=True):
        table.add_row(level.label, *(str(c) for c in row))
    return table


def render_text(*tables: Table, width: int = 120) -> str:
    """Render tables as plain aligned text (no colour codes)."""
    buffer = io.StringIO()
    console = Console(file=buffer, width=width, no_color=True, color_system=None)
    for table in tables:
        console.print(table)
    return buffer.getvalue()
