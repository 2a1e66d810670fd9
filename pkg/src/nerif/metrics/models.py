"""Agreement statistic containers."""

from __future__ import annotations

from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from nerif.core.models import LEVELS

N_CLASSES = len(LEVELS)


class ConfusionMatrix(BaseModel):
    """3x3 label counts; rows are human labels, columns predictions.

    Attributes:
        counts: Cell counts indexed by level ordinal.
    """

    model_config = ConfigDict(frozen=True)

    counts: tuple[tuple[int, ...], ...]

    @field_validator("counts")
    @classmethod
    def _shape(cls, value: tuple[tuple[int, ...], ...]) -> tuple[tuple[int, ...], ...]:
        if len(value) != N_CLASSES or any(len(row) != N_CLASSES for row in value):
            raise ValueError(f"Confusion matrix must be {N_CLASSES}x{N_CLASSES}")
        if any(c < 0 for row in value for c in row):
            raise ValueError("Confusion matrix counts must be non-negative")
        return value

    @classmethod
    def from_array(cls, arr: np.ndarray | list[list[int]]) -> ConfusionMatrix:
        rows = np.asarray(arr, dtype=np.int64)
        return cls(counts=tuple(tuple(int(c) for c in row) for row in rows))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)

    @property
    def n(self) -> int:
        return int(self.array.sum())

    def transpose(self) -> ConfusionMatrix:
        return ConfusionMatrix.from_array(self.array.T)


class MetricsReport(BaseModel):
    """Agreement between human and predicted labels for one item.

    Attributes:
        accuracy: Share of exact matches.
        acc_per_class: Per-class accuracy (recall) for Beginning,
            Developing, Proficient.
        precision_per_class: Per-class precision (0 for never-predicted classes).
        f1_per_class: Per-class F1 (0 when precision and recall are both 0).
        precision_macro: Unweighted mean of per-class precision.
        recall_macro: Unweighted mean of per-class recall.
        f1_macro: Unweighted mean of per-class F1.
        kappa_qw: Quadratic-weighted kappa, None when undefined.
        kappa_degenerate: Set when kappa is undefined for this matrix.
        n: Pairs scored.
    """

    model_config = ConfigDict(frozen=True)

    accuracy: float
    acc_per_class: tuple[float, float, float]
    precision_per_class: tuple[float, float, float] = (0.0, 0.0, 0.0)
    f1_per_class: tuple[float, float, float] = (0.0, 0.0, 0.0)
    precision_macro: float
    recall_macro: float
    f1_macro: float
    kappa_qw: float | None
    kappa_degenerate: bool = False
    n: int = 0

    @property
    def recall_per_class(self) -> tuple[float, float, float]:
        return self.acc_per_class


class AggregateReport(BaseModel):
    """Per-item reports with their column means and sample SDs.

    Attributes:
        per_item: Report per task_id.
        mean: Column means; ``n`` is the item count.
        sd: Column sample SDs, None with fewer than two items.
    """

    per_item: dict[str, MetricsReport]
    mean: MetricsReport
    sd: MetricsReport | None = None


class ValidationRow(BaseModel):
    """Validation table row: accuracy overall and per class with class sizes."""

    accuracy: float
    acc_per_class: tuple[float, float, float]
    class_n: tuple[int, int, int]
    n: int


class KappaBand(StrEnum):
    """Qualitative agreement bands for kappa values."""

    UNDEFINED = "Undefined"
    POOR = "Poor"
    SLIGHT = "Slight"
    FAIR = "Fair"
    MODERATE = "Moderate"
    SUBSTANTIAL = "Substantial"
    ALMOST_PERFECT = "Almost perfect"
