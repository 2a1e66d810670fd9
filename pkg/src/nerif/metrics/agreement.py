"""Agreement statistics between human and model labels.

Precision, recall and F1 are macro (unweighted) averages over the three
classes; a class that is never predicted has precision 0. Kappa is Cohen's
kappa with quadratic weights ``1 - (i - j)^2 / (k - 1)^2``.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence

import numpy as np

from nerif.core.models import ProficiencyLevel
from nerif.errors import DegenerateAgreement, EmptyInput, InsufficientItems
from nerif.metrics.models import (
    N_CLASSES,
    AggregateReport,
    ConfusionMatrix,
    KappaBand,
    MetricsReport,
    ValidationRow,
)

logger = logging.getLogger(__name__)

Pair = tuple[ProficiencyLevel, ProficiencyLevel]

# Prediction substituted for an unscored case: the label farthest from the truth.
MAXIMAL_MISS: dict[ProficiencyLevel, ProficiencyLevel] = {
    ProficiencyLevel.BEGINNING: ProficiencyLevel.PROFICIENT,
    ProficiencyLevel.DEVELOPING: ProficiencyLevel.BEGINNING,
    ProficiencyLevel.PROFICIENT: ProficiencyLevel.BEGINNING,
}

# Upper bounds, inclusive.
_KAPPA_BANDS = (
    (0.0, KappaBand.POOR),
    (0.20, KappaBand.SLIGHT),
    (0.40, KappaBand.FAIR),
    (0.60, KappaBand.MODERATE),
    (0.80, KappaBand.SUBSTANTIAL),
)


def confusion(pairs: Iterable[Pair]) -> ConfusionMatrix:
    """Count (true, predicted) pairs into a 3x3 matrix.

    Raises:
        EmptyInput: If there are no pairs.
    """
    pairs = list(pairs)
    if not pairs:
        raise EmptyInput("No label pairs to score")
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    idx = np.asarray([(int(t), int(p)) for t, p in pairs], dtype=np.int64)
    np.add.at(counts, (idx[:, 0], idx[:, 1]), 1)
    return ConfusionMatrix.from_array(counts)


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    return np.divide(num, den, out=np.zeros_like(num, dtype=float), where=den > 0)


def per_class_recall(m: ConfusionMatrix) -> np.ndarray:
    """Diagonal over row sums; 0 for an empty row. Also the per-class accuracy."""
    arr = m.array.astype(float)
    return _safe_ratio(np.diag(arr), arr.sum(axis=1))


def per_class_precision(m: ConfusionMatrix) -> np.ndarray:
    """Diagonal over column sums; 0 for a never-predicted class."""
    arr = m.array.astype(float)
    return _safe_ratio(np.diag(arr), arr.sum(axis=0))


def quadratic_weights(k: int = N_CLASSES) -> np.ndarray:
    i, j = np.indices((k, k))
    return 1.0 - (i - j) ** 2 / (k - 1) ** 2


def quadratic_weighted_kappa(m: ConfusionMatrix) -> float:
    """Cohen's kappa with quadratic agreement weights.

    Raises:
        EmptyInput: If the matrix is empty.
        DegenerateAgreement: If expected weighted agreement is 1.
    """
    arr = m.array.astype(float)
    n = arr.sum()
    if n == 0:
        raise EmptyInput("Kappa of an empty matrix")
    w = quadratic_weights(arr.shape[0])
    observed = float((w * arr).sum() / n)
    expected = float((w * np.outer(arr.sum(axis=1) / n, arr.sum(axis=0) / n)).sum())
    if np.isclose(expected, 1.0, rtol=0.0, atol=1e-12):
        raise DegenerateAgreement("Both margins fall in a single class")
    return (observed - expected) / (1.0 - expected)


def _triple(values: np.ndarray) -> tuple[float, float, float]:
    return (float(values[0]), float(values[1]), float(values[2]))


def report(m: ConfusionMatrix) -> MetricsReport:
    """All agreement statistics for one confusion matrix.

    Raises:
        EmptyInput: If the matrix has no counts.
    """
    n = m.n
    if n == 0:
        raise EmptyInput("No label pairs to score")
    recall = per_class_recall(m)
    precision = per_class_precision(m)
    f1 = _safe_ratio(2 * precision * recall, precision + recall)

    try:
        kappa: float | None = quadratic_weighted_kappa(m)
        degenerate = False
    except DegenerateAgreement:
        logger.warning("Kappa undefined: all labels and predictions fall in one class")
        kappa, degenerate = None, True

    return MetricsReport(
        accuracy=float(np.trace(m.array) / n),
        acc_per_class=_triple(recall),
        precision_per_class=_triple(precision),
        f1_per_class=_triple(f1),
        precision_macro=float(precision.mean()),
        recall_macro=float(recall.mean()),
        f1_macro=float(f1.mean()),
        kappa_qw=kappa,
        kappa_degenerate=degenerate,
        n=n,
    )


def sample_sd(values: Sequence[float]) -> float:
    """Standard deviation with divisor n - 1.

    Raises:
        InsufficientItems: With fewer than two values.
    """
    if len(values) < 2:
        raise InsufficientItems(len(values))
    return float(np.std(np.asarray(values, dtype=float), ddof=1))


_SCALAR_FIELDS = ("accuracy", "precision_macro", "recall_macro", "f1_macro")
_TRIPLE_FIELDS = ("acc_per_class", "precision_per_class", "f1_per_class")


def _column_stat(reports: list[MetricsReport], stat: str) -> MetricsReport:
    def reduce(values: Sequence[float]) -> float:
        return float(np.mean(values)) if stat == "mean" else sample_sd(values)

    fields: dict[str, object] = {}
    for f in _SCALAR_FIELDS:
        fields[f] = reduce([getattr(r, f) for r in reports])
    for f in _TRIPLE_FIELDS:
        cols = np.asarray([getattr(r, f) for r in reports], dtype=float)
        fields[f] = tuple(reduce(cols[:, i].tolist()) for i in range(N_CLASSES))
    kappas = [r.kappa_qw for r in reports if r.kappa_qw is not None]
    try:
        fields["kappa_qw"] = reduce(kappas) if kappas else None
    except InsufficientItems:
        fields["kappa_qw"] = None
    fields["kappa_degenerate"] = not kappas
    fields["n"] = len(reports)
    return MetricsReport.model_validate(fields)


def aggregate(reports: Mapping[str, MetricsReport]) -> AggregateReport:
    """Column means and sample SDs across items.

    Kappa statistics skip items whose kappa is undefined. With a single item
    the SD is left unset.

    Raises:
        EmptyInput: If there are no reports.
    """
    items = list(reports.values())
    if not items:
        raise EmptyInput("No reports to aggregate")
    mean = _column_stat(items, "mean")
    try:
        sd: MetricsReport | None = _column_stat(items, "sd")
    except InsufficientItems as exc:
        logger.info("SD not computed: %s", exc)
        sd = None
    return AggregateReport(per_item=dict(reports), mean=mean, sd=sd)


def kappa_band(kappa: float | None) -> KappaBand:
    """Qualitative band for a kappa value (cut points 0, .20, .40, .60, .80)."""
    if kappa is None:
        return KappaBand.UNDEFINED
    for upper, band in _KAPPA_BANDS:
        if kappa <= upper:
            return band
    return KappaBand.ALMOST_PERFECT


def validation_row(m: ConfusionMatrix) -> ValidationRow:
    """Overall and per-class accuracy with each class's case count."""
    row_n = m.array.sum(axis=1)
    recall = per_class_recall(m)
    return ValidationRow(
        accuracy=float(np.trace(m.array) / m.n) if m.n else 0.0,
        acc_per_class=_triple(recall),
        class_n=(int(row_n[0]), int(row_n[1]), int(row_n[2])),
        n=m.n,
    )


def score_pairs(
    pairs: Iterable[tuple[ProficiencyLevel, ProficiencyLevel | None]],
    exclude_unscored: bool = False,
) -> tuple[list[Pair], int]:
    """Resolve missing predictions before scoring.

    Args:
        pairs: (human label, predicted label or None).
        exclude_unscored: Drop unscored cases instead of counting them as
            maximal-distance misses.

    Returns:
        Scorable pairs and the number of unscored cases.
    """
    scored: list[Pair] = []
    unscored = 0
    for true, predicted in pairs:
        if predicted is None:
            unscored += 1
            if exclude_unscored:
                continue
            predicted = MAXIMAL_MISS[true]
        scored.append((true, predicted))
    return scored, unscored
