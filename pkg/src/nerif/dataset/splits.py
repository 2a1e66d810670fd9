"""Balanced split sampling and batch partitioning.

Sampling uses numpy's PCG64 generator keyed by ``(seed, task, stream)``, so
splits are a pure function of the records, their order and the seed, and
are stable across platforms. Each class is shuffled independently and
prefix-taken in the order examples, validation, test. Each split's combined
order is then shuffled once more so batches mix classes.
"""

from __future__ import annotations

import zlib
from collections import defaultdict

import numpy as np

from nerif.core.models import ProficiencyLevel
from nerif.dataset.models import MAX_BATCH_SIZE, Batch, CaseRecord, Splits, SplitSpec
from nerif.errors import BatchTooLarge, ConfigurationError, InsufficientClassCount

_ORDER_STREAM = 100
_SPLIT_NAMES = ("examples", "validation", "test")


def _generator(seed: int, task_id: str, stream: int) -> np.random.Generator:
    entropy = [seed % 2**64, zlib.crc32(task_id.upper().encode("utf-8")), stream]
    return np.random.Generator(np.random.PCG64(entropy))


def sample_splits(records: list[CaseRecord], spec: SplitSpec) -> Splits:
    """Draw disjoint, class-balanced splits for a single task.

    Args:
        records: Records of one task, in manifest order.
        spec: Per-class quotas and seed.

    Returns:
        Splits holding exactly the per-class quota of every class.

    Raises:
        ConfigurationError: If records span several tasks or none.
        InsufficientClassCount: If a class is short of its quota total.
    """
    task_ids = {r.task_id for r in records}
    if len(task_ids) != 1:
        raise ConfigurationError(
            f"sample_splits needs records of exactly one task, got {sorted(task_ids) or 'none'}"
        )
    task_id = task_ids.pop()

    by_level: dict[ProficiencyLevel, list[CaseRecord]] = defaultdict(list)
    for record in records:
        by_level[record.human_label].append(record)
    for level in ProficiencyLevel:
        have = len(by_level[level])
        if have < spec.per_class:
            raise InsufficientClassCount(level.label, spec.per_class - have)

    quotas = (spec.n_examples, spec.n_validation, spec.n_test)
    chunks: dict[str, list[CaseRecord]] = {name: [] for name in _SPLIT_NAMES}
    for level in ProficiencyLevel:
        members = by_level[level]
        order = _generator(spec.seed, task_id, int(level)).permutation(len(members))
        shuffled = [members[i] for i in order]
        start = 0
        for name, quota in zip(_SPLIT_NAMES, quotas, strict=True):
            chunks[name].extend(shuffled[start : start + quota])
            start += quota

    ordered: dict[str, list[CaseRecord]] = {}
    for idx, name in enumerate(_SPLIT_NAMES):
        cases = chunks[name]
        order = _generator(spec.seed, task_id, _ORDER_STREAM + idx).permutation(len(cases))
        ordered[name] = [cases[i] for i in order]

    return Splits(task_id=task_id, spec=spec, **ordered)


def sample_all(records: list[CaseRecord], spec: SplitSpec) -> dict[str, Splits]:
    """sample_splits() for every task in a pooled manifest, keyed by task_id."""
    by_task: dict[str, list[CaseRecord]] = defaultdict(list)
    for record in records:
        by_task[record.task_id].append(record)
    return {task_id: sample_splits(recs, spec) for task_id, recs in by_task.items()}


def make_batches(test_cases: list[CaseRecord], size: int = MAX_BATCH_SIZE) -> list[Batch]:
    """Partition cases into consecutive batches in input order.

    Args:
        test_cases: Cases to batch.
        size: Batch size, at most three.

    Returns:
        Batches numbered from 1; the last may hold fewer cases.

    Raises:
        BatchTooLarge: If size exceeds the three-drawing limit.
    """
    if size > MAX_BATCH_SIZE:
        raise BatchTooLarge(size, MAX_BATCH_SIZE)
    if size < 1:
        raise ValueError(f"Batch size must be positive, got {size}")
    return [
        Batch(batch_id=n, cases=list(test_cases[start : start + size]))
        for n, start in enumerate(range(0, len(test_cases), size), start=1)
    ]
