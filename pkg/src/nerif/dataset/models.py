"""Data models for labeled cases, split specs and batches."""

from __future__ import annotations

from dataclasses import dataclass, field

from pydantic import BaseModel, ConfigDict

from nerif.core.models import Level

MAX_BATCH_SIZE = 3


class CaseRecord(BaseModel):
    """One human-scored student drawing.

    Attributes:
        case_id: Unique id within the manifest.
        image_path: Drawing file path (absolute once loaded).
        human_label: Consensus human label.
        task_id: Assessment item the drawing answers.
    """

    model_config = ConfigDict(frozen=True)

    case_id: str
    image_path: str
    human_label: Level
    task_id: str


class SplitSpec(BaseModel):
    """Per-class quotas for the example, validation and test splits.

    Attributes:
        n_examples: Few-shot examples per class.
        n_validation: Validation cases per class.
        n_test: Test cases per class.
        seed: Sampling seed.
    """

    model_config = ConfigDict(frozen=True)

    n_examples: int = 3
    n_validation: int = 3
    n_test: int = 50
    seed: int = 0

    @property
    def per_class(self) -> int:
        return self.n_examples + self.n_validation + self.n_test


class Splits(BaseModel):
    """Disjoint balanced splits drawn from one task's records.

    Attributes:
        task_id: Task the records belong to.
        spec: Quotas and seed used.
        examples: Few-shot example candidates.
        validation: Validation cases in batching order.
        test: Test cases in batching order.
    """

    task_id: str
    spec: SplitSpec
    examples: list[CaseRecord]
    validation: list[CaseRecord]
    test: list[CaseRecord]

    def split(self, name: str) -> list[CaseRecord]:
        """Return a split by name (``examples``, ``validation`` or ``test``)."""
        if name not in ("examples", "validation", "test"):
            raise ValueError(f"Unknown split: {name}")
        return list(getattr(self, name))


@dataclass
class Batch:
    """Cases scored together in one session.

    Attributes:
        batch_id: 1-based sequence number.
        cases: One to three cases in drawing order.
    """

    batch_id: int
    cases: list[CaseRecord] = field(default_factory=list)

    @property
    def case_ids(self) -> list[str]:
        return [c.case_id for c in self.cases]

    def __len__(self) -> int:
        return len(self.cases)
