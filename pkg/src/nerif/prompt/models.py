"""Data models for compiled prompts and variant diffs."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum


class PromptVariant(StrEnum):
    """Prompt variant; Full for scored runs, the others for ablation."""

    FULL = "Full"
    NO_EXAMPLES = "NoExamples"
    NO_NOTES = "NoNotes"

    @property
    def includes_examples(self) -> bool:
        return self is not PromptVariant.NO_EXAMPLES

    @property
    def includes_notes(self) -> bool:
        return self is not PromptVariant.NO_NOTES


class AttachmentRole(StrEnum):
    """Which composite image an attachment slot carries."""

    REFERENCE_SHEET = "ReferenceSheet"
    TEST_SHEET = "TestSheet"


ATTACHMENT_PLAN: tuple[AttachmentRole, AttachmentRole] = (
    AttachmentRole.REFERENCE_SHEET,
    AttachmentRole.TEST_SHEET,
)

SECTION_MARKERS: tuple[str, ...] = (
    "## ROLE",
    "## TASK",
    "## PROBLEM CONTEXT",
    "## RUBRIC",
    "## EXAMPLES",
    "## STUDENT DRAWINGS",
    "## DECODING",
)
"""Section headers in their fixed order."""


@dataclass(frozen=True)
class CompiledPrompt:
    """A fully rendered prompt.

    Attributes:
        text: Prompt text sent to the model.
        attachment_plan: Attachment roles in send order, always
            (ReferenceSheet, TestSheet).
        digest: sha256 hex digest of ``text``.
        variant: Variant the prompt was compiled for.
        task_id: Task the prompt scores.
        expected_drawings: Number of drawings on the test sheet.
        sections: Section marker to section body, in order.
    """

    text: str
    attachment_plan: tuple[AttachmentRole, AttachmentRole]
    digest: str
    variant: PromptVariant
    task_id: str
    expected_drawings: int
    sections: dict[str, str] = field(default_factory=dict)


class DiffOp(StrEnum):
    INSERTED = "inserted"
    DELETED = "deleted"


@dataclass(frozen=True)
class LineDiff:
    """One line-level difference between two prompts.

    Attributes:
        op: Whether the line was inserted into or deleted from the first prompt.
        line: The line text.
        section: Section marker the line sits under.
    """

    op: DiffOp
    line: str
    section: str

    def __str__(self) -> str:
        sign = "+" if self.op is DiffOp.INSERTED else "-"
        return f"{sign} [{self.section}] {self.line}"
