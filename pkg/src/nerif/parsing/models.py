"""Structured output of the response parser."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

from nerif.core.models import ComponentVerdict, ProficiencyLevel


class IssueKind(StrEnum):
    """Parse anomaly categories, in reporting order."""

    MISSING_DRAWING_SEGMENT = "MissingDrawingSegment"
    NO_FINAL_LABEL = "NoFinalLabel"
    CONFLICTING_LABELS = "ConflictingLabels"
    UNKNOWN_COMPONENT = "UnknownComponent"
    MISSING_COMPONENT_VERDICT = "MissingComponentVerdict"
    RUBRIC_INCONSISTENCY = "RubricInconsistency"


ISSUE_ORDER = {kind: i for i, kind in enumerate(IssueKind)}


@dataclass(frozen=True)
class ParseIssue:
    """One anomaly found while parsing.

    Attributes:
        kind: Issue category.
        drawing_index: 1-based drawing the issue concerns, if any.
        detail: Human-readable specifics.
    """

    kind: IssueKind
    drawing_index: int | None = None
    detail: str = ""

    def sort_key(self) -> tuple[int, int]:
        return (self.drawing_index or 0, ISSUE_ORDER[self.kind])

    def to_dict(self) -> dict[str, Any]:
        return {"kind": str(self.kind), "drawing_index": self.drawing_index, "detail": self.detail}


@dataclass
class DrawingAssessment:
    """Parsed evaluation of one drawing.

    Attributes:
        index: 1-based position on the test sheet.
        verdicts: Component letter to verdict, only for rubric components found.
        final_level: Stated level, or None when no level was found.
        rationale_span: (start, end) character offsets of the drawing's text.
    """

    index: int
    verdicts: dict[str, ComponentVerdict] = field(default_factory=dict)
    final_level: ProficiencyLevel | None = None
    rationale_span: tuple[int, int] = (0, 0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "verdicts": {k: str(v) for k, v in self.verdicts.items()},
            "final_level": self.final_level.label if self.final_level is not None else None,
            "rationale_span": list(self.rationale_span),
        }


@dataclass
class ParsedResponse:
    """Everything recovered from one transcript.

    Attributes:
        retrieval_echo_found: Whether an example rationale was echoed before
            the first drawing.
        assessments: One entry per drawing segment found, in index order.
        issues: Anomalies, ordered by drawing index then kind.
    """

    retrieval_echo_found: bool = False
    assessments: list[DrawingAssessment] = field(default_factory=list)
    issues: list[ParseIssue] = field(default_factory=list)

    def assessment(self, index: int) -> DrawingAssessment | None:
        for a in self.assessments:
            if a.index == index:
                return a
        return None

    def issues_for(self, index: int) -> list[ParseIssue]:
        return [i for i in self.issues if i.drawing_index == index]

    def to_dict(self) -> dict[str, Any]:
        return {
            "retrieval_echo_found": self.retrieval_echo_found,
            "assessments": [a.to_dict() for a in self.assessments],
            "issues": [i.to_dict() for i in self.issues],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ParsedResponse:
        assessments = [
            DrawingAssessment(
                index=a["index"],
                verdicts={k: ComponentVerdict(v) for k, v in a["verdicts"].items()},
                final_level=(
                    ProficiencyLevel.parse(a["final_level"]) if a["final_level"] else None
                ),
                rationale_span=(a["rationale_span"][0], a["rationale_span"][1]),
            )
            for a in data.get("assessments", [])
        ]
        issues = [
            ParseIssue(IssueKind(i["kind"]), i.get("drawing_index"), i.get("detail", ""))
            for i in data.get("issues", [])
        ]
        return cls(data.get("retrieval_echo_found", False), assessments, issues)
