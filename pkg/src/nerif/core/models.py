"""Domain model for rubric-based proficiency scoring.

Every type here is an immutable pydantic model or enum. Tasks and rubrics
round-trip through JSON (and YAML, via the task catalog) using exactly these
field names; proficiency levels serialize by name.
"""

from __future__ import annotations

from enum import IntEnum, StrEnum
from pathlib import Path
from typing import Annotated, Any

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer

from nerif.errors import UnparsableLabel


class ProficiencyLevel(IntEnum):
    """Ordinal proficiency label: Beginning < Developing < Proficient.

    The integer value is the ordinal used for confusion-matrix indexing and
    quadratic weighting.
    """

    BEGINNING = 0
    DEVELOPING = 1
    PROFICIENT = 2

    @property
    def label(self) -> str:
        """Display name, e.g. ``"Developing"``."""
        return self.name.capitalize()

    @classmethod
    def parse(cls, value: str | int | ProficiencyLevel, row: int = 0) -> ProficiencyLevel:
        """Parse a level from its name (case-insensitive) or ordinal.

        Args:
            value: Level name, ordinal integer, or an existing level.
            row: Manifest row number reported on failure.

        Returns:
            The matching ProficiencyLevel.

        Raises:
            UnparsableLabel: If the value is not one of the three levels.
        """
        if isinstance(value, ProficiencyLevel):
            return value
        if isinstance(value, int) and not isinstance(value, bool):
            if value in (0, 1, 2):
                return cls(value)
            raise UnparsableLabel(row, str(value))
        text = str(value).strip().strip("'\".").upper()
        if text.isdigit() and int(text) in (0, 1, 2):
            return cls(int(text))
        try:
            return cls[text]
        except KeyError:
            raise UnparsableLabel(row, str(value)) from None


def _coerce_level(value: Any) -> ProficiencyLevel:
    return ProficiencyLevel.parse(value)


Level = Annotated[
    ProficiencyLevel,
    BeforeValidator(_coerce_level),
    PlainSerializer(lambda lv: lv.label, return_type=str),
]
"""ProficiencyLevel field type that accepts names or ordinals and dumps names."""


LEVELS: tuple[ProficiencyLevel, ...] = tuple(ProficiencyLevel)


class ComponentVerdict(StrEnum):
    """Presence judgment for one rubric component in one drawing."""

    PRESENT = "Present"
    ABSENT = "Absent"
    UNCERTAIN = "Uncertain"


class VerdictPolicy(StrEnum):
    """How Uncertain verdicts count toward the proficiency rule.

    Attributes:
        STRICT: Uncertain counts as Absent (default).
        LENIENT: Uncertain counts as Present.
    """

    STRICT = "strict"
    LENIENT = "lenient"


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ComponentId(_Frozen):
    """A lettered rubric component.

    Attributes:
        letter: Single uppercase letter, A through D.
        description: The scoring aspect the component checks.
    """

    letter: str
    description: str


class ProficiencyRule(_Frozen):
    """Count thresholds that map Present verdicts to a level.

    Attributes:
        component_count: Number of rubric components (2-4).
        proficient_min: Present count needed for Proficient.
        developing_min: Present count needed for Developing.
    """

    component_count: int
    proficient_min: int
    developing_min: int

    @classmethod
    def default(cls, component_count: int) -> ProficiencyRule:
        """All components for Proficient, at least two for Developing."""
        return cls(
            component_count=component_count,
            proficient_min=component_count,
            developing_min=min(2, component_count),
        )


class Rubric(_Frozen):
    """Notation-enhanced scoring rubric.

    Attributes:
        components: Components in presentation order.
        rule: Proficiency rule over Present counts.
        notes: Instructional note per component letter; absent or empty
            strings mean no note for that component.
    """

    components: tuple[ComponentId, ...]
    rule: ProficiencyRule
    notes: dict[str, str] = Field(default_factory=dict)

    @property
    def letters(self) -> tuple[str, ...]:
        return tuple(c.letter for c in self.components)

    def note_for(self, letter: str) -> str:
        """Return the stripped note for a component, or an empty string."""
        return self.notes.get(letter, "").strip()


class ScoringExample(_Frozen):
    """A human-scored drawing shown to the model as a few-shot example.

    Attributes:
        drawing: Image path, relative to the task file's directory.
        label: Human-assigned level.
        rationale: Per-component verdicts and a summary, one mention per
            component.
    """

    drawing: str
    label: Level
    rationale: str


class TaskDefinition(_Frozen):
    """One assessment item: context, rubric and few-shot examples.

    Attributes:
        task_id: Short item id such as ``M3-1``.
        context_text: Problem statement shown on the reference sheet.
        context_image: Optional context image path (relative to the task file).
        rubric: Scoring rubric.
        examples: Few-shot examples; nine (three per level) for standard runs.
        base_dir: Directory relative paths resolve against. Not serialized.
    """

    task_id: str
    context_text: str
    context_image: str | None = None
    rubric: Rubric
    examples: tuple[ScoringExample, ...] = ()
    base_dir: Path | None = Field(default=None, exclude=True)

    def resolve(self, ref: str) -> Path:
        """Resolve a raster reference against the task's base directory."""
        path = Path(ref)
        if path.is_absolute() or self.base_dir is None:
            return path
        return self.base_dir / path

    def with_examples(self, examples: tuple[ScoringExample, ...]) -> TaskDefinition:
        return self.model_copy(update={"examples": examples})


class CaseAssessment(_Frozen):
    """Scored outcome for one case.

    Attributes:
        case_id: Case identifier.
        verdicts: Component letter to verdict.
        predicted: Predicted level.
        rationale_span: Rationale text the prediction came from.
    """

    case_id: str
    verdicts: dict[str, ComponentVerdict]
    predicted: Level
    rationale_span: str = ""
