"""Deterministic scoring rule, rubric validation and level extraction."""

from __future__ import annotations

import re
from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass
from enum import StrEnum

from nerif.core.models import (
    ComponentVerdict,
    ProficiencyLevel,
    ProficiencyRule,
    Rubric,
    TaskDefinition,
    VerdictPolicy,
)
from nerif.errors import AmbiguousLevel, InvalidVerdictSet

MIN_COMPONENTS = 2
MAX_COMPONENTS = 4
STANDARD_EXAMPLES_PER_LEVEL = 3


def count_present(
    verdicts: Mapping[str, ComponentVerdict],
    policy: VerdictPolicy = VerdictPolicy.STRICT,
) -> int:
    """Count verdicts that score as Present under a policy."""
    counted = {ComponentVerdict.PRESENT}
    if policy is VerdictPolicy.LENIENT:
        counted.add(ComponentVerdict.UNCERTAIN)
    return sum(1 for v in verdicts.values() if v in counted)


def classify(
    verdicts: Mapping[str, ComponentVerdict],
    rule: ProficiencyRule,
    components: tuple[str, ...] | None = None,
    policy: VerdictPolicy = VerdictPolicy.STRICT,
) -> ProficiencyLevel:
    """Map component verdicts to a proficiency level.

    Args:
        verdicts: Component letter to verdict.
        rule: Count thresholds.
        components: Expected component letters. When omitted, only the key
            count is checked against ``rule.component_count``.
        policy: How Uncertain verdicts count.

    Returns:
        Proficient if the Present count reaches ``proficient_min``, Developing
        if it reaches ``developing_min``, Beginning otherwise.

    Raises:
        InvalidVerdictSet: If the keys do not match the rubric's components.
    """
    if components is not None:
        missing = [c for c in components if c not in verdicts]
        extra = sorted(k for k in verdicts if k not in components)
        if missing or extra:
            raise InvalidVerdictSet(missing, extra)
    elif len(verdicts) != rule.component_count:
        raise InvalidVerdictSet(
            [], [], f"{len(verdicts)} verdicts for {rule.component_count} components"
        )

    present = count_present(verdicts, policy)
    if present >= rule.proficient_min:
        return ProficiencyLevel.PROFICIENT
    if present >= rule.developing_min:
        return ProficiencyLevel.DEVELOPING
    return ProficiencyLevel.BEGINNING


def classify_for(
    verdicts: Mapping[str, ComponentVerdict],
    rubric: Rubric,
    policy: VerdictPolicy = VerdictPolicy.STRICT,
) -> ProficiencyLevel:
    """classify() against a rubric's own component list."""
    return classify(verdicts, rubric.rule, rubric.letters, policy)


# ---------------------------------------------------------------------------
# Rubric validation
# ---------------------------------------------------------------------------


class FindingKind(StrEnum):
    """Rubric invariant a finding reports."""

    DUPLICATE_COMPONENT = "DuplicateComponent"
    COMPONENT_COUNT = "ComponentCountOutOfRange"
    INVALID_LETTER = "InvalidComponentLetter"
    EMPTY_DESCRIPTION = "EmptyDescription"
    RULE_COUNT_MISMATCH = "RuleCountMismatch"
    THRESHOLD_RANGE = "ThresholdOutOfRange"
    THRESHOLD_ORDER = "ThresholdOrder"
    UNKNOWN_NOTE_KEY = "UnknownNoteKey"
    MISSING_EXAMPLE_MENTION = "MissingExampleMention"
    REPEATED_EXAMPLE_MENTION = "RepeatedExampleMention"
    UNBALANCED_EXAMPLES = "UnbalancedExamples"


@dataclass(frozen=True)
class RubricFinding:
    """One violated rubric or task invariant.

    Attributes:
        kind: Which invariant failed.
        detail: Human-readable specifics.
    """

    kind: FindingKind
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


_LETTER_RE = re.compile(r"^[A-D]$")


def validate_rubric(rubric: Rubric) -> list[RubricFinding]:
    """Check every Rubric and ProficiencyRule invariant.

    Args:
        rubric: Rubric to check.

    Returns:
        Findings in check order; empty when the rubric is valid.
    """
    findings: list[RubricFinding] = []
    letters = [c.letter for c in rubric.components]
    rule = rubric.rule

    for letter, count in Counter(letters).items():
        if count > 1:
            findings.append(
                RubricFinding(FindingKind.DUPLICATE_COMPONENT, f"({letter}) appears {count} times")
            )
    if not MIN_COMPONENTS <= len(letters) <= MAX_COMPONENTS:
        findings.append(
            RubricFinding(
                FindingKind.COMPONENT_COUNT,
                f"{len(letters)} components; expected {MIN_COMPONENTS}-{MAX_COMPONENTS}",
            )
        )
    for comp in rubric.components:
        if not _LETTER_RE.match(comp.letter):
            findings.append(
                RubricFinding(FindingKind.INVALID_LETTER, f"{comp.letter!r} is not a letter A-D")
            )
        if not comp.description.strip():
            findings.append(
                RubricFinding(FindingKind.EMPTY_DESCRIPTION, f"({comp.letter}) has no description")
            )

    if rule.component_count != len(letters):
        findings.append(
            RubricFinding(
                FindingKind.RULE_COUNT_MISMATCH,
                f"rule counts {rule.component_count} components, rubric has {len(letters)}",
            )
        )
    for name, value in (
        ("developing_min", rule.developing_min),
        ("proficient_min", rule.proficient_min),
    ):
        if not 1 <= value <= rule.component_count:
            findings.append(
                RubricFinding(
                    FindingKind.THRESHOLD_RANGE,
                    f"{name}={value} outside 1..{rule.component_count}",
                )
            )
    if rule.developing_min > rule.proficient_min:
        findings.append(
            RubricFinding(
                FindingKind.THRESHOLD_ORDER,
                f"developing_min={rule.developing_min} > proficient_min={rule.proficient_min}",
            )
        )

    for key in rubric.notes:
        if key not in letters:
            findings.append(
                RubricFinding(FindingKind.UNKNOWN_NOTE_KEY, f"note for undeclared ({key})")
            )
    return findings


def _component_mentions(text: str, letter: str) -> int:
    return len(re.findall(rf"\({re.escape(letter)}\)", text))


def example_findings(task: TaskDefinition, standard: bool = True) -> list[RubricFinding]:
    """Check few-shot examples against the rubric.

    Each rationale must mention every component exactly once. Standard runs
    also need three examples per level.

    Args:
        task: Task whose examples are checked.
        standard: Whether to enforce the 3/3/3 balance.

    Returns:
        Findings; empty when the examples are usable.
    """
    findings: list[RubricFinding] = []
    for idx, example in enumerate(task.examples, start=1):
        for letter in task.rubric.letters:
            n = _component_mentions(example.rationale, letter)
            if n == 0:
                findings.append(
                    RubricFinding(
                        FindingKind.MISSING_EXAMPLE_MENTION,
                        f"example {idx} never mentions ({letter})",
                    )
                )
            elif n > 1:
                findings.append(
                    RubricFinding(
                        FindingKind.REPEATED_EXAMPLE_MENTION,
                        f"example {idx} mentions ({letter}) {n} times",
                    )
                )
    if standard:
        counts = Counter(ex.label for ex in task.examples)
        for level in ProficiencyLevel:
            if counts.get(level, 0) != STANDARD_EXAMPLES_PER_LEVEL:
                findings.append(
                    RubricFinding(
                        FindingKind.UNBALANCED_EXAMPLES,
                        f"{counts.get(level, 0)} {level.label} examples; "
                        f"expected {STANDARD_EXAMPLES_PER_LEVEL}",
                    )
                )
    return findings


# ---------------------------------------------------------------------------
# Level extraction
# ---------------------------------------------------------------------------

LEVEL_WORD_RE = re.compile(r"\b(beginning|developing|proficient)\b", re.IGNORECASE)

# A level word directly after one of these is the stated level.
_PRECEDENCE_RE = re.compile(
    r"(?:\bis|\bas|\bbe|\bbecomes|\bbecame|\blevel|\bcategory|\bcategorized|\bscore|:|=)"
    r"[\s'\"‘’“”*]*$",
    re.IGNORECASE,
)


def level_mentions(fragment: str) -> list[tuple[int, ProficiencyLevel]]:
    """All level words in a fragment as (offset, level), in text order."""
    return [
        (m.start(), ProficiencyLevel[m.group(1).upper()]) for m in LEVEL_WORD_RE.finditer(fragment)
    ]


def level_from_text(fragment: str) -> ProficiencyLevel | None:
    """Extract the proficiency level stated in a sentence-level fragment.

    Matching is case-insensitive and tolerates surrounding quotes and
    punctuation. When two distinct level words appear, a precedence cue
    directly before exactly one of them (``is``, ``as``, ``level``, ``:``...)
    selects it.

    Args:
        fragment: A sentence or shorter piece of model output.

    Returns:
        The level, or None when no level word appears.

    Raises:
        AmbiguousLevel: If distinct levels appear and no single one is cued.
    """
    mentions = level_mentions(fragment)
    if not mentions:
        return None
    distinct = {lv for _, lv in mentions}
    if len(distinct) == 1:
        return mentions[0][1]

    cued = {lv for pos, lv in mentions if _PRECEDENCE_RE.search(fragment[:pos])}
    if len(cued) == 1:
        return cued.pop()
    raise AmbiguousLevel(fragment.strip(), [lv.label for lv in sorted(distinct)])
