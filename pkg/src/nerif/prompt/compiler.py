"""Prompt compiler: renders the seven prompt sections from text templates.

Each section is a jinja2 template under ``nerif/prompt/templates/``. A user
template directory with the same file names replaces the packaged wording
wholesale, which is how validation-phase prompt edits are made. Variants
only ever remove lines: NoNotes drops the ``Note (X):`` lines and NoExamples
drops the example-retrieval lines and the EXAMPLES section.
"""

from __future__ import annotations

import difflib
import hashlib
from pathlib import Path

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from nerif.core.models import ProficiencyRule, Rubric, TaskDefinition
from nerif.core.scoring import validate_rubric
from nerif.dataset.models import MAX_BATCH_SIZE
from nerif.errors import BatchTooLarge, EmptyContext, EmptyRubric
from nerif.gateway.models import DecodingParams
from nerif.prompt.models import (
    ATTACHMENT_PLAN,
    SECTION_MARKERS,
    CompiledPrompt,
    DiffOp,
    LineDiff,
    PromptVariant,
)

TEMPLATES_DIR = Path(__file__).parent / "templates"

_SECTION_TEMPLATES: tuple[tuple[str, str], ...] = (
    ("## ROLE", "role.txt"),
    ("## TASK", "task.txt"),
    ("## PROBLEM CONTEXT", "context.txt"),
    ("## RUBRIC", "rubric.txt"),
    ("## EXAMPLES", "examples.txt"),
    ("## STUDENT DRAWINGS", "drawings.txt"),
    ("## DECODING", "decoding.txt"),
)

_NUMBER_WORDS = {
    0: "none",
    1: "one",
    2: "two",
    3: "three",
    4: "four",
    5: "five",
    6: "six",
    7: "seven",
    8: "eight",
    9: "nine",
}


def _word(n: int) -> str:
    return _NUMBER_WORDS.get(n, str(n))


def _one_line(text: str) -> str:
    return " ".join(text.split())


def rule_lines(rule: ProficiencyRule) -> list[str]:
    """Phrase a count rule as one line per level, highest first."""
    n, p, d = rule.component_count, rule.proficient_min, rule.developing_min
    lines = []
    if p >= n:
        lines.append(f"'Proficient' only when all the {_word(n)} components are included.")
    else:
        lines.append(
            f"'Proficient' when at least {_word(p)} of the {_word(n)} components are included."
        )
    if d >= p:
        lines.append("'Developing' does not apply to this rubric.")
    elif p >= n:
        lines.append(
            f"'Developing' when at least {_word(d)} but not all of the {_word(n)} "
            "components are included."
        )
    else:
        lines.append(
            f"'Developing' when at least {_word(d)} but fewer than {_word(p)} of the "
            f"{_word(n)} components are included."
        )
    below = d - 1
    if below <= 0:
        lines.append("'Beginning' when none of the components are included.")
    elif below == 1:
        lines.append("'Beginning' when one or none of those are included.")
    else:
        lines.append(f"'Beginning' when {_word(below)} or fewer of those are included.")
    return lines


def _environment(template_dir: Path | None) -> Environment:
    return Environment(  # noqa: S701  # nosec B701 - plain-text prompts, not HTML
        loader=FileSystemLoader(str(template_dir or TEMPLATES_DIR)),
        undefined=StrictUndefined,
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
        autoescape=False,
    )


def _check_task(task: TaskDefinition) -> Rubric:
    if not task.context_text.strip():
        raise EmptyContext(task.task_id)
    rubric = task.rubric
    if not rubric.components:
        raise EmptyRubric(task.task_id)
    findings = validate_rubric(rubric)
    if findings:
        raise EmptyRubric(task.task_id, [str(f) for f in findings])
    return rubric


def compile_prompt(
    task: TaskDefinition,
    variant: PromptVariant = PromptVariant.FULL,
    expected: int = MAX_BATCH_SIZE,
    decoding: DecodingParams | None = None,
    template_dir: Path | None = None,
) -> CompiledPrompt:
    """Compile the scoring prompt for a task and variant.

    Args:
        task: Task whose context, rubric and examples are described.
        variant: Prompt variant.
        expected: Number of drawings on the test sheet (1-3).
        decoding: Decoding settings echoed in the DECODING section.
        template_dir: Directory of replacement section templates.

    Returns:
        The compiled prompt with its digest and fixed attachment plan.

    Raises:
        EmptyContext: If the task has no context text.
        EmptyRubric: If the rubric has no components or fails validation.
        BatchTooLarge: If more than three drawings are expected.
    """
    rubric = _check_task(task)
    if expected > MAX_BATCH_SIZE:
        raise BatchTooLarge(expected, MAX_BATCH_SIZE)
    if expected < 1:
        raise ValueError(f"Expected drawing count must be 1-{MAX_BATCH_SIZE}, got {expected}")
    decoding = decoding or DecodingParams()

    context = {
        "task_id": task.task_id,
        "include_examples": variant.includes_examples,
        "include_notes": variant.includes_notes,
        "components": [
            {"letter": c.letter, "description": _one_line(c.description)}
            for c in rubric.components
        ],
        "component_count_word": _word(len(rubric.components)),
        "rule_lines": rule_lines(rubric.rule),
        "notes": [
            {"letter": letter, "text": _one_line(rubric.note_for(letter))}
            for letter in rubric.letters
            if rubric.note_for(letter)
        ],
        "example_count_word": _word(len(task.examples)),
        "expected": expected,
        "expected_word": _word(expected),
        "temperature": decoding.temperature,
        "top_p": decoding.top_p,
    }

    env = _environment(template_dir)
    sections: dict[str, str] = {}
    for marker, template_name in _SECTION_TEMPLATES:
        if marker == "## EXAMPLES" and not variant.includes_examples:
            continue
        sections[marker] = env.get_template(template_name).render(**context)

    text = "".join(sections.values())
    return CompiledPrompt(
        text=text,
        attachment_plan=ATTACHMENT_PLAN,
        digest=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        variant=variant,
        task_id=task.task_id,
        expected_drawings=expected,
        sections=sections,
    )


def _section_index(lines: list[str]) -> list[str]:
    """Section marker that governs each line."""
    current = ""
    out = []
    for line in lines:
        if line.strip() in SECTION_MARKERS:
            current = line.strip()
        out.append(current)
    return out


def diff_variants(a: CompiledPrompt, b: CompiledPrompt) -> list[LineDiff]:
    """Line-level differences turning prompt ``a`` into prompt ``b``.

    Args:
        a: Baseline prompt.
        b: Compared prompt.

    Returns:
        Deleted and inserted lines in text order; empty iff texts match.
    """
    a_lines = a.text.splitlines()
    b_lines = b.text.splitlines()
    a_sections = _section_index(a_lines)
    b_sections = _section_index(b_lines)

    diffs: list[LineDiff] = []
    matcher = difflib.SequenceMatcher(a=a_lines, b=b_lines, autojunk=False)
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag in ("delete", "replace"):
            diffs.extend(
                LineDiff(DiffOp.DELETED, a_lines[i], a_sections[i]) for i in range(i1, i2)
            )
        if tag in ("insert", "replace"):
            diffs.extend(
                LineDiff(DiffOp.INSERTED, b_lines[j], b_sections[j]) for j in range(j1, j2)
            )
    return diffs
