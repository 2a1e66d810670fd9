"""Ground-truth mock backend.

The oracle writes transcripts in the same shape a well-behaved model would:
a short context/rubric restatement, one echoed example rationale, then one
block per drawing with a verdict sentence per component, a summary and the
final level. With a noise matrix the emitted level is sampled per case from
the true label's row, and the verdicts are nudged to the closest set that
scores to the emitted level.
"""

from __future__ import annotations

import logging
import zlib
from collections.abc import Sequence

import numpy as np

from nerif.core.models import (
    CaseAssessment,
    ComponentVerdict,
    ProficiencyLevel,
    ProficiencyRule,
    Rubric,
)
from nerif.dataset.models import Batch
from nerif.errors import UnknownCase
from nerif.gateway.models import BackendKind, OracleScript, SessionRequest, SessionResponse

logger = logging.getLogger(__name__)

_ORDINALS = ("first", "second", "third")

_MARKERS = (
    "Drawing {n}:",
    "Image {n}:",
    "**Drawing {n}**",
    "The {ordinal} drawing:",
)

_VERDICT_SENTENCES: dict[ComponentVerdict, tuple[str, ...]] = {
    ComponentVerdict.PRESENT: (
        "({x}): The drawing includes this component.",
        "({x}): This component is present.",
        "({x}): The model shows this component.",
    ),
    ComponentVerdict.ABSENT: (
        "({x}): The drawing does not include this component.",
        "({x}): This component is missing.",
        "({x}): The model lacks this component.",
    ),
    ComponentVerdict.UNCERTAIN: (
        "({x}): It is unclear whether the drawing includes this component.",
        "({x}): The model may show this component.",
        "({x}): This component is possibly depicted.",
    ),
}


def _rng(seed: int, key: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64([seed % 2**64, zlib.crc32(key.encode("utf-8"))]))


def level_range(rule: ProficiencyRule, level: ProficiencyLevel) -> tuple[int, int]:
    """Inclusive Present-count range that scores to ``level`` (may be empty)."""
    if level is ProficiencyLevel.PROFICIENT:
        return rule.proficient_min, rule.component_count
    if level is ProficiencyLevel.DEVELOPING:
        return rule.developing_min, rule.proficient_min - 1
    return 0, rule.developing_min - 1


def reachable_level(rule: ProficiencyRule, level: ProficiencyLevel) -> ProficiencyLevel:
    """Clamp a level the rule cannot produce to the nearest one it can.

    Only Developing can be unreachable (when both thresholds coincide); it
    clamps down to Beginning.
    """
    lo, hi = level_range(rule, level)
    if lo <= hi:
        return level
    return ProficiencyLevel.BEGINNING


def consistent_verdicts(
    verdicts: dict[str, ComponentVerdict],
    rubric: Rubric,
    level: ProficiencyLevel,
) -> dict[str, ComponentVerdict]:
    """Flip as few verdicts as possible so the set scores to ``level``.

    Surplus Present verdicts become Absent from the last component backwards;
    missing ones are filled from the first non-Present component forwards.
    """
    out = {x: verdicts.get(x, ComponentVerdict.ABSENT) for x in rubric.letters}
    lo, hi = level_range(rubric.rule, level)
    present = [x for x in rubric.letters if out[x] is ComponentVerdict.PRESENT]
    if len(present) > hi:
        for x in reversed(present[hi:]):
            out[x] = ComponentVerdict.ABSENT
    elif len(present) < lo:
        others = [x for x in rubric.letters if out[x] is not ComponentVerdict.PRESENT]
        for x in others[: lo - len(present)]:
            out[x] = ComponentVerdict.PRESENT
    return out


def _emitted_level(case_id: str, script: OracleScript) -> ProficiencyLevel:
    true_level = script.hidden_labels[case_id]
    if script.noise_matrix is None:
        return true_level
    row = np.asarray(script.noise_matrix[int(true_level)], dtype=float)
    return ProficiencyLevel(int(_rng(script.seed, case_id).choice(3, p=row / row.sum())))


def oracle_assessments(
    case_ids: Sequence[str],
    script: OracleScript,
    rubric: Rubric,
) -> list[CaseAssessment]:
    """What the oracle will say about each case, in drawing order.

    Raises:
        UnknownCase: If a case is missing from the script's labels.
    """
    results = []
    for case_id in case_ids:
        if case_id not in script.hidden_labels:
            raise UnknownCase(case_id)
        level = reachable_level(rubric.rule, _emitted_level(case_id, script))
        verdicts = consistent_verdicts(script.hidden_verdicts.get(case_id, {}), rubric, level)
        results.append(CaseAssessment(case_id=case_id, verdicts=verdicts, predicted=level))
    return results


def _summary(verdicts: dict[str, ComponentVerdict]) -> str:
    def marks(kind: ComponentVerdict) -> list[str]:
        return [f"({x})" for x, v in verdicts.items() if v is kind]

    def join(items: list[str]) -> str:
        return items[0] if len(items) == 1 else ", ".join(items[:-1]) + " and " + items[-1]

    present = marks(ComponentVerdict.PRESENT)
    absent = marks(ComponentVerdict.ABSENT)
    uncertain = marks(ComponentVerdict.UNCERTAIN)
    clauses = []
    if present:
        clause = f"In summary, the model includes {join(present)}"
        if absent:
            clause += f", but not {join(absent)}"
        clauses.append(clause)
    elif absent:
        clauses.append(f"In summary, the model does not include {join(absent)}")
    if uncertain:
        lead = "it" if clauses else "In summary, it"
        clauses.append(f"{lead} is unclear whether the model shows {join(uncertain)}")
    return "; ".join(clauses) + "."


def _verdict_lines(
    verdicts: dict[str, ComponentVerdict], rng: np.random.Generator
) -> list[str]:
    lines = []
    for x, verdict in verdicts.items():
        options = _VERDICT_SENTENCES[verdict]
        lines.append(options[int(rng.integers(len(options)))].format(x=x))
    return lines


def _echo_block(rubric: Rubric, rng: np.random.Generator) -> list[str]:
    level = reachable_level(rubric.rule, ProficiencyLevel(int(rng.integers(3))))
    verdicts = consistent_verdicts({}, rubric, level)
    marks = ", ".join(f"({x})" for x in rubric.letters)
    return [
        "I retrieved the problem context and the rubric from the first image.",
        f"The rubric considers {len(rubric.letters)} components: {marks}.",
        "",
        "Rationale for proficiency of one random example:",
        *_verdict_lines(verdicts, rng),
        f'So the proficiency level of this example is "{level.label}".',
    ]


def render_transcript(
    assessments: Sequence[CaseAssessment],
    rubric: Rubric,
    seed: int = 0,
) -> str:
    """Write a transcript for already-decided assessments.

    Wording (marker style, verdict phrasing) varies with ``seed`` and the
    case ids but never with call order.
    """
    key = "|".join(a.case_id for a in assessments)
    rng = _rng(seed, key)
    lines = _echo_block(rubric, rng)
    for n, assessment in enumerate(assessments, start=1):
        marker = _MARKERS[int(rng.integers(len(_MARKERS)))]
        lines.append("")
        lines.append(marker.format(n=n, ordinal=_ORDINALS[n - 1]))
        lines.extend(_verdict_lines(assessment.verdicts, rng))
        lines.append(_summary(assessment.verdicts))
        lines.append(f'Therefore, the proficiency level is "{assessment.predicted.label}".')
    return "\n".join(lines) + "\n"


def oracle_generate(batch: Batch, script: OracleScript, rubric: Rubric) -> str:
    """Emit a transcript for a batch from the script's hidden ground truth.

    Raises:
        UnknownCase: If a batch case is missing from the script.
    """
    assessments = oracle_assessments(batch.case_ids, script, rubric)
    return render_transcript(assessments, rubric, script.seed)


def noise_from_confusion(matrix: Sequence[Sequence[float]]) -> list[list[float]]:
    """Row-normalize a 3x3 confusion matrix into a noise matrix.

    Rows with no cases become identity rows.
    """
    arr = np.asarray(matrix, dtype=float)
    if arr.shape != (3, 3):
        raise ValueError(f"Confusion matrix must be 3x3, got {arr.shape}")
    totals = arr.sum(axis=1, keepdims=True)
    out = np.where(totals > 0, arr / np.where(totals > 0, totals, 1.0), np.eye(3))
    return out.tolist()


class OracleBackend:
    """Answer requests from an OracleScript; ``request.case_ids`` names the drawings."""

    name = str(BackendKind.ORACLE)

    def __init__(self, script: OracleScript, rubric: Rubric) -> None:
        self.script = script
        self.rubric = rubric

    def send(self, request: SessionRequest) -> SessionResponse:
        assessments = oracle_assessments(request.case_ids, self.script, self.rubric)
        text = render_transcript(assessments, self.rubric, self.script.seed)
        logger.debug("Oracle answered %s for %d case(s)", request.request_id, len(assessments))
        return SessionResponse(text=text, backend=self.name)
