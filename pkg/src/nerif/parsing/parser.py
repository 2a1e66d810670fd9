"""Tolerant grammar over free-text scoring transcripts.

The transcript is cut into drawing segments at line-leading markers
("Drawing 2", "Image 2", "the second drawing"). Each "(X)" component mention
gets a verdict from the cue table, and the last level stated in a segment is
the drawing's final level. Nothing here raises on odd input: every anomaly
becomes a ParseIssue.
"""

from __future__ import annotations

import re
from collections.abc import Iterator
from dataclasses import dataclass

from nerif.core.models import (
    ComponentId,
    ComponentVerdict,
    ProficiencyLevel,
    Rubric,
    VerdictPolicy,
)
from nerif.core.scoring import classify_for, level_mentions, level_from_text
from nerif.errors import AmbiguousLevel
from nerif.parsing.cues import CueTable, load_cues
from nerif.parsing.models import DrawingAssessment, IssueKind, ParsedResponse, ParseIssue

MAX_EXPECTED = 3

_ORDINAL_INDEX = {"first": 1, "second": 2, "third": 3}

_MARKER_RE = re.compile(
    r"^[ \t>*#_\-]*(?:\d+[.)][ \t]+)?(?:the[ \t]+)?(?:student(?:[- ]drawn)?[ \t]+)?"
    r"(?:(?P<ord>first|second|third)[ \t]+(?:student(?:[- ]drawn)?[ \t]+)?"
    r"(?:drawing|image|model)(?=[ \t]*(?:[:.*_(\-]|$))"
    r"|(?:drawing|image|model)[ \t]*(?:#[ \t]*)?(?P<num>\d+))\b",
    re.IGNORECASE | re.MULTILINE,
)

COMPONENT_RE = re.compile(r"\(([A-Z])\)")

_CLAUSE_SPLIT_RE = re.compile(
    r";|\bbut\b|\bhowever\b|\bwhereas\b|\balthough\b|\bthough\b|\bwhile\b",
    re.IGNORECASE,
)
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+|\n+")
_LEADING_COMPONENT_RE = re.compile(r"^[ \t>*#_\-]*\(([A-Z])\)", re.MULTILINE)
_STATED_LEVEL_RE = re.compile(
    r"\blevel\b[^.\n]{0,40}?\b(?:beginning|developing|proficient)\b"
    r"|\b(?:categori[sz]ed|classified|scored|rated)\s+as\W{0,3}"
    r"(?:beginning|developing|proficient)\b",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class DrawingMarker:
    """A drawing marker found at the start of a line."""

    start: int
    index: int


def find_markers(text: str) -> list[DrawingMarker]:
    """All line-leading drawing markers in text order."""
    markers = []
    for m in _MARKER_RE.finditer(text):
        if m.group("ord"):
            index = _ORDINAL_INDEX[m.group("ord").lower()]
        else:
            index = int(m.group("num"))
        markers.append(DrawingMarker(m.start(), index))
    return markers


def _clauses(sentence: str) -> list[str]:
    return _CLAUSE_SPLIT_RE.split(sentence)


def _sentences(text: str) -> Iterator[str]:
    for piece in _SENTENCE_SPLIT_RE.split(text):
        if piece.strip():
            yield piece


def _clause_verdict(clause: str, target: int, cues: CueTable) -> ComponentVerdict:
    """Verdict for the ``target``-th component mention inside one clause.

    With several mentions in a clause, each mention owns a slot of text: the
    text after it when the clause lists markers first ("(A) present, (B)
    missing"), or the text before it when cues lead ("shows (A) and lacks
    (B)"). A mention whose slot has no cue takes its neighbour's verdict.
    """
    marks = list(COMPONENT_RE.finditer(clause))
    hits = cues.find(clause)
    if len(marks) == 1 or not hits:
        return cues.polarity_of(clause)

    marker_first = hits[0].start > marks[0].start()
    if marker_first:
        bounds = [
            (m.end(), marks[i + 1].start() if i + 1 < len(marks) else len(clause))
            for i, m in enumerate(marks)
        ]
        order = range(target, len(marks))
    else:
        bounds = [(marks[i - 1].end() if i else 0, m.start()) for i, m in enumerate(marks)]
        order = range(target, -1, -1)

    for slot in order:
        lo, hi = bounds[slot]
        verdict = cues.strongest([h for h in hits if lo <= h.start and h.end <= hi])
        if verdict is not None:
            return verdict
    return cues.polarity_of(clause)


def polarity(
    sentence: str,
    component: ComponentId | str,
    cues: CueTable | None = None,
) -> ComponentVerdict:
    """Classify how a sentence judges one component.

    Only the clause holding the component's "(X)" mention is read. Negation
    outranks hedging, which outranks affirmation; no cue means Uncertain.

    Args:
        sentence: Sentence mentioning the component.
        component: Component or its letter.
        cues: Cue table; the packaged one when omitted.
    """
    cues = cues or load_cues()
    letter = component.letter if isinstance(component, ComponentId) else component
    for clause in _clauses(sentence):
        marks = list(COMPONENT_RE.finditer(clause))
        for i, m in enumerate(marks):
            if m.group(1) == letter:
                return _clause_verdict(clause, i, cues)
    return cues.polarity_of(sentence)


def check_retrieval_echo(text: str, cues: CueTable | None = None) -> bool:
    """Whether an example rationale is echoed before the first drawing.

    An echo is at least two line-leading component verdicts plus a stated
    level, all ahead of the first drawing marker. Text without any drawing
    marker has no echo.
    """
    cues = cues or load_cues()
    markers = find_markers(text)
    if not markers:
        return False
    preamble = text[: markers[0].start]
    judged = set()
    for line in preamble.splitlines():
        m = _LEADING_COMPONENT_RE.match(line)
        if m and cues.find(line):
            judged.add(m.group(1))
    return len(judged) >= 2 and _STATED_LEVEL_RE.search(preamble) is not None


def _segments(text: str, expected: int) -> dict[int, list[tuple[int, int]]]:
    """Spans per drawing index. A repeated marker adds another span.

    Every marker ends the span before it, including markers numbered past
    ``expected``, whose own text is dropped.
    """
    markers = find_markers(text)
    spans: dict[int, list[tuple[int, int]]] = {}
    for i, marker in enumerate(markers):
        if not 1 <= marker.index <= expected:
            continue
        end = markers[i + 1].start if i + 1 < len(markers) else len(text)
        spans.setdefault(marker.index, []).append((marker.start, end))
    return spans


def _assess(
    index: int,
    text: str,
    spans: list[tuple[int, int]],
    rubric: Rubric,
    cues: CueTable,
    policy: VerdictPolicy,
) -> tuple[DrawingAssessment, list[ParseIssue]]:
    issues: list[ParseIssue] = []
    letters = rubric.letters
    single: dict[str, ComponentVerdict] = {}
    multi: dict[str, ComponentVerdict] = {}
    unknown: list[str] = []
    stated: list[ProficiencyLevel] = []
    conflicting = False

    for start, end in spans:
        for sentence in _sentences(text[start:end]):
            found = list(dict.fromkeys(m.group(1) for m in COMPONENT_RE.finditer(sentence)))
            for letter in found:
                if letter not in letters:
                    if letter not in unknown:
                        unknown.append(letter)
                    continue
                target = single if len(found) == 1 else multi
                target[letter] = polarity(sentence, letter, cues)

            try:
                level = level_from_text(sentence)
            except AmbiguousLevel:
                conflicting = True
                level = level_mentions(sentence)[-1][1]
            if level is not None:
                stated.append(level)

    # Single-component sentences win over multi-component summaries.
    merged = {**multi, **single}
    verdicts = {x: merged[x] for x in letters if x in merged}
    final_level = stated[-1] if stated else None
    if len(set(stated)) > 1:
        conflicting = True

    for letter in unknown:
        issues.append(ParseIssue(IssueKind.UNKNOWN_COMPONENT, index, f"({letter})"))
    for letter in letters:
        if letter not in verdicts:
            issues.append(ParseIssue(IssueKind.MISSING_COMPONENT_VERDICT, index, f"({letter})"))
    if final_level is None:
        issues.append(ParseIssue(IssueKind.NO_FINAL_LABEL, index, "no level stated"))
    if conflicting:
        names = ", ".join(dict.fromkeys(lv.label for lv in stated))
        issues.append(ParseIssue(IssueKind.CONFLICTING_LABELS, index, names))
    if final_level is not None and len(verdicts) == len(letters):
        derived = classify_for(verdicts, rubric, policy)
        if derived is not final_level:
            issues.append(
                ParseIssue(
                    IssueKind.RUBRIC_INCONSISTENCY,
                    index,
                    f"verdicts give {derived.label}, stated {final_level.label}",
                )
            )

    span = (spans[0][0], spans[-1][1])
    return DrawingAssessment(index, verdicts, final_level, span), issues


def parse(
    text: str,
    expected: int,
    rubric: Rubric,
    cues: CueTable | None = None,
    policy: VerdictPolicy = VerdictPolicy.STRICT,
) -> ParsedResponse:
    """Recover per-drawing assessments from a transcript.

    Args:
        text: Raw model output (possibly truncated).
        expected: Drawings on the test sheet, 1-3.
        rubric: Rubric the verdicts are read against.
        cues: Cue table; the packaged one when omitted.
        policy: How Uncertain counts in the consistency check.

    Returns:
        A ParsedResponse. Never raises on any text.
    """
    cues = cues or load_cues()
    expected = max(0, min(MAX_EXPECTED, expected))
    segments = _segments(text, expected)

    result = ParsedResponse(retrieval_echo_found=check_retrieval_echo(text, cues))
    for index in range(1, expected + 1):
        if index not in segments:
            result.issues.append(
                ParseIssue(IssueKind.MISSING_DRAWING_SEGMENT, index, f"Drawing {index}")
            )
            continue
        assessment, issues = _assess(index, text, segments[index], rubric, cues, policy)
        result.assessments.append(assessment)
        result.issues.extend(issues)

    result.issues.sort(key=ParseIssue.sort_key)
    return result
