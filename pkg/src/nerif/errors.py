"""Exception hierarchy shared by every NERIF module.

Data-shape problems subclass ``ValueError`` so callers that only know the
standard library still catch them; service failures subclass ``RuntimeError``.
Findings-style operations (rubric validation, sheet verification, response
parsing) return typed findings instead of raising.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from nerif.gateway.models import SessionResponse


class NerifError(Exception):
    """Base class for all NERIF errors."""


# -- assessment-core ----------------------------------------------------------


class InvalidVerdictSet(NerifError, ValueError):
    """Verdict map does not cover exactly the rubric's components.

    Attributes:
        missing: Component letters with no verdict.
        extra: Verdict keys that are not rubric components.
    """

    def __init__(self, missing: list[str], extra: list[str], detail: str = "") -> None:
        self.missing = missing
        self.extra = extra
        parts = [detail] if detail else []
        if missing:
            parts.append(f"missing {', '.join(missing)}")
        if extra:
            parts.append(f"unexpected {', '.join(extra)}")
        super().__init__(f"Invalid verdict set: {'; '.join(parts)}")


class AmbiguousLevel(NerifError, ValueError):
    """A single sentence names two distinct proficiency levels."""

    def __init__(self, fragment: str, levels: list[str]) -> None:
        self.fragment = fragment
        self.levels = levels
        super().__init__(f"Ambiguous level ({' vs '.join(levels)}): {fragment!r}")


class UnknownTask(NerifError, ValueError):
    """No task definition with the given id."""

    def __init__(self, task_id: str) -> None:
        self.task_id = task_id
        super().__init__(f"Unknown task: {task_id}")


class ConfigurationError(NerifError, ValueError):
    """Invalid or missing configuration value."""


# -- dataset-manager ----------------------------------------------------------


class ManifestError(NerifError, ValueError):
    """A manifest row failed validation.

    Attributes:
        row: 1-based data row number (header excluded).
    """

    def __init__(self, row: int, message: str) -> None:
        self.row = row
        super().__init__(f"Row {row}: {message}")


class MissingImage(ManifestError):
    """Image file is absent or does not decode."""

    def __init__(self, row: int, path: str, reason: str = "not found") -> None:
        self.path = path
        super().__init__(row, f"image {path} {reason}")


class UnparsableLabel(ManifestError):
    """Human label is outside the closed label set."""

    def __init__(self, row: int, label: str) -> None:
        self.label = label
        super().__init__(row, f"unparsable label {label!r}")


class DuplicateCaseId(ManifestError):
    """case_id appears more than once in a manifest."""

    def __init__(self, row: int, case_id: str) -> None:
        self.case_id = case_id
        super().__init__(row, f"duplicate case_id {case_id!r}")


class InsufficientClassCount(NerifError, ValueError):
    """A class has fewer records than the split quotas require.

    Attributes:
        level: Name of the short class.
        shortfall: Number of additional records needed.
    """

    def __init__(self, level: str, shortfall: int) -> None:
        self.level = level
        self.shortfall = shortfall
        super().__init__(f"Insufficient {level} cases: short by {shortfall}")


# -- prompt-compiler ----------------------------------------------------------


class EmptyContext(NerifError, ValueError):
    """Task has no problem context text."""

    def __init__(self, task_id: str) -> None:
        self.task_id = task_id
        super().__init__(f"Task {task_id} has an empty problem context")


class EmptyRubric(NerifError, ValueError):
    """Task rubric has no components or fails validation."""

    def __init__(self, task_id: str, findings: list[str] | None = None) -> None:
        self.task_id = task_id
        self.findings = findings or []
        detail = f": {', '.join(self.findings)}" if self.findings else ""
        super().__init__(f"Task {task_id} has an unusable rubric{detail}")


# -- sheet-composer -----------------------------------------------------------


class UndecodableImage(NerifError, ValueError):
    """A panel source image could not be opened.

    Attributes:
        ref: Example index (int) or case_id (str) of the failing panel.
    """

    def __init__(self, ref: int | str, path: str) -> None:
        self.ref = ref
        self.path = path
        super().__init__(f"Cannot decode image for {ref!r}: {path}")


class BatchTooLarge(NerifError, ValueError):
    """Batch holds more drawings than one test sheet accepts."""

    def __init__(self, size: int, limit: int = 3) -> None:
        self.size = size
        self.limit = limit
        super().__init__(f"Batch of {size} exceeds the {limit}-drawing limit")


# -- vlm-gateway --------------------------------------------------------------


class GatewayError(NerifError, RuntimeError):
    """Base class for session failures."""


class TransportError(GatewayError):
    """Backend unreachable or returned an error after retries.

    Attributes:
        attempts: Attempts made before giving up.
        retryable: Whether the last failure was transient.
    """

    def __init__(self, message: str, attempts: int = 1, retryable: bool = False) -> None:
        self.attempts = attempts
        self.retryable = retryable
        super().__init__(message)


class RateLimited(GatewayError):
    """The rate limiter could not schedule the request within its deadline."""

    def __init__(self, wait_s: float, deadline_s: float) -> None:
        self.wait_s = wait_s
        self.deadline_s = deadline_s
        super().__init__(f"Rate limit wait {wait_s:.1f}s exceeds deadline {deadline_s:.1f}s")


class _ResponseError(GatewayError):
    def __init__(self, message: str, response: SessionResponse) -> None:
        self.response = response
        super().__init__(message)


class ContentRefused(_ResponseError):
    """Backend refused to answer; the partial response is attached."""


class Truncated(_ResponseError):
    """Backend stopped at the output token cap; the partial response is attached."""


class UnknownCase(NerifError, ValueError):
    """Oracle script has no entry for a batch case."""

    def __init__(self, case_id: str) -> None:
        self.case_id = case_id
        super().__init__(f"Oracle script has no case {case_id!r}")


# -- metrics ------------------------------------------------------------------


class EmptyInput(NerifError, ValueError):
    """No label pairs to score."""


class DegenerateAgreement(NerifError, ValueError):
    """Weighted kappa is undefined: both margins sit in a single class."""


class InsufficientItems(NerifError, ValueError):
    """Too few items for a sample standard deviation."""

    def __init__(self, count: int) -> None:
        self.count = count
        super().__init__(f"Standard deviation needs at least 2 items, got {count}")


# -- run-orchestrator ---------------------------------------------------------


class IncompleteRun(NerifError, ValueError):
    """Run directory is missing artifacts needed for reporting.

    Attributes:
        missing: Paths (or descriptions) of the absent artifacts.
    """

    def __init__(self, missing: list[str]) -> None:
        self.missing = missing
        super().__init__(f"Incomplete run: missing {', '.join(missing) or 'run directories'}")


class RunConfigMismatch(NerifError, ValueError):
    """Resumed run directory was created with a different configuration."""

    def __init__(self, fields: list[str]) -> None:
        self.fields = fields
        super().__init__(f"Run directory config differs in: {', '.join(fields)}")


class PersistenceError(NerifError, RuntimeError):
    """Run directory cannot be written."""

    def __init__(self, path: Any, reason: str) -> None:
        self.path = path
        super().__init__(f"Cannot write {path}: {reason}")
