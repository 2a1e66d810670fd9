"""Data models for gateway sessions, decoding settings and the oracle script."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from nerif.core.models import ComponentVerdict, Level

DEFAULT_MAX_ATTACHMENT_BYTES = 20 * 1024 * 1024


class BackendKind(StrEnum):
    REMOTE = "remote"
    SCRIPTED = "scripted"
    ORACLE = "oracle"


class FinishState(StrEnum):
    """How a session ended."""

    COMPLETE = "Complete"
    TRUNCATED = "Truncated"
    REFUSED = "Refused"


class DecodingParams(BaseModel):
    """Greedy decoding settings sent with every request.

    Attributes:
        temperature: Sampling temperature, 0.0 for greedy decoding.
        top_p: Nucleus mass in (0, 1].
        max_output_tokens: Output token cap.
    """

    model_config = ConfigDict(frozen=True)

    temperature: float = Field(default=0.0, ge=0.0)
    top_p: float = Field(default=0.01, gt=0.0, le=1.0)
    max_output_tokens: int = Field(default=1800, gt=0)


class GatewayConfig(BaseModel):
    """Transport, retry and throttling settings shared by all backends.

    Attributes:
        endpoint: Chat-completions URL for the remote backend.
        model: Model name sent to the remote backend.
        timeout_s: Per-request HTTP timeout.
        max_attempts: Attempt cap per session, first try included.
        backoff_base_s: First retry wait; doubles each retry.
        backoff_max_s: Cap on a single retry wait.
        max_total_delay_s: Ceiling on cumulative retry waiting.
        rpm: Requests-per-minute ceiling.
        rate_deadline_s: Longest a request may wait for a rate-limit slot.
        concurrency: Sessions allowed in flight at once.
        max_attachment_bytes: Size cap per encoded attachment.
    """

    model_config = ConfigDict(frozen=True)

    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4o"
    timeout_s: float = Field(default=120.0, gt=0)
    max_attempts: int = Field(default=4, ge=1)
    backoff_base_s: float = Field(default=1.0, ge=0)
    backoff_max_s: float = Field(default=30.0, ge=0)
    max_total_delay_s: float = Field(default=120.0, ge=0)
    rpm: int = Field(default=20, ge=1)
    rate_deadline_s: float = Field(default=300.0, gt=0)
    concurrency: int = Field(default=1, ge=1)
    max_attachment_bytes: int = Field(default=DEFAULT_MAX_ATTACHMENT_BYTES, gt=0)


@dataclass(frozen=True)
class SessionRequest:
    """One single-turn scoring request.

    The attachment pair is a fixed-length tuple, so a request with a third
    image cannot be built.

    Attributes:
        prompt_text: Compiled prompt text.
        attachments: (reference sheet PNG, test sheet PNG) bytes.
        decoding: Decoding settings.
        request_id: Unique id; also the scripted-fixture key.
        case_ids: Test-sheet case ids in drawing order (oracle backend input).
    """

    prompt_text: str
    attachments: tuple[bytes, bytes]
    decoding: DecodingParams = field(default_factory=DecodingParams)
    request_id: str = ""
    case_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.attachments, tuple) or len(self.attachments) != 2:
            raise ValueError("A session request carries exactly two attachments")
        if not self.request_id:
            raise ValueError("request_id is required")

    def check_size(self, limit: int) -> None:
        """Raise ValueError if any attachment exceeds ``limit`` bytes."""
        for role, blob in zip(("reference", "test"), self.attachments, strict=True):
            if len(blob) > limit:
                raise ValueError(f"{role} sheet is {len(blob)} bytes; limit is {limit}")


class Usage(BaseModel):
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    total_tokens: int | None = None


class SessionResponse(BaseModel):
    """Backend reply to one session.

    Attributes:
        text: Model output (possibly partial).
        latency_ms: Wall time of the successful attempt.
        usage: Token counts when the backend reports them.
        backend: Backend identifier.
        finish_state: Complete, Truncated or Refused.
        attempts: Attempts used, retries included.
    """

    text: str
    latency_ms: int = 0
    usage: Usage | None = None
    backend: str
    finish_state: FinishState = FinishState.COMPLETE
    attempts: int = 1

    @model_validator(mode="after")
    def _complete_has_text(self) -> SessionResponse:
        if self.finish_state is FinishState.COMPLETE and not self.text.strip():
            raise ValueError("A Complete response must carry text")
        return self


class OracleScript(BaseModel):
    """Ground truth the oracle backend answers from.

    Attributes:
        hidden_labels: True level per case.
        hidden_verdicts: True component verdicts per case.
        noise_matrix: Optional 3x3 row-stochastic matrix; row = true level,
            column = emitted level.
        seed: Seed for noise sampling and wording choices.
    """

    hidden_labels: dict[str, Level]
    hidden_verdicts: dict[str, dict[str, ComponentVerdict]]
    noise_matrix: list[list[float]] | None = None
    seed: int = 0

    @field_validator("noise_matrix")
    @classmethod
    def _row_stochastic(cls, value: list[list[float]] | None) -> list[list[float]] | None:
        if value is None:
            return None
        arr = np.asarray(value, dtype=float)
        if arr.shape != (3, 3):
            raise ValueError(f"noise_matrix must be 3x3, got {arr.shape}")
        if (arr < 0).any():
            raise ValueError("noise_matrix entries must be non-negative")
        if not np.allclose(arr.sum(axis=1), 1.0, rtol=0.0, atol=1e-9):
            raise ValueError("noise_matrix rows must each sum to 1")
        return value
