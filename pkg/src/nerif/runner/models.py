"""Run configuration, per-batch records and run summaries."""

from __future__ import annotations

from enum import StrEnum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from nerif.core.models import Level, VerdictPolicy
from nerif.dataset.models import SplitSpec
from nerif.gateway.models import BackendKind, DecodingParams, FinishState, GatewayConfig
from nerif.metrics.models import ConfusionMatrix, MetricsReport
from nerif.prompt.models import PromptVariant
from nerif.sheets.models import PanelLayout


class RunMode(StrEnum):
    """Which split a run scores."""

    VALIDATION = "validation"
    TEST = "test"


# Fields that change what gets scored; a resumed run must match on all of them.
IDENTITY_FIELDS = ("task", "manifest", "split", "splits_path", "variant", "mode")


class RunConfig(BaseModel):
    """Everything a run needs, persisted as ``config.json``.

    Attributes:
        task: Task file path or built-in task id.
        manifest: Labeled-case manifest path.
        run_dir: Output directory.
        split: Split quotas and seed.
        splits_path: Saved ``splits.json`` to reuse instead of re-sampling.
        variant: Prompt variant.
        mode: Validation or Test.
        backend: Gateway backend kind.
        decoding: Decoding settings.
        gateway: Retry, rate and concurrency settings.
        layout: Sheet geometry.
        fixtures_dir: Transcript directory for the scripted backend.
        noise_matrix: Oracle noise matrix (identity when None).
        cues_path: Custom cue table; packaged table when None.
        cues_digest: sha256 of the cue table used.
        template_dir: Custom prompt template directory.
        policy: How Uncertain verdicts count in consistency checks.
        exclude_unscored: Drop unscored cases from metrics.
        verify_images: Decode every manifest image on load.
    """

    model_config = ConfigDict(frozen=True)

    task: str
    manifest: Path
    run_dir: Path
    split: SplitSpec = Field(default_factory=SplitSpec)
    splits_path: Path | None = None
    variant: PromptVariant = PromptVariant.FULL
    mode: RunMode = RunMode.TEST
    backend: BackendKind = BackendKind.REMOTE
    decoding: DecodingParams = Field(default_factory=DecodingParams)
    gateway: GatewayConfig = Field(default_factory=GatewayConfig)
    layout: PanelLayout = Field(default_factory=PanelLayout)
    fixtures_dir: Path | None = None
    noise_matrix: list[list[float]] | None = None
    cues_path: Path | None = None
    cues_digest: str = ""
    template_dir: Path | None = None
    policy: VerdictPolicy = VerdictPolicy.STRICT
    exclude_unscored: bool = False
    verify_images: bool = True

    def identity(self) -> dict[str, Any]:
        """The scoring-relevant subset compared on resume."""
        return self.model_dump(mode="json", include=set(IDENTITY_FIELDS))

    def for_variant(self, variant: PromptVariant) -> RunConfig:
        """Copy of this config for one ablation variant in its own sub-directory."""
        return self.model_copy(update={"variant": variant, "run_dir": self.run_dir / variant})


class BatchStatus(StrEnum):
    COMPLETE = "Complete"
    TRUNCATED = "Truncated"
    REFUSED = "Refused"
    FAILED = "Failed"


class BatchRecord(BaseModel):
    """One line of ``batches.jsonl``.

    Attributes:
        batch_id: 1-based batch number.
        request_id: Session id, unique per run.
        case_ids: Cases in drawing order.
        prompt_digest: sha256 of the prompt sent.
        started_at: ISO timestamp before submission.
        finished_at: ISO timestamp after the response or failure.
        status: Outcome of the session.
        finish_state: Backend finish state, when a response came back.
        response_text: Raw transcript (possibly partial).
        transcript: Transcript file name under ``transcripts/``.
        attempts: Attempts used.
        latency_ms: Latency of the successful attempt.
        error: Exception class and message when the session failed.
        parse: Serialized ParsedResponse.
        predictions: case_id to predicted level, None when unscored.
    """

    batch_id: int
    request_id: str
    case_ids: list[str]
    prompt_digest: str
    started_at: str
    finished_at: str
    status: BatchStatus
    finish_state: FinishState | None = None
    response_text: str | None = None
    transcript: str | None = None
    attempts: int = 0
    latency_ms: int = 0
    error: str | None = None
    parse: dict[str, Any] | None = None
    predictions: dict[str, Level | None] = Field(default_factory=dict)

    @property
    def is_complete(self) -> bool:
        return self.status is BatchStatus.COMPLETE


class CaseRow(BaseModel):
    """Per-case line of the summary table."""

    case_id: str
    batch_id: int | None
    human: Level
    predicted: Level | None
    issues: list[str] = Field(default_factory=list)
    error: str | None = None

    @property
    def unscored(self) -> bool:
        return self.predicted is None


class RunSummary(BaseModel):
    """Result of one run, persisted as ``summary.json``.

    Attributes:
        run_id: Directory name of the run.
        task_id: Scored task.
        mode: Validation or Test.
        variant: Prompt variant.
        config: Snapshot of the RunConfig.
        prompt_digest: sha256 of the compiled prompt.
        cases: Per-case table in split order.
        confusion: Confusion matrix of scored pairs.
        metrics: Agreement statistics, None when nothing was scorable.
        unscored: Cases without a usable prediction.
        retrieval_echo_batches: Batches whose transcript echoed an example.
        batches: Number of batches.
    """

    run_id: str
    task_id: str
    mode: RunMode
    variant: PromptVariant
    config: dict[str, Any]
    prompt_digest: str
    cases: list[CaseRow]
    confusion: ConfusionMatrix | None = None
    metrics: MetricsReport | None = None
    unscored: int = 0
    retrieval_echo_batches: int = 0
    batches: int = 0

    def predictions(self) -> dict[str, Level | None]:
        return {row.case_id: row.predicted for row in self.cases}
