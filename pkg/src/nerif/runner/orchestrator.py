"""Validation, test and ablation runs.

A run samples the task's splits, batches the selected split in split order,
and for each batch composes the test sheet, compiles the prompt, opens one
fresh session, persists the raw transcript, parses it and records the
predictions. Backend failures are recorded on the batch and the run moves on;
only persistence failures abort. Resuming skips batches already recorded as
Complete.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import UTC, datetime
from pathlib import Path

from nerif.core.models import ProficiencyLevel, TaskDefinition
from nerif.core.scoring import example_findings
from nerif.core.tasks import resolve_task
from nerif.dataset.manifest import load_manifest, records_for_task
from nerif.dataset.models import Batch, CaseRecord, Splits
from nerif.dataset.splits import make_batches, sample_splits
from nerif.errors import ConfigurationError, ContentRefused, GatewayError, NerifError, Truncated
from nerif.gateway.base import Gateway
from nerif.gateway.factory import build_gateway
from nerif.gateway.models import (
    BackendKind,
    FinishState,
    OracleScript,
    SessionRequest,
    SessionResponse,
)
from nerif.metrics.agreement import confusion, report, score_pairs
from nerif.metrics.tables import render_text
from nerif.parsing.cues import CueTable, load_cues
from nerif.parsing.models import ParsedResponse
from nerif.parsing.parser import parse
from nerif.prompt.compiler import compile_prompt
from nerif.prompt.models import CompiledPrompt, PromptVariant
from nerif.runner.models import (
    BatchRecord,
    BatchStatus,
    CaseRow,
    RunConfig,
    RunMode,
    RunSummary,
)
from nerif.runner.reporting import ablation_table, render_run
from nerif.runner.store import RunStore
from nerif.sheets.composer import (
    compose_reference_sheet,
    compose_test_sheet,
    save_sheet,
    to_png_bytes,
)

logger = logging.getLogger(__name__)

ABLATION_FILE = "ablation.txt"
ABLATION_VARIANTS = (PromptVariant.FULL, PromptVariant.NO_NOTES, PromptVariant.NO_EXAMPLES)

_STATUS_FOR_FINISH = {
    FinishState.COMPLETE: BatchStatus.COMPLETE,
    FinishState.TRUNCATED: BatchStatus.TRUNCATED,
    FinishState.REFUSED: BatchStatus.REFUSED,
}


def _now() -> str:
    return datetime.now(UTC).isoformat(timespec="milliseconds")


def request_id_for(config: RunConfig, batch_id: int) -> str:
    """Session id for a batch; unique per run, stable across resumes."""
    return f"{config.mode}-{config.variant}-{batch_id:04d}"


@dataclass
class RunContext:
    """Resolved inputs of a run."""

    task: TaskDefinition
    cases: list[CaseRecord]
    batches: list[Batch]
    cues: CueTable


def _splits(config: RunConfig, records: list[CaseRecord], task_id: str) -> Splits:
    if config.splits_path is None:
        return sample_splits(records, config.split)
    try:
        splits = Splits.model_validate_json(config.splits_path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"Cannot read splits file {config.splits_path}: {exc}") from exc
    if splits.task_id.casefold() != task_id.casefold():
        raise ConfigurationError(
            f"Splits file {config.splits_path} is for task {splits.task_id}, not {task_id}"
        )
    return splits


def load_context(config: RunConfig, verify_images: bool | None = None) -> RunContext:
    """Resolve the task, sample splits and batch the selected split.

    Raises:
        UnknownTask, ConfigurationError: For a bad task reference.
        ManifestError: For an invalid manifest.
        InsufficientClassCount: If the manifest cannot fill the quotas.
    """
    task = resolve_task(config.task)
    verify = config.verify_images if verify_images is None else verify_images
    records = records_for_task(load_manifest(config.manifest, verify), task.task_id)
    if not records:
        raise ConfigurationError(f"Manifest has no cases for task {task.task_id}")
    splits = _splits(config, records, task.task_id)
    cases = splits.validation if config.mode is RunMode.VALIDATION else splits.test
    return RunContext(task, cases, make_batches(cases), load_cues(config.cues_path))


def _check_examples(task: TaskDefinition, variant: PromptVariant) -> None:
    if not variant.includes_examples:
        return
    if not task.examples:
        raise ConfigurationError(
            f"Task {task.task_id} has no scoring examples; the {variant} variant needs them"
        )
    for finding in example_findings(task):
        logger.warning("Task %s examples: %s", task.task_id, finding)


def _oracle_script(config: RunConfig, cases: list[CaseRecord]) -> OracleScript:
    return OracleScript(
        hidden_labels={c.case_id: c.human_label for c in cases},
        hidden_verdicts={},
        noise_matrix=config.noise_matrix,
        seed=config.split.seed,
    )


def make_gateway(config: RunConfig, ctx: RunContext) -> Gateway:
    """Gateway for the configured backend."""
    script = _oracle_script(config, ctx.cases) if config.backend is BackendKind.ORACLE else None
    return build_gateway(
        config.backend,
        config.gateway,
        fixtures_dir=config.fixtures_dir,
        script=script,
        rubric=ctx.task.rubric,
    )


def predictions_from(
    parsed: ParsedResponse, case_ids: list[str]
) -> dict[str, ProficiencyLevel | None]:
    """case_id to stated level by drawing position (None when missing)."""
    out: dict[str, ProficiencyLevel | None] = {}
    for position, case_id in enumerate(case_ids, start=1):
        assessment = parsed.assessment(position)
        out[case_id] = assessment.final_level if assessment else None
    return out


class _BatchRunner:
    """Runs single batches against one gateway and store."""

    def __init__(
        self,
        config: RunConfig,
        ctx: RunContext,
        store: RunStore,
        gateway: Gateway,
        reference_png: bytes,
    ) -> None:
        self.config = config
        self.ctx = ctx
        self.store = store
        self.gateway = gateway
        self.reference_png = reference_png
        self._prompts: dict[int, CompiledPrompt] = {}

    def prompt(self, expected: int) -> CompiledPrompt:
        if expected not in self._prompts:
            self._prompts[expected] = compile_prompt(
                self.ctx.task,
                self.config.variant,
                expected,
                self.config.decoding,
                self.config.template_dir,
            )
        return self._prompts[expected]

    def __call__(self, batch: Batch) -> BatchRecord:
        config, store = self.config, self.store
        request_id = request_id_for(config, batch.batch_id)
        prompt = self.prompt(len(batch))
        started = _now()

        sheet = compose_test_sheet(batch, config.layout)
        save_sheet(sheet, store.sheets_dir / f"batch-{batch.batch_id:04d}.png")
        request = SessionRequest(
            prompt_text=prompt.text,
            attachments=(self.reference_png, to_png_bytes(sheet)),
            decoding=config.decoding,
            request_id=request_id,
            case_ids=tuple(batch.case_ids),
        )

        response: SessionResponse | None = None
        error: str | None = None
        attempts = 0
        try:
            response = self.gateway.submit(request)
        except (Truncated, ContentRefused) as exc:
            response = exc.response
            logger.warning("Batch %d: %s", batch.batch_id, exc)
        except GatewayError as exc:
            error = f"{type(exc).__name__}: {exc}"
            attempts = getattr(exc, "attempts", 0)
            logger.warning("Batch %d failed: %s", batch.batch_id, error)
        except (NerifError, ValueError) as exc:
            error = f"{type(exc).__name__}: {exc}"
            logger.warning("Batch %d failed: %s", batch.batch_id, error)

        record = BatchRecord(
            batch_id=batch.batch_id,
            request_id=request_id,
            case_ids=batch.case_ids,
            prompt_digest=prompt.digest,
            started_at=started,
            finished_at=_now(),
            status=BatchStatus.FAILED,
            attempts=attempts,
            error=error,
            predictions=dict.fromkeys(batch.case_ids),
        )
        if response is not None:
            transcript = store.write_transcript(request_id, response.text)
            parsed = parse(
                response.text, len(batch), self.ctx.task.rubric, self.ctx.cues, config.policy
            )
            record = record.model_copy(
                update={
                    "status": _STATUS_FOR_FINISH[response.finish_state],
                    "finish_state": response.finish_state,
                    "response_text": response.text,
                    "transcript": transcript,
                    "attempts": response.attempts,
                    "latency_ms": response.latency_ms,
                    "parse": parsed.to_dict(),
                    "predictions": predictions_from(parsed, batch.case_ids),
                }
            )
        store.append_batch(record)
        return record


def _case_rows(cases: list[CaseRecord], records: dict[int, BatchRecord]) -> list[CaseRow]:
    by_case: dict[str, tuple[BatchRecord, int]] = {}
    for record in records.values():
        for position, case_id in enumerate(record.case_ids, start=1):
            by_case[case_id] = (record, position)

    rows = []
    for case in cases:
        if case.case_id not in by_case:
            rows.append(
                CaseRow(
                    case_id=case.case_id,
                    batch_id=None,
                    human=case.human_label,
                    predicted=None,
                    error="no batch record",
                )
            )
            continue
        record, position = by_case[case.case_id]
        issues = []
        if record.parse:
            parsed = ParsedResponse.from_dict(record.parse)
            issues = [f"{i.kind}: {i.detail}" for i in parsed.issues_for(position)]
        error = record.error
        if error is None and not record.is_complete:
            error = f"session {record.status}"
        rows.append(
            CaseRow(
                case_id=case.case_id,
                batch_id=record.batch_id,
                human=case.human_label,
                predicted=record.predictions.get(case.case_id),
                issues=issues,
                error=error,
            )
        )
    return rows


def summarize(
    config: RunConfig,
    ctx: RunContext,
    records: dict[int, BatchRecord],
    exclude_unscored: bool | None = None,
) -> RunSummary:
    """Build the per-case table and metrics from batch records."""
    rows = _case_rows(ctx.cases, records)
    exclude = config.exclude_unscored if exclude_unscored is None else exclude_unscored
    scored, unscored = score_pairs(((r.human, r.predicted) for r in rows), exclude)
    for row in rows:
        if row.unscored:
            logger.info("Case %s unscored (%s)", row.case_id, row.error or "; ".join(row.issues))

    cm = confusion(scored) if scored else None
    digests = {r.prompt_digest for r in records.values()}
    return RunSummary(
        run_id=config.run_dir.name,
        task_id=ctx.task.task_id,
        mode=config.mode,
        variant=config.variant,
        config=config.model_dump(mode="json"),
        prompt_digest=",".join(sorted(digests)),
        cases=rows,
        confusion=cm,
        metrics=report(cm) if cm else None,
        unscored=unscored,
        retrieval_echo_batches=sum(
            1 for r in records.values() if r.parse and r.parse.get("retrieval_echo_found")
        ),
        batches=len(records),
    )


def _finish(config: RunConfig, store: RunStore, summary: RunSummary) -> RunSummary:
    store.write_summary(summary)
    store.write_report(render_run(summary))
    if config.mode is RunMode.VALIDATION:
        store.append_history(
            {
                "run_dir": str(config.run_dir),
                "finished_at": _now(),
                "variant": str(config.variant),
                "prompt_digest": summary.prompt_digest,
                "template_dir": str(config.template_dir) if config.template_dir else None,
                "accuracy": summary.metrics.accuracy if summary.metrics else None,
            }
        )
    return summary


def run(
    config: RunConfig,
    resume: bool = False,
    gateway: Gateway | None = None,
) -> RunSummary:
    """Score the configured split batch by batch.

    Args:
        config: Run configuration.
        resume: Continue an existing run directory.
        gateway: Pre-built gateway (built from ``config`` when omitted).

    Returns:
        The run summary, also written to ``summary.json``.

    Raises:
        PersistenceError: If the run directory cannot be written.
        RunConfigMismatch: If resuming with a config that scores differently.
    """
    ctx = load_context(config)
    _check_examples(ctx.task, config.variant)
    cues_digest = ctx.cues.digest
    if config.cues_digest != cues_digest:
        config = config.model_copy(update={"cues_digest": cues_digest})

    store = RunStore(config.run_dir)
    store.initialize(config, resume=resume)

    reference = compose_reference_sheet(
        ctx.task, config.layout, include_examples=config.variant.includes_examples
    )
    save_sheet(reference, store.sheets_dir / "reference.png")
    gateway = gateway or make_gateway(config, ctx)
    runner = _BatchRunner(config, ctx, store, gateway, to_png_bytes(reference))

    done = store.load_batches()
    pending = []
    for batch in ctx.batches:
        prior = done.get(batch.batch_id)
        if prior and prior.is_complete and prior.case_ids == batch.case_ids:
            logger.info("Skipping batch %d (already complete)", batch.batch_id)
            continue
        pending.append(batch)

    logger.info(
        "Running %d of %d batch(es) for %s (%s, %s)",
        len(pending),
        len(ctx.batches),
        ctx.task.task_id,
        config.mode,
        config.variant,
    )
    with ThreadPoolExecutor(max_workers=config.gateway.concurrency) as pool:
        list(pool.map(runner, pending))

    summary = summarize(config, ctx, store.load_batches())
    return _finish(config, store, summary)


def ablate(
    config: RunConfig,
    resume: bool = False,
    gateway_factory: Callable[[RunConfig], Gateway] | None = None,
) -> dict[PromptVariant, RunSummary]:
    """Run Full, NoNotes and NoExamples over the same split and batch order.

    Each variant runs in ``<run_dir>/<variant>/``; the per-case label change
    table is written to ``<run_dir>/ablation.txt``.

    Args:
        config: Base configuration; its variant is ignored.
        resume: Continue existing variant runs.
        gateway_factory: Optional ``(RunConfig) -> Gateway`` used per variant.
    """
    summaries: dict[PromptVariant, RunSummary] = {}
    for variant in ABLATION_VARIANTS:
        sub = config.for_variant(variant)
        gateway = gateway_factory(sub) if gateway_factory else None
        summaries[variant] = run(sub, resume=resume, gateway=gateway)

    text = render_text(ablation_table(summaries))
    RunStore(config.run_dir).write_file(ABLATION_FILE, text)
    return summaries


def reparse(run_dir: Path, cues_path: Path | None = None) -> RunSummary:
    """Re-parse every persisted transcript and rebuild the summary.

    Updated records are appended to ``batches.jsonl``; the latest line per
    batch wins on load.
    """
    store = RunStore(run_dir)
    config = store.load_config()
    if cues_path is not None:
        config = config.model_copy(update={"cues_path": cues_path})
    ctx = load_context(config, verify_images=False)
    config = config.model_copy(update={"cues_digest": ctx.cues.digest})

    for record in store.load_batches().values():
        if record.transcript is None:
            continue
        text = store.read_transcript(record.transcript)
        parsed = parse(text, len(record.case_ids), ctx.task.rubric, ctx.cues, config.policy)
        store.append_batch(
            record.model_copy(
                update={
                    "parse": parsed.to_dict(),
                    "predictions": predictions_from(parsed, record.case_ids),
                }
            )
        )
    summary = summarize(config, ctx, store.load_batches())
    return _finish(config, store, summary)


def score(run_dir: Path, exclude_unscored: bool | None = None) -> RunSummary:
    """Recompute the summary and metrics from persisted batch records."""
    store = RunStore(run_dir)
    config = store.load_config()
    ctx = load_context(config, verify_images=False)
    summary = summarize(config, ctx, store.load_batches(), exclude_unscored)
    store.write_summary(summary)
    store.write_report(render_run(summary))
    return summary
