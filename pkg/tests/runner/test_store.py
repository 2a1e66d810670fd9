"""Tests for run directory persistence."""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path

import pytest

from nerif.errors import ConfigurationError, IncompleteRun, PersistenceError, RunConfigMismatch
from nerif.runner.models import BatchRecord, BatchStatus, RunConfig, RunMode
from nerif.runner.store import RunStore

ConfigFactory = Callable[..., RunConfig]


def _record(batch_id: int, status: BatchStatus = BatchStatus.COMPLETE) -> BatchRecord:
    return BatchRecord(
        batch_id=batch_id,
        request_id=f"test-Full-{batch_id:04d}",
        case_ids=[f"c{batch_id}"],
        prompt_digest="abc",
        started_at="2024-01-01T00:00:00.000+00:00",
        finished_at="2024-01-01T00:00:01.000+00:00",
        status=status,
    )


class TestRunStore:
    """Append-only batch log and config handling."""

    def test_initialize_creates_layout(self, small_config: ConfigFactory) -> None:
        config = small_config()
        store = RunStore(config.run_dir)
        store.initialize(config)
        assert store.load_config() == config
        assert store.transcripts_dir.is_dir()
        assert store.sheets_dir.is_dir()

    def test_second_initialize_needs_resume(self, small_config: ConfigFactory) -> None:
        config = small_config()
        store = RunStore(config.run_dir)
        store.initialize(config)
        with pytest.raises(ConfigurationError):
            store.initialize(config)
        store.initialize(config, resume=True)

    def test_identity_mismatch(self, small_config: ConfigFactory) -> None:
        store = RunStore(small_config().run_dir)
        store.initialize(small_config())
        with pytest.raises(RunConfigMismatch) as exc_info:
            store.initialize(small_config(mode=RunMode.VALIDATION), resume=True)
        assert exc_info.value.fields == ["mode"]

    def test_non_identity_change_is_allowed(self, small_config: ConfigFactory) -> None:
        store = RunStore(small_config().run_dir)
        store.initialize(small_config())
        store.initialize(small_config(exclude_unscored=True), resume=True)
        assert store.load_config().exclude_unscored

    def test_latest_record_wins(self, tmp_path: Path) -> None:
        store = RunStore(tmp_path)
        store.append_batch(_record(1, BatchStatus.FAILED))
        store.append_batch(_record(2))
        store.append_batch(_record(1))
        records = store.load_batches()
        assert sorted(records) == [1, 2]
        assert records[1].status is BatchStatus.COMPLETE

    def test_torn_trailing_line_is_skipped(self, tmp_path: Path) -> None:
        store = RunStore(tmp_path)
        store.append_batch(_record(1))
        with store.batches_path.open("a", encoding="utf-8") as fh:
            fh.write('{"batch_id": 2, "request_id": "test-Fu')
        assert list(store.load_batches()) == [1]

    def test_no_batches_yet(self, tmp_path: Path) -> None:
        assert RunStore(tmp_path).load_batches() == {}

    def test_transcripts(self, tmp_path: Path) -> None:
        store = RunStore(tmp_path)
        name = store.write_transcript("test-Full-0001", "Drawing 1: Beginning")
        assert store.read_transcript(name) == "Drawing 1: Beginning"
        with pytest.raises(IncompleteRun):
            store.read_transcript("test-Full-0009.txt")

    def test_missing_files(self, tmp_path: Path) -> None:
        store = RunStore(tmp_path)
        with pytest.raises(IncompleteRun):
            store.load_config()
        with pytest.raises(IncompleteRun):
            store.load_summary()

    def test_unwritable_directory(self, small_config: ConfigFactory, tmp_path: Path) -> None:
        blocker = tmp_path / "blocker"
        blocker.write_text("not a directory", encoding="utf-8")
        config = small_config(run_dir=blocker / "run")
        with pytest.raises(PersistenceError) as exc_info:
            RunStore(config.run_dir).initialize(config)
        assert exc_info.value.path == config.run_dir / "config.json"
