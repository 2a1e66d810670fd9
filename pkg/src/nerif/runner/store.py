"""Run directory persistence.

Layout::

    <run_dir>/
        config.json        RunConfig, written once
        batches.jsonl      one BatchRecord per line, append-only
        transcripts/       raw responses, written before parsing
        sheets/            reference and test sheet PNGs plus sidecars
        summary.json       RunSummary
        report.txt         rendered tables

A single writer appends to ``batches.jsonl`` under a lock and fsyncs each
line, so a killed run leaves at most one torn trailing line, which loading
skips.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from pathlib import Path

from pydantic import ValidationError

from nerif.errors import ConfigurationError, IncompleteRun, PersistenceError, RunConfigMismatch
from nerif.runner.models import BatchRecord, RunConfig, RunSummary

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
BATCHES_FILE = "batches.jsonl"
SUMMARY_FILE = "summary.json"
REPORT_FILE = "report.txt"
TRANSCRIPTS_DIR = "transcripts"
SHEETS_DIR = "sheets"


class RunStore:
    """Reads and writes one run directory."""

    def __init__(self, run_dir: Path) -> None:
        self.run_dir = run_dir
        self._lock = threading.Lock()

    @property
    def config_path(self) -> Path:
        return self.run_dir / CONFIG_FILE

    @property
    def batches_path(self) -> Path:
        return self.run_dir / BATCHES_FILE

    @property
    def summary_path(self) -> Path:
        return self.run_dir / SUMMARY_FILE

    @property
    def report_path(self) -> Path:
        return self.run_dir / REPORT_FILE

    @property
    def transcripts_dir(self) -> Path:
        return self.run_dir / TRANSCRIPTS_DIR

    @property
    def sheets_dir(self) -> Path:
        return self.run_dir / SHEETS_DIR

    def _write_text(self, path: Path, text: str) -> Path:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise PersistenceError(path, exc.strerror or str(exc)) from exc
        return path

    # -- config ---------------------------------------------------------------

    def load_config(self) -> RunConfig:
        if not self.config_path.is_file():
            raise IncompleteRun([str(self.config_path)])
        return RunConfig.model_validate_json(self.config_path.read_text(encoding="utf-8"))

    def initialize(self, config: RunConfig, resume: bool = False) -> None:
        """Create the run directory or reopen it for resumption.

        Raises:
            ConfigurationError: If the directory already holds a run and
                ``resume`` is False.
            RunConfigMismatch: If resuming with a config that would score
                differently.
            PersistenceError: If the directory cannot be written.
        """
        if self.config_path.is_file():
            if not resume:
                raise ConfigurationError(
                    f"{self.run_dir} already holds a run; pass --resume to continue it"
                )
            stored = self.load_config().identity()
            current = config.identity()
            changed = sorted(k for k in current if stored.get(k) != current[k])
            if changed:
                raise RunConfigMismatch(changed)
            logger.info("Resuming run in %s", self.run_dir)
        self._write_text(self.config_path, config.model_dump_json(indent=2) + "\n")
        for sub in (self.transcripts_dir, self.sheets_dir):
            try:
                sub.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise PersistenceError(sub, exc.strerror or str(exc)) from exc

    # -- batches --------------------------------------------------------------

    def write_transcript(self, request_id: str, text: str) -> str:
        """Persist a raw response; returns the file name."""
        name = f"{request_id}.txt"
        self._write_text(self.transcripts_dir / name, text)
        return name

    def read_transcript(self, name: str) -> str:
        path = self.transcripts_dir / name
        if not path.is_file():
            raise IncompleteRun([str(path)])
        return path.read_text(encoding="utf-8")

    def append_batch(self, record: BatchRecord) -> None:
        """Append one record and flush it to disk."""
        line = record.model_dump_json() + "\n"
        with self._lock:
            try:
                with self.batches_path.open("a", encoding="utf-8") as fh:
                    fh.write(line)
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise PersistenceError(self.batches_path, exc.strerror or str(exc)) from exc

    def load_batches(self) -> dict[int, BatchRecord]:
        """Latest record per batch_id; torn or invalid lines are skipped."""
        records: dict[int, BatchRecord] = {}
        if not self.batches_path.is_file():
            return records
        with self.batches_path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = BatchRecord.model_validate_json(line)
                except ValidationError:
                    logger.warning("Skipping unreadable line %d of %s", lineno, self.batches_path)
                    continue
                records[record.batch_id] = record
        return records

    # -- summary --------------------------------------------------------------

    def write_summary(self, summary: RunSummary) -> Path:
        return self._write_text(self.summary_path, summary.model_dump_json(indent=2) + "\n")

    def load_summary(self) -> RunSummary:
        if not self.summary_path.is_file():
            raise IncompleteRun([str(self.summary_path)])
        return RunSummary.model_validate_json(self.summary_path.read_text(encoding="utf-8"))

    def write_report(self, text: str) -> Path:
        return self._write_text(self.report_path, text)

    def write_file(self, name: str, text: str) -> Path:
        """Write an extra text artifact at the top of the run directory."""
        return self._write_text(self.run_dir / name, text)

    def append_history(self, entry: dict) -> Path:
        """Append a validation-iteration line to ``<run_dir>/../history.jsonl``."""
        path = self.run_dir.parent / "history.jsonl"
        with self._lock:
            try:
                with path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, sort_keys=True) + "\n")
            except OSError as exc:
                raise PersistenceError(path, exc.strerror or str(exc)) from exc
        return path
