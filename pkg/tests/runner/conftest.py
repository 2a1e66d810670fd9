"""Run configuration fixtures for the runner tests."""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path

import pytest

from nerif.dataset.models import SplitSpec
from nerif.gateway.models import BackendKind, GatewayConfig
from nerif.runner.models import RunConfig, RunMode

ConfigFactory = Callable[..., RunConfig]


@pytest.fixture()
def small_config(
    tmp_path: Path, task_file: Path, manifest_factory: Callable[..., Path]
) -> ConfigFactory:
    """RunConfig over a 4-per-class manifest: 6 test cases in 2 batches."""
    manifest = manifest_factory(4)

    def make(**overrides: object) -> RunConfig:
        fields: dict[str, object] = {
            "task": str(task_file),
            "manifest": manifest,
            "run_dir": tmp_path / "runs" / "run-1",
            "split": SplitSpec(n_examples=1, n_validation=1, n_test=2, seed=3),
            "mode": RunMode.TEST,
            "backend": BackendKind.ORACLE,
            "gateway": GatewayConfig(rpm=10_000),
        }
        fields.update(overrides)
        return RunConfig.model_validate(fields)

    return make
