"""Build a Gateway for a backend kind."""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path

from nerif.core.models import Rubric
from nerif.errors import ConfigurationError
from nerif.gateway.base import Backend, Gateway
from nerif.gateway.models import BackendKind, GatewayConfig, OracleScript
from nerif.gateway.oracle import OracleBackend
from nerif.gateway.remote import remote_from_env
from nerif.gateway.scripted import ScriptedBackend


def build_gateway(
    kind: BackendKind | str,
    config: GatewayConfig | None = None,
    *,
    fixtures_dir: Path | None = None,
    script: OracleScript | None = None,
    rubric: Rubric | None = None,
    sleep: Callable[[float], None] | None = None,
) -> Gateway:
    """Create a gateway around the requested backend.

    Args:
        kind: ``remote``, ``scripted`` or ``oracle``.
        config: Shared retry/rate/concurrency settings.
        fixtures_dir: Transcript directory (scripted).
        script: Ground truth (oracle).
        rubric: Rubric the oracle keeps its verdicts consistent with (oracle).
        sleep: Override for retry and rate-limit sleeps.

    Raises:
        ConfigurationError: If a backend-specific input is missing.
    """
    config = config or GatewayConfig()
    kind = BackendKind(kind)
    backend: Backend
    if kind is BackendKind.REMOTE:
        remote = remote_from_env(config)
        config, backend = remote.config, remote
    elif kind is BackendKind.SCRIPTED:
        if fixtures_dir is None:
            raise ConfigurationError("Scripted backend needs a fixtures directory")
        backend = ScriptedBackend(fixtures_dir)
    else:
        if script is None or rubric is None:
            raise ConfigurationError("Oracle backend needs a script and a rubric")
        backend = OracleBackend(script, rubric)
    if sleep is None:
        return Gateway(backend, config)
    return Gateway(backend, config, sleep=sleep)
