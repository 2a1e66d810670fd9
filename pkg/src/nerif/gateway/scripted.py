"""Replay backend that answers from recorded transcript files.

A fixture directory holds ``<request_id>.txt`` per request. A file named
``<request_id>.truncated.txt`` replays as a Truncated response instead.
"""

from __future__ import annotations

import logging
from pathlib import Path

from nerif.errors import ConfigurationError, TransportError
from nerif.gateway.models import BackendKind, FinishState, SessionRequest, SessionResponse

logger = logging.getLogger(__name__)


class ScriptedBackend:
    """Serve canned responses keyed by request id."""

    name = str(BackendKind.SCRIPTED)

    def __init__(self, fixtures_dir: Path) -> None:
        if not fixtures_dir.is_dir():
            raise ConfigurationError(f"Fixture directory not found: {fixtures_dir}")
        self.fixtures_dir = fixtures_dir

    def send(self, request: SessionRequest) -> SessionResponse:
        full = self.fixtures_dir / f"{request.request_id}.txt"
        partial = self.fixtures_dir / f"{request.request_id}.truncated.txt"
        if full.is_file():
            return SessionResponse(text=full.read_text(encoding="utf-8"), backend=self.name)
        if partial.is_file():
            return SessionResponse(
                text=partial.read_text(encoding="utf-8"),
                backend=self.name,
                finish_state=FinishState.TRUNCATED,
            )
        logger.debug("No fixture for %s in %s", request.request_id, self.fixtures_dir)
        raise TransportError(f"No scripted response for {request.request_id}")
