"""Chat-completions backend over HTTP.

Sends the compiled prompt and both sheets as base64 PNG data URLs in a
single user message. The API key comes from ``NERIF_API_KEY`` and is never
logged or persisted.
"""

from __future__ import annotations

import base64
import logging
import os
import time
from typing import Any

import requests

from nerif.errors import ConfigurationError, TransportError
from nerif.gateway.models import (
    BackendKind,
    FinishState,
    GatewayConfig,
    SessionRequest,
    SessionResponse,
    Usage,
)

logger = logging.getLogger(__name__)

API_KEY_ENV = "NERIF_API_KEY"
ENDPOINT_ENV = "NERIF_ENDPOINT"
MODEL_ENV = "NERIF_MODEL"

_FINISH_STATES = {
    "stop": FinishState.COMPLETE,
    "length": FinishState.TRUNCATED,
    "content_filter": FinishState.REFUSED,
}


def _data_url(png: bytes) -> str:
    return "data:image/png;base64," + base64.b64encode(png).decode("ascii")


def build_payload(request: SessionRequest, model: str) -> dict[str, Any]:
    """Build the chat-completions request body for one session."""
    content: list[dict[str, Any]] = [{"type": "text", "text": request.prompt_text}]
    content.extend(
        {"type": "image_url", "image_url": {"url": _data_url(blob)}}
        for blob in request.attachments
    )
    return {
        "model": model,
        "messages": [{"role": "user", "content": content}],
        "temperature": request.decoding.temperature,
        "top_p": request.decoding.top_p,
        "max_tokens": request.decoding.max_output_tokens,
    }


def _is_transient_status(status: int) -> bool:
    return status == 429 or status >= 500


class RemoteBackend:
    """Single-request client for an OpenAI-compatible chat-completions API.

    Args:
        config: Endpoint, model and timeout.
        api_key: Bearer token.
        session: Optional requests session (tests pass a stub).
    """

    name = str(BackendKind.REMOTE)

    def __init__(
        self,
        config: GatewayConfig,
        api_key: str,
        session: requests.Session | None = None,
    ) -> None:
        if not api_key:
            raise ConfigurationError(f"{API_KEY_ENV} is not set")
        self.config = config
        self._api_key = api_key
        self._session = session or requests.Session()

    def send(self, request: SessionRequest) -> SessionResponse:
        """POST one request and map the reply to a SessionResponse.

        Raises:
            TransportError: On connection failures and error statuses;
                429, 5xx, timeouts and dropped connections are retryable.
        """
        headers = {
            "Authorization": f"Bearer {self._api_key}",
            "Content-Type": "application/json",
        }
        payload = build_payload(request, self.config.model)
        started = time.perf_counter()
        try:
            resp = self._session.post(
                self.config.endpoint,
                json=payload,
                headers=headers,
                timeout=self.config.timeout_s,
            )
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise TransportError(f"Connection failed: {exc}", retryable=True) from exc
        except requests.RequestException as exc:
            raise TransportError(f"Request failed: {exc}") from exc
        latency_ms = int((time.perf_counter() - started) * 1000)

        if resp.status_code >= 400:
            raise TransportError(
                f"HTTP {resp.status_code}: {resp.text[:200]}",
                retryable=_is_transient_status(resp.status_code),
            )
        try:
            body = resp.json()
            choice = body["choices"][0]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"Malformed response body: {exc}", retryable=True) from exc

        text = (choice.get("message") or {}).get("content") or ""
        finish = _FINISH_STATES.get(choice.get("finish_reason") or "stop", FinishState.COMPLETE)
        if finish is FinishState.COMPLETE and not text.strip():
            raise TransportError("Empty completion", retryable=True)

        usage = body.get("usage")
        return SessionResponse(
            text=text,
            latency_ms=latency_ms,
            usage=Usage.model_validate(usage) if isinstance(usage, dict) else None,
            backend=self.name,
            finish_state=finish,
        )


def config_from_env(config: GatewayConfig | None = None) -> GatewayConfig:
    """Apply ``NERIF_ENDPOINT`` and ``NERIF_MODEL`` overrides to a config."""
    config = config or GatewayConfig()
    updates = {}
    if endpoint := os.environ.get(ENDPOINT_ENV):
        updates["endpoint"] = endpoint
    if model := os.environ.get(MODEL_ENV):
        updates["model"] = model
    return config.model_copy(update=updates) if updates else config


def remote_from_env(config: GatewayConfig | None = None) -> RemoteBackend:
    """Build a RemoteBackend from environment variables.

    Raises:
        ConfigurationError: If ``NERIF_API_KEY`` is unset.
    """
    config = config_from_env(config)
    logger.info("Remote backend: %s (%s)", config.endpoint, config.model)
    return RemoteBackend(config, os.environ.get(API_KEY_ENV, ""))
