"""Tests for the HTTP backend using a stub requests session."""

from __future__ import annotations

import base64
from typing import Any

import pytest
import requests

from nerif.errors import ConfigurationError, TransportError
from nerif.gateway.base import Gateway
from nerif.gateway.models import FinishState, GatewayConfig, SessionRequest
from nerif.gateway.ratelimit import RateLimiter
from nerif.gateway.remote import (
    API_KEY_ENV,
    ENDPOINT_ENV,
    MODEL_ENV,
    RemoteBackend,
    build_payload,
    config_from_env,
    remote_from_env,
)

REQUEST = SessionRequest(
    prompt_text="Score the drawings.",
    attachments=(b"reference-png", b"test-png"),
    request_id="test-Full-0001",
)


class StubResponse:
    def __init__(self, status_code: int, body: Any = None, text: str = "") -> None:
        self.status_code = status_code
        self._body = body
        self.text = text

    def json(self) -> Any:
        if self._body is None:
            raise ValueError("no JSON")
        return self._body


class StubSession:
    """Records posts and replays queued replies (responses or exceptions)."""

    def __init__(self, *replies: StubResponse | Exception) -> None:
        self.replies = list(replies)
        self.posts: list[dict[str, Any]] = []

    def post(self, url: str, **kwargs: Any) -> StubResponse:
        self.posts.append({"url": url, **kwargs})
        reply = self.replies.pop(0)
        if isinstance(reply, Exception):
            raise reply
        return reply


def completion(text: str, finish_reason: str = "stop") -> StubResponse:
    return StubResponse(
        200,
        {
            "choices": [{"message": {"content": text}, "finish_reason": finish_reason}],
            "usage": {"prompt_tokens": 900, "completion_tokens": 300, "total_tokens": 1200},
        },
    )


def _backend(session: StubSession) -> RemoteBackend:
    return RemoteBackend(GatewayConfig(), "sk-test", session=session)  # type: ignore[arg-type]


class TestPayload:
    def test_one_user_message_with_two_images(self) -> None:
        payload = build_payload(REQUEST, "gpt-4o")
        content = payload["messages"][0]["content"]
        assert [c["type"] for c in content] == ["text", "image_url", "image_url"]
        assert content[0]["text"] == "Score the drawings."
        url = content[1]["image_url"]["url"]
        assert url.startswith("data:image/png;base64,")
        assert base64.b64decode(url.split(",", 1)[1]) == b"reference-png"
        assert payload["temperature"] == 0.0
        assert payload["max_tokens"] == 1800


class TestRemoteBackend:
    """Status and body mapping."""

    def test_complete(self) -> None:
        session = StubSession(completion("Drawing 1: Proficient"))
        result = _backend(session).send(REQUEST)
        assert result.text == "Drawing 1: Proficient"
        assert result.finish_state is FinishState.COMPLETE
        assert result.usage is not None and result.usage.total_tokens == 1200
        assert session.posts[0]["headers"]["Authorization"] == "Bearer sk-test"
        assert session.posts[0]["timeout"] == 120.0

    @pytest.mark.parametrize(
        ("reason", "state"),
        [("length", FinishState.TRUNCATED), ("content_filter", FinishState.REFUSED)],
    )
    def test_partial_finish(self, reason: str, state: FinishState) -> None:
        result = _backend(StubSession(completion("Drawing 1:", reason))).send(REQUEST)
        assert result.finish_state is state

    @pytest.mark.parametrize(
        ("status", "retryable"), [(429, True), (500, True), (503, True), (400, False), (401, False)]
    )
    def test_error_status(self, status: int, retryable: bool) -> None:
        session = StubSession(StubResponse(status, text="boom"))
        with pytest.raises(TransportError) as exc_info:
            _backend(session).send(REQUEST)
        assert exc_info.value.retryable is retryable
        assert f"HTTP {status}" in str(exc_info.value)

    def test_connection_error_is_retryable(self) -> None:
        session = StubSession(requests.ConnectionError("reset by peer"))
        with pytest.raises(TransportError) as exc_info:
            _backend(session).send(REQUEST)
        assert exc_info.value.retryable

    def test_malformed_body(self) -> None:
        with pytest.raises(TransportError, match="Malformed"):
            _backend(StubSession(StubResponse(200, {"choices": []}))).send(REQUEST)

    def test_empty_completion(self) -> None:
        with pytest.raises(TransportError, match="Empty"):
            _backend(StubSession(completion("   "))).send(REQUEST)

    def test_api_key_required(self) -> None:
        with pytest.raises(ConfigurationError, match=API_KEY_ENV):
            RemoteBackend(GatewayConfig(), "")

    def test_key_is_not_in_errors(self) -> None:
        session = StubSession(StubResponse(401, text="unauthorized"))
        with pytest.raises(TransportError) as exc_info:
            _backend(session).send(REQUEST)
        assert "sk-test" not in str(exc_info.value)

    def test_retried_through_gateway(self) -> None:
        session = StubSession(StubResponse(500, text="oops"), completion("Drawing 1: Beginning"))
        sleeps: list[float] = []
        gateway = Gateway(
            _backend(session),
            GatewayConfig(),
            limiter=RateLimiter(100, sleep=sleeps.append),
            sleep=sleeps.append,
        )
        result = gateway.submit(REQUEST)
        assert result.attempts == 2
        assert len(session.posts) == 2


class TestEnvironment:
    def test_overrides(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv(ENDPOINT_ENV, "http://localhost:8000/v1/chat/completions")
        monkeypatch.setenv(MODEL_ENV, "local-vlm")
        config = config_from_env()
        assert config.endpoint == "http://localhost:8000/v1/chat/completions"
        assert config.model == "local-vlm"

    def test_no_overrides_keeps_config(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.delenv(ENDPOINT_ENV, raising=False)
        monkeypatch.delenv(MODEL_ENV, raising=False)
        base = GatewayConfig(rpm=5)
        assert config_from_env(base) is base

    def test_missing_key(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.delenv(API_KEY_ENV, raising=False)
        with pytest.raises(ConfigurationError):
            remote_from_env()
