"""Gateway front end: retries, throttling and the concurrency cap.

Backends only know how to send one request. ``Gateway.submit`` wraps them
with a tenacity retry loop (exponential backoff, attempt cap, and a ceiling
on total backoff), a shared rate limiter, and a semaphore bounding in-flight
sessions. Each call is a fresh single-turn session; nothing carries over.
"""

from __future__ import annotations

import logging
import threading
import time
from collections.abc import Callable
from typing import Protocol

from tenacity import (
    RetryCallState,
    Retrying,
    retry_if_exception,
    stop_after_attempt,
    wait_exponential,
)
from tenacity.stop import stop_base

from nerif.errors import ContentRefused, TransportError, Truncated
from nerif.gateway.models import FinishState, GatewayConfig, SessionRequest, SessionResponse
from nerif.gateway.ratelimit import RateLimiter

logger = logging.getLogger(__name__)


class Backend(Protocol):
    """Anything that can answer one session request."""

    name: str

    def send(self, request: SessionRequest) -> SessionResponse: ...


class stop_after_total_delay(stop_base):  # noqa: N801 - tenacity naming convention
    """Stop when the next backoff would push total waiting past ``max_delay``."""

    def __init__(self, max_delay: float) -> None:
        self.max_delay = max_delay

    def __call__(self, retry_state: RetryCallState) -> bool:
        upcoming = retry_state.upcoming_sleep or 0.0
        return retry_state.idle_for + upcoming > self.max_delay


def _is_retryable(exc: BaseException) -> bool:
    return isinstance(exc, TransportError) and exc.retryable


def _log_retry(retry_state: RetryCallState) -> None:
    exc = retry_state.outcome.exception() if retry_state.outcome else None
    logger.warning(
        "Attempt %d failed (%s); retrying in %.1fs",
        retry_state.attempt_number,
        exc,
        retry_state.upcoming_sleep,
    )


class Gateway:
    """Submit sessions to a backend under retry, rate and concurrency limits.

    Args:
        backend: Backend that sends single requests.
        config: Retry, rate and concurrency settings.
        limiter: Shared rate limiter; built from ``config`` when omitted.
        sleep: Sleep used between retries, injectable for tests.
    """

    def __init__(
        self,
        backend: Backend,
        config: GatewayConfig | None = None,
        limiter: RateLimiter | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.backend = backend
        self.config = config or GatewayConfig()
        self.limiter = limiter or RateLimiter(self.config.rpm, self.config.rate_deadline_s)
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(self.config.concurrency)

    @property
    def name(self) -> str:
        return self.backend.name

    def _retrying(self) -> Retrying:
        cfg = self.config
        return Retrying(
            retry=retry_if_exception(_is_retryable),
            stop=(
                stop_after_attempt(cfg.max_attempts)
                | stop_after_total_delay(cfg.max_total_delay_s)
            ),
            wait=wait_exponential(multiplier=cfg.backoff_base_s, max=cfg.backoff_max_s),
            sleep=self._sleep,
            before_sleep=_log_retry,
            reraise=True,
        )

    def submit(self, request: SessionRequest) -> SessionResponse:
        """Run one fresh single-turn session.

        Args:
            request: Prompt, two attachments and decoding settings.

        Returns:
            A Complete response with ``attempts`` filled in.

        Raises:
            ValueError: If an attachment exceeds the size limit.
            TransportError: When retries are exhausted or the failure is permanent.
            RateLimited: If no rate-limit slot frees up within the deadline.
            Truncated: If output stopped at the token cap (response attached).
            ContentRefused: If the backend refused (response attached).
        """
        request.check_size(self.config.max_attachment_bytes)
        attempts = 0
        with self._slots:
            try:
                for attempt in self._retrying():
                    with attempt:
                        attempts = attempt.retry_state.attempt_number
                        self.limiter.acquire()
                        response = self.backend.send(request)
            except TransportError as exc:
                exc.attempts = attempts
                logger.warning(
                    "Request %s failed after %d attempt(s)", request.request_id, attempts
                )
                raise

        response = response.model_copy(update={"attempts": attempts})
        logger.info(
            "Request %s: %s in %dms (%d attempt(s))",
            request.request_id,
            response.finish_state,
            response.latency_ms,
            attempts,
        )
        if response.finish_state is FinishState.TRUNCATED:
            raise Truncated(f"Request {request.request_id} hit the output token cap", response)
        if response.finish_state is FinishState.REFUSED:
            raise ContentRefused(f"Request {request.request_id} was refused", response)
        return response
