"""Thread-safe sliding-window requests-per-minute limiter."""

from __future__ import annotations

import logging
import threading
import time
from collections import deque
from collections.abc import Callable

from nerif.errors import RateLimited

logger = logging.getLogger(__name__)


class RateLimiter:
    """Admit at most ``rpm`` requests in any ``window_s`` interval.

    Args:
        rpm: Requests allowed per window.
        deadline_s: Longest a caller may wait for a slot before
            ``RateLimited`` is raised.
        window_s: Window length in seconds.
        clock: Monotonic clock, injectable for tests.
        sleep: Sleep function, injectable for tests.
    """

    def __init__(
        self,
        rpm: int,
        deadline_s: float = 300.0,
        window_s: float = 60.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if rpm < 1:
            raise ValueError(f"rpm must be positive, got {rpm}")
        self.rpm = rpm
        self.deadline_s = deadline_s
        self.window_s = window_s
        self._clock = clock
        self._sleep = sleep
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def _reserve(self) -> float:
        """Take a slot now (returns 0) or return the wait until one frees."""
        with self._lock:
            now = self._clock()
            while self._stamps and now - self._stamps[0] >= self.window_s:
                self._stamps.popleft()
            if len(self._stamps) < self.rpm:
                self._stamps.append(now)
                return 0.0
            return self._stamps[0] + self.window_s - now

    def acquire(self) -> float:
        """Block until a slot is free.

        Returns:
            Seconds spent waiting.

        Raises:
            RateLimited: If the cumulative wait would exceed the deadline.
        """
        waited = 0.0
        while True:
            wait = self._reserve()
            if wait <= 0:
                return waited
            if waited + wait > self.deadline_s:
                raise RateLimited(waited + wait, self.deadline_s)
            logger.debug("Rate limit reached (%d/min); waiting %.2fs", self.rpm, wait)
            self._sleep(wait)
            waited += wait
