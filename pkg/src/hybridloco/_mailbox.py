# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

"""Latest-value mailboxes and periodic planner threads for the free-running mode."""

from __future__ import annotations

import logging
import threading
import time
import typing as t

log = logging.getLogger(__name__)

T = t.TypeVar("T")


class CancelledError(Exception):
    pass


class CancellationToken:
    """Stop flag shared by every planner thread of one free-running episode."""

    def __init__(self) -> None:
        self._stop = threading.Event()

    @property
    def cancelled(self) -> bool:
        return self._stop.is_set()

    def cancel(self) -> None:
        if not self._stop.is_set():
            log.debug("Stopping planner threads")
        self._stop.set()

    def sleep(self, seconds: float) -> None:
        """Wait out the rest of a period, raising early once cancelled."""
        if self._stop.wait(max(seconds, 0.0)):
            raise CancelledError()


class Mailbox(t.Generic[T]):
    """Holds the most recent value published by a single writer.

    Readers never block the writer and always see a complete value, an older
    value is replaced rather than queued.
    """

    def __init__(
        self,
        name: str,
        initial: t.Optional[T] = None,
    ) -> None:
        self.name = name
        self._lock = threading.Lock()
        self._value = initial
        self._version = 0 if initial is None else 1

    def publish(self, value: T) -> int:
        with self._lock:
            self._value = value
            self._version += 1
            return self._version

    def latest(self) -> t.Optional[T]:
        with self._lock:
            return self._value


class PeriodicTask:
    """Runs func every period seconds on its own thread until cancelled.

    Exceptions raised by func are logged and handed to on_error, the task
    keeps running so a failed replan never stops the other loops.
    """

    def __init__(
        self,
        name: str,
        func: t.Callable[[], None],
        period: float,
        cancel_token: t.Optional[CancellationToken] = None,
        on_error: t.Optional[t.Callable[[str, Exception], None]] = None,
    ) -> None:
        self.name = name
        self._func = func
        self._period = period
        self._cancel_token = cancel_token or CancellationToken()
        self._on_error = on_error
        self._thread: t.Optional[threading.Thread] = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self._run, name=self.name, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._cancel_token.cancel()
        if self._thread:
            self._thread.join()
        self._thread = None

    def _run(self) -> None:
        log.debug("Starting task %s at %.1f Hz", self.name, 1.0 / self._period)
        next_run = time.perf_counter()
        try:
            while True:
                try:
                    self._func()
                except Exception as e:
                    log.exception("Task %s failed", self.name)
                    if self._on_error:
                        self._on_error(self.name, e)

                next_run += self._period
                self._cancel_token.sleep(next_run - time.perf_counter())

        except CancelledError:
            log.debug("Task %s cancelled", self.name)
