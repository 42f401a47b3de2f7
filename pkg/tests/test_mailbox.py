# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

from __future__ import annotations

import threading
import typing as t

import pytest

from hybridloco._mailbox import CancellationToken, CancelledError, Mailbox, PeriodicTask


def test_mailbox_keeps_latest() -> None:
    box: Mailbox[int] = Mailbox("plan")
    assert box.latest() is None

    assert box.publish(1) == 1
    assert box.publish(2) == 2
    assert box.latest() == 2


def test_mailbox_initial_value() -> None:
    box = Mailbox("plan", initial="hold")
    assert box.latest() == "hold"
    assert box.publish("walk") == 2


def test_cancel_token_sleep() -> None:
    token = CancellationToken()
    token.sleep(0.0)
    token.sleep(-1.0)
    assert not token.cancelled

    token.cancel()
    token.cancel()
    assert token.cancelled
    with pytest.raises(CancelledError):
        token.sleep(1.0)


def test_periodic_task_runs_until_stopped() -> None:
    count = 0
    ran = threading.Event()

    def tick() -> None:
        nonlocal count
        count += 1
        if count >= 3:
            ran.set()

    task = PeriodicTask("ticker", tick, 0.001)
    task.start()
    try:
        assert ran.wait(timeout=5.0)
    finally:
        task.stop()

    stopped = count
    assert stopped >= 3
    ran.clear()
    assert not ran.wait(timeout=0.02)
    assert count == stopped


def test_periodic_task_reports_errors_and_continues() -> None:
    errors: t.List[t.Tuple[str, str]] = []
    calls = 0
    recovered = threading.Event()

    def flaky() -> None:
        nonlocal calls
        calls += 1
        if calls == 1:
            raise ValueError("solver broke")
        recovered.set()

    task = PeriodicTask("base", flaky, 0.001, on_error=lambda name, e: errors.append((name, str(e))))
    task.start()
    try:
        assert recovered.wait(timeout=5.0)
    finally:
        task.stop()

    assert errors == [("base", "solver broke")]
    assert calls >= 2


def test_shared_token_stops_every_task() -> None:
    token = CancellationToken()
    wheel_ran = threading.Event()
    base_ran = threading.Event()

    tasks = [
        PeriodicTask("wheel", wheel_ran.set, 0.001, cancel_token=token),
        PeriodicTask("base", base_ran.set, 0.001, cancel_token=token),
    ]
    for task in tasks:
        task.start()
    assert wheel_ran.wait(timeout=5.0)
    assert base_ran.wait(timeout=5.0)

    token.cancel()
    for task in tasks:
        task.stop()
    assert token.cancelled
