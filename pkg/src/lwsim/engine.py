"""Deterministic discrete-event scheduler with an integer nanosecond clock."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000


class CausalityError(ValueError):
    """Raised when an event is scheduled before the current clock."""


def seconds(value: float) -> int:
    """Convert seconds to integer nanoseconds (round to nearest)."""
    return round(value * NS_PER_S)


def parse_time(text: str | float | int) -> int:
    """Parse '5ms', '100us', '4.825s', '250ns' or bare seconds into nanoseconds."""
    if isinstance(text, (int, float)):
        return seconds(text)
    s = text.strip().lower()
    for suffix, scale in (("ns", 1), ("us", NS_PER_US), ("ms", NS_PER_MS), ("s", NS_PER_S)):
        if s.endswith(suffix):
            return round(float(s[: -len(suffix)]) * scale)
    return seconds(float(s))


@dataclass(order=True)
class Event:
    fire_at: int
    seq: int
    action: Callable[..., Any] = field(compare=False)
    args: tuple = field(compare=False, default=())
    cancelled: bool = field(compare=False, default=False)


class Simulator:
    """Single-threaded event loop.

    Events with the same timestamp run in the order they were scheduled.
    """

    def __init__(self) -> None:
        self._now = 0
        self._queue: list[Event] = []
        self._counter = itertools.count()
        self.executed = 0

    @property
    def now(self) -> int:
        return self._now

    def schedule(self, at: int, action: Callable[..., Any], *args: Any) -> Event:
        if at < self._now:
            raise CausalityError(f"cannot schedule at {at} ns, clock is already at {self._now} ns")
        ev = Event(int(at), next(self._counter), action, args)
        heapq.heappush(self._queue, ev)
        return ev

    def schedule_in(self, delay: int, action: Callable[..., Any], *args: Any) -> Event:
        if delay < 0:
            raise CausalityError(f"negative delay {delay} ns")
        return self.schedule(self._now + delay, action, *args)

    @staticmethod
    def cancel(event: Event) -> None:
        event.cancelled = True

    def every(self, interval: int, action: Callable[..., Any], *, first: int | None = None,
              until: int | None = None) -> None:
        """Run ``action`` at ``first``, ``first + interval``, ... (default first = now + interval)."""
        if interval <= 0:
            raise ValueError("interval must be positive")
        start = self._now + interval if first is None else first

        def tick() -> None:
            action()
            nxt = self._now + interval
            if until is None or nxt <= until:
                self.schedule(nxt, tick)

        if until is None or start <= until:
            self.schedule(start, tick)

    def pending(self) -> int:
        return sum(1 for ev in self._queue if not ev.cancelled)

    def step(self) -> bool:
        while self._queue:
            ev = heapq.heappop(self._queue)
            if ev.cancelled:
                continue
            self._now = ev.fire_at
            ev.action(*ev.args)
            self.executed += 1
            return True
        return False

    def run_until(self, end: int) -> None:
        """Execute every event with ``fire_at <= end``; the clock finishes at ``end``."""
        q = self._queue
        while q and q[0].fire_at <= end:
            ev = heapq.heappop(q)
            if ev.cancelled:
                continue
            self._now = ev.fire_at
            ev.action(*ev.args)
            self.executed += 1
        if end > self._now:
            self._now = end

    def run(self) -> None:
        """Drain the queue completely."""
        while self.step():
            pass
