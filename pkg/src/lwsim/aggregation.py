"""In-sequence aggregation of the LTE and Wi-Fi delivery streams at the UE."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from .engine import Event, Simulator


@dataclass
class ReorderStats:
    delivered: int = 0
    lost: int = 0
    duplicates: int = 0
    holds: int = 0
    held_max: int = 0
    timeouts: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class ReorderBuffer:
    """Reordering window keyed by sequence number.

    The timer deadline is the arrival time of the oldest held packet plus
    ``t_reordering``.  When it expires the window jumps to the smallest held
    sequence number (the skipped ones are recorded as lost) and releases
    everything consecutive from there, repeating while any held packet has
    outlived its deadline.
    """

    def __init__(self, t_reordering: int, next_expected: int = 0) -> None:
        if t_reordering <= 0:
            raise ValueError("t_reordering must be positive")
        self.t_reordering = t_reordering
        self.next_expected = next_expected
        self.held: dict[int, tuple[Any, int]] = {}
        self.lost_seqs: list[int] = []
        self.stats = ReorderStats()

    @property
    def timer_deadline(self) -> int | None:
        if not self.held:
            return None
        return min(t for _, t in self.held.values()) + self.t_reordering

    def _release(self) -> list[tuple[int, Any]]:
        out = []
        while self.next_expected in self.held:
            item, _ = self.held.pop(self.next_expected)
            out.append((self.next_expected, item))
            self.next_expected += 1
        self.stats.delivered += len(out)
        return out

    def ingest(self, seq: int, item: Any, now: int) -> list[tuple[int, Any]]:
        if seq < self.next_expected or seq in self.held:
            self.stats.duplicates += 1
            return []
        self.held[seq] = (item, now)
        if seq != self.next_expected:
            self.stats.holds += 1
            self.stats.held_max = max(self.stats.held_max, len(self.held))
            return []
        return self._release()

    def timeout(self, now: int) -> list[tuple[int, Any]]:
        out: list[tuple[int, Any]] = []
        fired = False
        while self.held and self.timer_deadline <= now:
            fired = True
            first = min(self.held)
            self.lost_seqs.extend(range(self.next_expected, first))
            self.stats.lost += first - self.next_expected
            self.next_expected = first
            out.extend(self._release())
        if fired:
            self.stats.timeouts += 1
        return out


@dataclass
class UeAggregator:
    """Binds a ReorderBuffer to the event loop and collects the in-order stream."""

    sim: Simulator
    buffer: ReorderBuffer
    on_deliver: Callable[[int, Any], None] | None = None
    stream: list[tuple[int, int]] = field(default_factory=list)  # (time, seq)
    _timer: Event | None = None

    def ingest(self, seq: int, item: Any) -> None:
        self._emit(self.buffer.ingest(seq, item, self.sim.now))
        self._rearm()

    def _expire(self) -> None:
        self._timer = None
        self._emit(self.buffer.timeout(self.sim.now))
        self._rearm()

    def _emit(self, released: list[tuple[int, Any]]) -> None:
        for seq, item in released:
            self.stream.append((self.sim.now, seq))
            if self.on_deliver is not None:
                self.on_deliver(seq, item)

    def _rearm(self) -> None:
        deadline = self.buffer.timer_deadline
        if self._timer is not None:
            if deadline == self._timer.fire_at:
                return
            Simulator.cancel(self._timer)
            self._timer = None
        if deadline is not None:
            self._timer = self.sim.schedule(max(deadline, self.sim.now), self._expire)

    def flush(self) -> None:
        """End of run: give up on every outstanding gap."""
        if self._timer is not None:
            Simulator.cancel(self._timer)
            self._timer = None
        b = self.buffer
        while b.held:
            first = min(b.held)
            b.lost_seqs.extend(range(b.next_expected, first))
            b.stats.lost += first - b.next_expected
            b.next_expected = first
            self._emit(b._release())
