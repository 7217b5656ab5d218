from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .engine import NS_PER_S, Simulator
from .packet import Packet


@dataclass
class LinkModel:
    """Rate + one-way delay + per-frame framing bytes (framing is stripped at the receiver)."""

    rate_bps: float  # math.inf for an ideal link
    delay: int  # ns
    framing_overhead_bytes: int = 0

    def __post_init__(self) -> None:
        if self.rate_bps <= 0:
            raise ValueError("rate_bps must be positive")
        if self.delay < 0 or self.framing_overhead_bytes < 0:
            raise ValueError("delay and framing overhead must be non-negative")

    def frame_length(self, wire_length: int) -> int:
        return wire_length + self.framing_overhead_bytes

    def serialization_time(self, frame_length: int) -> int:
        if self.rate_bps == math.inf:
            return 0
        # ceil so that back-to-back frames never overlap on the integer clock
        return -(-frame_length * 8 * NS_PER_S // int(self.rate_bps))


class Link:
    """Point-to-point FIFO transmitter.

    A frame starts when the previous one has finished serialising and
    arrives ``delay`` after its last bit leaves.  ``on_transmit`` sees the
    packet and its frame length when it goes on the wire (pcap tap hook).
    """

    def __init__(self, sim: Simulator, model: LinkModel, name: str = "link") -> None:
        self.sim = sim
        self.model = model
        self.name = name
        self.busy_until = 0
        self.sent = 0
        self.on_transmit: Callable[[Packet, int, int], None] | None = None

    def send(self, p: Packet, deliver: Callable[[Packet], None]) -> int:
        """Queue ``p``; returns the scheduled arrival time."""
        now = self.sim.now
        start = max(now, self.busy_until)
        frame = self.model.frame_length(p.wire_length)
        end = start + self.model.serialization_time(frame)
        self.busy_until = end
        arrival = end + self.model.delay
        self.sent += 1
        if self.on_transmit is not None:
            self.on_transmit(p, frame, start)
        self.sim.schedule(arrival, deliver, p)
        return arrival
