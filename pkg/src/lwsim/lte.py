"""eNB PDCP stage: activation modes, modulo-N split, offload tagging and the polled offload queue.

Also the abstract LTE delivery path from PDCP to the UE.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .engine import Simulator
from .links import Link, LinkModel
from .packet import LcidTag, LwaTag, LwipTag, Packet, PdcpFraming


class Route(enum.Enum):
    LTE = "lte"
    OFFLOAD = "offload"


@dataclass(frozen=True)
class ActivationMode:
    """lwa: 0 LTE only, 1 split (LTE + Wi-Fi), 2 Wi-Fi only.  lwip: 0 off, 1 Wi-Fi only."""

    lwa: int = 0
    lwip: int = 0

    def __post_init__(self) -> None:
        if self.lwa not in (0, 1, 2):
            raise ValueError(f"lwa mode must be 0, 1 or 2, got {self.lwa}")
        if self.lwip not in (0, 1):
            raise ValueError(f"lwip mode must be 0 or 1, got {self.lwip}")
        if self.lwa and self.lwip:
            raise ValueError("LWA and LWIP cannot be active in the same scenario")

    @property
    def offloads(self) -> bool:
        return bool(self.lwa or self.lwip)

    def offload_tag(self):
        return LwipTag(self.lwip) if self.lwip else LwaTag(self.lwa)


@dataclass
class SplitState:
    modulus: int = 2
    counter: int = 0

    def __post_init__(self) -> None:
        if self.modulus < 2:
            raise ValueError("split modulus must be >= 2")


@dataclass(frozen=True)
class BearerConfig:
    rbid: int = 1
    pdcp_rrc_overhead_bytes: int = 30

    def __post_init__(self) -> None:
        if not 0 <= self.rbid <= 0xFD:
            raise ValueError(f"rbid {self.rbid} out of range")
        if self.pdcp_rrc_overhead_bytes < 2:
            raise ValueError("PDCP/RRC overhead must cover the 2-byte LWAAP/LWIPEP header")

    @property
    def lcid(self) -> int:
        return self.rbid + 2

    @property
    def framing(self) -> PdcpFraming:
        return PdcpFraming(self.pdcp_rrc_overhead_bytes - 2)


def pdcp_submit(p: Packet, bearer: BearerConfig, mode: ActivationMode, state: SplitState) -> Route:
    """Routing decision for one PDCP SDU; advances the split counter exactly once."""
    count = state.counter
    state.counter += 1
    if mode.lwip or mode.lwa == 2:
        return Route.OFFLOAD
    if mode.lwa == 1:
        # remainder 0 stays on LTE
        return Route.LTE if count % state.modulus == 0 else Route.OFFLOAD
    return Route.LTE


def tag_for_offload(p: Packet, bearer: BearerConfig, mode: ActivationMode) -> Packet:
    p.add_tag(mode.offload_tag())
    p.add_tag(LcidTag(bearer.lcid))
    p.add_header(bearer.framing)
    return p


class OffloadQueue:
    """FIFO between PDCP and LWAAP/LWIPEP, drained by a poll every ``poll_interval``.

    Polls sit on the grid k * poll_interval and a packet leaves at the first
    grid point at or after its arrival.  By default a poll is only scheduled
    while something is waiting (an idle poll does nothing);
    ``free_running=True`` also ticks the whole grid up to ``stop``.  Either
    way the forwarding times are the same.
    """

    def __init__(self, sim: Simulator, poll_interval: int, forward: Callable[[Packet], None],
                 *, free_running: bool = False, stop: int | None = None) -> None:
        if poll_interval <= 0:
            raise ValueError("poll_interval must be positive")
        self.sim = sim
        self.poll_interval = poll_interval
        self.forward = forward
        self.free_running = free_running
        self._fifo: deque[tuple[Packet, int]] = deque()
        self._pending_poll = None
        self.enqueued = 0
        self.forwarded = 0
        self.polls = 0
        self.max_wait = 0
        if free_running:
            sim.every(poll_interval, self.poll, first=sim.now, until=stop)

    def __len__(self) -> int:
        return len(self._fifo)

    def enqueue(self, p: Packet) -> None:
        now = self.sim.now
        self._fifo.append((p, now))
        self.enqueued += 1
        if self._pending_poll is None:
            # in free-running mode this catches an arrival that lands on a
            # grid point whose tick has already run
            x = self.poll_interval
            self._pending_poll = self.sim.schedule(-(-now // x) * x, self.poll)

    def poll(self) -> list[Packet]:
        if self._pending_poll is not None:
            # a grid tick got here first; the armed poll has nothing left to do
            Simulator.cancel(self._pending_poll)
            self._pending_poll = None
        self.polls += 1
        now = self.sim.now
        batch = []
        while self._fifo:
            p, t = self._fifo.popleft()
            self.max_wait = max(self.max_wait, now - t)
            batch.append(p)
        for p in batch:
            self.forwarded += 1
            self.forward(p)
        return batch


class LteRadio:
    """PDCP -> UE over one abstract LTE link."""

    def __init__(self, sim: Simulator, model: LinkModel) -> None:
        self.link = Link(sim, model, "lte")
        self.delivered = 0

    def deliver(self, p: Packet, on_arrival: Callable[[Packet], None]) -> int:
        p.hops.append("LTE")

        def arrive(pkt: Packet) -> None:
            self.delivered += 1
            on_arrival(pkt)

        return self.link.send(p, arrive)


@dataclass
class EnbPdcp:
    """Per-bearer eNB PDCP entity wiring the routing decision to the two paths."""

    sim: Simulator
    bearer: BearerConfig
    mode: ActivationMode
    split: SplitState
    lte: LteRadio
    queue: OffloadQueue | None
    on_ue_arrival: Callable[[Packet], None]
    on_divert: Callable[[Packet], None] | None = None
    routed: dict = field(default_factory=lambda: {Route.LTE: 0, Route.OFFLOAD: 0})

    def submit(self, p: Packet) -> Route:
        route = pdcp_submit(p, self.bearer, self.mode, self.split)
        self.routed[route] += 1
        if route is Route.LTE:
            self.lte.deliver(p, self.on_ue_arrival)
        else:
            if self.queue is None:
                raise RuntimeError("offload route chosen but no offload queue configured")
            if self.on_divert is not None:
                self.on_divert(p)
            self.queue.enqueue(tag_for_offload(p, self.bearer, self.mode))
        return route
