"""Constant-bit-rate VoIP source (saturated On/Off) and the UE packet sink."""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import NS_PER_S, seconds
from .packet import DecodeError, IpUdpHeader, Packet, PdcpFraming, SeqTsHeader

APP_OVERHEAD = SeqTsHeader.SIZE


@dataclass
class OnOffConfig:
    rate_bps: int = 64_000
    app_packet_bytes: int = 600  # UDP payload, SeqTsHeader included
    start: int = 0
    stop: int = seconds(4.825)

    def __post_init__(self) -> None:
        if self.rate_bps <= 0:
            raise ValueError("rate_bps must be positive")
        if self.app_packet_bytes <= APP_OVERHEAD:
            raise ValueError(f"app_packet_bytes must exceed the {APP_OVERHEAD}-byte SeqTsHeader")

    @property
    def period(self) -> int:
        """Inter-packet gap in ns; must be a whole number of nanoseconds."""
        num = self.app_packet_bytes * 8 * NS_PER_S
        if num % self.rate_bps:
            raise ValueError(f"{self.app_packet_bytes} B at {self.rate_bps} b/s gives a non-integer ns period")
        return num // self.rate_bps


def emission_schedule(cfg: OnOffConfig) -> list[int]:
    if cfg.stop < cfg.start:
        return []
    p = cfg.period
    return list(range(cfg.start, cfg.stop + 1, p))


def make_app_packet(cfg: OnOffConfig, seq: int, now: int, *, run_seed: int = 0) -> Packet:
    p = Packet(cfg.app_packet_bytes - APP_OVERHEAD, filler_seed=filler_seed(run_seed, seq))
    p.add_header(SeqTsHeader(seq, now))
    return p


def filler_seed(run_seed: int, seq: int) -> int:
    return (run_seed << 32) | seq


@dataclass
class Delivery:
    time: int
    path: str  # "lte" or "wifi"
    seq: int
    ip_length: int
    latency: int
    bearer_id: int | None = None
    activate: int | None = None

    def as_dict(self) -> dict:
        return {
            "time_ns": self.time, "path": self.path, "seq": self.seq,
            "ip_length": self.ip_length, "latency_ns": self.latency,
            "bearer_id": self.bearer_id, "activate": self.activate,
        }


@dataclass
class PacketSink:
    """Strips headers in stack order and logs one Delivery per good packet."""

    deliveries: list[Delivery] = field(default_factory=list)
    corrupt: int = 0

    def receive(self, p: Packet, now: int, path: str, *, offload_header: type | None = None,
                framing: PdcpFraming | None = None) -> Delivery | None:
        ip_length = p.wire_length
        try:
            p.remove_header(IpUdpHeader)
            bearer_id = activate = None
            if offload_header is not None:
                h = p.remove_header(offload_header)
                bearer_id, activate = h.bearer_id, h.activate
                if framing is not None:
                    block = p.pop_block()
                    if len(block) != framing.length:
                        raise DecodeError(f"expected {framing.length}-byte PDCP framing, got {len(block)}")
            st = p.remove_header(SeqTsHeader)
        except DecodeError:
            self.corrupt += 1
            return None
        d = Delivery(now, path, st.seq, ip_length, now - st.ts, bearer_id, activate)
        self.deliveries.append(d)
        return d

