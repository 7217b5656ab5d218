"""Per-flow statistics (FlowMonitor style) and classic pcap trace output."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO

from .engine import NS_PER_S

FlowKey = tuple[str, str, int, int]  # src, dst, sport, dport; protocol is always UDP

LINKTYPE_RAW = 101
LINKTYPE_USER0 = 147  # air frames: opaque Wi-Fi framing followed by the IP datagram


class ThroughputError(ValueError):
    pass


@dataclass
class FlowStats:
    flow_id: int
    key: FlowKey
    tx_packets: int = 0
    rx_packets: int = 0
    tx_bytes: int = 0
    rx_bytes: int = 0
    diverted_packets: int = 0
    time_first_tx: int | None = None
    time_last_tx: int | None = None
    time_first_rx: int | None = None
    time_last_rx: int | None = None
    delays: list[int] = field(default_factory=list)

    @property
    def lost_packets(self) -> int:
        return self.tx_packets - self.rx_packets

    def as_dict(self) -> dict:
        src, dst, sport, dport = self.key
        d = self.delays
        try:
            thr = throughput_kbps(self)
        except ThroughputError:
            thr = None
        return {
            "flow_id": self.flow_id, "src": src, "dst": dst, "src_port": sport, "dst_port": dport,
            "protocol": 17,
            "tx_packets": self.tx_packets, "rx_packets": self.rx_packets,
            "tx_bytes": self.tx_bytes, "rx_bytes": self.rx_bytes,
            "diverted_packets": self.diverted_packets, "lost_packets": self.lost_packets,
            "time_first_tx_ns": self.time_first_tx, "time_last_rx_ns": self.time_last_rx,
            "throughput_kbps": thr,
            "delay_mean_ns": sum(d) / len(d) if d else None,
            "delay_min_ns": min(d) if d else None,
            "delay_max_ns": max(d) if d else None,
        }


def throughput_kbps(s: FlowStats) -> float:
    """rx_bytes * 8 / (last rx - first tx in seconds) / 1024."""
    if s.time_first_tx is None or s.time_last_rx is None:
        raise ThroughputError(f"flow {s.flow_id} has no tx/rx timestamps")
    dt = (s.time_last_rx - s.time_first_tx) / NS_PER_S
    if dt <= 0:
        raise ThroughputError(f"flow {s.flow_id}: zero observation interval")
    return s.rx_bytes * 8.0 / dt / 1024


class FlowMonitor:
    def __init__(self) -> None:
        self.flows: dict[FlowKey, FlowStats] = {}
        self._tx_time: dict[tuple[FlowKey, int], int] = {}

    def _flow(self, key: FlowKey) -> FlowStats:
        if key not in self.flows:
            self.flows[key] = FlowStats(len(self.flows) + 1, key)
        return self.flows[key]

    def record_tx(self, key: FlowKey, uid: int, length: int, now: int) -> None:
        s = self._flow(key)
        s.tx_packets += 1
        s.tx_bytes += length
        if s.time_first_tx is None:
            s.time_first_tx = now
        s.time_last_tx = now
        self._tx_time[key, uid] = now

    def record_rx(self, key: FlowKey, uid: int, length: int, now: int) -> None:
        s = self._flow(key)
        s.rx_packets += 1
        s.rx_bytes += length
        if s.time_first_rx is None:
            s.time_first_rx = now
        s.time_last_rx = now
        sent = self._tx_time.pop((key, uid), None)
        if sent is not None:
            s.delays.append(now - sent)

    def record_divert(self, key: FlowKey, uid: int, length: int) -> None:
        """Packet left this flow at PDCP (re-addressed onto the offload path); not a loss."""
        s = self._flow(key)
        s.tx_packets -= 1
        s.tx_bytes -= length
        s.diverted_packets += 1
        self._tx_time.pop((key, uid), None)

    def records(self) -> list[dict]:
        return [s.as_dict() for s in sorted(self.flows.values(), key=lambda s: s.flow_id)]


def report(flows: list[dict]) -> str:
    lines = []
    for f in flows:
        thr = "n/a" if f["throughput_kbps"] is None else f"{f['throughput_kbps']:.4f} Kbps"
        delay = "n/a" if f["delay_mean_ns"] is None else f"{f['delay_mean_ns'] / 1e6:.4f} ms"
        lines += [
            f"Flow {f['flow_id']} ({f['src']}:{f['src_port']} -> {f['dst']}:{f['dst_port']})",
            f"  Tx Packets: {f['tx_packets']}  Rx Packets: {f['rx_packets']}"
            f"  Diverted: {f['diverted_packets']}  Lost: {f['lost_packets']}",
            f"  Tx Bytes: {f['tx_bytes']}",
            f"  Rx Bytes: {f['rx_bytes']}",
            f"  Throughput: {thr}",
            f"  Mean delay: {delay}",
        ]
    return "\n".join(lines) + ("\n" if lines else "")


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


class PcapWriter:
    """Classic pcap (magic a1b2c3d4, v2.4, microsecond stamps), written big-endian."""

    GLOBAL = struct.Struct(">IHHiIII")
    RECORD = struct.Struct(">IIII")

    def __init__(self, out: str | Path | BinaryIO, linktype: int = LINKTYPE_RAW,
                 snaplen: int = 65535) -> None:
        if isinstance(out, (str, Path)):
            self._f = open(out, "wb")
            self._owned = True
        else:
            self._f = out
            self._owned = False
        self.snaplen = snaplen
        self.records = 0
        self.lengths: list[int] = []
        self._last_ts = 0
        self._f.write(self.GLOBAL.pack(0xA1B2C3D4, 2, 4, 0, 0, snaplen, linktype))

    def write(self, ts_ns: int, frame: bytes) -> None:
        if ts_ns < self._last_ts:
            raise ValueError(f"pcap record at {ts_ns} ns precedes previous record at {self._last_ts} ns")
        self._last_ts = ts_ns
        sec, ns = divmod(ts_ns, NS_PER_S)
        cap = frame[: self.snaplen]
        self._f.write(self.RECORD.pack(sec, ns // 1000, len(cap), len(frame)))
        self._f.write(cap)
        self.records += 1
        self.lengths.append(len(frame))

    def close(self) -> None:
        self._f.flush()
        if self._owned:
            self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc) -> None:
        self.close()
