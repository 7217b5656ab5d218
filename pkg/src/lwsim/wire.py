"""Two-process mode: the eNB process ships offloaded PDUs to the station process as UDP datagrams.

Frame layouts (one PDU per datagram, big-endian):

    LWA   LwaHeader(2) | SeqTsHeader(12) | payload filler
    LWIP  IpUdpHeader(28, tunnel addressing) | LwipHeader(2) | SeqTsHeader(12) | payload filler
    end   0xFF 0xFF

The PDCP framing block is not sent; both sides know its size from the
shared configuration and the station re-creates it.  The station process
hosts the Xw link, the AP and the air interface, and injects each frame
into its own event loop at the packet's emission time.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path

from .aggregation import ReorderBuffer, UeAggregator
from .config import ScenarioConfig, parse_peer
from .engine import NS_PER_S, Simulator
from .lte import BearerConfig
from .packet import DecodeError, IpUdpHeader, LwaHeader, LwipHeader, Packet, SeqTsHeader, filler_bytes
from .scenario import (RunResult, Scenario, StationSide, attach_offload_taps, build_offload_path,
                       open_taps, write_outputs, xw_ip)
from .telemetry import FlowMonitor, report
from .traffic import PacketSink, filler_seed

log = logging.getLogger(__name__)

SENTINEL = b"\xff\xff"
MIN_FRAME = LwaHeader.SIZE + SeqTsHeader.SIZE
SEND_ATTEMPTS = 3


@dataclass
class WireFrame:
    header: LwaHeader  # LwipHeader for LWIP frames
    seqts: SeqTsHeader
    payload: bytes
    tunnel_ip: IpUdpHeader | None = None

    def encode(self) -> bytes:
        front = b"" if self.tunnel_ip is None else self.tunnel_ip.encode()
        return front + self.header.encode() + self.seqts.encode() + self.payload

    @classmethod
    def decode(cls, data: bytes) -> "WireFrame":
        tunnel_ip = None
        hdr_cls = LwaHeader
        if data[:1] == b"\x45":
            tunnel_ip, data = IpUdpHeader.decode(data)
            hdr_cls = LwipHeader
        if len(data) < MIN_FRAME:
            raise DecodeError(f"frame too short: {len(data)} bytes after tunnel header, need {MIN_FRAME}")
        header, rest = hdr_cls.decode(data)
        seqts, payload = SeqTsHeader.decode(rest)
        return cls(header, seqts, payload, tunnel_ip)


def is_sentinel(data: bytes) -> bool:
    return data == SENTINEL


def frame_from_packet(p: Packet) -> WireFrame:
    """Build the frame for an LWA Xw datagram or a sealed (inner) LWIP packet."""
    blocks = p.headers
    ip, _ = IpUdpHeader.decode(blocks[-1])
    adapt = blocks[-2]
    seqts, _ = SeqTsHeader.decode(blocks[-4])
    payload = p.payload_bytes()
    if p.trailer:
        h, _ = LwipHeader.decode(adapt)
        return WireFrame(h, seqts, payload, ip)
    h, _ = LwaHeader.decode(adapt)
    return WireFrame(h, seqts, payload)


def packet_from_frame(frame: WireFrame, bearer: BearerConfig, run_seed: int) -> Packet:
    """Inverse of frame_from_packet: rebuild the datagram the in-process path would carry."""
    seq = frame.seqts.seq
    p = Packet(len(frame.payload), filler_seed(run_seed, seq), uid=seq)
    p.add_header(frame.seqts)
    p.add_header(bearer.framing)
    p.add_header(frame.header)
    if frame.tunnel_ip is not None:
        p.trailer = frame.payload[-4:]
        p.add_header(frame.tunnel_ip)
    else:
        p.add_header(replace(xw_ip(), payload_len=p.wire_length))
    return p


class WireSender:
    """eNB side: replaces the in-memory Xw hand-off with a UDP socket."""

    def __init__(self, peer: tuple[str, int], *, pacing: str = "fast", pacing_factor: float = 1.0,
                 sim: Simulator | None = None) -> None:
        self.sim = sim
        self.peer = peer
        self.pacing = pacing
        self.pacing_factor = pacing_factor
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sent_seqs: list[int] = []
        self.wire_drops = 0
        self._wall0: float | None = None

    def _pace(self) -> None:
        if self.pacing != "real":
            return
        if self._wall0 is None:
            self._wall0 = time.monotonic() - self.sim.now / NS_PER_S * self.pacing_factor
        target = self._wall0 + self.sim.now / NS_PER_S * self.pacing_factor
        delay = target - time.monotonic()
        if delay > 0:
            time.sleep(delay)

    def _sendto(self, data: bytes) -> bool:
        for attempt in range(SEND_ATTEMPTS):
            try:
                self.sock.sendto(data, self.peer)
                return True
            except OSError as e:
                log.warning("send attempt %d to %s failed: %s", attempt + 1, self.peer, e)
        return False

    def send_packet(self, p: Packet) -> None:
        frame = frame_from_packet(p)
        self._pace()
        if self._sendto(frame.encode()):
            self.sent_seqs.append(frame.seqts.seq)
        else:
            self.wire_drops += 1

    def close(self) -> None:
        self._sendto(SENTINEL)
        self.sock.close()


def run_enb(cfg: ScenarioConfig) -> RunResult:
    sender = WireSender(parse_peer(cfg.peer), pacing=cfg.pacing, pacing_factor=cfg.pacing_factor)
    scen = Scenario(cfg, xw_override=sender.send_packet)
    sender.sim = scen.sim
    try:
        result = scen.run()
    finally:
        sender.close()
    result.summary["role"] = "enb"
    result.summary["wire"] = {"sent": len(sender.sent_seqs), "sent_seqs": sender.sent_seqs,
                              "wire_drops": sender.wire_drops}
    if cfg.out_dir:
        write_outputs(result, cfg.out_dir)
    return result


class WireReceiver:
    """Socket thread feeding raw datagrams to the event-loop thread through a queue."""

    def __init__(self, port: int, host: str = "127.0.0.1") -> None:
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.bind((host, port))
        self.sock.settimeout(0.05)
        self.address = self.sock.getsockname()
        self.inbox: queue.Queue[bytes] = queue.Queue()
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._loop, name="wire-rx", daemon=True)

    def start(self) -> None:
        self._thread.start()

    def _loop(self) -> None:
        while not self._stop.is_set():
            try:
                data, _ = self.sock.recvfrom(65535)
            except socket.timeout:
                continue
            except OSError:
                break
            self.inbox.put(data)

    def close(self) -> None:
        self._stop.set()
        self._thread.join()
        self.sock.close()


class StationProcess:
    """Station side of the two-process mode."""

    def __init__(self, cfg: ScenarioConfig, receiver: WireReceiver) -> None:
        self.cfg = cfg
        self.receiver = receiver
        self.sim = Simulator()
        self.bearer = BearerConfig(cfg.rbid, cfg.pdcp_overhead)
        self.monitor = FlowMonitor()
        self.sink = PacketSink()
        # the LTE half of a split stream never reaches this process, so only a
        # full offload stream can be put back in order here
        self.aggregator = None
        if cfg.lwa == 2 or cfg.lwip == 1:
            self.aggregator = UeAggregator(self.sim, ReorderBuffer(cfg.t_reordering))
        self.station = StationSide(self.sim, cfg, self.monitor, self.sink, self.aggregator, self.bearer)
        self.path = build_offload_path(self.sim, cfg, self.bearer, self.station, record_tx=False)
        self._pcap_bufs, self.taps = open_taps()
        attach_offload_taps(self.path, self.taps)
        self.frames = 0
        self.corrupt_frames = 0
        self.sentinel = False
        self.received_seqs: list[int] = []

    def handle(self, data: bytes) -> None:
        try:
            frame = WireFrame.decode(data)
            if (frame.tunnel_ip is None) != (self.cfg.lwip == 0):
                raise DecodeError("frame kind does not match the configured scheme")
            p = packet_from_frame(frame, self.bearer, self.cfg.seed)
            expect = filler_bytes(p.filler_seed, p.payload_len)
            body = frame.payload[:-4] if frame.tunnel_ip is not None else frame.payload
            if body != expect[: len(body)]:
                raise DecodeError(f"payload of seq {frame.seqts.seq} fails the seeded filler check")
        except DecodeError as e:
            log.warning("dropping malformed datagram (%d bytes): %s", len(data), e)
            self.corrupt_frames += 1
            return
        self.frames += 1
        self.received_seqs.append(frame.seqts.seq)
        at = max(self.sim.now, frame.seqts.ts)
        self.sim.run_until(at)
        self.sim.schedule(at, self._inject, p)

    def _inject(self, p: Packet) -> None:
        self.station.record_tx(p)
        if self.cfg.lwip:
            self.path.tunnel.wrap(p)
        p.hops.append("Xw")
        self.path.xw.send(p, self.path._at_ap)

    def serve(self) -> None:
        idle = self.cfg.idle_timeout / NS_PER_S
        while True:
            try:
                data = self.receiver.inbox.get(timeout=idle)
            except queue.Empty:
                log.warning("no datagram for %.1f s and no end-of-run marker; shutting down", idle)
                break
            if is_sentinel(data):
                self.sentinel = True
                break
            self.handle(data)
        self.sim.run()
        if self.aggregator is not None:
            self.aggregator.flush()
        for w in self.taps.values():
            w.close()

    def result(self) -> RunResult:
        flows = self.monitor.records()
        summary = {
            "role": "sta",
            "scenario": self.cfg.scenario,
            "mode": {"lwa": self.cfg.lwa, "lwip": self.cfg.lwip},
            "wire": {"frames": self.frames, "corrupt_frames": self.corrupt_frames,
                     "sentinel": self.sentinel, "received_seqs": self.received_seqs},
            "deliveries": {
                "wifi": len(self.sink.deliveries), "corrupt": self.sink.corrupt,
                "ip_lengths": {"wifi": sorted({d.ip_length for d in self.sink.deliveries})},
            },
            "aggregation": None if self.aggregator is None else self.aggregator.buffer.stats.as_dict(),
            "flows": flows,
            "pcap": {name: {"records": w.records, "frame_lengths": sorted(set(w.lengths))}
                     for name, w in self.taps.items()},
        }
        stream = [] if self.aggregator is None else list(self.aggregator.stream)
        return RunResult(self.cfg, summary, list(self.sink.deliveries), stream,
                         {k: v.getvalue() for k, v in self._pcap_bufs.items()}, report(flows),
                         dict(self.station.hops))


def run_sta(cfg: ScenarioConfig, *, announce=print, host: str = "127.0.0.1") -> RunResult:
    receiver = WireReceiver(cfg.listen, host)
    receiver.start()
    announce(f"listening on {receiver.address[0]}:{receiver.address[1]}")
    try:
        proc = StationProcess(cfg, receiver)
        proc.serve()
    finally:
        receiver.close()
    result = proc.result()
    if cfg.out_dir:
        write_outputs(result, Path(cfg.out_dir))
    return result
