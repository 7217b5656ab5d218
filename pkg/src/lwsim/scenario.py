"""Assemble and run one scenario in a single process."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

from . import config as config_mod
from .aggregation import ReorderBuffer, UeAggregator
from .config import ScenarioConfig
from .engine import Simulator
from .links import LinkModel
from .lte import ActivationMode, BearerConfig, EnbPdcp, LteRadio, OffloadQueue, Route, SplitState
from .lwip import LwipPath, Tunnel, TunnelConfig, auth_key
from .packet import IpUdpHeader, LwaHeader, LwipHeader, Packet, ip_to_int
from .telemetry import (LINKTYPE_RAW, LINKTYPE_USER0, FlowMonitor, PcapWriter, report,
                        write_json)
from .traffic import Delivery, OnOffConfig, PacketSink, emission_schedule, make_app_packet
from .wlan import LwaPath

log = logging.getLogger(__name__)

REMOTE_HOST = "1.0.0.2"
UE_ADDR = "7.0.0.2"
APP_SRC_PORT = 49153
APP_DST_PORT = 5000
LWAAP_ADDR = "10.1.1.1"
STA_ADDR = "192.168.1.2"
SEGW_ADDR = "10.1.2.1"
XW_PORT = 8000  # same port at both ends of the Xw socket pair
TUNNEL_OUTER_PORT = 4500
TUNNEL_INNER_PORT = 5001

PCAP_TAPS = {"lte": LINKTYPE_RAW, "xw": LINKTYPE_RAW, "air": LINKTYPE_USER0}


def app_ip() -> IpUdpHeader:
    return IpUdpHeader(ip_to_int(REMOTE_HOST), ip_to_int(UE_ADDR), APP_SRC_PORT, APP_DST_PORT)


def xw_ip() -> IpUdpHeader:
    return IpUdpHeader(ip_to_int(LWAAP_ADDR), ip_to_int(STA_ADDR), XW_PORT, XW_PORT)


def tunnel_config(cfg: ScenarioConfig) -> TunnelConfig:
    return TunnelConfig(cfg.tunnel_local, cfg.tunnel_remote, TUNNEL_INNER_PORT, SEGW_ADDR, STA_ADDR,
                        TUNNEL_OUTER_PORT, auth_key(cfg.seed))


def link_models(cfg: ScenarioConfig) -> dict[str, LinkModel]:
    return {
        "lte": LinkModel(cfg.lte_rate, cfg.lte_delay),
        "xw": LinkModel(cfg.xw_rate, cfg.xw_delay),
        "wifi": LinkModel(cfg.wifi_rate, cfg.wifi_delay, cfg.wifi_framing),
    }


@dataclass
class RunResult:
    config: ScenarioConfig
    summary: dict
    deliveries: list[Delivery]
    stream: list[tuple[int, int]]
    pcaps: dict[str, bytes]
    flows_text: str
    hops: dict[int, list[str]] = field(default_factory=dict)

    def deliveries_on(self, path: str) -> list[Delivery]:
        return [d for d in self.deliveries if d.path == path]


class StationSide:
    """Wi-Fi station receive handling shared by the in-process and two-process modes."""

    def __init__(self, sim: Simulator, cfg: ScenarioConfig, monitor: FlowMonitor, sink: PacketSink,
                 aggregator: UeAggregator | None, bearer: BearerConfig) -> None:
        self.sim = sim
        self.cfg = cfg
        self.monitor = monitor
        self.sink = sink
        self.aggregator = aggregator
        self.bearer = bearer
        self.header_cls = LwipHeader if cfg.lwip else LwaHeader
        self.flow_key = (tunnel_config(cfg).inner_ip if cfg.lwip else xw_ip()).flow_key
        self.hops: dict[int, list[str]] = {}

    def record_tx(self, p: Packet) -> None:
        self.monitor.record_tx(self.flow_key, p.uid, p.wire_length, self.sim.now)

    def receive(self, p: Packet) -> None:
        now = self.sim.now
        self.monitor.record_rx(self.flow_key, p.uid, p.wire_length, now)
        self.hops[p.uid] = list(p.hops)
        d = self.sink.receive(p, now, "wifi", offload_header=self.header_cls, framing=self.bearer.framing)
        if d is not None and self.aggregator is not None:
            self.aggregator.ingest(d.seq, d)


def open_taps() -> tuple[dict[str, io.BytesIO], dict[str, PcapWriter]]:
    bufs = {name: io.BytesIO() for name in PCAP_TAPS}
    return bufs, {name: PcapWriter(bufs[name], lt) for name, lt in PCAP_TAPS.items()}


def attach_offload_taps(path, writers: dict[str, PcapWriter]) -> None:
    path.xw.on_transmit = lambda p, _n, t: writers["xw"].write(t, p.to_bytes())
    path.air.link.on_transmit = lambda p, _n, t: writers["air"].write(t, path.air.air_frame(p))


def build_offload_path(sim: Simulator, cfg: ScenarioConfig, bearer: BearerConfig,
                       station: StationSide, *, record_tx: bool = True,
                       xw_override: Callable[[Packet], None] | None = None):
    models = link_models(cfg)
    hook = station.record_tx if record_tx else None
    if cfg.lwip:
        tunnel = Tunnel(tunnel_config(cfg), bearer.rbid)
        return LwipPath(sim, bearer.framing, tunnel, models["xw"], models["wifi"], station.receive,
                        on_tunnel_entry=hook, xw_override=xw_override)
    return LwaPath(sim, bearer.framing, models["xw"], models["wifi"], xw_ip(), station.receive,
                   xw_override=xw_override, on_xw_datagram=hook)


class Scenario:
    """Remote host -> PDCP -> {LTE | offload path} -> UE, all on one event loop."""

    def __init__(self, cfg: ScenarioConfig, *, xw_override: Callable[[Packet], None] | None = None) -> None:
        self.cfg = cfg
        self.sim = sim = Simulator()
        self.mode = ActivationMode(cfg.lwa, cfg.lwip)
        self.bearer = BearerConfig(cfg.rbid, cfg.pdcp_overhead)
        self.traffic = OnOffConfig(cfg.rate_bps, cfg.packet_bytes, cfg.start, cfg.stop)
        self.monitor = FlowMonitor()
        self.sink = PacketSink()
        self.aggregator = UeAggregator(sim, ReorderBuffer(cfg.t_reordering))
        self._pcap_bufs, self.taps = open_taps()
        self.ue_key = app_ip().flow_key
        self.hops: dict[int, list[str]] = {}

        self.lte = LteRadio(sim, link_models(cfg)["lte"])
        self.lte.link.on_transmit = lambda p, _n, t: self.taps["lte"].write(t, p.to_bytes())

        self.station = StationSide(sim, cfg, self.monitor, self.sink, self.aggregator, self.bearer)
        self.station.hops = self.hops
        self.path = None
        self.queue = None
        if self.mode.offloads:
            self.path = build_offload_path(sim, cfg, self.bearer, self.station,
                                           record_tx=xw_override is None, xw_override=xw_override)
            attach_offload_taps(self.path, self.taps)
            x = cfg.poll_interval
            self.queue = OffloadQueue(sim, x, self.path.forward, free_running=cfg.free_running_poll,
                                      stop=-(-cfg.stop // x) * x)
        self.pdcp = EnbPdcp(sim, self.bearer, self.mode, SplitState(cfg.split_modulus), self.lte,
                            self.queue, self._ue_arrival, self._divert)
        self.emissions = emission_schedule(self.traffic)
        self.emitted = 0

    def _emit(self, seq: int) -> None:
        now = self.sim.now
        p = make_app_packet(self.traffic, seq, now, run_seed=self.cfg.seed)
        p.uid = seq
        ip = app_ip()
        p.add_header(replace(ip, payload_len=p.wire_length))
        self.monitor.record_tx(self.ue_key, p.uid, p.wire_length, now)
        self.emitted += 1
        p.hops.append("PDCP")
        self.pdcp.submit(p)
        if seq + 1 < len(self.emissions):
            self.sim.schedule(self.emissions[seq + 1], self._emit, seq + 1)

    def _divert(self, p: Packet) -> None:
        self.monitor.record_divert(self.ue_key, p.uid, p.wire_length)

    def _ue_arrival(self, p: Packet) -> None:
        now = self.sim.now
        p.hops.append("UE")
        self.hops[p.uid] = list(p.hops)
        self.monitor.record_rx(self.ue_key, p.uid, p.wire_length, now)
        d = self.sink.receive(p, now, "lte")
        if d is not None:
            self.aggregator.ingest(d.seq, d)

    def run(self) -> RunResult:
        if self.emissions:
            self.sim.schedule(self.emissions[0], self._emit, 0)
        self.sim.run()
        self.aggregator.flush()
        for w in self.taps.values():
            w.close()
        return self._result()

    def _result(self) -> RunResult:
        flows = self.monitor.records()
        b = self.aggregator.buffer
        summary = {
            "scenario": self.cfg.scenario,
            "mode": {"lwa": self.mode.lwa, "lwip": self.mode.lwip},
            "split_modulus": self.cfg.split_modulus,
            "source": {"emitted": self.emitted, "app_packet_bytes": self.traffic.app_packet_bytes,
                       "period_ns": self.traffic.period},
            "pdcp": {"routed_lte": self.pdcp.routed[Route.LTE],
                     "routed_offload": self.pdcp.routed[Route.OFFLOAD]},
            "offload_queue": None if self.queue is None else {
                "enqueued": self.queue.enqueued, "forwarded": self.queue.forwarded,
                "polls": self.queue.polls, "max_wait_ns": self.queue.max_wait},
            "deliveries": {
                "lte": sum(1 for d in self.sink.deliveries if d.path == "lte"),
                "wifi": sum(1 for d in self.sink.deliveries if d.path == "wifi"),
                "corrupt": self.sink.corrupt,
                "ip_lengths": {path: sorted({d.ip_length for d in self.sink.deliveries if d.path == path})
                               for path in ("lte", "wifi")},
            },
            "tunnel": None if not self.mode.lwip else {
                "auth_failures": self.path.tunnel.auth_failures, "ignored": self.path.tunnel.ignored},
            "aggregation": {**b.stats.as_dict(), "lost_seqs": list(b.lost_seqs),
                            "next_expected": b.next_expected},
            "flows": flows,
            "pcap": {name: {"records": w.records, "frame_lengths": sorted(set(w.lengths))}
                     for name, w in self.taps.items()},
        }
        return RunResult(self.cfg, summary, list(self.sink.deliveries), list(self.aggregator.stream),
                         {k: v.getvalue() for k, v in self._pcap_bufs.items()}, report(flows),
                         dict(self.hops))


def write_deliveries(path: Path, deliveries: list[Delivery]) -> None:
    cols = ["time_ns", "path", "seq", "ip_length", "latency_ns", "bearer_id", "activate"]
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for d in deliveries:
            w.writerow(d.as_dict())


def write_outputs(result: RunResult, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "summary.json", result.summary)
    (out / "flows.txt").write_text(result.flows_text)
    write_deliveries(out / "deliveries.csv", result.deliveries)
    with open(out / "ue_stream.csv", "w") as f:
        f.write("time_ns,seq\n")
        f.writelines(f"{t},{s}\n" for t, s in result.stream)
    for name, data in result.pcaps.items():
        (out / f"{name}.pcap").write_bytes(data)
    config_mod.dump_file(replace(result.config, out_dir=None), out / "config.json")
    return out


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    result = Scenario(cfg).run()
    if cfg.out_dir:
        write_outputs(result, cfg.out_dir)
        log.info("wrote outputs to %s", cfg.out_dir)
    return result
