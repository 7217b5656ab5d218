"""LWA offload path: LWAAP encapsulation, Xw-U transfer, WT relay, Wi-Fi air interface."""

from __future__ import annotations

from typing import Callable

from .engine import Simulator
from .links import Link, LinkModel
from .packet import IpUdpHeader, LcidTag, LwaHeader, LwaTag, Packet, PdcpFraming, rbid_from_lcid


class PipelineError(RuntimeError):
    """A packet reached a stage without the state an earlier stage must have attached."""


def _read_tags(p: Packet, status_tag: type) -> tuple[int, int]:
    status = p.peek_tag(status_tag)
    lcid = p.peek_tag(LcidTag)
    if status is None or lcid is None:
        raise PipelineError(f"packet {p.uid} reached encapsulation without {status_tag.__name__}/LcidTag")
    return status.activate, rbid_from_lcid(lcid.lcid)


def lwaap_encapsulate(p: Packet) -> Packet:
    activate, rbid = _read_tags(p, LwaTag)
    p.add_header(LwaHeader(activate, rbid))
    return p


def readdress(p: Packet, header_cls: type, framing: PdcpFraming, ip: IpUdpHeader) -> Packet:
    """Swap the UE-addressed IP/UDP header inside an LWAAP/LWIPEP PDU for ``ip``.

    The PDU (adaptation header + PDCP framing) becomes the UDP payload of a
    datagram on the offload network; wire length is unchanged.
    """
    h = p.remove_header(header_cls)
    block = p.pop_block()
    if len(block) != framing.length:
        raise PipelineError(f"expected {framing.length}-byte PDCP framing, found {len(block)}")
    p.remove_header(IpUdpHeader)
    p.add_block(block)
    p.add_header(h)
    p.add_header(IpUdpHeader(ip.src, ip.dst, ip.src_port, ip.dst_port, p.wire_length))
    return p


class WifiAir:
    """AP -> station air interface; framing bytes exist only on the air."""

    def __init__(self, sim: Simulator, model: LinkModel) -> None:
        self.link = Link(sim, model, "air")
        self.framing = bytes(model.framing_overhead_bytes)

    def air_frame(self, p: Packet) -> bytes:
        return self.framing + p.to_bytes()

    def transmit(self, p: Packet, on_station: Callable[[Packet], None]) -> int:
        return self.link.send(p, on_station)


class LwaPath:
    """LWAAP node -> Xw-U -> WT -> AP -> air -> station for one bearer.

    ``xw_override`` replaces the in-memory Xw link (two-process mode).
    """

    def __init__(self, sim: Simulator, framing: PdcpFraming, xw: LinkModel, wifi: LinkModel,
                 xw_ip: IpUdpHeader, on_station: Callable[[Packet], None],
                 xw_override: Callable[[Packet], None] | None = None,
                 on_xw_datagram: Callable[[Packet], None] | None = None) -> None:
        self.sim = sim
        self.framing = framing
        self.xw = Link(sim, xw, "xw")
        self.air = WifiAir(sim, wifi)
        self.xw_ip = xw_ip
        self.on_station = on_station
        self.xw_override = xw_override
        self.on_xw_datagram = on_xw_datagram

    def forward(self, p: Packet) -> None:
        """Offload-queue handler."""
        p.hops.append("LWAAP")
        lwaap_encapsulate(p)
        readdress(p, LwaHeader, self.framing, self.xw_ip)
        if self.on_xw_datagram is not None:
            self.on_xw_datagram(p)
        if self.xw_override is not None:
            self.xw_override(p)
            return
        p.hops.append("Xw")
        self.xw.send(p, self._at_ap)

    def _at_ap(self, p: Packet) -> None:
        # WT is a zero-cost relay in front of the AP
        p.hops.append("AP")
        p.hops.append("air")
        self.air.transmit(p, self._at_station)

    def _at_station(self, p: Packet) -> None:
        p.hops.append("station")
        self.on_station(p)

