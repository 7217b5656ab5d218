"""LWIP offload path: LWIPEP encapsulation and the SeGW -> station IP/UDP tunnel.

The tunnel authenticates but does not encrypt.  A 4-byte keyed tag
(truncated HMAC-SHA256 over the inner datagram) overwrites the last bytes
of the payload filler, so it costs nothing on the wire.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass, replace
from typing import Callable

from .config import ConfigError
from .engine import Simulator
from .links import Link, LinkModel
from .packet import (DecodeError, IpUdpHeader, LwipHeader, LwipTag, Packet, PdcpFraming,
                     ip_to_int)
from .wlan import PipelineError, WifiAir, _read_tags, readdress

AUTH_TAG_BYTES = 4


def auth_key(seed: int) -> bytes:
    return hashlib.sha256(f"lwip-tunnel:{seed}".encode()).digest()


def lwipep_encapsulate(p: Packet) -> Packet:
    activate, rbid = _read_tags(p, LwipTag)
    if activate != 1:
        raise PipelineError(f"LWIPEP received packet {p.uid} with lwip activation {activate}")
    p.add_header(LwipHeader(activate, rbid))
    return p


@dataclass
class TunnelConfig:
    inner_src: str = "11.0.0.1"
    inner_dst: str = "11.0.0.254"
    inner_port: int = 5001
    outer_src: str = "10.1.2.1"  # SeGW on the Xw-side network
    outer_dst: str = "192.168.1.2"  # Wi-Fi station
    outer_port: int = 4500
    key: bytes = b""

    OVERHEAD = IpUdpHeader.SIZE

    @property
    def inner_ip(self) -> IpUdpHeader:
        return IpUdpHeader(ip_to_int(self.inner_src), ip_to_int(self.inner_dst),
                           self.inner_port, self.inner_port)

    @property
    def outer_ip(self) -> IpUdpHeader:
        return IpUdpHeader(ip_to_int(self.outer_src), ip_to_int(self.outer_dst),
                           self.outer_port, self.outer_port)


class Tunnel:
    """One tunnel per UE, SeGW side and station side share the config."""

    def __init__(self, cfg: TunnelConfig, bearer_id: int) -> None:
        if len(cfg.key) == 0:
            raise ConfigError("tunnel needs an authentication key")
        self.cfg = cfg
        self.bearer_id = bearer_id
        self.auth_failures = 0
        self.ignored = 0

    def _mac(self, p: Packet) -> bytes:
        body = b"".join(reversed(p.headers)) + p.payload_bytes()[: p.payload_len - AUTH_TAG_BYTES]
        return hmac.new(self.cfg.key, body, hashlib.sha256).digest()[:AUTH_TAG_BYTES]

    def seal(self, p: Packet, framing: PdcpFraming) -> Packet:
        """Give an LWIPEP PDU the tunnel's inner addressing and its auth tag."""
        readdress(p, LwipHeader, framing, self.cfg.inner_ip)
        if p.payload_len < AUTH_TAG_BYTES:
            raise PipelineError("payload too short to carry the tunnel auth tag")
        p.trailer = self._mac(p)
        return p

    def wrap(self, inner: Packet) -> Packet:
        inner.add_header(replace(self.cfg.outer_ip, payload_len=inner.wire_length))
        return inner

    def send(self, p: Packet, framing: PdcpFraming) -> Packet:
        return self.wrap(self.seal(p, framing))

    def unwrap(self, p: Packet) -> Packet | None:
        """Strip and check the outer header; None for traffic not addressed to this tunnel."""
        try:
            outer = p.peek_header(IpUdpHeader)
        except DecodeError:
            self.ignored += 1
            return None
        want = self.cfg.outer_ip
        if (outer.dst, outer.dst_port) != (want.dst, want.dst_port):
            self.ignored += 1
            return None
        p.remove_header(IpUdpHeader)
        return p

    def verify(self, inner: Packet) -> bool:
        if len(inner.headers) < 2:
            return False
        try:
            h, _ = LwipHeader.decode(inner.headers[-2])
        except DecodeError:
            return False
        if len(inner.headers[-2]) != LwipHeader.SIZE or h.activate != 1 or h.bearer_id != self.bearer_id:
            return False
        return hmac.compare_digest(inner.trailer, self._mac(inner))

    def receive(self, p: Packet) -> Packet | None:
        inner = self.unwrap(p)
        if inner is None:
            return None
        if not self.verify(inner):
            self.auth_failures += 1
            return None
        return inner


class LwipPath:
    """LWIPEP -> SeGW -> tunnel over Xw -> AP -> air -> station (detunnel)."""

    def __init__(self, sim: Simulator, framing: PdcpFraming, tunnel: Tunnel, xw: LinkModel,
                 wifi: LinkModel, on_station: Callable[[Packet], None],
                 on_tunnel_entry: Callable[[Packet], None] | None = None,
                 xw_override: Callable[[Packet], None] | None = None) -> None:
        self.sim = sim
        self.framing = framing
        self.tunnel = tunnel
        self.xw = Link(sim, xw, "xw")
        self.air = WifiAir(sim, wifi)
        self.on_station = on_station
        self.on_tunnel_entry = on_tunnel_entry
        self.xw_override = xw_override

    def forward(self, p: Packet) -> None:
        p.hops.append("LWIPEP")
        lwipep_encapsulate(p)
        p.hops.append("SeGW")
        self.tunnel.seal(p, self.framing)
        if self.on_tunnel_entry is not None:
            self.on_tunnel_entry(p)
        if self.xw_override is not None:
            self.xw_override(p)
            return
        self.tunnel.wrap(p)
        p.hops.append("Xw")
        self.xw.send(p, self._at_ap)

    def _at_ap(self, p: Packet) -> None:
        p.hops += ["AP", "air"]
        self.air.transmit(p, self._at_station)

    def _at_station(self, p: Packet) -> None:
        p.hops.append("station")
        inner = self.tunnel.receive(p)
        if inner is not None:
            self.on_station(inner)
