"""Packets, side-band tags and the fixed-layout header codecs.

All multi-byte fields are big-endian.  Header layouts:

    LwaHeader / LwipHeader   activate:u8  bearer_id:u8                     (2 bytes)
    SeqTsHeader              seq:u32      ts_ns:u64                        (12 bytes)
    IpUdpHeader              IPv4 (20, no options) + UDP (8), checksums 0  (28 bytes)

Payload bytes are virtual: a packet only carries a length and a seed from
which deterministic filler can be materialised when real bytes are needed.
"""

from __future__ import annotations

import ipaddress
import itertools
import random
import struct
from dataclasses import dataclass, field
from typing import ClassVar, TypeVar


class HeaderError(ValueError):
    pass


class EncodeError(HeaderError):
    pass


class DecodeError(HeaderError):
    pass


def _check(name: str, value: int, lo: int, hi: int) -> None:
    if not isinstance(value, int) or not lo <= value <= hi:
        raise EncodeError(f"{name}={value!r} outside [{lo}, {hi}]")


def ip_to_int(addr: str | int) -> int:
    return int(ipaddress.IPv4Address(addr))


def int_to_ip(value: int) -> str:
    return str(ipaddress.IPv4Address(value))


@dataclass(frozen=True)
class LwaHeader:
    """LWAAP header: activation status and radio bearer id."""

    activate: int
    bearer_id: int

    SIZE: ClassVar[int] = 2
    ACTIVATE_VALUES: ClassVar[tuple[int, ...]] = (0, 1, 2)
    _fmt: ClassVar[struct.Struct] = struct.Struct("!BB")

    def encode(self) -> bytes:
        if self.activate not in self.ACTIVATE_VALUES:
            raise EncodeError(f"{type(self).__name__}.activate={self.activate!r} not in {self.ACTIVATE_VALUES}")
        _check("bearer_id", self.bearer_id, 0, 0xFF)
        return self._fmt.pack(self.activate, self.bearer_id)

    @classmethod
    def decode(cls, data: bytes):
        if len(data) < cls.SIZE:
            raise DecodeError(f"{cls.__name__} needs {cls.SIZE} bytes, got {len(data)}")
        activate, bearer_id = cls._fmt.unpack_from(data)
        if activate not in cls.ACTIVATE_VALUES:
            raise DecodeError(f"{cls.__name__}.activate={activate} not in {cls.ACTIVATE_VALUES}")
        return cls(activate, bearer_id), bytes(data[cls.SIZE:])


@dataclass(frozen=True)
class LwipHeader(LwaHeader):
    """LWIPEP header; same layout as LwaHeader, activation restricted to {0, 1}."""

    ACTIVATE_VALUES: ClassVar[tuple[int, ...]] = (0, 1)


@dataclass(frozen=True)
class SeqTsHeader:
    seq: int
    ts: int  # nanoseconds

    SIZE: ClassVar[int] = 12
    _fmt: ClassVar[struct.Struct] = struct.Struct("!IQ")

    def encode(self) -> bytes:
        _check("seq", self.seq, 0, 0xFFFFFFFF)
        _check("ts", self.ts, 0, 0xFFFFFFFFFFFFFFFF)
        return self._fmt.pack(self.seq, self.ts)

    @classmethod
    def decode(cls, data: bytes):
        if len(data) < cls.SIZE:
            raise DecodeError(f"SeqTsHeader needs {cls.SIZE} bytes, got {len(data)}")
        seq, ts = cls._fmt.unpack_from(data)
        return cls(seq, ts), bytes(data[cls.SIZE:])


@dataclass(frozen=True)
class IpUdpHeader:
    """Combined IPv4 + UDP header.

    ``payload_len`` is the UDP payload length; it fills the IP total-length
    and UDP length fields.  TTL is fixed at 64, IP id at 0, checksums at 0.
    """

    src: int
    dst: int
    src_port: int
    dst_port: int
    payload_len: int = 0

    SIZE: ClassVar[int] = 28
    _fmt: ClassVar[struct.Struct] = struct.Struct("!BBHHHBBHII" "HHHH")

    def encode(self) -> bytes:
        _check("src", self.src, 0, 0xFFFFFFFF)
        _check("dst", self.dst, 0, 0xFFFFFFFF)
        _check("src_port", self.src_port, 0, 0xFFFF)
        _check("dst_port", self.dst_port, 0, 0xFFFF)
        _check("payload_len", self.payload_len, 0, 0xFFFF - self.SIZE)
        total = self.SIZE + self.payload_len
        return self._fmt.pack(
            0x45, 0, total, 0, 0, 64, 17, 0, self.src, self.dst,
            self.src_port, self.dst_port, 8 + self.payload_len, 0,
        )

    @classmethod
    def decode(cls, data: bytes):
        if len(data) < cls.SIZE:
            raise DecodeError(f"IpUdpHeader needs {cls.SIZE} bytes, got {len(data)}")
        (vihl, _tos, total, _id, _frag, _ttl, proto, _csum, src, dst,
         sport, dport, udp_len, _ucsum) = cls._fmt.unpack_from(data)
        if vihl != 0x45 or proto != 17:
            raise DecodeError(f"not an option-less IPv4/UDP header (vihl={vihl:#x}, proto={proto})")
        if udp_len != total - 20:
            raise DecodeError(f"inconsistent lengths: ip total {total}, udp {udp_len}")
        return cls(src, dst, sport, dport, total - cls.SIZE), bytes(data[cls.SIZE:])

    @property
    def flow_key(self) -> tuple[str, str, int, int]:
        return int_to_ip(self.src), int_to_ip(self.dst), self.src_port, self.dst_port


@dataclass(frozen=True)
class PdcpFraming:
    """Opaque PDCP/RRC framing block copied along with an offloaded PDU (zero bytes)."""

    length: int = 28

    def encode(self) -> bytes:
        _check("length", self.length, 0, 0xFFFF)
        return bytes(self.length)

    def decode_block(self, data: bytes):
        if len(data) < self.length:
            raise DecodeError(f"PDCP framing needs {self.length} bytes, got {len(data)}")
        return self, bytes(data[self.length:])


H = TypeVar("H")

HEADER_TYPES = (LwaHeader, LwipHeader, SeqTsHeader, IpUdpHeader)


def encode_header(h) -> bytes:
    return h.encode()


def decode_header(cls: type[H], data: bytes) -> tuple[H, bytes]:
    """Decode a fixed-size header from the front of ``data``; returns (header, rest)."""
    return cls.decode(data)


def rbid_from_lcid(lcid: int) -> int:
    if lcid < 2:
        raise ValueError(f"lcid {lcid} carries no data radio bearer (need lcid >= 2)")
    return lcid - 2


# side-band tags: never part of the wire length

@dataclass(frozen=True)
class LwaTag:
    activate: int


@dataclass(frozen=True)
class LwipTag:
    activate: int


@dataclass(frozen=True)
class LcidTag:
    lcid: int


_uids = itertools.count()


def filler_bytes(seed: int, length: int) -> bytes:
    return random.Random(seed).randbytes(length)


@dataclass
class Packet:
    """A simulated datagram.

    ``headers`` holds encoded header blocks, outermost last.  ``trailer``
    overlays the final bytes of the payload (used for the tunnel auth tag)
    and does not change the length.
    """

    payload_len: int
    filler_seed: int = 0
    uid: int = field(default_factory=lambda: next(_uids))
    headers: list[bytes] = field(default_factory=list)
    trailer: bytes = b""
    tags: dict[type, object] = field(default_factory=dict, compare=False)
    hops: list[str] = field(default_factory=list, compare=False)

    @property
    def wire_length(self) -> int:
        return self.payload_len + sum(len(b) for b in self.headers)

    def copy(self) -> "Packet":
        return Packet(self.payload_len, self.filler_seed, self.uid, list(self.headers),
                      self.trailer, dict(self.tags), list(self.hops))

    # header stack
    def add_header(self, h) -> None:
        self.headers.append(h.encode())

    def add_block(self, block: bytes) -> None:
        self.headers.append(bytes(block))

    def pop_block(self) -> bytes:
        if not self.headers:
            raise DecodeError("header stack is empty")
        return self.headers.pop()

    def peek_header(self, cls: type[H]) -> H:
        if not self.headers:
            raise DecodeError(f"expected {cls.__name__}, header stack is empty")
        block = self.headers[-1]
        if len(block) != cls.SIZE:
            raise DecodeError(f"expected {cls.__name__} ({cls.SIZE} bytes), top block is {len(block)} bytes")
        h, _ = cls.decode(block)
        return h

    def remove_header(self, cls: type[H]) -> H:
        h = self.peek_header(cls)
        self.headers.pop()
        return h

    # tags
    def add_tag(self, tag) -> None:
        self.tags[type(tag)] = tag

    def peek_tag(self, cls: type[H]) -> H | None:
        return self.tags.get(cls)

    def remove_tag(self, cls: type[H]) -> H | None:
        return self.tags.pop(cls, None)

    # bytes
    def payload_bytes(self) -> bytes:
        body = filler_bytes(self.filler_seed, self.payload_len)
        if self.trailer:
            n = len(self.trailer)
            body = body[: self.payload_len - n] + self.trailer
        return body

    def to_bytes(self) -> bytes:
        return b"".join(reversed(self.headers)) + self.payload_bytes()
