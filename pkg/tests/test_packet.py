import pytest
from hypothesis import given, strategies as st

from lwsim.packet import (DecodeError, EncodeError, IpUdpHeader, LcidTag, LwaHeader, LwaTag,
                          LwipHeader, Packet, SeqTsHeader, decode_header, encode_header,
                          rbid_from_lcid)

u8 = st.integers(0, 0xFF)
u16 = st.integers(0, 0xFFFF)
u32 = st.integers(0, 0xFFFFFFFF)

headers = st.one_of(
    st.builds(LwaHeader, st.integers(0, 2), u8),
    st.builds(LwipHeader, st.integers(0, 1), u8),
    st.builds(SeqTsHeader, u32, st.integers(0, 2**64 - 1)),
    st.builds(IpUdpHeader, u32, u32, u16, u16, st.integers(0, 0xFFFF - 28)),
)
SIZES = {LwaHeader: 2, LwipHeader: 2, SeqTsHeader: 12, IpUdpHeader: 28}


def test_lwa_header_layout():
    assert encode_header(LwaHeader(1, 1)) == bytes([0x01, 0x01])


def test_lwa_header_decode_known_bytes():
    h, rest = decode_header(LwaHeader, bytes([0x02, 0x05]))
    assert h == LwaHeader(2, 5)
    assert rest == b""


def test_seqts_zero_is_twelve_zero_bytes():
    assert SeqTsHeader(0, 0).encode() == bytes(12)


def test_seqts_is_big_endian():
    assert SeqTsHeader(1, 2).encode() == b"\x00\x00\x00\x01" + b"\x00" * 7 + b"\x02"


def test_lwip_rejects_activation_two():
    with pytest.raises(EncodeError):
        LwipHeader(2, 1).encode()


def test_lwa_rejects_activation_three():
    with pytest.raises(EncodeError):
        LwaHeader(3, 1).encode()


def test_truncated_input():
    with pytest.raises(DecodeError):
        LwaHeader.decode(b"\x01")
    with pytest.raises(DecodeError):
        SeqTsHeader.decode(bytes(11))
    with pytest.raises(DecodeError):
        IpUdpHeader.decode(bytes(27))


def test_ip_udp_header_fields():
    b = IpUdpHeader(0x01000002, 0x07000002, 49153, 5000, 600).encode()
    assert len(b) == 28
    assert b[0] == 0x45 and b[9] == 17
    assert int.from_bytes(b[2:4], "big") == 628
    assert int.from_bytes(b[24:26], "big") == 608


@given(headers)
def test_round_trip_and_fixed_size(h):
    data = encode_header(h)
    assert len(data) == SIZES[type(h)]
    back, rest = decode_header(type(h), data + b"tail")
    assert back == h
    assert rest == b"tail"


@pytest.mark.parametrize("lcid,rbid", [(3, 1), (2, 0), (10, 8)])
def test_rbid_from_lcid(lcid, rbid):
    assert rbid_from_lcid(lcid) == rbid


def test_rbid_needs_data_bearer_lcid():
    with pytest.raises(ValueError):
        rbid_from_lcid(1)


def test_tags_do_not_change_wire_length():
    p = Packet(588)
    p.add_header(SeqTsHeader(0, 0))
    before = p.wire_length
    p.add_tag(LwaTag(1))
    p.add_tag(LcidTag(3))
    p.add_tag(LwaTag(1))
    assert p.wire_length == before == 600
    assert p.peek_tag(LcidTag).lcid == 3
    p.remove_tag(LwaTag)
    p.remove_tag(LwaTag)
    assert p.wire_length == before


def test_header_stack_is_lifo():
    p = Packet(10)
    p.add_header(SeqTsHeader(7, 9))
    p.add_header(LwaHeader(2, 1))
    assert p.wire_length == 10 + 12 + 2
    assert p.remove_header(LwaHeader) == LwaHeader(2, 1)
    assert p.remove_header(SeqTsHeader) == SeqTsHeader(7, 9)
    with pytest.raises(DecodeError):
        p.remove_header(SeqTsHeader)


def test_wrong_header_on_top_is_rejected():
    p = Packet(10)
    p.add_header(SeqTsHeader(7, 9))
    with pytest.raises(DecodeError):
        p.remove_header(LwaHeader)


def test_to_bytes_is_outermost_first_and_deterministic():
    p = Packet(20, filler_seed=42)
    p.add_header(SeqTsHeader(1, 0))
    p.add_header(LwaHeader(1, 1))
    data = p.to_bytes()
    assert len(data) == p.wire_length == 34
    assert data[:2] == b"\x01\x01"
    assert data[2:14] == SeqTsHeader(1, 0).encode()
    assert Packet(20, filler_seed=42).payload_bytes() == data[14:]


def test_trailer_overlays_payload_end():
    p = Packet(20, filler_seed=3, trailer=b"ABCD")
    body = p.payload_bytes()
    assert len(body) == 20 and body.endswith(b"ABCD")
    assert body[:16] == Packet(20, filler_seed=3).payload_bytes()[:16]
