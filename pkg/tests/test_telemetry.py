import io

import pytest

from conftest import read_pcap
from lwsim.telemetry import (LINKTYPE_RAW, LINKTYPE_USER0, FlowMonitor, FlowStats, PcapWriter,
                             ThroughputError, report, throughput_kbps)

KEY = ("1.0.0.2", "7.0.0.2", 49153, 5000)


def test_throughput_formula_simple_case():
    s = FlowStats(1, KEY, rx_bytes=1024, time_first_tx=0, time_last_rx=8_000_000_000)
    assert throughput_kbps(s) == 1.0


def test_throughput_needs_positive_interval():
    with pytest.raises(ThroughputError):
        throughput_kbps(FlowStats(1, KEY, rx_bytes=10, time_first_tx=5, time_last_rx=5))


def test_monitor_counts_and_delay():
    m = FlowMonitor()
    m.record_tx(KEY, 0, 628, 0)
    m.record_tx(KEY, 1, 628, 75_000_000)
    m.record_rx(KEY, 0, 628, 5_000_000)
    m.record_rx(KEY, 1, 628, 81_000_000)
    (rec,) = m.records()
    assert rec["tx_packets"] == rec["rx_packets"] == 2
    assert rec["lost_packets"] == 0
    assert rec["delay_mean_ns"] == 5_500_000
    assert rec["throughput_kbps"] == pytest.approx(1256 * 8 / 0.081 / 1024, rel=1e-12)


def test_divert_removes_packet_from_origin_flow():
    m = FlowMonitor()
    m.record_tx(KEY, 0, 628, 0)
    m.record_tx(KEY, 1, 628, 1)
    m.record_divert(KEY, 1, 628)
    m.record_rx(KEY, 0, 628, 10)
    (rec,) = m.records()
    assert (rec["tx_packets"], rec["rx_packets"], rec["diverted_packets"]) == (1, 1, 1)


def test_flow_ids_follow_first_appearance():
    m = FlowMonitor()
    m.record_tx(("9.9.9.9", "8.8.8.8", 9, 9), 0, 10, 0)
    m.record_tx(KEY, 1, 10, 0)
    assert [r["flow_id"] for r in m.records()] == [1, 2]
    assert [r["src_port"] for r in m.records()] == [9, 49153]


def test_report_lists_each_flow():
    m = FlowMonitor()
    m.record_tx(KEY, 0, 628, 0)
    m.record_rx(KEY, 0, 628, 8_000_000)
    text = report(m.records())
    assert text.startswith("Flow 1 (1.0.0.2:49153 -> 7.0.0.2:5000)")
    assert "Tx Packets: 1  Rx Packets: 1" in text
    assert "Rx Bytes: 628" in text


def test_pcap_layout_parsed_by_independent_reader():
    buf = io.BytesIO()
    with PcapWriter(buf, LINKTYPE_USER0) as w:
        w.write(1_500_000_999, b"\x01" * 740)
        w.write(2_000_000_000, b"\x02" * 10)
    hdr, recs = read_pcap(buf.getvalue())
    assert hdr == {"version": (2, 4), "zone": 0, "sigfigs": 0, "snaplen": 65535,
                   "linktype": LINKTYPE_USER0}
    assert [(ts, cap, orig) for ts, cap, orig, _ in recs] == [(1_500_000, 740, 740), (2_000_000, 10, 10)]
    assert buf.getvalue()[:4] == bytes.fromhex("a1b2c3d4")


def test_pcap_truncates_to_snaplen():
    buf = io.BytesIO()
    w = PcapWriter(buf, LINKTYPE_RAW, snaplen=4)
    w.write(0, b"abcdef")
    _, recs = read_pcap(buf.getvalue())
    assert recs == [(0, 4, 6, b"abcd")]


def test_pcap_rejects_time_going_backwards():
    w = PcapWriter(io.BytesIO())
    w.write(10, b"x")
    with pytest.raises(ValueError):
        w.write(9, b"x")
