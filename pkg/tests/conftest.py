import struct

import pytest

from lwsim.config import parse_and_validate
from lwsim.scenario import run_scenario

_acceptance: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None and rep.when == "call":
        name = marker.args[0]
        callspec = getattr(item, "callspec", None)
        if callspec is not None:
            name += f" [{callspec.id}]"
        _acceptance.append((name, "PASS" if rep.passed else "FAIL"))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _acceptance:
        terminalreporter.write_line(f"{status}  {name}")


def read_pcap(data: bytes):
    """Minimal independent classic-pcap reader: (header dict, [(ts_us, caplen, origlen, bytes)])."""
    magic = data[:4]
    if magic == b"\xa1\xb2\xc3\xd4":
        e = ">"
    elif magic == b"\xd4\xc3\xb2\xa1":
        e = "<"
    else:
        raise ValueError(f"bad magic {magic.hex()}")
    _, major, minor, zone, sigfigs, snaplen, linktype = struct.unpack(e + "IHHiIII", data[:24])
    off = 24
    records = []
    while off < len(data):
        sec, usec, caplen, origlen = struct.unpack(e + "IIII", data[off:off + 16])
        off += 16
        frame = data[off:off + caplen]
        assert len(frame) == caplen, "truncated record"
        off += caplen
        records.append((sec * 1_000_000 + usec, caplen, origlen, frame))
    hdr = {"version": (major, minor), "zone": zone, "sigfigs": sigfigs, "snaplen": snaplen,
           "linktype": linktype}
    return hdr, records


@pytest.fixture(scope="session")
def run_preset():
    cache = {}

    def run(**values):
        key = tuple(sorted(values.items()))
        if key not in cache:
            cache[key] = run_scenario(parse_and_validate(values))
        return cache[key]

    return run
