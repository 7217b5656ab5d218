import pytest
from hypothesis import given, strategies as st

from lwsim.engine import CausalityError, Simulator, parse_time, seconds


def test_same_time_events_run_fifo():
    sim = Simulator()
    order = []
    sim.schedule(0, order.append, "A")
    sim.schedule(0, order.append, "B")
    sim.run()
    assert order == ["A", "B"]


def test_scheduling_in_the_past_is_rejected():
    sim = Simulator()
    sim.run_until(10)
    with pytest.raises(CausalityError):
        sim.schedule(5, lambda: None)


def test_clock_is_exact_integer_nanoseconds():
    sim = Simulator()
    seen = []
    sim.schedule(parse_time("100us"), lambda: seen.append(sim.now))
    sim.run()
    assert seen == [100_000]


def test_run_until_on_empty_queue_advances_clock():
    sim = Simulator()
    sim.run_until(seconds(1))
    assert sim.now == 1_000_000_000
    assert sim.executed == 0


def test_run_until_stops_at_end():
    sim = Simulator()
    fired = []
    for ms in (1, 2, 3):
        sim.schedule(ms * 1_000_000, fired.append, ms)
    sim.run_until(2_000_000)
    assert fired == [1, 2]
    assert sim.now == 2_000_000
    sim.run()
    assert fired == [1, 2, 3]


def test_recurring_poll_count_over_run():
    interval, end = 100_000, 4_825_000_000
    # enumeration oracle: firings at k * interval, k >= 1, not after end
    expected = sum(1 for k in range(1, end // interval + 10) if k * interval <= end)
    assert expected == 48250

    sim = Simulator()
    count = 0

    def poll():
        nonlocal count
        count += 1

    sim.every(interval, poll, until=end)
    sim.run_until(end)
    assert count == expected


def test_cancelled_event_does_not_run():
    sim = Simulator()
    hit = []
    ev = sim.schedule(5, hit.append, 1)
    Simulator.cancel(ev)
    sim.run()
    assert hit == []


@pytest.mark.parametrize("text,ns", [("5ms", 5_000_000), ("4.825s", 4_825_000_000),
                                     ("250ns", 250), (0.0001, 100_000), ("0.075", 75_000_000)])
def test_parse_time(text, ns):
    assert parse_time(text) == ns


@given(st.lists(st.integers(min_value=0, max_value=10_000), max_size=60))
def test_events_execute_in_timestamp_then_insertion_order(times):
    sim = Simulator()
    log = []
    for i, t in enumerate(times):
        sim.schedule(t, lambda i=i, t=t: log.append((sim.now, t, i)))
    sim.run()
    assert [(t, i) for _, t, i in log] == sorted((t, i) for i, t in enumerate(times))
    clocks = [c for c, _, _ in log]
    assert clocks == sorted(clocks)
    assert all(c == t for c, t, _ in log)
