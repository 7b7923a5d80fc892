import random
import socket
import threading
import time

import pytest

from ilpshape import transport
from ilpshape.distributions import DELAY, DistributionSpec, ShaperConfig, expected_value
from ilpshape.errors import AlreadyStarted, ClosedSender, TransportError
from ilpshape.stats import ks_critical, ks_fit
from ilpshape.wire import HEADER_LEN, RecordType, iter_records


def cfg(d=0.01, x=120, seed=1):
    delay = d if isinstance(d, DistributionSpec) else DistributionSpec.constant(d, DELAY)
    size = x if isinstance(x, DistributionSpec) else DistributionSpec.constant(x)
    return ShaperConfig(delay, size, rng_seed=seed)


class Collector:
    """Loopback listener that reassembles everything the sender writes."""

    def __init__(self):
        self.srv = transport.listen("127.0.0.1", 0)
        self.port = self.srv.getsockname()[1]
        self.messages = []
        self.error = None
        self.rx = None
        self._t = threading.Thread(target=self._run, daemon=True)
        self._t.start()

    def _run(self):
        conn, _ = self.srv.accept()
        self.rx = transport.Receiver(conn)
        try:
            for msg in self.rx:
                self.messages.append(msg)
        except Exception as exc:  # surfaced by join()
            self.error = exc
        finally:
            self.rx.close()
            self.srv.close()

    def join(self, timeout=30):
        self._t.join(timeout)
        assert not self._t.is_alive(), "receiver did not see stream_end"
        if self.error:
            raise self.error
        return self.messages


class RawCapture:
    """Loopback listener that records (arrival time, record) without reassembly."""

    def __init__(self):
        self.srv = transport.listen("127.0.0.1", 0)
        self.port = self.srv.getsockname()[1]
        self.records = []
        self._t = threading.Thread(target=self._run, daemon=True)
        self._t.start()

    def _run(self):
        conn, _ = self.srv.accept()
        with conn, conn.makefile("rb") as fh:
            for rec in iter_records(fh):
                self.records.append((time.monotonic(), rec))
                if rec.header.stream_end:
                    break
        self.srv.close()

    def join(self, timeout=60):
        self._t.join(timeout)
        assert not self._t.is_alive()
        return self.records


def test_hello_amid_cover_traffic():
    c = Collector()
    s = transport.Sender("127.0.0.1", c.port, cfg(0.01, 64))
    s.start_periodically_sending()
    time.sleep(0.1)
    s.send(b"hello")
    time.sleep(0.1)
    s.close()
    assert c.join() == [b"hello"]
    assert c.rx.cover_records > 0


def test_close_without_send_is_end_of_stream():
    c = Collector()
    s = transport.Sender("127.0.0.1", c.port, cfg())
    s.start_periodically_sending()
    s.close()
    assert c.join() == []


def test_fragmented_message_is_reassembled():
    c = Collector()
    msg = bytes(random.Random(3).randbytes(300))
    with transport.Sender("127.0.0.1", c.port, cfg(0.005, 120)) as s:
        s.start_periodically_sending()
        s.send(msg)
    assert c.join() == [msg]


def test_lifecycle_errors():
    c = Collector()
    s = transport.Sender("127.0.0.1", c.port, cfg(0.002))
    s.send(b"queued before start")
    s.startPeriodicallySending()
    with pytest.raises(AlreadyStarted):
        s.start_periodically_sending()
    s.close()
    s.close()
    assert s.status == transport.LoopStatus.CLOSED
    with pytest.raises(ClosedSender):
        s.send(b"late")
    assert c.join() == [b"queued before start"]


def test_close_before_start_still_drains():
    c = Collector()
    s = transport.Sender("127.0.0.1", c.port, cfg(0.002, 10))
    s.send(b"x" * 95)
    s.close()
    assert c.join() == [b"x" * 95]


def test_connect_refused():
    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()
    with pytest.raises(TransportError):
        transport.Sender("127.0.0.1", port, cfg(), connect_timeout=2)


def test_peer_reset_surfaces_on_close():
    srv = transport.listen("127.0.0.1", 0)
    s = transport.Sender("127.0.0.1", srv.getsockname()[1], cfg(0.001, 4000))
    conn, _ = srv.accept()
    conn.setsockopt(socket.SOL_SOCKET, socket.SO_LINGER, b"\x01\x00\x00\x00\x00\x00\x00\x00")
    conn.close()
    srv.close()
    s.start_periodically_sending()
    deadline = time.monotonic() + 10
    while s._error is None and time.monotonic() < deadline:
        time.sleep(0.01)
    with pytest.raises(TransportError):
        s.send(b"after failure")
    with pytest.raises(TransportError):
        s.close()


@pytest.mark.parametrize(
    "size",
    [DistributionSpec.constant(120), DistributionSpec.uniform(50, 200), DistributionSpec.truncated_normal(125, 30, 50, 200)],
    ids=["constant", "uniform", "truncnorm"],
)
def test_random_script_round_trip(size):
    rng = random.Random(size.to_text())
    msgs = [rng.randbytes(rng.choice([0, 1, 50, 119, 120, 121, rng.randint(0, 5000)])) for _ in range(25)]
    c = Collector()
    with transport.Sender("127.0.0.1", c.port, cfg(DistributionSpec.uniform(0, 0.002, DELAY), size, seed=rng.getrandbits(32))) as s:
        s.start_periodically_sending()
        for m in msgs:
            s.send(m)
            if rng.random() < 0.2:
                time.sleep(0.003)
    assert c.join() == msgs


def test_cover_rate_at_fixed_delay():
    cap = RawCapture()
    s = transport.Sender("127.0.0.1", cap.port, cfg(0.05, 120))
    s.start_periodically_sending()
    time.sleep(3.0)
    s.close()
    records = cap.join()
    t0 = records[0][0]
    in_window = [r for t, r in records if t - t0 < 2.0 and not r.header.stream_end]
    assert all(r.header.record_type == RecordType.COVER for r in in_window)
    # 2 s at d=0.05 gives 40 records; sleep-then-write can only lose a little
    assert 36 <= len(in_window) <= 41


def test_on_wire_observables():
    delay = DistributionSpec.uniform(0, 0.02, DELAY)
    size = DistributionSpec.uniform(50, 200)
    cap = RawCapture()
    s = transport.Sender("127.0.0.1", cap.port, cfg(delay, size, seed=42), log_writes=True)
    s.start_periodically_sending()
    while len(s.write_log) < 600:
        time.sleep(0.05)
    s.close()
    records = [r for _, r in cap.join()]
    log = s.write_log

    body = records[:-1]
    assert all(len(r.to_bytes()) == r.header.shaped_len + HEADER_LEN for r in records)
    shaped = [r.header.shaped_len for r in body]
    assert ks_fit(size, shaped) < ks_critical(len(shaped))

    gaps = [(b[0] - a[0], b[1]) for a, b in zip(log, log[1:])]
    assert len(gaps) >= 500
    assert all(g >= d for g, d in gaps)
    mean_gap = sum(g for g, _ in gaps) / len(gaps)
    assert abs(mean_gap - expected_value(delay)) <= 0.1 * expected_value(delay)


def test_liveness_one_record_per_max_delay():
    d_high = 0.03
    cap = RawCapture()
    s = transport.Sender("127.0.0.1", cap.port, cfg(DistributionSpec.uniform(0.01, d_high, DELAY), 80))
    s.start_periodically_sending()
    time.sleep(1.5)
    s.close()
    times = [t for t, _ in cap.join()]
    assert max(b - a for a, b in zip(times, times[1:])) < d_high + 0.05


def test_drop_in_recv_function():
    srv = transport.listen("127.0.0.1", 0)
    got = []

    def serve():
        conn, _ = srv.accept()
        while (m := transport.recv(srv, conn)) is not None:
            got.append(m)
        conn.close()

    t = threading.Thread(target=serve, daemon=True)
    t.start()
    with transport.open_sender("127.0.0.1", srv.getsockname()[1], cfg(0.002, 32)) as s:
        s.start_periodically_sending()
        s.send(b"first")
        s.send(b"second" * 20)
    t.join(10)
    srv.close()
    assert got == [b"first", b"second" * 20]
