"""Shaped TCP sender and the matching receiver.

``Sender`` owns one connection and one background thread that runs the
shaping loop: sample ``(d, x)``, sleep ``d``, write one record. Padding and
cover bytes come from ``os.urandom``; the seed in the config (if any) only
fixes the schedule. Nagle is disabled so every record is its own write.
"""

import enum
import logging
import os
import socket
import threading
import time
import weakref

from . import _backend
from .errors import AlreadyStarted, ClosedSender, TransportError, TruncatedStream
from .shaper import DEFAULT_REASSEMBLY_CAP, Reassembler, Shaper
from .wire import read_record

log = logging.getLogger(__name__)


class LoopStatus(enum.Enum):
    NOT_STARTED = "not-started"
    RUNNING = "running"
    DRAINING = "draining"
    CLOSED = "closed"


class Sender:
    """Shaped replacement for a connected TCP socket's ``send``.

    Usage::

        s = Sender(host, port, config)
        s.start_periodically_sending()
        s.send(b"reading=42")
        s.close()   # blocks until the queue drains
    """

    def __init__(self, host, port, config, connect_timeout=10.0, kernels=None, log_writes=False):
        self.endpoint = (host, port)
        try:
            sock = socket.create_connection((host, port), timeout=connect_timeout)
        except OSError as exc:
            raise TransportError(f"cannot connect to {host}:{port}: {exc}") from exc
        sock.settimeout(None)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._sock = sock
        self.shaper = Shaper(config, fill=os.urandom, kernels=kernels or _backend.kernels)
        self.status = LoopStatus.NOT_STARTED
        self._thread = None
        self._error = None
        self._state_lock = threading.Lock()
        self.records_sent = 0
        self.bytes_sent = 0
        # (monotonic time after write, sampled delay, shaped_len) per record
        self.write_log = [] if log_writes else None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def start_periodically_sending(self):
        with self._state_lock:
            if self.status != LoopStatus.NOT_STARTED:
                raise AlreadyStarted("sending loop already started")
            self._start()

    startPeriodicallySending = start_periodically_sending

    def _start(self):
        self.status = LoopStatus.RUNNING
        self._thread = threading.Thread(target=self._run, name=f"ilp-sender-{self.endpoint[1]}", daemon=True)
        self._thread.start()

    def send(self, msg):
        """Queue ``msg`` and return immediately."""
        if self._error is not None:
            raise TransportError(f"sending loop failed: {self._error}") from self._error
        if self.status in (LoopStatus.DRAINING, LoopStatus.CLOSED):
            raise ClosedSender("sender is closed")
        self.shaper.enqueue(msg)

    def close(self):
        """Drain the queue, write stream_end, and shut the connection down."""
        with self._state_lock:
            if self.status == LoopStatus.CLOSED:
                return
            self.shaper.begin_close()
            if self.status == LoopStatus.NOT_STARTED:
                self._start()
            self.status = LoopStatus.DRAINING
        self._thread.join()
        try:
            self._sock.shutdown(socket.SHUT_WR)
        except OSError:
            pass
        self._sock.close()
        self.status = LoopStatus.CLOSED
        if self._error is not None:
            raise TransportError(f"sending loop failed: {self._error}") from self._error

    @property
    def queued_bytes(self):
        return self.shaper.queued_bytes

    def _run(self):
        shaper = self.shaper
        try:
            while True:
                d, x = shaper.next_schedule()
                time.sleep(d)
                out = shaper.emit(d, x)
                wire = out.record.to_bytes()
                self._sock.sendall(wire)
                self.records_sent += 1
                self.bytes_sent += len(wire)
                if self.write_log is not None:
                    self.write_log.append((time.monotonic(), d, x))
                if out.end_of_stream:
                    return
        except OSError as exc:
            log.warning("shaping loop to %s:%s stopped: %s", *self.endpoint, exc)
            self._error = exc


def open_sender(host, port, config, **kwargs):
    return Sender(host, port, config, **kwargs)


class Receiver:
    """Reads records from an accepted connection and yields whole messages."""

    def __init__(self, conn, cap=DEFAULT_REASSEMBLY_CAP):
        self.conn = conn
        self._file = conn.makefile("rb")
        self._assembly = Reassembler(cap)
        self.records = 0

    def recv(self):
        """Next application message, or ``None`` once the sender closed cleanly."""
        r = self._assembly
        while not r.ended:
            rec = read_record(self._file)
            if rec is None:
                raise TruncatedStream("connection closed before stream_end")
            self.records += 1
            msg = r.feed(rec)
            if msg is not None:
                return msg
        return None

    def __iter__(self):
        while True:
            msg = self.recv()
            if msg is None:
                return
            yield msg

    @property
    def cover_records(self):
        return self._assembly.cover_records

    def close(self):
        self._file.close()
        self.conn.close()


def listen(host="127.0.0.1", port=0, backlog=5):
    """Bound, listening TCP socket; port 0 picks a free port."""
    try:
        srv = socket.create_server((host, port), backlog=backlog)
    except OSError as exc:
        raise TransportError(f"cannot listen on {host}:{port}: {exc}") from exc
    return srv


_receivers = weakref.WeakKeyDictionary()


def recv(s, conn):
    """Drop-in for ``conn.recv()`` on a connection accepted from ``s``.

    Returns the next original message, or ``None`` at clean end of stream.
    """
    rx = _receivers.get(conn)
    if rx is None:
        rx = _receivers[conn] = Receiver(conn)
    return rx.recv()
