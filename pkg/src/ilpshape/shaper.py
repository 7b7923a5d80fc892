"""Clock-agnostic independent-link-padding state machine.

Each :meth:`Shaper.tick` runs one iteration of the shaping loop: sample a
delay ``d`` and a size ``x``, then emit exactly one ``x``-byte record built
from the head of the queue (padded or fragmented) or, with nothing queued,
a cover record of random bytes. The (d, x) schedule is drawn from its own
generator, so it never depends on what was enqueued.
"""

import threading
from collections import deque
from dataclasses import dataclass

from . import _backend
from .distributions import split_rngs
from .errors import ClosedSender, MessageTooLarge, QueueFull, ShaperError, TruncatedStream
from .wire import RecordType, RecoveryHeader, ShapedRecord

DEFAULT_REASSEMBLY_CAP = 16 * 1024 * 1024


@dataclass(frozen=True)
class TickOutput:
    delay_before: float
    record: ShapedRecord
    end_of_stream: bool = False

    @property
    def shaped_len(self):
        return self.record.header.shaped_len


class Shaper:
    """Message queue plus the seeded schedule that drains it.

    ``fill`` supplies padding and cover bytes; by default it is a seeded
    substream independent of the schedule. The live transport passes
    ``os.urandom`` instead. ``enqueue``/``begin_close`` may be called from
    other threads than ``tick``; all three serialize on ``self.lock``.
    """

    def __init__(self, config, fill=None, kernels=None, debug=False):
        self.config = config
        self._kernels = kernels or _backend.kernels
        self._rng, fill_rng = split_rngs(config.rng_seed, self._kernels)
        self._fill = fill or fill_rng.fill_bytes
        self._dcode, (self._da, self._db) = config.delay_dist.kernel_args()
        self._scode, (self._sa, self._sb, self._sc, self._sd) = config.size_dist.kernel_args()
        self._queue = deque()
        self.queued_bytes = 0
        self.max_queued_bytes = 0
        self.seq = 0
        self.ticks = 0
        self.closing = False
        self.finished = False
        self.debug = debug
        self.lock = threading.RLock()

    @property
    def queue_length(self):
        return len(self._queue)

    @property
    def idle(self):
        return not self._queue

    def enqueue(self, msg):
        data = memoryview(bytes(msg))
        with self.lock:
            if self.closing:
                raise ClosedSender("sender is closing; no further messages accepted")
            limit = self.config.max_queue_bytes
            if limit is not None and self.queued_bytes + len(data) > limit:
                raise QueueFull(
                    f"{len(data)} bytes would exceed max_queue_bytes={limit} "
                    f"({self.queued_bytes} queued)"
                )
            self._queue.append(data)
            self.queued_bytes += len(data)
            if self.queued_bytes > self.max_queued_bytes:
                self.max_queued_bytes = self.queued_bytes
            if self.debug:
                self._check()

    def begin_close(self):
        with self.lock:
            self.closing = True

    def next_schedule(self):
        k = self._kernels
        d = k.sample_delay(self._rng, self._dcode, self._da, self._db)
        x = k.sample_size(self._rng, self._scode, self._sa, self._sb, self._sc, self._sd)
        return d, x

    def tick(self):
        with self.lock:
            if self.finished:
                raise ShaperError("stream_end already emitted")
            return self.emit(*self.next_schedule())

    def emit(self, d, x):
        """Build the record for an already-sampled ``(d, x)``.

        Split from :meth:`tick` so a virtual clock can advance by ``d`` and
        enqueue due messages before the record is cut.
        """
        with self.lock:
            if self.finished:
                raise ShaperError("stream_end already emitted")
            seq = self.seq
            self.seq = (seq + 1) & 0xFFFF
            self.ticks += 1
            q = self._queue
            if q:
                head = q[0]
                n = len(head)
                if n <= x:
                    q.popleft()
                    payload = bytes(head) + self._fill(x - n)
                    header = RecoveryHeader(RecordType.DATA, x, n, seq)
                else:
                    q[0] = head[x:]
                    n = x
                    payload = bytes(head[:x])
                    header = RecoveryHeader(RecordType.DATA, x, x, seq, more_fragments=True)
                self.queued_bytes -= n
                if self.debug:
                    self._check()
                return TickOutput(d, ShapedRecord(header, payload))
            if not self.closing:
                return TickOutput(d, ShapedRecord(RecoveryHeader(RecordType.COVER, x, 0, seq), self._fill(x)))
            self.finished = True
            header = RecoveryHeader(RecordType.DATA, x, 0, seq, stream_end=True)
            return TickOutput(d, ShapedRecord(header, self._fill(x)), end_of_stream=True)

    def drain(self):
        """Close and tick until stream_end; returns every TickOutput."""
        self.begin_close()
        out = []
        while not self.finished:
            out.append(self.tick())
        return out

    def _check(self):
        total = sum(len(m) for m in self._queue)
        if total != self.queued_bytes:
            raise AssertionError(f"queued_bytes={self.queued_bytes} but queue holds {total}")
        limit = self.config.max_queue_bytes
        if limit is not None and total > limit:
            raise AssertionError("queue exceeds max_queue_bytes")


class Reassembler:
    """Incremental receiver side: drop cover, join fragments, stop at stream_end."""

    def __init__(self, cap=DEFAULT_REASSEMBLY_CAP):
        self.cap = cap
        self._parts = []
        self._size = 0
        self.ended = False
        self.cover_records = 0
        self.data_records = 0

    @property
    def pending_bytes(self):
        return self._size

    def feed(self, record):
        """Consume one record; return the completed message or ``None``."""
        if self.ended:
            raise ShaperError("record received after stream_end")
        h = record.header
        if h.stream_end:
            self.ended = True
            if self._size or self._parts:
                raise TruncatedStream(f"stream_end with {self._size} bytes of an unfinished message")
            return None
        if h.record_type == RecordType.COVER:
            self.cover_records += 1
            return None
        self.data_records += 1
        self._size += h.real_len
        if self._size > self.cap:
            raise MessageTooLarge(f"message exceeds reassembly cap of {self.cap} bytes")
        self._parts.append(record.payload[: h.real_len])
        if h.more_fragments:
            return None
        msg = b"".join(self._parts)
        self._parts = []
        self._size = 0
        return msg

    def finish(self):
        if not self.ended:
            raise TruncatedStream("record stream ended without stream_end")


def reassemble(records, cap=DEFAULT_REASSEMBLY_CAP):
    """Recover the original message sequence from an ordered record stream."""
    r = Reassembler(cap)
    out = []
    for rec in records:
        msg = r.feed(rec)
        if msg is not None:
            out.append(msg)
        if r.ended:
            return out
    r.finish()
    return out
