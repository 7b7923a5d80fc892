"""Recovery header and record framing.

Every record on the wire is a 7-byte header followed by exactly
``shaped_len`` payload bytes:

======  ==========  ===================================================
offset  size        field
======  ==========  ===================================================
0       1           flags: bit0 Data(1)/Cover(0), bit1 more_fragments,
                    bit2 stream_end, bits 3-7 reserved (must be zero)
1       2           shaped_len, big-endian, >= 1
3       2           real_len, big-endian, <= shaped_len
5       2           seq, big-endian, wrapping diagnostic counter
======  ==========  ===================================================

The observable size of a record is ``shaped_len + 7`` and nothing else.
"""

import enum
import struct
from dataclasses import dataclass

from .errors import InvalidHeader, MalformedHeader, TruncatedStream

HEADER_LEN = 7
MAX_SHAPED_LEN = 0xFFFF

FLAG_DATA = 0x01
FLAG_MORE = 0x02
FLAG_END = 0x04
_RESERVED = 0xF8

_HEADER = struct.Struct("!BHHH")


class RecordType(enum.IntEnum):
    COVER = 0
    DATA = 1


@dataclass(frozen=True)
class RecoveryHeader:
    record_type: RecordType
    shaped_len: int
    real_len: int = 0
    seq: int = 0
    more_fragments: bool = False
    stream_end: bool = False

    def check(self):
        """Raise :class:`InvalidHeader` unless the header is encodable."""
        if not 1 <= self.shaped_len <= MAX_SHAPED_LEN:
            raise InvalidHeader(f"shaped_len {self.shaped_len} outside [1, 65535]")
        if not 0 <= self.real_len <= self.shaped_len:
            raise InvalidHeader(f"real_len {self.real_len} exceeds shaped_len {self.shaped_len}")
        if not 0 <= self.seq <= 0xFFFF:
            raise InvalidHeader(f"seq {self.seq} does not fit 16 bits")
        if self.record_type == RecordType.COVER:
            if self.real_len:
                raise InvalidHeader("cover record with nonzero real_len")
            if self.more_fragments:
                raise InvalidHeader("cover record flagged as fragment")

    @property
    def is_cover(self):
        return self.record_type == RecordType.COVER


@dataclass(frozen=True)
class ShapedRecord:
    header: RecoveryHeader
    payload: bytes

    def __post_init__(self):
        if len(self.payload) != self.header.shaped_len:
            raise InvalidHeader(
                f"payload is {len(self.payload)} bytes, header says {self.header.shaped_len}"
            )

    @property
    def data(self):
        """Application bytes carried by this record."""
        return self.payload[: self.header.real_len]

    @property
    def wire_size(self):
        return HEADER_LEN + self.header.shaped_len

    def to_bytes(self):
        return encode_header(self.header) + self.payload


def encode_header(h):
    h.check()
    flags = int(h.record_type) | (FLAG_MORE if h.more_fragments else 0) | (FLAG_END if h.stream_end else 0)
    return _HEADER.pack(flags, h.shaped_len, h.real_len, h.seq)


def decode_header(b):
    if len(b) < HEADER_LEN:
        raise MalformedHeader(f"need {HEADER_LEN} bytes, got {len(b)}")
    flags, shaped_len, real_len, seq = _HEADER.unpack_from(b)
    if flags & _RESERVED:
        raise MalformedHeader(f"reserved flag bits set: 0x{flags:02x}")
    if shaped_len == 0:
        raise MalformedHeader("shaped_len is zero")
    if real_len > shaped_len:
        raise MalformedHeader(f"real_len {real_len} > shaped_len {shaped_len}")
    is_data = flags & FLAG_DATA
    more = bool(flags & FLAG_MORE)
    if not is_data and (real_len or more):
        raise MalformedHeader("cover record carries data fields")
    return RecoveryHeader(
        record_type=RecordType.DATA if is_data else RecordType.COVER,
        shaped_len=shaped_len,
        real_len=real_len,
        seq=seq,
        more_fragments=more,
        stream_end=bool(flags & FLAG_END),
    )


def _read_exact(stream, n, started):
    chunks = []
    got = 0
    while got < n:
        chunk = stream.read(n - got)
        if not chunk:
            if got == 0 and not started:
                return None
            raise TruncatedStream(f"source ended after {got} of {n} bytes")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks) if len(chunks) != 1 else bytes(chunks[0])


def read_record(stream):
    """Read one record from a binary file-like object.

    Returns ``None`` when the source is exhausted exactly at a record boundary.
    """
    head = _read_exact(stream, HEADER_LEN, started=False)
    if head is None:
        return None
    header = decode_header(head)
    payload = _read_exact(stream, header.shaped_len, started=True)
    return ShapedRecord(header, payload)


def iter_records(stream):
    while True:
        rec = read_record(stream)
        if rec is None:
            return
        yield rec


def parse_records(buf):
    """Split an in-memory byte string into records."""
    view = memoryview(buf)
    out = []
    pos = 0
    n = len(view)
    while pos < n:
        if n - pos < HEADER_LEN:
            raise TruncatedStream(f"{n - pos} trailing bytes, shorter than a header")
        header = decode_header(view[pos : pos + HEADER_LEN])
        end = pos + HEADER_LEN + header.shaped_len
        if end > n:
            raise TruncatedStream(f"record at offset {pos} runs past end of buffer")
        out.append(ShapedRecord(header, bytes(view[pos + HEADER_LEN : end])))
        pos = end
    return out
