import io
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ilpshape.errors import InvalidHeader, MalformedHeader, TruncatedStream
from ilpshape.wire import (
    HEADER_LEN,
    RecordType,
    RecoveryHeader,
    ShapedRecord,
    decode_header,
    encode_header,
    iter_records,
    parse_records,
    read_record,
)


@pytest.mark.parametrize(
    "header, expected",
    [
        (RecoveryHeader(RecordType.COVER, 64, 0, 0), [0x00, 0x00, 0x40, 0x00, 0x00, 0x00, 0x00]),
        (
            RecoveryHeader(RecordType.DATA, 120, 120, 1, more_fragments=True),
            [0x03, 0x00, 0x78, 0x00, 0x78, 0x00, 0x01],
        ),
        (RecoveryHeader(RecordType.DATA, 1, 0, 65535), [0x01, 0x00, 0x01, 0x00, 0x00, 0xFF, 0xFF]),
    ],
)
def test_encode_examples(header, expected):
    assert encode_header(header) == bytes(expected)
    assert decode_header(bytes(expected)) == header


def test_decode_stream_end_flag():
    h = decode_header(bytes([0x05, 0x00, 0x10, 0x00, 0x00, 0x00, 0x09]))
    assert h.record_type == RecordType.DATA
    assert h.stream_end and not h.more_fragments
    assert h.shaped_len == 16 and h.seq == 9


@pytest.mark.parametrize("flags", [0xF1, 0x08, 0x10, 0x80, 0xFF])
def test_reserved_bits_rejected(flags):
    with pytest.raises(MalformedHeader):
        decode_header(bytes([flags, 0, 10, 0, 0, 0, 0]))


def test_decode_rejects_zero_and_overlong():
    with pytest.raises(MalformedHeader):
        decode_header(bytes([0x01, 0, 0, 0, 0, 0, 0]))
    with pytest.raises(MalformedHeader):
        decode_header(bytes([0x01, 0, 5, 0, 6, 0, 0]))
    with pytest.raises(MalformedHeader):
        decode_header(bytes([0x01, 0, 5]))


def test_decode_rejects_cover_with_data_fields():
    with pytest.raises(MalformedHeader):
        decode_header(bytes([0x00, 0, 5, 0, 1, 0, 0]))
    with pytest.raises(MalformedHeader):
        decode_header(bytes([0x02, 0, 5, 0, 0, 0, 0]))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(record_type=RecordType.DATA, shaped_len=10, real_len=11),
        dict(record_type=RecordType.COVER, shaped_len=10, real_len=1),
        dict(record_type=RecordType.COVER, shaped_len=10, more_fragments=True),
        dict(record_type=RecordType.DATA, shaped_len=0),
        dict(record_type=RecordType.DATA, shaped_len=65536),
        dict(record_type=RecordType.DATA, shaped_len=5, seq=65536),
    ],
)
def test_encode_rejects_invalid(kwargs):
    with pytest.raises(InvalidHeader):
        encode_header(RecoveryHeader(**kwargs))


headers = st.builds(
    lambda data, shaped, frac, seq, more, end: RecoveryHeader(
        RecordType.DATA if data else RecordType.COVER,
        shaped,
        int(frac * shaped) if data else 0,
        seq,
        more_fragments=more and data,
        stream_end=end,
    ),
    st.booleans(),
    st.integers(1, 65535),
    st.floats(0, 1),
    st.integers(0, 65535),
    st.booleans(),
    st.booleans(),
)


@given(headers)
def test_header_round_trip(h):
    b = encode_header(h)
    assert len(b) == HEADER_LEN
    assert decode_header(b) == h


@given(st.binary(min_size=7, max_size=7))
def test_any_prefix_decodes_or_is_rejected_never_coerced(b):
    try:
        h = decode_header(b)
    except MalformedHeader:
        return
    assert encode_header(h) == b


def _record(rng, seq):
    shaped = rng.choice([1, 2, 119, 120, 121, rng.randint(1, 3000)])
    data = rng.random() < 0.6
    real = rng.randint(0, shaped) if data else 0
    h = RecoveryHeader(
        RecordType.DATA if data else RecordType.COVER,
        shaped,
        real,
        seq & 0xFFFF,
        more_fragments=data and rng.random() < 0.3,
    )
    return ShapedRecord(h, rng.randbytes(shaped))


def test_read_record_example():
    rec = ShapedRecord(RecoveryHeader(RecordType.COVER, 64), bytes(range(64)))
    stream = io.BytesIO(rec.to_bytes() + b"tail")
    got = read_record(stream)
    assert got == rec
    assert stream.tell() == 71


def test_read_record_empty_and_truncated():
    assert read_record(io.BytesIO(b"")) is None
    with pytest.raises(TruncatedStream):
        read_record(io.BytesIO(b"\x00\x00\x40\x00\x00"))
    with pytest.raises(TruncatedStream):
        read_record(io.BytesIO(bytes([0, 0, 64, 0, 0, 0, 0]) + b"x" * 63))


def test_record_payload_length_enforced():
    with pytest.raises(InvalidHeader):
        ShapedRecord(RecoveryHeader(RecordType.COVER, 4), b"abc")


def test_framing_fuzz_round_trip():
    rng = random.Random(1234)
    for trial in range(300):
        records = [_record(rng, i) for i in range(rng.randint(0, 30))]
        blob = b"".join(r.to_bytes() for r in records)
        assert len(blob) == sum(r.header.shaped_len + HEADER_LEN for r in records)
        assert parse_records(blob) == records
        assert list(iter_records(io.BytesIO(blob))) == records


class _Dribble(io.RawIOBase):
    """Byte source that returns at most 3 bytes per read, like a slow socket."""

    def __init__(self, data):
        self._buf = io.BytesIO(data)

    def readable(self):
        return True

    def read(self, n=-1):
        return self._buf.read(min(n, 3) if n >= 0 else 3)


def test_read_record_handles_short_reads():
    rng = random.Random(7)
    records = [_record(rng, i) for i in range(20)]
    blob = b"".join(r.to_bytes() for r in records)
    assert list(iter_records(_Dribble(blob))) == records


def test_parse_records_truncated():
    rec = ShapedRecord(RecoveryHeader(RecordType.COVER, 8), b"\x00" * 8)
    with pytest.raises(TruncatedStream):
        parse_records(rec.to_bytes()[:-1])
    with pytest.raises(TruncatedStream):
        parse_records(rec.to_bytes() + b"\x00\x00")
