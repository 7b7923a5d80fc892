"""Device traffic traces: (timestamp, payload length) events.

CSV contract: a ``timestamp_s,payload_len`` header line, then one event per
line (decimal seconds, integer bytes), UTF-8, newline-terminated, with
non-decreasing timestamps.

Two synthetic traces ship with the package. ``sense_like`` stands in for a
sleep monitor (sparse heartbeats, a few long upload bursts) and ``nest_like``
for a camera in motion-detection mode (steady heartbeats, short dense bursts).
Only their 200-second aggregate rates are pinned: 143.78 B/s and 346.04 B/s.
"""

import hashlib
import io
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import _backend
from .errors import TraceError

CSV_HEADER = "timestamp_s,payload_len"
TRACE_DURATION = 200.0


@dataclass(frozen=True)
class TraceEvent:
    timestamp: float
    payload_len: int


@dataclass(frozen=True)
class Trace:
    name: str
    events: tuple
    event_windows: tuple = ()

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    @property
    def total_bytes(self):
        return sum(e.payload_len for e in self.events)

    def baseline_rate(self, duration):
        return self.total_bytes / duration


def parse_trace(text, name="trace"):
    events = []
    last = float("-inf")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if lineno == 1 and line.replace(" ", "") == CSV_HEADER:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise TraceError(f"{name}:{lineno}: expected 2 fields, got {len(parts)}")
        try:
            ts = float(parts[0])
            n = int(parts[1])
        except ValueError:
            raise TraceError(f"{name}:{lineno}: cannot parse {line!r}") from None
        if not np.isfinite(ts) or ts < 0:
            raise TraceError(f"{name}:{lineno}: bad timestamp {parts[0]!r}")
        if n < 0:
            raise TraceError(f"{name}:{lineno}: negative payload length")
        if ts < last:
            raise TraceError(f"{name}:{lineno}: timestamp {ts} decreases (previous {last})")
        last = ts
        events.append(TraceEvent(ts, n))
    return Trace(name, tuple(events))


def load_trace(path):
    """Parse a trace file. ``path`` may also name a bundled trace."""
    if not os.path.exists(path) and str(path) in BUNDLED:
        return bundled(str(path))
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise TraceError(f"cannot read trace {path}: {exc}") from exc
    return parse_trace(text, name=str(path))


def format_trace(events):
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for e in events:
        buf.write(f"{e.timestamp:.6f},{e.payload_len}\n")
    return buf.getvalue()


def write_trace(path, events):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_trace(events))


def payload_bytes(name, index, n):
    """Deterministic pseudorandom content for event ``index`` of trace ``name``."""
    digest = hashlib.blake2b(f"{name}/{index}".encode(), digest_size=8).digest()
    rng = _backend.kernels.Xoshiro256(int.from_bytes(digest, "little"))
    return rng.fill_bytes(n)


def _scale_to_total(lengths, total):
    """Integer lengths proportional to ``lengths`` summing exactly to ``total``."""
    raw = np.asarray(lengths, dtype=float)
    scaled = raw * (total / raw.sum())
    out = np.maximum(np.floor(scaled).astype(np.int64), 1)
    short = total - int(out.sum())
    order = np.argsort(-(scaled - np.floor(scaled)), kind="stable")
    i = 0
    while short != 0:
        j = order[i % len(order)]
        if short > 0:
            out[j] += 1
            short -= 1
        elif out[j] > 1:
            out[j] -= 1
            short += 1
        i += 1
    return out


def _synthesize(name, seed, total, heartbeat, heartbeat_len, windows, burst_rate, burst_len):
    rng = np.random.default_rng(seed)
    times = []
    lens = []
    t = float(rng.uniform(0, heartbeat))
    while t < TRACE_DURATION:
        times.append(t)
        lens.append(heartbeat_len * rng.uniform(0.8, 1.2))
        t += heartbeat * rng.uniform(0.9, 1.1)
    for start, stop in windows:
        n = rng.poisson(burst_rate * (stop - start))
        times.extend(rng.uniform(start, stop, n))
        lens.extend(rng.uniform(0.5, 1.5, n) * burst_len)
    times = np.round(np.asarray(times), 6)
    order = np.argsort(times, kind="stable")
    scaled = _scale_to_total(np.asarray(lens)[order], total)
    events = tuple(TraceEvent(float(ts), int(n)) for ts, n in zip(times[order], scaled))
    return Trace(name, events, tuple(windows))


SENSE_WINDOWS = ((38.0, 46.0), (104.0, 110.0), (161.0, 170.0))
NEST_WINDOWS = ((22.0, 26.0), (71.0, 74.0), (118.0, 123.0), (165.0, 168.0))


def sense_like():
    return _synthesize(
        "sense_like", 20180820, 28756,
        heartbeat=2.0, heartbeat_len=40, windows=SENSE_WINDOWS, burst_rate=6.0, burst_len=320,
    )


def nest_like():
    return _synthesize(
        "nest_like", 3229565, 69208,
        heartbeat=0.5, heartbeat_len=60, windows=NEST_WINDOWS, burst_rate=25.0, burst_len=220,
    )


GENERATORS = {"sense_like": sense_like, "nest_like": nest_like}
BUNDLED = {f"{k}.csv": k for k in GENERATORS} | {k: k for k in GENERATORS}


def bundled(name):
    """Load a packaged trace (``sense_like`` or ``nest_like``) with its event windows."""
    key = BUNDLED.get(name)
    if key is None:
        raise TraceError(f"no bundled trace named {name!r}")
    text = resources.files("ilpshape").joinpath("data").joinpath(f"{key}.csv").read_text(encoding="utf-8")
    trace = parse_trace(text, name=key)
    windows = SENSE_WINDOWS if key == "sense_like" else NEST_WINDOWS
    return Trace(key, trace.events, windows)
