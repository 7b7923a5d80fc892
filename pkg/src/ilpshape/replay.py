"""Trace replay under a virtual clock, parameter sweeps and privacy checks.

Virtual time is kept in integer nanoseconds so constant schedules land on
exact tick boundaries (4000 ticks of 0.05 s end at exactly 200 s).
Overhead is counted at the application layer: payload plus the 7-byte
recovery header per record. An estimated on-wire figure adds a configurable
per-record transport overhead (40 bytes by default, a bare TCP/IPv4 header).
"""

import csv
import io
import math
import os
from collections import deque
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import _backend
from .distributions import Kind
from .errors import ConfigError, ConsistencyError
from .shaper import Shaper, reassemble
from .stats import (
    flagged_windows,
    ks_2samp_statistic,
    ks_critical_2samp,
    ks_fit,
    peak_bins,
)
from .traces import payload_bytes
from .wire import HEADER_LEN, RecordType, parse_records

NS = 1_000_000_000
RNG_NAME = "xoshiro256**"
DEFAULT_WIRE_OVERHEAD = 40


@dataclass
class ReplayReport:
    trace: str
    duration: float
    baseline_rate: float
    shaped_rate: float
    overhead_rate: float
    wire_overhead_per_record: int
    wire_shaped_rate: float
    wire_overhead_rate: float
    max_message_latency: float
    mean_message_latency: float
    max_queue_bytes_observed: int
    record_count: int
    cover_count: int
    data_count: int
    message_count: int
    drain_time: float
    size_ks_statistic: float
    delay_ks_statistic: float
    seed: int
    delay_dist: str
    size_dist: str
    rng: str
    backend: str

    def as_row(self):
        return {k: _cell(v) for k, v in asdict(self).items()}


REPORT_COLUMNS = tuple(f.name for f in fields(ReplayReport))


def _cell(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6f}"
    return str(v)


@dataclass
class Replay:
    """A replay's report plus the shaped schedule observed inside the horizon."""

    report: ReplayReport
    times_ns: np.ndarray
    delays: np.ndarray
    sizes: np.ndarray
    is_data: np.ndarray

    @property
    def wire_sizes(self):
        return self.sizes + HEADER_LEN

    @property
    def schedule(self):
        return list(zip(self.delays.tolist(), self.sizes.tolist()))


def run_replay(trace, config, horizon, wire_overhead=DEFAULT_WIRE_OVERHEAD, kernels=None, verify=True):
    """Replay ``trace`` through a seeded shaper on a virtual clock.

    Events enqueue their payload at their timestamp; the shaper ticks on its
    own sampled schedule. Once the schedule passes ``horizon`` the shaper is
    closed and drained so every message is delivered; only records sent at or
    before ``horizon`` count toward rates. With ``verify`` the full record
    stream is serialized, re-parsed and reassembled, and must equal the trace
    payloads byte-for-byte.
    """
    events = trace.events
    if events and events[-1].timestamp > horizon:
        raise ConfigError(f"horizon {horizon} s ends before the last event at {events[-1].timestamp} s")
    if horizon <= 0:
        raise ConfigError("horizon must be positive")
    kernels = kernels or _backend.kernels
    if config.rng_seed is None:
        config = config.with_seed(int.from_bytes(os.urandom(8), "little"))
    shaper = Shaper(config, kernels=kernels)

    horizon_ns = round(horizon * NS)
    event_ns = [round(e.timestamp * NS) for e in events]
    payloads = [payload_bytes(trace.name, i, e.payload_len) for i, e in enumerate(events)]
    n_events = len(events)
    stream = bytearray()
    pending = deque()
    latencies = []
    times, delays, sizes, is_data = [], [], [], []
    completion_ns = 0
    now = 0
    i = 0
    while True:
        d, x = shaper.next_schedule()
        t = now + round(d * NS)
        while i < n_events and event_ns[i] <= t:
            shaper.enqueue(payloads[i])
            pending.append(event_ns[i])
            i += 1
        if t > horizon_ns and not shaper.closing:
            shaper.begin_close()
        out = shaper.emit(d, x)
        now = t
        rec = out.record
        h = rec.header
        if verify:
            stream += rec.to_bytes()
        data = h.record_type == RecordType.DATA and not h.stream_end
        if data and not h.more_fragments:
            latencies.append(now - pending.popleft())
        if t <= horizon_ns:
            times.append(t)
            delays.append(d)
            sizes.append(x)
            is_data.append(data)
        if out.end_of_stream:
            completion_ns = t
            break

    if verify:
        got = reassemble(parse_records(stream))
        if got != payloads:
            raise ConsistencyError(
                f"reassembled {len(got)} messages, expected {len(payloads)}; first mismatch at "
                f"{next((k for k, (a, b) in enumerate(zip(got, payloads)) if a != b), min(len(got), len(payloads)))}"
            )

    times = np.asarray(times, dtype=np.int64)
    sizes = np.asarray(sizes, dtype=np.int64)
    is_data = np.asarray(is_data, dtype=bool)
    count = int(times.size)
    shaped_bytes = int(sizes.sum()) + HEADER_LEN * count
    baseline = trace.total_bytes / horizon
    shaped_rate = shaped_bytes / horizon
    wire_rate = (shaped_bytes + wire_overhead * count) / horizon
    lat = np.asarray(latencies, dtype=float) / NS

    if count:
        size_ks = ks_fit(config.size_dist, sizes)
        delay_ks = ks_fit(config.delay_dist, np.diff(np.concatenate(([0], times))) / NS)
    else:
        size_ks = delay_ks = float("nan")

    report = ReplayReport(
        trace=trace.name,
        duration=float(horizon),
        baseline_rate=baseline,
        shaped_rate=shaped_rate,
        overhead_rate=shaped_rate - baseline,
        wire_overhead_per_record=wire_overhead,
        wire_shaped_rate=wire_rate,
        wire_overhead_rate=wire_rate - baseline,
        max_message_latency=float(lat.max()) if lat.size else 0.0,
        mean_message_latency=float(lat.mean()) if lat.size else 0.0,
        max_queue_bytes_observed=shaper.max_queued_bytes,
        record_count=count,
        cover_count=int(count - is_data.sum()),
        data_count=int(is_data.sum()),
        message_count=len(latencies),
        drain_time=max(0, completion_ns - horizon_ns) / NS,
        size_ks_statistic=size_ks,
        delay_ks_statistic=delay_ks,
        seed=config.rng_seed,
        delay_dist=config.delay_dist.to_text(),
        size_dist=config.size_dist.to_text(),
        rng=RNG_NAME,
        backend=kernels.BACKEND,
    )
    return Replay(report, times, np.asarray(delays, dtype=float), sizes, is_data)


def replay(trace, config, horizon, **kwargs):
    return run_replay(trace, config, horizon, **kwargs).report


# parameter -> (which distribution, {kind: parameter index})
SWEEP_PARAMS = {
    "d_low": ("delay_dist", {Kind.UNIFORM: 0}),
    "d_high": ("delay_dist", {Kind.UNIFORM: 1}),
    "s_low": ("size_dist", {Kind.UNIFORM: 0, Kind.TRUNCNORM: 2}),
    "s_high": ("size_dist", {Kind.UNIFORM: 1, Kind.TRUNCNORM: 3}),
    "const_d": ("delay_dist", {Kind.CONSTANT: 0}),
    "const_x": ("size_dist", {Kind.CONSTANT: 0}),
}


def apply_param(config, parameter, value):
    """Copy of ``config`` with one swept parameter replaced."""
    try:
        attr, slots = SWEEP_PARAMS[parameter]
    except KeyError:
        raise ConfigError(f"unknown sweep parameter {parameter!r}; choose from {sorted(SWEEP_PARAMS)}") from None
    spec = getattr(config, attr)
    if spec.kind not in slots:
        raise ConfigError(f"{parameter} does not apply to a {spec.kind.value} {attr}")
    return replace(config, **{attr: spec.with_param(slots[spec.kind], value)})


def sweep(trace, base_config, parameter, values, horizon, **kwargs):
    """One replay per value, all sharing the base seed (paired comparison)."""
    if base_config.rng_seed is None:
        base_config = base_config.with_seed(int.from_bytes(os.urandom(8), "little"))
    configs = [apply_param(base_config, parameter, v) for v in values]
    return [(v, replay(trace, cfg, horizon, **kwargs)) for v, cfg in zip(values, configs)]


def format_reports(rows, extra=None):
    """CSV text for ``(value, report)`` rows or bare reports."""
    buf = io.StringIO()
    lead = list(extra or [])
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(lead + list(REPORT_COLUMNS))
    for row in rows:
        if isinstance(row, ReplayReport):
            prefix, rep = [], row
        else:
            *prefix, rep = row
        cells = rep.as_row()
        writer.writerow([_cell(p) if isinstance(p, float) else str(p) for p in prefix] + [cells[c] for c in REPORT_COLUMNS])
    return buf.getvalue()


@dataclass
class IndependenceReport:
    seed: int
    seed_b: int
    schedules_identical: bool
    schedule_length: int
    records_a: int
    records_b: int
    size_ks: float
    delay_ks: float
    size_critical: float
    delay_critical: float
    size_pass: bool
    delay_pass: bool
    unshaped_peak_bins: list
    shaped_peak_bins: list
    unshaped_windows_flagged: list
    shaped_windows_flagged: list

    @property
    def passed(self):
        return (
            self.schedules_identical
            and self.size_pass
            and self.delay_pass
            and not any(self.shaped_windows_flagged)
            and not len(self.shaped_peak_bins)
        )


def _same_distributions(a, b):
    return a.delay_dist == b.delay_dist and a.size_dist == b.size_dist


def independence_test(trace_a, trace_b, config, horizon, seed=0, seed_b=None, config_b=None, kernels=None):
    """Check that the shaped observables ignore the workload.

    With the same seed the two traces must produce identical (delay, size)
    schedules. With independent seeds, two-sample KS statistics on sizes and
    inter-record gaps are compared against the alpha=0.01 critical value. The
    rate-peak adversary is run on ``trace_a`` both unshaped and shaped.
    """
    if config_b is not None and not _same_distributions(config, config_b):
        raise ConfigError("independence test needs the same distributions for both traces")
    seed_b = seed + 1 if seed_b is None else seed_b
    if seed_b == seed:
        raise ConfigError("seed_b must differ from seed for the two-sample test")
    a = run_replay(trace_a, config.with_seed(seed), horizon, kernels=kernels)
    b_same = run_replay(trace_b, config.with_seed(seed), horizon, kernels=kernels)
    b = run_replay(trace_b, config.with_seed(seed_b), horizon, kernels=kernels)

    identical = (
        np.array_equal(a.delays, b_same.delays)
        and np.array_equal(a.sizes, b_same.sizes)
        and np.array_equal(a.times_ns, b_same.times_ns)
    )
    n, m = a.sizes.size, b.sizes.size
    crit = ks_critical_2samp(n, m)
    size_ks = ks_2samp_statistic(a.sizes, b.sizes)
    gaps_a = np.diff(np.concatenate(([0], a.times_ns))) / NS
    gaps_b = np.diff(np.concatenate(([0], b.times_ns))) / NS
    delay_ks = ks_2samp_statistic(gaps_a, gaps_b)

    raw_times = [e.timestamp for e in trace_a.events]
    raw_sizes = [e.payload_len for e in trace_a.events]
    unshaped = peak_bins(raw_times, raw_sizes, horizon)
    shaped = peak_bins(a.times_ns / NS, a.wire_sizes, horizon)
    windows = trace_a.event_windows
    return IndependenceReport(
        seed=seed,
        seed_b=seed_b,
        schedules_identical=bool(identical),
        schedule_length=int(a.sizes.size),
        records_a=int(n),
        records_b=int(m),
        size_ks=size_ks,
        delay_ks=delay_ks,
        size_critical=crit,
        delay_critical=crit,
        size_pass=size_ks < crit,
        delay_pass=delay_ks < crit,
        unshaped_peak_bins=unshaped.tolist(),
        shaped_peak_bins=shaped.tolist(),
        unshaped_windows_flagged=flagged_windows(unshaped, windows),
        shaped_windows_flagged=flagged_windows(shaped, windows),
    )
