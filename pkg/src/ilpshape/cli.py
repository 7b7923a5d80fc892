"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 data or I/O error.
"""

import argparse
import sys

from . import config as cfgmod
from . import replay as rp
from . import traces
from .errors import ConfigError, ConsistencyError, ShaperError, TraceError, TransportError

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_config_args(p):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--preset", choices=sorted(cfgmod.PRESETS), help="base distribution preset")
    p.add_argument("--delay", help='delay distribution, e.g. "uniform 0 0.6"')
    p.add_argument("--size", help='size distribution, e.g. "uniform 50 200"')
    p.add_argument("--seed", type=int, help="schedule RNG seed (overrides config)")
    p.add_argument("--max-queue-bytes", type=int)
    p.add_argument("--wire-overhead", type=int, help="estimated transport bytes per record")


def _add_output_args(p):
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.add_argument("--out", help="write the report here instead of stdout")


def _settings(args, default_preset=None):
    values = cfgmod.load_config(args.config) if args.config else {}
    flags = {
        "preset": args.preset,
        "delay": args.delay,
        "size": args.size,
        "seed": None if args.seed is None else str(args.seed),
        "max_queue_bytes": None if args.max_queue_bytes is None else str(args.max_queue_bytes),
        "wire_overhead": None if args.wire_overhead is None else str(args.wire_overhead),
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    if default_preset and not any(k in values for k in ("preset", "delay", "size")):
        values["preset"] = default_preset
    return cfgmod.resolve(values)


def _horizon(args, trace):
    if args.horizon is not None:
        return args.horizon
    last = trace.events[-1].timestamp if trace.events else 0.0
    return max(traces.TRACE_DURATION, last)


def _load(path):
    if path in ("empty", "-"):
        return traces.Trace("empty", ())
    return traces.load_trace(path)


def _emit(args, text):
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise TraceError(f"cannot write {args.out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _table(report, settings):
    lines = ["# resolved config"] + ["#   " + ln for ln in cfgmod.format_config(settings).splitlines()]
    width = max(len(k) for k in rp.REPORT_COLUMNS)
    for key, value in report.as_row().items():
        lines.append(f"{key:<{width}}  {value}")
    return "\n".join(lines) + "\n"


def _fixed_seed(settings):
    if settings.shaper.rng_seed is None:
        settings = cfgmod.with_seed(settings, 0)
    return settings


def cmd_replay(args):
    settings = _fixed_seed(_settings(args, default_preset="high-latency"))
    trace = _load(args.trace)
    report = rp.replay(trace, settings.shaper, _horizon(args, trace), wire_overhead=settings.wire_overhead)
    text = rp.format_reports([report]) if args.format == "csv" else _table(report, settings)
    _emit(args, text)
    return EXIT_OK


def _values(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--values must be comma-separated numbers, got {text!r}") from None


def cmd_sweep(args):
    settings = _fixed_seed(_settings(args, default_preset="high-latency"))
    trace = _load(args.trace)
    values = _values(args.values)
    if not values:
        raise UsageError("--values is empty")
    rows = rp.sweep(trace, settings.shaper, args.param, values, _horizon(args, trace), wire_overhead=settings.wire_overhead)
    if args.format == "csv":
        text = rp.format_reports([(args.param, v, r) for v, r in rows], extra=["param", "value"])
    else:
        head = f"{'value':>10}  {'overhead_B/s':>13}  {'wire_overhead_B/s':>17}  {'max_latency_s':>13}  records"
        lines = ["# resolved config"] + ["#   " + ln for ln in cfgmod.format_config(settings).splitlines()]
        lines += [f"# sweep {args.param} over {args.trace}", head]
        for v, r in rows:
            lines.append(
                f"{v:>10g}  {r.overhead_rate:>13.2f}  {r.wire_overhead_rate:>17.2f}  "
                f"{r.max_message_latency:>13.3f}  {r.record_count}"
            )
        text = "\n".join(lines) + "\n"
    _emit(args, text)
    return EXIT_OK


def cmd_independence(args):
    settings = _settings(args, default_preset="low-latency")
    trace_a = _load(args.trace)
    trace_b = _load(args.trace_b)
    horizon = max(_horizon(args, trace_a), _horizon(args, trace_b))
    seed = settings.shaper.rng_seed or 0
    settings = cfgmod.with_seed(settings, seed)
    res = rp.independence_test(trace_a, trace_b, settings.shaper, horizon, seed=seed, seed_b=args.seed_b)
    lines = ["# resolved config"] + ["#   " + ln for ln in cfgmod.format_config(settings).splitlines()]
    lines += [
        f"schedules_identical        {res.schedules_identical} ({res.schedule_length} records, seed {res.seed})",
        f"size_ks                    {res.size_ks:.6f} (critical {res.size_critical:.6f}) {'pass' if res.size_pass else 'FAIL'}",
        f"delay_ks                   {res.delay_ks:.6f} (critical {res.delay_critical:.6f}) {'pass' if res.delay_pass else 'FAIL'}",
        f"unshaped_peak_bins         {res.unshaped_peak_bins}",
        f"unshaped_windows_flagged   {res.unshaped_windows_flagged}",
        f"shaped_peak_bins           {res.shaped_peak_bins}",
        f"shaped_windows_flagged     {res.shaped_windows_flagged}",
        f"verdict                    {'independent' if res.passed else 'NOT independent'}",
    ]
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_demo(args):
    from . import transport

    if args.role == "recv":
        srv = transport.listen(args.host, args.port)
        host, port = srv.getsockname()[:2]
        print(f"listening on {host}:{port}", file=sys.stderr, flush=True)
        conn, _ = srv.accept()
        srv.close()
        rx = transport.Receiver(conn)
        try:
            for msg in rx:
                sys.stdout.write(msg.decode("utf-8", errors="replace") + "\n")
                sys.stdout.flush()
        finally:
            rx.close()
        print(f"end of stream after {rx.records} records ({rx.cover_records} cover)", file=sys.stderr)
        return EXIT_OK

    settings = _settings(args, default_preset="low-latency")
    sender = transport.Sender(args.host, args.port, settings.shaper)
    sender.start_periodically_sending()
    for line in sys.stdin:
        sender.send(line.rstrip("\n").encode("utf-8"))
    sender.close()
    print(f"sent {sender.records_sent} records, {sender.bytes_sent} bytes", file=sys.stderr)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="ilpshape", description="Independent link padding shaper and replay harness")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("replay", help="replay a trace through the shaper on a virtual clock")
    p.add_argument("--trace", required=True, help="trace CSV, or a bundled name (sense_like, nest_like, empty)")
    p.add_argument("--horizon", type=float, help="seconds (default: 200 or the last timestamp)")
    _add_config_args(p)
    _add_output_args(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("sweep", help="replay once per parameter value")
    p.add_argument("--trace", required=True)
    p.add_argument("--param", required=True, choices=sorted(rp.SWEEP_PARAMS))
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--horizon", type=float)
    _add_config_args(p)
    _add_output_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("independence", help="schedule-equality, KS and peak-detector checks")
    p.add_argument("--trace", required=True, help="bursty trace (peak detector runs on this one)")
    p.add_argument("--trace-b", default="empty", help="comparison trace (default: empty)")
    p.add_argument("--seed-b", type=int, help="independent seed for the two-sample test (default seed+1)")
    p.add_argument("--horizon", type=float)
    p.add_argument("--out")
    _add_config_args(p)
    p.set_defaults(func=cmd_independence)

    p = sub.add_parser("demo", help="live shaped sender or receiver over TCP")
    p.add_argument("role", choices=("send", "recv"))
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=9099)
    _add_config_args(p)
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TraceError, TransportError, ConsistencyError, ShaperError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
