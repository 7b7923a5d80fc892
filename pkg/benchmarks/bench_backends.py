"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_backends.py [--repeat 5]

Each row is the best of ``--repeat`` runs. Both backends produce identical
output, which is checked before timing.
"""

import argparse
import time

from ilpshape import _backend, replay, traces
from ilpshape.distributions import DistributionSpec, ShaperConfig, DELAY, draw_schedule, high_latency, make_rng

TN_CONFIG = ShaperConfig(DistributionSpec.uniform(0, 0.6, DELAY), DistributionSpec.truncated_normal(125, 30, 50, 200))


def best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def workloads(k):
    return {
        "draw_schedule uniform, 1e5": lambda: draw_schedule(high_latency(), make_rng(1, k), 100_000, k),
        "draw_schedule truncnorm, 1e5": lambda: draw_schedule(TN_CONFIG, make_rng(1, k), 100_000, k),
        "fill_bytes 1 MiB": lambda: make_rng(1, k).fill_bytes(1 << 20),
        "replay nest_like 200 s": lambda: replay.replay(traces.bundled("nest_like"), high_latency(seed=1), 200.0, kernels=k),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    names = _backend.available()
    if "cython" not in names:
        print("compiled extension not built; timing the python backend only")
    mods = {n: _backend.load(n) for n in names}

    ref = [draw_schedule(TN_CONFIG, make_rng(9, m), 1000, m) for m in mods.values()]
    assert all(r == ref[0] for r in ref), "backends disagree"

    rows = {n: {label: best(fn, args.repeat) for label, fn in workloads(m).items()} for n, m in mods.items()}
    labels = list(next(iter(rows.values())))
    print(f"{'workload':<30}" + "".join(f"{n + ' s':>12}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label in labels:
        line = f"{label:<30}" + "".join(f"{rows[n][label]:>12.4f}" for n in names)
        if len(names) > 1:
            line += f"{rows['python'][label] / rows['cython'][label]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
