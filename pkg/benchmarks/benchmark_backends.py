#!/usr/bin/env python3
"""Throughput comparison between the stepping cores.

Runs one bundled scenario on every available backend, reports ticks per
second (best of N repeats), and cross-checks that the backends produce
bit-identical traces.
"""

import argparse
import dataclasses
import time

import numpy as np

from graspsim import available_backends, run
from graspsim.config import list_bundled, load_bundled


def time_backend(scenario, backend, repeats):
    run(scenario, backend=backend)  # warm-up: imports, allocator, JIT-free but fair
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        trace = run(scenario, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, trace


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="sphere_slide", choices=list_bundled())
    ap.add_argument("--duration", type=float, default=None,
                    help="override simulated seconds (default: scenario value)")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    scenario = load_bundled(args.scenario)
    if args.duration is not None:
        scenario = dataclasses.replace(scenario, duration=args.duration)
    ticks = int(round(scenario.duration / scenario.dt)) + 1

    print(f"scenario {scenario.name}: {ticks} ticks "
          f"(duration {scenario.duration:g} s, dt {scenario.dt:g} s), "
          f"best of {args.repeats}")

    results = {}
    traces = {}
    for backend in available_backends():
        elapsed, trace = time_backend(scenario, backend, args.repeats)
        results[backend] = elapsed
        traces[backend] = trace
        print(f"  {backend:>7}: {elapsed * 1e3:8.2f} ms  "
              f"({ticks / elapsed / 1e3:8.1f} kticks/s)")

    if len(results) > 1:
        slowest = max(results.values())
        fastest = min(results.values())
        print(f"  speedup: {slowest / fastest:.1f}x")
        ref = traces[min(results, key=results.get)]
        for backend, trace in traces.items():
            same = (
                np.array_equal(trace.positions, ref.positions)
                and np.array_equal(trace.twists, ref.twists)
                and np.array_equal(trace.measured_wrenches, ref.measured_wrenches)
            )
            if not same:
                raise SystemExit(f"backend {backend} disagrees with reference trace")
        print("  traces bit-identical across backends")


if __name__ == "__main__":
    main()
