"""Compare the numba and pure-numpy backends on the hot paths.

    python3 benchmarks/bench_backends.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from ustat import _accel
from ustat import montecarlo as mc
from ustat.core import u_statistic, u_statistic_ordered
from ustat.kernels import variance_kernel
from ustat.robust import mom_u_statistic


def _best(fn, repeat):
    fn()  # warm-up (JIT compile / cache load)
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases():
    x = np.random.default_rng(0).normal(size=1600)
    u01 = mc.Distribution("uniform", (0.0, 1.0))
    return {
        "u_statistic variance n=1600": lambda: u_statistic(variance_kernel(), x),
        "u_statistic_ordered variance n=400": lambda: u_statistic_ordered(variance_kernel(), x[:400]),
        "mom_u variance n=1600 V=8": lambda: mom_u_statistic(variance_kernel(), x, 8),
        "simulate u_stat n=200 trials=200": lambda: mc.simulate(
            u01, variance_kernel(), "u_stat", 200, 200, 0, workers=1),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not _accel.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'case':36s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for name, fn in cases().items():
        with _accel.backend("numba"):
            fast = _best(fn, args.repeat)
        with _accel.backend("numpy"):
            slow = _best(fn, args.repeat)
        print(f"{name:36s} {fast:10.4f} {slow:10.4f} {slow / fast:8.1f}x")


if __name__ == "__main__":
    main()
