"""Numba vs pure-numpy timing for the hot paths.

    python benchmarks/bench_kernels.py [--trials 200000] [--threads 1]

Monte Carlo counting is compared in-process (the engine takes a backend
argument). The scalar special-function kernels are compiled at import, so
their pure-Python timing comes from a child process started with
EDMIMO_PURE_NUMPY=1. Both backends must return identical error counts.
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def special_timings(repeat=3):
    from edmimo import ser
    from edmimo.constellation import make_conventional_pam

    c = make_conventional_pam(4)
    snrs = np.linspace(0, 30, 31)
    res = {}
    res["aed_exact_ser x31"], _ = best_of(
        lambda: [ser.aed_exact_ser(1.0, 10 ** (-s / 10), c, 100) for s in snrs], repeat)
    res["ied_exact_ser x31"], _ = best_of(
        lambda: [ser.ied_exact_ser(1.0, 10 ** (-s / 10), c, 100) for s in snrs], repeat)
    res["ied_exact_ser_rayleigh x3"], _ = best_of(
        lambda: [ser.ied_exact_ser_rayleigh(1.0, 10 ** (-s / 10), c, 32) for s in (0, 6, 12)], 1)
    return res


def mc_timings(trials, threads, repeat=2):
    from edmimo import _accel
    from edmimo.channel import Rayleigh, Sparse
    from edmimo.constellation import make_conventional_pam
    from edmimo.detector import aed_gaussian_thresholds
    from edmimo.montecarlo import simulate_counts

    c = make_conventional_pam(4)
    backends = ["numba", "numpy"] if _accel.HAVE_NUMBA else ["numpy"]
    rows = []
    for label, ch, M in (("rayleigh M=100", Rayleigh(1.0), 100), ("sparse L=9 M=64", Sparse(64, 9), 64)):
        ts = [aed_gaussian_thresholds(1.0, 0.1, c, M, relaxed=True)]
        counts = {}
        for b in backends:
            run = lambda: simulate_counts(c, ch, M, 0.1, 12345, trials, ts, True, True,
                                          threads=threads, backend=b)[0]
            if b == "numba":
                simulate_counts(c, ch, M, 0.1, 12345, 64, ts, True, True, backend=b)  # compile
            t, counts[b] = best_of(run, repeat)
            rows.append((label, b, t, trials / t))
        if len(counts) == 2:
            assert np.array_equal(counts["numba"], counts["numpy"]), "backends disagree"
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=200_000)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--special-only", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.special_only:
        special_timings(1)  # warm up caches
        print(json.dumps(special_timings()))
        return

    print(f"Monte Carlo, {args.trials} trials, {args.threads} thread(s)")
    for label, b, t, rate in mc_timings(args.trials, args.threads):
        print(f"  {label:18s} {b:6s} {t:8.3f} s  {rate / 1e3:9.1f} k trials/s")

    print("special functions (4-PAM)")
    env = dict(os.environ)
    for name, flag in (("numba", ""), ("numpy", "1")):
        env["EDMIMO_PURE_NUMPY"] = flag
        out = subprocess.run([sys.executable, __file__, "--special-only"], env=env, check=True,
                             capture_output=True, text=True).stdout
        for k, t in json.loads(out.strip().splitlines()[-1]).items():
            print(f"  {k:26s} {name:6s} {t * 1e3:9.1f} ms")


if __name__ == "__main__":
    main()
