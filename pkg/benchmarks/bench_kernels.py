"""Time the compiled and pure-Python trial kernels on identical pre-drawn inputs.

    python benchmarks/bench_kernels.py [--trials 2000] [--snr-db 0 10 20]
"""

import argparse
import math
import time

import numpy as np

from race_mmwave import engine
from race_mmwave.array_channel import NoiseModel
from race_mmwave.codebook import StagePlan

SCHEMES = {
    "fixed [2]*6": (StagePlan([2] * 6, 64), False),
    "fixed [16,2,2]": (StagePlan([16, 2, 2], 64), False),
    "race [2]*6": (StagePlan([2] * 6, 64), True),
}


def inputs(plan, adaptive, noise, trials, seed=0):
    cap = engine.slot_capacity(plan, adaptive, 264)
    tx = np.empty(trials, np.int64)
    rx = np.empty(trials, np.int64)
    alpha = np.empty(trials, np.complex128)
    buf = np.empty((trials, cap), np.complex128)
    for i in range(trials):
        tx[i], rx[i], alpha[i], buf[i] = engine.draw_trial(engine.trial_rng(seed, 0, 0, i),
                                                         plan.n_antennas, noise, cap)
    return tx, rx, alpha, buf


def best_of(fn, repeat=3):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--snr-db", type=float, nargs="+", default=[0.0, 10.0, 20.0])
    args = ap.parse_args()
    backends = engine.available_backends()
    print(f"backends: {backends} (default {engine.BACKEND}), {args.trials} trials per cell")
    print(f"{'scheme':<16}{'snr':>6}" + "".join(f"{b + ' us/trial':>22}" for b in backends)
          + f"{'speedup':>10}")
    for name, (plan, adaptive) in SCHEMES.items():
        for snr in args.snr_db:
            noise = NoiseModel.from_snr_db(snr)
            tx, rx, alpha, buf = inputs(plan, adaptive, noise, args.trials)
            cost = {}
            for b in backends:
                run = engine._BACKENDS[b]
                cost[b] = best_of(lambda: run(np.asarray(plan.k_vector), 64, tx, rx, alpha, buf,
                                              1.0, noise.noise_spectral, 1.0, 1e-2, 264,
                                              adaptive)) / args.trials * 1e6
            speed = (f"{cost['python'] / cost['compiled']:>9.1f}x" if "compiled" in cost
                     else f"{'-':>10}")
            print(f"{name:<16}{snr:>6g}" + "".join(f"{cost[b]:>22.2f}" for b in backends) + speed)
    t0 = time.perf_counter()
    for i in range(args.trials):
        engine.trial_rng(0, 0, 0, i)
    seed_cost = (time.perf_counter() - t0) / args.trials * 1e6
    print(f"per-trial generator construction: {seed_cost:.2f} us (not included above)")


if __name__ == "__main__":
    main()
