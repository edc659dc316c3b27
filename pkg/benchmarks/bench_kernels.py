"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--events N] [--repeat R]

Prints the best-of-R wall time per kernel and backend and checks that both
backends return identical results on the same inputs.
"""

import argparse
import timeit

import numpy as np

from pcf_pairs import kernels
from pcf_pairs.interferometer import FilteredBiphotonSpectrum, EXPERIMENT_GEOMETRY, coincidence_oracle
from pcf_pairs.mcsim import GateConfig, SourceParams, count_coincidences, emit_events


def cases(n_events, rng):
    ts = np.sort(rng.uniform(0.0, 1.0, n_events))
    ti = np.sort(ts + rng.normal(0.0, 2e-10, n_events))
    dt = rng.normal(0.0, 3e-9, n_events)
    kp = 2 * np.pi / 760.4e-9
    ks = kp * rng.uniform(1.13, 1.17, n_events)
    w = np.full(n_events, 1.0 / n_events)
    return {
        "nearest_pairs": lambda b: kernels.nearest_pairs(ts, ti, 1e-8, backend=b),
        "histogram_fixed": lambda b: kernels.histogram_fixed(dt, -1e-8, 1e-8, 400, backend=b),
        "spectral_average": lambda b: kernels.spectral_average(ks, w, kp, 0.6, 1.0, backend=b),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, float):
        return abs(a - b) <= 1e-12 * max(1.0, abs(a))
    return np.array_equal(a, b)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled kernels not built; timing the pure-Python backend only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'backend':<9}{'best [s]':>11}{'speedup':>10}")
    for name, fn in cases(args.events, rng).items():
        times = {}
        results = {}
        for b in backends:
            results[b] = fn(b)
            times[b] = min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat))
        for b in backends:
            print(f"{name:<20}{b:<9}{times[b]:>11.4f}{times['python'] / times[b]:>9.1f}x")
        if len(backends) == 2 and not same(results["python"], results["cython"]):
            raise SystemExit(f"{name}: backends disagree")

    # end-to-end: one Monte Carlo point and the 60 cm spectral oracle
    params = SourceParams.experiment(pair_rate=2e4)
    ev = emit_events(params, 0.0, 5.0, seed=1)
    sp = FilteredBiphotonSpectrum.for_pump(760.4, 660.0, 10.0)
    dx = np.linspace(0.0, 380.2e-9, 8, endpoint=False)
    for b in backends:
        t = min(timeit.repeat(lambda: count_coincidences(ev, GateConfig(1.5e-9), backend=b),
                              number=1, repeat=args.repeat))
        print(f"{'count_coincidences':<20}{b:<9}{t:>11.4f}   ({len(ev.times)} clicks)")
    t = min(timeit.repeat(lambda: coincidence_oracle(EXPERIMENT_GEOMETRY, sp, 1.0, dx), number=1,
                          repeat=args.repeat))
    print(f"{'oracle (8 points)':<20}{kernels.BACKEND:<9}{t:>11.4f}")


if __name__ == "__main__":
    main()
