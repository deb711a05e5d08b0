"""Compare the compiled growth kernel against the numpy fallback.

Both backends produce bit-identical output (the test suite checks
this), so the only question is speed.  Run from the repository root:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --replicas 20000 --generations 12

The numbers are medians over --repeat runs of the same seeded
workload; the first run per backend is discarded as warmup.
"""

import argparse
import statistics
import time

import numpy as np

from ssbranch import kernels, replaw, rngstream

MIX = replaw.DiscreteMixture(components=(
    (0.2, (1.3, 0.5)), (0.8, (0.4,))))
UB = replaw.UniformBinary()


def _time(fn, repeat):
    fn()  # warmup, also JIT-free sanity check
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def bench_cascade(mod, law, n_replicas, n_gens, seed, repeat):
    kind, cum, offs, atoms = kernels.pack_law(law)
    sizes = np.ones(n_replicas)
    hashes = rngstream.replica_root_hashes(seed, 0, n_replicas)
    powers = np.array([0.5, 1.0])

    def work():
        mod.cascade_stats(kind, cum, offs, atoms, sizes.copy(),
                          hashes.copy(), n_gens, powers, 10 ** 8)
    return _time(work, repeat)


def bench_time(mod, law, n_replicas, horizon, seed, repeat):
    kind, cum, offs, atoms = kernels.pack_law(law)
    sizes = np.ones(n_replicas)
    hashes = rngstream.replica_root_hashes(seed, 0, n_replicas)
    births = np.zeros(n_replicas)
    owners = np.arange(n_replicas, dtype=np.int64)
    grid = np.array([horizon / 2.0, horizon])
    powers = np.array([1.0])

    def work():
        mod.time_stats(kind, cum, offs, atoms, sizes.copy(),
                       hashes.copy(), births.copy(), owners.copy(),
                       n_replicas, 1.0, grid, powers, 10 ** 8, False)
    return _time(work, repeat)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicas", type=int, default=10000)
    ap.add_argument("--generations", type=int, default=10)
    ap.add_argument("--horizon", type=float, default=20.0)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = kernels.backends()
    if len(backends) < 2:
        print("only the python backend is importable; build the "
              "extension to compare")
    workloads = [
        ("cascade mixed", lambda mod: bench_cascade(
            mod, MIX, args.replicas, args.generations, args.seed,
            args.repeat)),
        ("cascade uniform", lambda mod: bench_cascade(
            mod, UB, args.replicas, args.generations, args.seed,
            args.repeat)),
        ("time-grid mixed", lambda mod: bench_time(
            mod, MIX, args.replicas, args.horizon, args.seed,
            args.repeat)),
    ]

    width = max(len(n) for n, _ in workloads)
    header = f"{'workload':<{width}}  " + "  ".join(
        f"{name:>10}" for name in backends)
    if len(backends) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, runner in workloads:
        times = {name: runner(mod) for name, mod in backends.items()}
        row = f"{label:<{width}}  " + "  ".join(
            f"{times[name] * 1e3:>8.2f}ms" for name in backends)
        if "c" in times and "python" in times:
            row += f"  {times['python'] / times['c']:>7.2f}x"
        print(row)


if __name__ == "__main__":
    main()
