"""Time the enumeration kernels against each other.

Runs every available backend over the same operand sets and reports the
mean best-of-N time for a full profile pass (score every expression for
every target in 1..100) and a single-target solution scan. The fallback
is pure numpy; the compiled backend is the Cython extension. Both must
produce identical tables — this script checks that while timing.

    python3 benchmarks/bench_kernel.py --sets 8 --repeats 5 --seed 3
"""

import argparse
import time

from mathador._kernel import available_backends, get_backend
from mathador.generator import sample_operands
from mathador.rng import SplitMix64, derive


def best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sets", type=int, default=8, help="operand sets to time")
    parser.add_argument("--repeats", type=int, default=5, help="repeats per set, best kept")
    parser.add_argument("--seed", type=int, default=3)
    parser.add_argument("--target", type=int, default=24, help="target for the solution scan")
    args = parser.parse_args(argv)

    operand_sets = [
        sample_operands(SplitMix64(derive(args.seed, i))) for i in range(args.sets)
    ]
    backends = available_backends()
    timings: dict[str, dict[str, float]] = {}
    profiles: dict[str, list] = {}

    for name in backends:
        kernel = get_backend(name)
        profile_total = scan_total = 0.0
        profiles[name] = []
        for values in operand_sets:
            profile_total += best_of(lambda: kernel.profile_targets(values, 1, 100),
                                     args.repeats)
            scan_total += best_of(lambda: kernel.solution_hits(values, args.target),
                                  args.repeats)
            profiles[name].append(kernel.profile_targets(values, 1, 100))
        timings[name] = {
            "profile": profile_total / args.sets,
            "scan": scan_total / args.sets,
        }

    if len(backends) == 2:
        for got, want in zip(profiles["compiled"], profiles["fallback"]):
            for a, b in zip(got, want):
                if (a != b).any():
                    raise SystemExit("backend disagreement: compiled != fallback")

    print(f"operand sets: {args.sets}, repeats: {args.repeats}, "
          f"seed: {args.seed}, scan target: {args.target}")
    print(f"{'backend':<10} {'profile pass':>14} {'solution scan':>14}")
    for name in backends:
        t = timings[name]
        print(f"{name:<10} {t['profile'] * 1e3:>11.2f} ms {t['scan'] * 1e3:>11.2f} ms")
    if len(backends) == 2:
        speed = {k: timings["fallback"][k] / timings["compiled"][k]
                 for k in ("profile", "scan")}
        print(f"{'speedup':<10} {speed['profile']:>12.1f}x {speed['scan']:>12.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
