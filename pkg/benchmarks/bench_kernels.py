"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each variant is called once before timing so JIT compilation is excluded.
"""

import argparse
import timeit

import numpy as np

from nestpol import _kernels
from nestpol.chebyshev import chebyshev_rule


def workloads(rng):
    rule = chebyshev_rule(20)
    nodes, weights = np.ascontiguousarray(rule.points), np.ascontiguousarray(rule.weights)
    values = rng.normal(size=21) + 1j * rng.normal(size=21)
    z = rng.uniform(-1.5, 1.5, 20_000) + 1j * rng.uniform(-0.5, 0.5, 20_000)
    x = np.linspace(-1, 1, 20_000)
    src = np.sort(rng.uniform(0, 1, 4000))
    tgt = np.sort(rng.uniform(0, 1, 4000))
    masses = rng.uniform(-1, 1, 4000).astype(complex)
    return {
        "barycentric_eval": (z, nodes, weights, values, 2e-14),
        "lebesgue_function": (x, nodes, weights),
        "lagrange_matrix": (x, nodes, weights),
        "direct_sum": (tgt, src, masses, _kernels.KERNEL_INVERSE, 0.0),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    jobs = workloads(np.random.default_rng(0))
    backends = sorted(_kernels.VARIANTS)
    print("kernel," + ",".join(f"{b}_ms" for b in backends))
    for name, call_args in jobs.items():
        times = []
        for backend in backends:
            fn = _kernels.VARIANTS[backend][name]
            fn(*call_args)
            best = min(timeit.repeat(lambda: fn(*call_args), number=1, repeat=args.repeat))
            times.append(f"{1e3 * best:.3f}")
        print(name + "," + ",".join(times))


if __name__ == "__main__":
    main()
