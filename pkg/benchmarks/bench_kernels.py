"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--points N] [--steps S] [--repeat R]
"""

import argparse
import timeit

import numpy as np

from modalstab import _kernels_py

try:
    from modalstab import _kernels
except ImportError:  # extension not built
    _kernels = None


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, default=50_000, help="characteristic-determinant evaluations")
    p.add_argument("--steps", type=int, default=20_000, help="propagator steps")
    p.add_argument("--size", type=int, default=200, help="state dimension for propagation")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    lam = np.linspace(-2000.0, 40.0, args.points)
    rng = np.random.default_rng(0)
    A = rng.standard_normal((args.size, args.size)) / np.sqrt(args.size)
    step = np.ascontiguousarray(0.9 * A / np.linalg.norm(A, 2))
    x0 = rng.standard_normal(args.size)

    cases = {
        "char_det_batch": (lambda k: k.char_det_batch(lam, 5.0, 10.0)),
        "propagate": (lambda k: k.propagate(step, x0, args.steps)),
    }
    print(f"{'kernel':<16}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}{'max rel diff':>14}")
    for name, call in cases.items():
        t_py = _best(lambda: call(_kernels_py), args.repeat)
        if _kernels is None:
            print(f"{name:<16}{t_py:>12.4f}{'n/a':>14}{'':>10}{'':>14}")
            continue
        t_c = _best(lambda: call(_kernels), args.repeat)
        a, b = np.asarray(call(_kernels_py)), np.asarray(call(_kernels))
        diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
        print(f"{name:<16}{t_py:>12.4f}{t_c:>14.4f}{t_py / t_c:>10.1f}{diff:>14.2e}")


if __name__ == "__main__":
    main()
