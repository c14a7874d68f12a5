"""Compare the compiled and numpy RK4 chain kernels.

    python benchmarks/bench_kernels.py [--steps N] [--batch B] [--repeat R]
"""
import argparse
import timeit

import numpy as np

from spinprobe import _rk4_py

try:
    from spinprobe import _rk4
except ImportError:
    _rk4 = None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--batch", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    up = rng.uniform(0.1, 3.0, (args.batch, 6))
    down = rng.uniform(0.1, 3.0, (args.batch, 6))
    p0 = np.tile(np.eye(7)[5], (args.batch, 1))
    h = np.full(args.batch, 1e-3)
    short = np.full(args.batch, 1000, dtype=np.int64)

    cases = {
        f"single chain, {args.steps} steps": lambda m: m.rk4_chain(up[0], down[0], p0[0], 1e-3, args.steps),
        f"batch of {args.batch}, 1000 steps each": lambda m: m.rk4_chain_batch(up, down, p0, h, short),
    }
    backends = [("python", _rk4_py)] + ([("cython", _rk4)] if _rk4 is not None else [])
    if _rk4 is None:
        print("compiled extension not built; timing the numpy fallback only")
    print(f"{'case':40s} " + " ".join(f"{name:>12s}" for name, _ in backends) + "      speedup")
    for label, fn in cases.items():
        times = [min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) for _, mod in backends]
        results = [fn(mod) for _, mod in backends]
        if len(results) == 2:
            assert np.allclose(results[0], results[1], atol=1e-12)
        speed = f"{times[0] / times[1]:10.1f}x" if len(times) == 2 else ""
        print(f"{label:40s} " + " ".join(f"{t * 1e3:10.2f}ms" for t in times) + f"  {speed}")
    t = min(timeit.repeat(lambda: _rk4_py.rk4_chain_power(up[0], down[0], p0[0], 1e-3, 10 ** 7),
                          number=1, repeat=args.repeat))
    print(f"{'single chain, 1e7 steps by squaring':40s} {t * 1e3:10.2f}ms")


if __name__ == "__main__":
    main()
