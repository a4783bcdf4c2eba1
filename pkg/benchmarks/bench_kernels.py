"""Compiled kernels vs their pure-Python fallbacks.

    python3 benchmarks/bench_kernels.py [--sizes 1000,10000,100000] [--repeat 3]

Prints the best-of-``repeat`` wall time per kernel and size and the speed-up.
"""

import argparse
import json
import sys
import time

import numpy as np

from fsm_jacobi import _core


def _cases(n, rng):
    sub, main, sup = (rng.normal(size=n) + 1j * rng.normal(size=n) for _ in range(3))
    rhs = rng.normal(size=n) + 0j
    out = np.empty(n, dtype=np.complex128)
    dist = rng.uniform(0, 1, n)
    dist[-40:] = 0.0  # one qualifying run at the very end: worst case for the scan
    return {
        "thomas": lambda m: m.thomas(sub, main + 6, sup, rhs, out, 1e-12),
        "upper3": lambda m: m.upper3(sub + 6, main, sup, rhs, out),
        "lower3": lambda m: m.lower3(sub, main, sup + 6, rhs, out),
        "scan_right": lambda m: m.scan_right(dist, 0.05, 30, 0),
        "scan_left": lambda m: m.scan_left(dist[::-1].copy(), 0.05, 30, n - 1),
    }


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="1000,10000,100000")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--json", help="also write the results here")
    args = p.parse_args(argv)

    impls = _core.implementations()
    if "compiled" not in impls:
        print("compiled extension not available; build with `pip install -e .`", file=sys.stderr)
    rng = np.random.default_rng(0)
    rows = []
    print(f"{'kernel':<11} {'n':>8} " + " ".join(f"{k:>12}" for k in impls) + f" {'speed-up':>9}")
    for n in (int(s) for s in args.sizes.split(",")):
        for name, call in _cases(n, rng).items():
            t = {k: _best(lambda: call(m), args.repeat) for k, m in impls.items()}
            speed = t["python"] / t["compiled"] if "compiled" in t else float("nan")
            rows.append({"kernel": name, "n": n, **{f"{k}_s": v for k, v in t.items()},
                         "speedup": speed})
            print(f"{name:<11} {n:>8} " + " ".join(f"{t[k]:>12.2e}" for k in impls)
                  + f" {speed:>8.0f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
