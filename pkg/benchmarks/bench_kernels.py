"""Compiled kernels against the pure-numpy fallback.

Runs each path in its own interpreter (the backend is chosen at import time
from R2F2_NUMBA) and prints one row per kernel:

    python3 benchmarks/bench_kernels.py [--n 1000000] [--repeat 5]
"""
import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from r2f2 import USE_NUMBA, arrays, kernels as K

n, repeat, n_adapt = int(sys.argv[1]), int(sys.argv[2]), int(sys.argv[3])
rng = np.random.default_rng(0)
x = np.exp(rng.uniform(np.log(1e-4), np.log(1e4), n))
y = np.exp(rng.uniform(np.log(1e-4), np.log(1e4), n))

def best(fn):
    fn()                       # warm-up (JIT compile)
    ts = []
    for _ in range(repeat):
        t = time.perf_counter(); fn(); ts.append(time.perf_counter() - t)
    return min(ts)

def adaptive():
    st = K.new_state(0)
    arrays.adaptive_mul_array(x[:n_adapt], y[:n_adapt], st, 3, 9, 3, True)

res = {
    "numba": USE_NUMBA,
    "quantize E5M10": best(lambda: arrays.quantize_array(x, 5, 10)),
    "multiply <3,9,3>@1 approx": best(lambda: arrays.mul_array(x, y, 4, 11, 2, True)),
    "multiply E5M10 exact": best(lambda: arrays.mul_array(x, y, 5, 10, 0, False)),
    "adaptive <3,9,3> stream": best(adaptive),
}
print(json.dumps(res))
"""


def run_path(flag, n, repeat, n_adapt):
    env = dict(os.environ, R2F2_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", WORKER, str(n), str(repeat), str(n_adapt)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1_000_000, help="elements per static kernel call")
    ap.add_argument("--adaptive-n", type=int, default=100_000,
                    help="elements through the sequential adaptive unit")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    t0 = time.perf_counter()
    nb = run_path("1", args.n, args.repeat, args.adaptive_n)
    np_ = run_path("0", args.n, args.repeat, args.adaptive_n)
    if not nb.pop("numba"):
        print("numba unavailable; both columns use the fallback")
    np_.pop("numba")

    print(f"{'kernel':28s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s}")
    for k in nb:
        a, b = nb[k] * 1e3, np_[k] * 1e3
        print(f"{k:28s} {a:11.2f} {b:11.2f} {b / a:7.1f}x")
    print(f"(n={args.n}, adaptive n={args.adaptive_n}, best of {args.repeat}, "
          f"{time.perf_counter() - t0:.0f}s total)")


if __name__ == "__main__":
    main()
