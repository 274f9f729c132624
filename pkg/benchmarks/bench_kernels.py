"""Time the compiled loss/gradient kernel against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeats 20]
"""

import argparse
import timeit

import numpy as np

from relu_recover import _fallback
from relu_recover.numerics import RngStream

try:
    from relu_recover import _kernels
except ImportError:
    _kernels = None

SIZES = [(10, 5, 500), (10, 5, 5000), (50, 5, 2500), (100, 5, 5000), (10, 5, 100_000)]


def _case(d, K, N):
    r = RngStream(d * 1_000_003 + N)
    X = np.ascontiguousarray(r.normal((N, d)))
    W = r.normal((d, K))
    y = np.maximum(X @ r.normal((d, K)), 0.0).sum(axis=1)
    return X, y, W


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the numpy fallback is timed")
    print(f"{'d':>4} {'K':>3} {'N':>7} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8} {'max |dG|':>10}")
    for d, K, N in SIZES:
        X, y, W = _case(d, K, N)
        t_np = min(timeit.repeat(lambda: _fallback.loss_and_grad(X, y, W), number=1, repeat=args.repeats))
        if _kernels is None:
            print(f"{d:>4} {K:>3} {N:>7} {1e3 * t_np:>10.3f} {'-':>10} {'-':>8} {'-':>10}")
            continue
        t_cy = min(timeit.repeat(lambda: _kernels.loss_and_grad(X, y, W), number=1, repeat=args.repeats))
        gap = np.abs(_fallback.loss_and_grad(X, y, W)[1] - _kernels.loss_and_grad(X, y, W)[1]).max()
        print(f"{d:>4} {K:>3} {N:>7} {1e3 * t_np:>10.3f} {1e3 * t_cy:>10.3f} {t_np / t_cy:>8.2f} {gap:>10.1e}")


if __name__ == "__main__":
    main()
