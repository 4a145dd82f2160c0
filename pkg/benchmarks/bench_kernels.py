"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from qdtree import _backend

PHI_MIN = 1e-14


def cases(rng):
    m = 2000
    u = rng.uniform(-1, 1, m)
    v = rng.uniform(-1, 1, m) * np.sqrt(1 - u ** 2)
    w = rng.random(m)
    w /= w.sum()
    n = 300
    perm = rng.permutation(m)
    cum = np.cumsum(w[perm])
    off_s = rng.random((n, n))
    off_p = rng.random((n, n))
    L = 2 ** 14 + 1
    p = rng.random(L)
    a = rng.random(L) * 0.1
    b = rng.random(L) * 0.1
    return {
        "pair_branch (2000^2 pairs)": ("pair_branch", (u, v, w, PHI_MIN)),
        "compressed_rounds (N=300)": ("compressed_rounds", (u, v, cum, perm, off_s, off_p, PHI_MIN)),
        "coarse_convolve (L=16385)": ("coarse_convolve", (p, a, b)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _backend.compiled_kernels is None:
        print("compiled extension not built; only the python backend is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'python [s]':>11s} {'compiled [s]':>13s} {'speedup':>8s}")
    for label, (name, args_) in cases(rng).items():
        tp = min(timeit.repeat(lambda: getattr(_backend.python_kernels, name)(*args_),
                               number=1, repeat=args.repeat))
        if _backend.compiled_kernels is not None:
            tc = min(timeit.repeat(lambda: getattr(_backend.compiled_kernels, name)(*args_),
                                   number=1, repeat=args.repeat))
            print(f"{label:32s} {tp:11.4f} {tc:13.4f} {tp / tc:8.1f}x")
        else:
            print(f"{label:32s} {tp:11.4f} {'-':>13s}")


if __name__ == "__main__":
    main()
