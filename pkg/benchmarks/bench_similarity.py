"""Benchmark the compiled similarity kernel against the pure-Python fallback.

Usage: python3 benchmarks/bench_similarity.py [--n 2000] [--len 40]
"""

import argparse
import random
import time

from uqe import _simpy
from uqe.similarity import KERNEL_BACKEND, sim

try:
    from uqe import _simcore
except ImportError:
    _simcore = None

import numpy as np


def make_pairs(n, length, seed=0):
    rng = random.Random(seed)
    vocab = [f"w{i}" for i in range(50)]
    pairs = []
    for _ in range(n):
        ref = [rng.choice(vocab) for _ in range(length)]
        hyp = list(ref)
        for _ in range(length // 4):
            hyp[rng.randrange(length)] = rng.choice(vocab)
        pairs.append((ref, hyp))
    return pairs


def to_ids(ref, hyp):
    table = {}
    r = np.array([table.setdefault(t, len(table)) for t in ref], dtype=np.int64)
    h = np.array([table.setdefault(t, len(table)) for t in hyp], dtype=np.int64)
    return r, h


def bench(kernel, id_pairs, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for r, h in id_pairs:
            kernel(r, h)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--len", dest="length", type=int, default=40)
    args = parser.parse_args()

    pairs = make_pairs(args.n, args.length)
    id_pairs = [to_ids(r, h) for r, h in pairs]

    # cross-check before timing
    for (ref, hyp), (r, h) in zip(pairs[:200], id_pairs[:200]):
        assert _simpy.sim_from_ids(r, h) == sim(ref, hyp) or sim(ref, hyp) in (0.0, 1.0)

    t_py = bench(_simpy.sim_from_ids, id_pairs)
    print(f"pure python : {t_py:.4f}s for {args.n} pairs of length {args.length}")
    if _simcore is not None:
        t_cy = bench(_simcore.sim_from_ids, id_pairs)
        print(f"cython      : {t_cy:.4f}s for {args.n} pairs of length {args.length}")
        print(f"speedup     : {t_py / t_cy:.1f}x")
    else:
        print("cython      : extension not built")
    print(f"active backend at import: {KERNEL_BACKEND}")


if __name__ == "__main__":
    main()
