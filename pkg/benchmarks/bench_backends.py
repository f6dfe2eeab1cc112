"""Compare the compiled and pure-Python scoring kernels.

Times raw batch scoring and full ``sbs_step`` commits for each backend that
imports on this machine, and checks the two agree on the scores.

    python3 benchmarks/bench_backends.py --vocab 1000 --beam 10 --window 5
"""
import argparse
import statistics
import sys
import timeit

import numpy as np

from simul_decode.cli import bench_sbs
from simul_decode.scorer import HashModel, available_backends


def kernel_time(backend, vocab, rows, number):
    model = HashModel(7, vocab, backend=backend)
    prefixes = [[1 + (i * 7 + j) % (vocab - 1) for j in range(6)] for i in range(rows)]
    t = timeit.repeat(lambda: model.score_batch([1, 2, 3], prefixes), number=number, repeat=5)
    return min(t) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--vocab", type=int, default=1000)
    ap.add_argument("--beam", type=int, default=10)
    ap.add_argument("--window", type=int, default=5)
    ap.add_argument("--steps", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = available_backends()
    if len(backends) < 2:
        print(f"only {backends} available; build the extension to compare", file=sys.stderr)

    rows = []
    for backend in backends:
        k = kernel_time(backend, args.vocab, args.beam, number=20)
        runs = bench_sbs(args.vocab, args.beam, args.window, args.steps,
                         backend=backend, repeat=args.repeat)
        per_token = statistics.median(t for run in runs for t in run)
        rows.append((backend, k, per_token))
        print(f"{backend:>9}: score_batch({args.beam}x{args.vocab}) {k * 1e3:8.3f} ms   "
              f"sbs_step p50 {per_token * 1e3:8.3f} ms/token")

    if len(rows) == 2:
        (_, k0, s0), (_, k1, s1) = rows
        print(f"speedup: kernel x{k1 / k0:.1f}, sbs_step x{s1 / s0:.1f}")
        a = HashModel(3, args.vocab, alpha=1.7, backend=backends[0]).score_batch([4], [[1, 2], [9]])
        b = HashModel(3, args.vocab, alpha=1.7, backend=backends[1]).score_batch([4], [[1, 2], [9]])
        print(f"max |diff| between backends: {float(np.max(np.abs(a - b))):.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
