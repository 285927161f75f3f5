"""Benchmark the compiled Hamming kernel against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--slides 1000] [--barcodes 80]
       [--width 1023] [--repeat 3]
"""

import argparse
import time

import numpy as np

from bobsearch import _kernels_py

try:
    from bobsearch import _kernels
except ImportError:
    _kernels = None


def make_bunches(rng, n_slides, n_barcodes, width):
    nwords = (width + 63) // 64
    pad = nwords * 64 - width
    mask = np.uint64((1 << (64 - pad)) - 1) if pad else np.uint64(2**64 - 1)
    out = []
    for _ in range(n_slides):
        words = rng.integers(0, 2**64, size=(n_barcodes, nwords), dtype=np.uint64)
        words[:, -1] &= mask
        out.append(np.ascontiguousarray(words))
    return out


def run_query(impl, query, targets):
    return [float(np.median(impl.min_hamming(query, t))) for t in targets]


def bench(impl, name, query, targets, repeat):
    best = min(
        timeit_once(impl, query, targets) for _ in range(repeat)
    )
    pairs = len(targets) * query.shape[0] * targets[0].shape[0]
    print(f"{name:>10}: {best * 1000:8.1f} ms/query  ({pairs / best / 1e6:7.1f} M barcode pairs/s)")
    return best


def timeit_once(impl, query, targets):
    start = time.perf_counter()
    run_query(impl, query, targets)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--slides", type=int, default=1000)
    parser.add_argument("--barcodes", type=int, default=80)
    parser.add_argument("--width", type=int, default=1023)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    bunches = make_bunches(rng, args.slides, args.barcodes, args.width)
    query, targets = bunches[0], bunches[1:]
    print(
        f"query of {args.barcodes} barcodes vs {len(targets)} slides "
        f"x {args.barcodes} barcodes, width {args.width}"
    )

    t_py = bench(_kernels_py, "python", query, targets, args.repeat)
    if _kernels is None:
        print("  compiled: not built")
        return
    t_cy = bench(_kernels, "compiled", query, targets, args.repeat)
    if run_query(_kernels, query, targets[:20]) != run_query(_kernels_py, query, targets[:20]):
        raise SystemExit("backend results disagree")
    print(f"{'speedup':>10}: {t_py / t_cy:8.1f}x")


if __name__ == "__main__":
    main()
