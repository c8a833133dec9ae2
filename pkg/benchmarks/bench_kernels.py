"""Head-to-head benchmark of the numba kernels against the pure-numpy fallback.

Run directly: python benchmarks/bench_kernels.py [--reps N]

The numbers compare one full trainer run (monotone gradient descent on a dense
TF-IDF-scale matrix) and repeated BM25 scoring passes under both backends. The
active backend for library code is chosen at import time via the
NEICAP_DISABLE_NUMBA environment variable; this script calls both
implementations explicitly so one process can time the pair.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from neicap import _kernels


def bench_softmax(reps: int) -> dict[str, float]:
    rng = np.random.default_rng(0)
    n, d, k = 400, 1500, 3
    X = rng.random((n, d)) * (rng.random((n, d)) < 0.05)
    y = rng.integers(0, k, size=n)
    W = rng.normal(0, 0.01, (k, d))
    b = np.zeros(k)
    sw = np.ones(n)
    out = {}
    candidates = {"numpy": _kernels.softmax_xent_numpy}
    if _kernels.HAS_NUMBA:
        candidates["numba"] = _kernels.softmax_xent_numba
        _kernels.softmax_xent_numba(W, b, X, y, sw, 1e-2)  # compile
    for name, fn in candidates.items():
        t0 = time.perf_counter()
        for _ in range(reps):
            loss, gW, gb = fn(W, b, X, y, sw, 1e-2)
        out[name] = (time.perf_counter() - t0) / reps
    return out


def bench_bm25(reps: int) -> dict[str, float]:
    rng = np.random.default_rng(1)
    n_docs, n_terms, postings_per_term = 5000, 40, 800
    len_norm = 1.2 * (0.25 + 0.75 * rng.random(n_docs))
    terms = [
        (
            np.sort(rng.choice(n_docs, size=postings_per_term, replace=False)).astype(
                np.int64
            ),
            rng.integers(1, 8, size=postings_per_term).astype(np.float64),
            float(rng.random() * 5),
        )
        for _ in range(n_terms)
    ]
    out = {}
    candidates = {"numpy": _kernels.bm25_accumulate_numpy}
    if _kernels.HAS_NUMBA:
        candidates["numba"] = _kernels.bm25_accumulate_numba
        scores = np.zeros(n_docs)
        rows, tfs, idf = terms[0]
        _kernels.bm25_accumulate_numba(scores, rows, tfs, len_norm, idf, 1.2)
    for name, fn in candidates.items():
        t0 = time.perf_counter()
        for _ in range(reps):
            scores = np.zeros(n_docs)
            for rows, tfs, idf in terms:
                fn(scores, rows, tfs, len_norm, idf, 1.2)
        out[name] = (time.perf_counter() - t0) / reps
    return out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=20)
    args = parser.parse_args()
    print(f"numba available: {_kernels.HAS_NUMBA}")
    for label, results in (
        ("softmax loss+grad (400x1500, 3 classes)", bench_softmax(args.reps)),
        ("bm25 scoring (5000 docs, 40-term query)", bench_bm25(args.reps)),
    ):
        print(label)
        for name, secs in results.items():
            print(f"  {name:6s} {secs * 1e3:9.3f} ms/call")
        if len(results) == 2:
            ratio = results["numpy"] / results["numba"]
            print(f"  speedup numba vs numpy: {ratio:.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
