"""Hot numeric kernels: numba-compiled loops with a pure-numpy fallback.

Two kernels live here because profiling shows they dominate runtime on larger
corpora: the softmax cross-entropy loss/gradient used by every trainable probe,
and the per-term BM25 score accumulation used by retrieval.

Backend selection happens once at import time. Setting the environment variable
``NEICAP_DISABLE_NUMBA`` to 1/true/yes/on forces the numpy path; otherwise numba
is used when importable. Both paths are individually deterministic; they are not
guaranteed bit-identical to each other (different summation order), so tests that
assert bitwise reproducibility must stay within one backend.

``benchmarks/bench_kernels.py`` compares the two paths head to head.
"""

from __future__ import annotations

import os

import numpy as np


def numba_disabled() -> bool:
    return os.environ.get("NEICAP_DISABLE_NUMBA", "").strip().lower() in {
        "1",
        "true",
        "yes",
        "on",
    }


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------


def softmax_xent_numpy(W, b, X, y, sample_weight, l2):
    """Weighted mean softmax cross-entropy with L2 penalty on W.

    Args:
        W: (k, d) class weight matrix.
        b: (k,) bias.
        X: (n, d) dense feature matrix.
        y: (n,) integer class indices.
        sample_weight: (n,) non-negative example weights.
        l2: ridge strength applied to W only (not b).

    Returns:
        (loss, grad_W, grad_b) with loss a float and gradients matching shapes.
    """
    n = X.shape[0]
    logits = X @ W.T + b
    logits -= logits.max(axis=1, keepdims=True)
    expz = np.exp(logits)
    probs = expz / expz.sum(axis=1, keepdims=True)
    wsum = float(sample_weight.sum())
    picked = np.clip(probs[np.arange(n), y], 1e-300, None)
    loss = float((sample_weight * -np.log(picked)).sum() / wsum)
    loss += 0.5 * l2 * float((W * W).sum())
    G = probs
    G[np.arange(n), y] -= 1.0
    G *= (sample_weight / wsum)[:, None]
    gW = G.T @ X + l2 * W
    gb = G.sum(axis=0)
    return loss, gW, gb


def bm25_accumulate_numpy(scores, doc_rows, tfs, len_norm, idf, k1):
    """Add one query term's contribution to ``scores`` in place.

    ``doc_rows`` holds the (unique) row index of each posting, ``tfs`` the term
    frequency, ``len_norm[row] = k1 * (1 - b + b * len/avg_len)``.
    """
    scores[doc_rows] += idf * tfs * (k1 + 1.0) / (tfs + len_norm[doc_rows])


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

try:  # pragma: no cover - import guard
    if numba_disabled():
        raise ImportError("numba disabled via NEICAP_DISABLE_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False

if HAS_NUMBA:

    @njit(cache=True)
    def _softmax_xent_numba(W, b, X, y, sample_weight, l2):
        # The matmuls go through BLAS (numba's np.dot); the softmax, gather,
        # and scaling stay as fused loops to avoid temporaries.
        n, d = X.shape
        k = W.shape[0]
        wsum = 0.0
        for i in range(n):
            wsum += sample_weight[i]
        G = np.dot(X, W.T)  # logits, reused as the scaled gradient matrix
        loss = 0.0
        for i in range(n):
            m = G[i, 0] + b[0]
            for c in range(k):
                G[i, c] += b[c]
                if G[i, c] > m:
                    m = G[i, c]
            se = 0.0
            for c in range(k):
                G[i, c] = np.exp(G[i, c] - m)
                se += G[i, c]
            wi = sample_weight[i] / wsum
            p = G[i, y[i]] / se
            if p < 1e-300:
                p = 1e-300
            loss += -np.log(p) * wi
            for c in range(k):
                G[i, c] = (G[i, c] / se - (1.0 if c == y[i] else 0.0)) * wi
        gW = np.dot(np.ascontiguousarray(G.T), X)
        gb = np.zeros(k)
        for i in range(n):
            for c in range(k):
                gb[c] += G[i, c]
        for c in range(k):
            for j in range(d):
                loss += 0.5 * l2 * W[c, j] * W[c, j]
                gW[c, j] += l2 * W[c, j]
        return loss, gW, gb

    @njit(cache=True)
    def _bm25_accumulate_numba(scores, doc_rows, tfs, len_norm, idf, k1):
        for i in range(doc_rows.shape[0]):
            r = doc_rows[i]
            tf = tfs[i]
            scores[r] += idf * tf * (k1 + 1.0) / (tf + len_norm[r])

    def softmax_xent_numba(W, b, X, y, sample_weight, l2):
        loss, gW, gb = _softmax_xent_numba(W, b, X, y, sample_weight, l2)
        return float(loss), gW, gb

    bm25_accumulate_numba = _bm25_accumulate_numba

    softmax_xent = softmax_xent_numba
    bm25_accumulate = bm25_accumulate_numba
else:
    softmax_xent_numba = None
    bm25_accumulate_numba = None

    softmax_xent = softmax_xent_numpy
    bm25_accumulate = bm25_accumulate_numpy


def backend_name() -> str:
    return "numba" if HAS_NUMBA else "numpy"


def warmup() -> None:
    """Trigger JIT compilation on tiny inputs so timed runs exclude compile cost."""
    if not HAS_NUMBA:
        return
    X = np.ones((2, 3))
    softmax_xent(np.zeros((2, 3)), np.zeros(2), X, np.array([0, 1]), np.ones(2), 0.0)
    bm25_accumulate(
        np.zeros(2), np.array([0, 1]), np.array([1.0, 2.0]), np.ones(2), 1.0, 1.2
    )
