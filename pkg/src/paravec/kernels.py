"""Hot numeric kernels: ragged mean-pooling, cosine matrices, gradient
scatter, and the Adam update.

The ragged and elementwise kernels each have a numba @njit implementation and
a pure-numpy fallback; the backend is chosen at import from the
PARAVEC_BACKEND environment variable ("numba" or "numpy"), defaulting to
numba when importable.  The dense cosine matrix is BLAS-bound and uses the
same vectorized implementation on both backends (a JIT loop cannot beat
dgemm).  Both paths accumulate in the same element order wherever feasible,
so results agree to the last few ulps; each path on its own is fully
deterministic, including under parallel numba execution (every output cell is
reduced serially).  ``benchmarks/bench_kernels.py`` compares the backends.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
    from numba import njit, prange

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

NUMBA = "numba"
NUMPY = "numpy"

_env = os.environ.get("PARAVEC_BACKEND", "").strip().lower()
if _env == NUMBA and not _HAVE_NUMBA:
    raise RuntimeError("PARAVEC_BACKEND=numba but numba is not importable")
if _env and _env not in (NUMBA, NUMPY):
    raise RuntimeError(f"PARAVEC_BACKEND must be 'numba' or 'numpy', got {_env!r}")
_BACKEND = _env or (NUMBA if _HAVE_NUMBA else NUMPY)


def active_backend() -> str:
    return _BACKEND


def set_backend(name: str) -> None:
    """Switch kernel backend at runtime (used by tests and the benchmark)."""
    global _BACKEND
    if name not in (NUMBA, NUMPY):
        raise ValueError(f"unknown backend {name!r}")
    if name == NUMBA and not _HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    _BACKEND = name


def set_threads(n: int) -> None:
    """Cap kernel worker threads; clamped to what the runtime allows."""
    if n < 1:
        raise ValueError("thread count must be >= 1")
    if _HAVE_NUMBA:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# numpy implementations


def _mean_rows_np(emb: np.ndarray, idx: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    n = offsets.size - 1
    out = np.zeros((n, emb.shape[1]), dtype=np.float64)
    counts = np.diff(offsets)
    if idx.size:
        np.add.at(out, np.repeat(np.arange(n), counts), emb[idx])
    nonzero = counts > 0
    out[nonzero] *= (1.0 / counts[nonzero])[:, None]
    return out


def _row_normalize_np(a: np.ndarray) -> np.ndarray:
    norms = np.sqrt((a * a).sum(axis=1))
    inv = np.zeros_like(norms)
    np.divide(1.0, norms, out=inv, where=norms > 0.0)
    return a * inv[:, None]


def _cosine_matrix_np(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = _row_normalize_np(a) @ _row_normalize_np(b).T
    np.clip(out, -1.0, 1.0, out=out)
    return out


def _scatter_rows_np(out: np.ndarray, idx: np.ndarray, offsets: np.ndarray, rows: np.ndarray) -> None:
    if idx.size == 0:
        return
    counts = np.diff(offsets)
    np.add.at(out, idx, rows[np.repeat(np.arange(rows.shape[0]), counts)])


def _adam_update_np(param, grad, m, v, lr, beta1, beta2, eps, t):
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * (grad * grad)
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)


# ---------------------------------------------------------------------------
# numba implementations

if _HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _mean_rows_nb(emb, idx, offsets):
        n = offsets.size - 1
        d = emb.shape[1]
        out = np.zeros((n, d), dtype=np.float64)
        for i in prange(n):
            lo, hi = offsets[i], offsets[i + 1]
            if hi == lo:
                continue
            for j in range(lo, hi):
                row = idx[j]
                for k in range(d):
                    out[i, k] += emb[row, k]
            inv = 1.0 / (hi - lo)
            for k in range(d):
                out[i, k] *= inv
        return out

    @njit(cache=True)
    def _scatter_rows_nb(out, idx, offsets, rows):
        # serial: multiple sentences may touch the same embedding row
        n = offsets.size - 1
        d = out.shape[1]
        for i in range(n):
            for j in range(offsets[i], offsets[i + 1]):
                row = idx[j]
                for k in range(d):
                    out[row, k] += rows[i, k]

    @njit(cache=True, parallel=True)
    def _adam_update_nb(param, grad, m, v, lr, beta1, beta2, eps, t):
        bc1 = 1.0 - beta1**t
        bc2 = 1.0 - beta2**t
        for i in prange(param.size):
            g = grad[i]
            m[i] = beta1 * m[i] + (1.0 - beta1) * g
            v[i] = beta2 * v[i] + (1.0 - beta2) * (g * g)
            m_hat = m[i] / bc1
            v_hat = v[i] / bc2
            param[i] -= lr * m_hat / (np.sqrt(v_hat) + eps)


# ---------------------------------------------------------------------------
# dispatchers


def mean_rows(emb: np.ndarray, idx: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Per-segment mean of emb rows; segment i is idx[offsets[i]:offsets[i+1]].

    Empty segments produce all-zero rows.
    """
    if _BACKEND == NUMBA:
        return _mean_rows_nb(emb, idx, offsets)
    return _mean_rows_np(emb, idx, offsets)


def cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All-pairs cosine of the rows of a and b; zero-norm rows yield 0.0.

    BLAS-bound on both backends.
    """
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return _cosine_matrix_np(a, b)


def scatter_rows(out: np.ndarray, idx: np.ndarray, offsets: np.ndarray, rows: np.ndarray) -> None:
    """out[idx[j]] += rows[i] for every j in segment i, in place."""
    if _BACKEND == NUMBA:
        _scatter_rows_nb(out, idx, offsets, np.ascontiguousarray(rows))
    else:
        _scatter_rows_np(out, idx, offsets, rows)


def adam_update(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
    t: int,
) -> None:
    """One bias-corrected Adam step, in place on param/m/v."""
    if _BACKEND == NUMBA:
        for arr in (param, grad, m, v):
            if not arr.flags.c_contiguous:  # reshape(-1) must stay a view
                raise ValueError("adam_update requires C-contiguous arrays")
        _adam_update_nb(
            param.reshape(-1), grad.reshape(-1), m.reshape(-1), v.reshape(-1),
            lr, beta1, beta2, eps, t,
        )
    else:
        _adam_update_np(param, grad, m, v, lr, beta1, beta2, eps, t)


def warmup() -> None:
    """Force one compilation of every numba kernel (no-op without numba)."""
    if not _HAVE_NUMBA:
        return
    emb = np.ones((3, 2))
    idx = np.array([0, 1, 2], dtype=np.int64)
    offsets = np.array([0, 2, 3], dtype=np.int64)
    _mean_rows_nb(emb, idx, offsets)
    _scatter_rows_nb(np.zeros((3, 2)), idx, offsets, np.ones((2, 2)))
    _adam_update_nb(np.ones(4), np.ones(4), np.zeros(4), np.zeros(4), 0.001, 0.9, 0.999, 1e-8, 1)
