"""Row-parallel numba kernels for the embedding loop.

Every kernel writes each output row from exactly one worker and reads its
inputs in a fixed order, so results are bitwise independent of the number of
threads. Column reductions go through fixed-size row blocks whose partial sums
are combined sequentially for the same reason.
"""

from __future__ import annotations

import os

# Reserve a larger pool than the default so --threads can exceed the core
# count; the active count is lowered again right after import.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(os.cpu_count() or 1, 16)))
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp tbb workqueue")

import numba  # noqa: E402
import numpy as np  # noqa: E402
from numba import njit, prange  # noqa: E402

THREADS_ENV = "RFA_NUM_THREADS"
EXP_CAP = 30.0
REDUCE_BLOCK = 4096


def max_threads() -> int:
    """Size of the worker pool; ``--threads`` values above it are clamped."""
    return numba.config.NUMBA_NUM_THREADS


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return int(env)
    return os.cpu_count() or 1


def set_threads(k: int | None) -> int:
    """Set the worker count (clamped to the pool size); return the value used."""
    k = default_threads() if k is None else int(k)
    k = max(1, min(k, max_threads()))
    numba.set_num_threads(k)
    return k


def get_threads() -> int:
    return numba.get_num_threads()


@njit(parallel=True, cache=True)
def propagate(indptr, indices, scale, x, out, delta, alpha):
    n, d = x.shape
    for i in prange(n):
        for c in range(d):
            out[i, c] = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            sj = scale[j]
            for c in range(d):
                out[i, c] += sj * x[j, c]
        w = alpha * scale[i]
        for c in range(d):
            out[i, c] = delta * x[i, c] + w * out[i, c]


@njit(parallel=True, cache=True)
def tanh_inplace(x):
    n, d = x.shape
    for i in prange(n):
        for c in range(d):
            x[i, c] = np.tanh(x[i, c])


@njit(parallel=True, cache=True)
def exp_inplace(x, cap):
    n, d = x.shape
    for i in prange(n):
        for c in range(d):
            v = x[i, c]
            if v > cap:
                v = cap
            x[i, c] = np.exp(v)


@njit(parallel=True, cache=True)
def l2_rows_inplace(x):
    n, d = x.shape
    for i in prange(n):
        # scale by the largest entry first so tiny or huge rows do not under/overflow
        big = 0.0
        for c in range(d):
            a = abs(x[i, c])
            if a > big:
                big = a
        if big > 0.0:
            s = 0.0
            for c in range(d):
                v = x[i, c] / big
                s += v * v
            r = np.sqrt(s)
            for c in range(d):
                x[i, c] = (x[i, c] / big) / r


@njit(parallel=True, cache=True)
def _block_column_sums(x, shift, square, block):
    n, d = x.shape
    nblocks = (n + block - 1) // block
    partial = np.zeros((nblocks, d))
    for b in prange(nblocks):
        lo = b * block
        hi = min(lo + block, n)
        for i in range(lo, hi):
            for c in range(d):
                v = x[i, c] - shift[c]
                if square:
                    v = v * v
                partial[b, c] += v
    return partial


@njit(cache=True)
def _reduce_blocks(partial):
    nb, d = partial.shape
    total = np.zeros(d)
    for b in range(nb):
        for c in range(d):
            total[c] += partial[b, c]
    return total


@njit(parallel=True, cache=True)
def _apply_affine(x, shift, inv_scale):
    n, d = x.shape
    for i in prange(n):
        for c in range(d):
            x[i, c] = (x[i, c] - shift[c]) * inv_scale[c]


def zscore_cols_inplace(x, block=REDUCE_BLOCK):
    """Centre each column and divide by its population std; constant columns become 0."""
    n, d = x.shape
    zero = np.zeros(d)
    mean = _reduce_blocks(_block_column_sums(x, zero, False, block)) / n
    var = _reduce_blocks(_block_column_sums(x, mean, True, block)) / n
    std = np.sqrt(var)
    # relative test: rounding leaves a tiny non-zero spread on constant columns
    scale = np.maximum(np.abs(mean), 1.0)
    const = std <= 1e-12 * scale
    inv = np.where(const, 0.0, 1.0 / np.where(const, 1.0, std))
    _apply_affine(x, mean, inv)


@njit(parallel=True, cache=True)
def count_nonfinite(x):
    n, d = x.shape
    bad = 0
    for i in prange(n):
        for c in range(d):
            if not np.isfinite(x[i, c]):
                bad += 1
    return bad


set_threads(None)
