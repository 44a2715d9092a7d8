"""Hot numerical kernels: bitwise two-site updates on 2^n coefficient vectors.

Every moment-space vector is a float64 array of length 2^n, bit i of the
index holding site i's label (0 = identity, 1 = swap).  A two-site update
mixes the four index blocks selected by a pair of bits; a graph step
averages that update over the edge set.  These loops dominate runtime, so
they are numba-jitted by default.  Set TWODESIGN_NO_NUMBA=1 to select the
pure-numpy fallback path (same arithmetic, same results); see
benchmarks/bench_kernels.py for a speed comparison of the two paths.

Batched variants operate on (m, 2^n) arrays, one state per row.  Rows are
independent, so the jitted kernels parallelize over rows only; within a
row the evaluation order is fixed, which keeps results bit-identical for
any thread count.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_FLAG = "TWODESIGN_NO_NUMBA"


def numba_requested() -> bool:
    return os.environ.get(_ENV_FLAG, "0").lower() not in ("1", "true", "yes")


USE_NUMBA = numba_requested()
if USE_NUMBA:
    try:
        from numba import njit, prange, set_num_threads
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False

if not USE_NUMBA:
    def set_num_threads(n):  # noqa: ARG001 - numpy path has no thread pool
        return None


def set_threads(n: int | None) -> None:
    """Pin the jitted kernels' thread count.  No numerical effect."""
    if n is not None and USE_NUMBA:
        set_num_threads(max(1, int(n)))


# ---------------------------------------------------------------------------
# numpy fallback path
# ---------------------------------------------------------------------------

_block_cache: dict[tuple[int, int, int], tuple[np.ndarray, ...]] = {}


def _block_indices(nbits: int, i: int, j: int):
    """Flat indices of the (bit_i, bit_j) = 00/10/01/11 blocks."""
    key = (nbits, i, j)
    out = _block_cache.get(key)
    if out is None:
        idx = np.arange(1 << nbits)
        base = idx[((idx >> i) & 1 == 0) & ((idx >> j) & 1 == 0)]
        out = (base, base + (1 << i), base + (1 << j),
               base + (1 << i) + (1 << j))
        _block_cache[key] = out
    return out


def _gate_apply_batch_np(block, i, j, c):
    nbits = block.shape[1].bit_length() - 1
    b00, b10, b01, b11 = _block_indices(nbits, i, j)
    v10 = block[:, b10]
    v01 = block[:, b01]
    mix = c * (v10 + v01)
    block[:, b00] += mix
    block[:, b11] += mix
    block[:, b10] = 0.0
    block[:, b01] = 0.0


def _layer_apply_batch_np(block, pi, pj, c):
    for g in range(len(pi)):
        _gate_apply_batch_np(block, int(pi[g]), int(pj[g]), c)


def _graph_step_batch_np(block, out, ei, ej, c):
    nbits = block.shape[1].bit_length() - 1
    inv = 1.0 / len(ei)
    out[:] = block
    for g in range(len(ei)):
        b00, b10, b01, b11 = _block_indices(nbits, int(ei[g]), int(ej[g]))
        v10 = block[:, b10]
        v01 = block[:, b01]
        mix = (inv * c) * (v10 + v01)
        out[:, b00] += mix
        out[:, b11] += mix
        out[:, b10] -= inv * v10
        out[:, b01] -= inv * v01


def _signed_dot_np(row, mask):
    idx = np.arange(row.shape[0], dtype=np.uint64)
    parity = np.bitwise_count(idx & np.uint64(mask)) & 1
    signs = 1.0 - 2.0 * parity
    return float(row @ signs)


def _signed_dot_batch_np(block, masks, out):
    for r in range(block.shape[0]):
        out[r] = _signed_dot_np(block[r], int(masks[r]))


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if USE_NUMBA:

    @njit(cache=True, inline="always")
    def _expand2(t, i, j):
        # insert zero bits at positions i < j of the compressed index t
        lo = t & ((1 << i) - 1)
        y = ((t >> i) << (i + 1)) | lo
        lo2 = y & ((1 << j) - 1)
        return ((y >> j) << (j + 1)) | lo2

    @njit(cache=True, parallel=True)
    def _gate_apply_batch_nb(block, i, j, c):
        if i > j:
            i, j = j, i
        m, size = block.shape
        mi = 1 << i
        mj = 1 << j
        quarter = size >> 2
        for r in prange(m):
            row = block[r]
            for t in range(quarter):
                x = _expand2(t, i, j)
                v10 = row[x | mi]
                v01 = row[x | mj]
                mix = c * (v10 + v01)
                row[x] += mix
                row[x | mi | mj] += mix
                row[x | mi] = 0.0
                row[x | mj] = 0.0

    @njit(cache=True, parallel=True)
    def _layer_apply_batch_nb(block, pi, pj, c):
        m, size = block.shape
        ng = pi.shape[0]
        for r in prange(m):
            row = block[r]
            for g in range(ng):
                i = pi[g]
                j = pj[g]
                if i > j:
                    i, j = j, i
                mi = 1 << i
                mj = 1 << j
                for t in range(size >> 2):
                    x = _expand2(t, i, j)
                    v10 = row[x | mi]
                    v01 = row[x | mj]
                    mix = c * (v10 + v01)
                    row[x] += mix
                    row[x | mi | mj] += mix
                    row[x | mi] = 0.0
                    row[x | mj] = 0.0

    @njit(cache=True, parallel=True)
    def _graph_step_batch_nb(block, out, ei, ej, c):
        m, size = block.shape
        ne = ei.shape[0]
        inv = 1.0 / ne
        ic = inv * c
        for r in prange(m):
            row = block[r]
            orow = out[r]
            for x in range(size):
                orow[x] = row[x]
            for g in range(ne):
                i = ei[g]
                j = ej[g]
                if i > j:
                    i, j = j, i
                mi = 1 << i
                mj = 1 << j
                for t in range(size >> 2):
                    x = _expand2(t, i, j)
                    v10 = row[x | mi]
                    v01 = row[x | mj]
                    mix = ic * (v10 + v01)
                    orow[x] += mix
                    orow[x | mi | mj] += mix
                    orow[x | mi] -= inv * v10
                    orow[x | mj] -= inv * v01

    @njit(cache=True, inline="always")
    def _parity64(v):
        v ^= v >> 32
        v ^= v >> 16
        v ^= v >> 8
        v ^= v >> 4
        v ^= v >> 2
        v ^= v >> 1
        return v & 1

    @njit(cache=True)
    def _signed_dot_nb(row, mask):
        acc = 0.0
        for x in range(row.shape[0]):
            if _parity64(np.uint64(x) & np.uint64(mask)):
                acc -= row[x]
            else:
                acc += row[x]
        return acc

    @njit(cache=True, parallel=True)
    def _signed_dot_batch_nb(block, masks, out):
        m = block.shape[0]
        for r in prange(m):
            row = block[r]
            mask = np.uint64(masks[r])
            acc = 0.0
            for x in range(row.shape[0]):
                if _parity64(np.uint64(x) & mask):
                    acc -= row[x]
                else:
                    acc += row[x]
            out[r] = acc

# ---------------------------------------------------------------------------
# public API (path-selected)
# ---------------------------------------------------------------------------


def gate_apply_batch(block: np.ndarray, i: int, j: int, c: float) -> None:
    """Apply the two-site transfer on bits (i, j) to every row, in place."""
    if USE_NUMBA:
        _gate_apply_batch_nb(block, i, j, c)
    else:
        _gate_apply_batch_np(block, min(i, j), max(i, j), c)


def layer_apply_batch(block: np.ndarray, pairs, c: float) -> None:
    """Apply a layer of disjoint two-site transfers to every row, in place.

    Gates are applied in the given order; disjointness makes the result
    order-independent up to float rounding.
    """
    pi = np.asarray([p[0] for p in pairs], dtype=np.int64)
    pj = np.asarray([p[1] for p in pairs], dtype=np.int64)
    if USE_NUMBA:
        _layer_apply_batch_nb(block, pi, pj, c)
    else:
        _layer_apply_batch_np(block, pi, pj, c)


def graph_step_batch(block: np.ndarray, out: np.ndarray, edges, c: float) -> None:
    """out <- edge-averaged two-site transfer of every row of block."""
    ei = np.asarray([e[0] for e in edges], dtype=np.int64)
    ej = np.asarray([e[1] for e in edges], dtype=np.int64)
    if USE_NUMBA:
        _graph_step_batch_nb(block, out, ei, ej, c)
    else:
        _graph_step_batch_np(block, out, ei, ej, c)


def signed_dot(row: np.ndarray, mask: int) -> float:
    """Sum of row[x] * (-1)^popcount(x & mask), accumulated in index order."""
    if USE_NUMBA:
        return float(_signed_dot_nb(row, np.uint64(mask)))
    return float(_signed_dot_np(row, mask))


def signed_dot_batch(block: np.ndarray, masks: np.ndarray) -> np.ndarray:
    out = np.empty(block.shape[0], dtype=np.float64)
    masks = np.asarray(masks, dtype=np.uint64)
    if USE_NUMBA:
        _signed_dot_batch_nb(block, masks, out)
    else:
        _signed_dot_batch_np(block, masks, out)
    return out


def walsh_signs(n: int, mask: int) -> np.ndarray:
    """The length-2^n vector of (-1)^popcount(x & mask)."""
    idx = np.arange(1 << n, dtype=np.uint64)
    parity = (np.bitwise_count(idx & np.uint64(mask)) & 1).astype(np.float64)
    return 1.0 - 2.0 * parity
