"""Packed boolean rows for relation matrices and member sets.

Rows are uint8 arrays in little bit order, so bit ``j`` of a row lives at
``row[j >> 3] & (1 << (j & 7))``.  All helpers treat the last axis as the
packed axis and accept stacked rows.
"""

from __future__ import annotations

import numpy as np


def width(n: int) -> int:
    """Bytes needed for an n-bit row."""
    return (n + 7) >> 3


def pack(mask: np.ndarray) -> np.ndarray:
    return np.packbits(np.asarray(mask, dtype=bool), axis=-1, bitorder="little")


def unpack(packed: np.ndarray, n: int) -> np.ndarray:
    out = np.unpackbits(packed, axis=-1, count=n, bitorder="little")
    return out.astype(bool)


def zeros(n: int, rows: int | None = None) -> np.ndarray:
    shape = (width(n),) if rows is None else (rows, width(n))
    return np.zeros(shape, dtype=np.uint8)


def bit_set(row: np.ndarray, j: int) -> None:
    row[j >> 3] |= np.uint8(1 << (j & 7))


def bit_get(row: np.ndarray, j: int) -> bool:
    return bool(row[j >> 3] & (1 << (j & 7)))


def row_or(rows: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """OR-reduce a stack of rows; empty stacks reduce to zero."""
    if rows.shape[0] == 0:
        base = np.zeros(rows.shape[-1], dtype=np.uint8)
        if out is None:
            return base
        out[:] = base
        return out
    return np.bitwise_or.reduce(rows, axis=0, out=out)


def row_and(rows: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """AND-reduce a stack of rows; empty stacks reduce to all-ones."""
    if rows.shape[0] == 0:
        base = np.full(rows.shape[-1], 0xFF, dtype=np.uint8)
        if out is None:
            return base
        out[:] = base
        return out
    return np.bitwise_and.reduce(rows, axis=0, out=out)


def subset(a: np.ndarray, b: np.ndarray) -> bool:
    return not np.any(a & ~b)


def subset_rows(a: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Vector of ``a subset of rows[i]`` over a stack of rows."""
    return ~np.any(a[None, :] & ~rows, axis=-1)


def supset_rows(a: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Vector of ``rows[i] subset of a`` over a stack of rows."""
    return ~np.any(rows & ~a[None, :], axis=-1)


def intersects(a: np.ndarray, b: np.ndarray) -> bool:
    return bool(np.any(a & b))


def count(a: np.ndarray) -> int:
    return int(np.bitwise_count(a).sum())


def equal(a: np.ndarray, b: np.ndarray) -> bool:
    return np.array_equal(a, b)


def is_zero(a: np.ndarray) -> bool:
    return not np.any(a)


def transpose(packed: np.ndarray, n: int, block: int = 2048) -> np.ndarray:
    """Transpose an n-by-n packed relation in row blocks.

    ``block`` must stay a multiple of 8 so each block's columns land on a
    byte boundary of the output.
    """
    w = width(n)
    out = np.zeros((n, w), dtype=np.uint8)
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        dense = unpack(packed[lo:hi], n)  # (hi-lo, n)
        sub = pack(dense.T)  # (n, width(hi-lo)), bits lo..hi-1 shifted down to 0
        out[:, lo >> 3 : (lo >> 3) + sub.shape[1]] |= sub
    return out
