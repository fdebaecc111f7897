"""Dense GF(2) linear algebra on word-packed bit matrices.

Rows are stored as little-endian uint64 words, 64 columns per word.
All operations are pure: inputs are never mutated and results are
frozen (numpy buffers marked read-only), so values can be shared
freely across threads.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "BitMatrix",
    "ShapeError",
    "SingularMatrixError",
    "matmul",
    "kron",
    "row_reduce",
    "rank",
    "invert",
    "transpose",
    "coordinate_determined",
]


class ShapeError(ValueError):
    """Operand dimensions are incompatible."""


class SingularMatrixError(ValueError):
    """Matrix has no inverse over GF(2)."""


def _pack(arr: np.ndarray) -> np.ndarray:
    """Pack a (rows, cols) 0/1 array into (rows, ceil(cols/64)) uint64 words."""
    rows, cols = arr.shape
    nwords = (cols + 63) // 64
    packed = np.zeros((rows, nwords), dtype=np.uint64)
    if cols:
        bytes_ = np.packbits(arr.astype(np.uint8), axis=1, bitorder="little")
        padded = np.zeros((rows, nwords * 8), dtype=np.uint8)
        padded[:, : bytes_.shape[1]] = bytes_
        packed = padded.view(np.uint64)
    return packed


def _unpack(words: np.ndarray, cols: int) -> np.ndarray:
    rows = words.shape[0]
    if cols == 0:
        return np.zeros((rows, 0), dtype=np.uint8)
    bytes_ = np.ascontiguousarray(words).view(np.uint8)
    return np.unpackbits(bytes_, axis=1, count=cols, bitorder="little")


class BitMatrix:
    """Immutable dense matrix over GF(2).

    Zero-row and zero-column shapes are legal (they arise as submatrices
    when every observation is erased); such matrices have rank 0.
    """

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray):
        if rows < 0 or cols < 0:
            raise ShapeError(f"negative shape ({rows}, {cols})")
        expected = (rows, (cols + 63) // 64)
        if words.shape != expected or words.dtype != np.uint64:
            raise ShapeError(f"backing array {words.shape} does not match shape ({rows}, {cols})")
        # mask stray bits past the last column so equality is well defined
        if cols % 64 and words.shape[1]:
            words = words.copy()
            words[:, -1] &= np.uint64((1 << (cols % 64)) - 1)
        words = np.ascontiguousarray(words)
        words.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "words", words)

    def __setattr__(self, name, value):
        raise AttributeError("BitMatrix is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_array(cls, arr) -> "BitMatrix":
        a = np.asarray(arr)
        if a.ndim != 2:
            raise ShapeError(f"expected 2-d array, got ndim={a.ndim}")
        a = (a.astype(np.uint8) & 1).astype(np.uint8)
        return cls(a.shape[0], a.shape[1], _pack(a))

    @classmethod
    def from_rows(cls, rows: Iterable) -> "BitMatrix":
        """Build from row strings of '0'/'1' or from iterables of bits."""
        parsed = []
        for r in rows:
            if isinstance(r, str):
                r = r.strip()
                if not set(r) <= {"0", "1"}:
                    raise ValueError(f"row string contains non-binary characters: {r!r}")
                parsed.append([int(c) for c in r])
            else:
                parsed.append([int(b) & 1 for b in r])
        if not parsed:
            raise ShapeError("no rows given")
        width = len(parsed[0])
        if any(len(r) != width for r in parsed):
            raise ShapeError("ragged rows")
        return cls.from_array(np.array(parsed, dtype=np.uint8).reshape(len(parsed), width))

    @classmethod
    def from_text(cls, text: str) -> "BitMatrix":
        return cls.from_rows(line for line in text.split() if line)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, np.zeros((rows, (cols + 63) // 64), dtype=np.uint64))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_array(np.eye(n, dtype=np.uint8))

    # -- accessors ---------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def get(self, i: int, j: int) -> int:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"entry ({i}, {j}) out of range for shape {self.shape}")
        return int((self.words[i, j >> 6] >> np.uint64(j & 63)) & np.uint64(1))

    def to_array(self) -> np.ndarray:
        return _unpack(self.words, self.cols)

    def to_text(self) -> str:
        """Dump as '0'/'1' row strings, newline separated."""
        arr = self.to_array()
        return "\n".join("".join("1" if b else "0" for b in row) for row in arr)

    def row_weights(self) -> np.ndarray:
        if self.words.shape[1] == 0:
            return np.zeros(self.rows, dtype=np.int64)
        return np.bitwise_count(self.words).sum(axis=1).astype(np.int64)

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "BitMatrix":
        """Select rows and columns by index lists; empty selections allowed."""
        arr = self.to_array()
        ri = np.asarray(list(row_idx), dtype=np.intp)
        ci = np.asarray(list(col_idx), dtype=np.intp)
        sub = arr[ri][:, ci] if ri.size and ci.size else np.zeros((ri.size, ci.size), np.uint8)
        return BitMatrix.from_array(sub)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and (self.words == other.words).all()
        )

    def __hash__(self):
        return hash((self.rows, self.cols, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"


# -- operations ------------------------------------------------------------


def transpose(a: BitMatrix) -> BitMatrix:
    return BitMatrix.from_array(a.to_array().T)


def matmul(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    """Product over GF(2): entry (i,j) is the XOR over t of a(i,t) & b(t,j)."""
    if a.cols != b.rows:
        raise ShapeError(f"matmul shapes {a.shape} x {b.shape}")
    bt = transpose(b)
    out = np.zeros((a.rows, b.cols), dtype=np.uint8)
    # popcount(a_row & b_col) parity, blocked over rows to bound memory
    block = 256
    for lo in range(0, a.rows, block):
        hi = min(lo + block, a.rows)
        if a.words.shape[1]:
            acc = np.bitwise_count(a.words[lo:hi, None, :] & bt.words[None, :, :])
            out[lo:hi] = (acc.sum(axis=2, dtype=np.uint64) & np.uint64(1)).astype(np.uint8)
    return BitMatrix.from_array(out)


def kron(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    """Kronecker product; block (i,j) of the result equals a(i,j) * b."""
    return BitMatrix.from_array(np.kron(a.to_array(), b.to_array()))


def row_reduce(a: BitMatrix) -> tuple[BitMatrix, int, list[int]]:
    """Reduced row-echelon form, its rank, and the pivot columns.

    Pivoting is deterministic: for each column in order, the first row at
    or below the current rank with a 1 in that column is chosen.
    """
    w = a.words.copy()
    nwords = w.shape[1]
    r = 0
    pivots: list[int] = []
    for c in range(a.cols):
        word, bit = c >> 6, np.uint64(c & 63)
        col = (w[:, word] >> bit) & np.uint64(1)
        hits = np.nonzero(col[r:])[0]
        if hits.size == 0:
            continue
        piv = r + int(hits[0])
        if piv != r:
            w[[r, piv]] = w[[piv, r]]
        col = (w[:, word] >> bit) & np.uint64(1)
        elim = np.nonzero(col)[0]
        elim = elim[elim != r]
        if elim.size:
            w[elim] ^= w[r]
        pivots.append(c)
        r += 1
        if r == a.rows:
            break
    reduced = BitMatrix(a.rows, a.cols, w)
    return reduced, r, pivots


def rank(a: BitMatrix) -> int:
    return row_reduce(a)[1]


def invert(a: BitMatrix) -> BitMatrix:
    """Inverse over GF(2) by Gauss-Jordan on [a | I]."""
    if a.rows != a.cols:
        raise ShapeError(f"cannot invert non-square {a.shape}")
    n = a.rows
    aug = np.concatenate([a.to_array(), np.eye(n, dtype=np.uint8)], axis=1)
    reduced, r, pivots = row_reduce(BitMatrix.from_array(aug))
    if r < n or pivots[:n] != list(range(n)):
        raise SingularMatrixError(f"matrix of shape {a.shape} is singular")
    return reduced.submatrix(range(n), range(n, 2 * n))


def coordinate_determined(m: BitMatrix, target_row: int) -> bool:
    """Whether u[target_row] is pinned down by observing u @ m.

    For an unknown u with u @ m = c, coordinate target_row takes the same
    value in every solution (for every consistent c) iff the unit vector
    e_target lies in the column space of m.
    """
    if not 0 <= target_row < m.rows:
        raise IndexError(f"target_row {target_row} out of range for {m.rows} rows")
    e = np.zeros((m.rows, 1), dtype=np.uint8)
    e[target_row, 0] = 1
    aug = np.concatenate([m.to_array(), e], axis=1)
    _, _, pivots = row_reduce(BitMatrix.from_array(aug))
    # a pivot in the appended column means e_target is outside the span
    return m.cols not in pivots
