"""
Dense GF(2) linear algebra on bit-packed rows.

Column ``c`` of a row lives in 64-bit word ``c // 64`` at bit ``c % 64``;
bits past ``cols`` are always zero.
"""

import logging
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from orbitdecoding.exceptions import InconsistentSystemError, ShapeError, SingularMatrixError

logger = logging.getLogger(__name__)

WORD_BITS = 64


def word_count(cols: int) -> int:
    return (cols + WORD_BITS - 1) // WORD_BITS


def pack_bits(dense: np.ndarray) -> np.ndarray:
    """Pack a (rows, cols) 0/1 array into (rows, words) uint64 words."""
    dense = np.asarray(dense, dtype=np.uint8)
    rows, cols = dense.shape
    words = word_count(cols)
    padded = np.zeros((rows, words * WORD_BITS), dtype=np.uint8)
    padded[:, :cols] = dense & 1
    packed = np.packbits(padded, axis=1, bitorder='little')
    return np.ascontiguousarray(packed).view('<u8').astype(np.uint64)


def unpack_bits(words: np.ndarray, cols: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`."""
    raw = np.ascontiguousarray(words.astype('<u8')).view(np.uint8)
    return np.unpackbits(raw, axis=1, bitorder='little', count=cols).astype(np.uint8)


class BitMatrix:
    """Immutable GF(2) matrix with bit-packed rows."""

    __slots__ = ('rows', 'cols', 'data')

    def __init__(self, rows: int, cols: int, data: np.ndarray = None):
        if data is None:
            data = np.zeros((rows, word_count(cols)), dtype=np.uint64)
        data = np.array(data, dtype=np.uint64, copy=True)
        if data.shape != (rows, word_count(cols)):
            raise ShapeError(
                f"expected {rows}x{word_count(cols)} words, got {data.shape}"
            )
        tail = cols % WORD_BITS
        if tail and rows:
            mask = np.uint64((1 << tail) - 1)
            if np.any(data[:, -1] & ~mask):
                raise ShapeError("bits beyond the last column must be zero")
        data.setflags(write=False)
        self.rows = rows
        self.cols = cols
        self.data = data

    # -- construction -----------------------------------------------------

    @classmethod
    def from_dense(cls, dense) -> 'BitMatrix':
        dense = np.asarray(dense, dtype=np.uint8)
        if dense.ndim != 2:
            raise ShapeError(f"expected a 2-D array, got {dense.ndim}-D")
        return cls(dense.shape[0], dense.shape[1], pack_bits(dense))

    @classmethod
    def from_rows(cls, rows: Iterable) -> 'BitMatrix':
        """Build from strings like ``'11100000'`` or 0/1 sequences."""
        parsed = []
        for row in rows:
            if isinstance(row, str):
                row = [int(ch) for ch in row.strip()]
            parsed.append(list(row))
        if not parsed:
            raise ShapeError("no rows given; use BitMatrix.zeros for empty matrices")
        if len({len(r) for r in parsed}) != 1:
            raise ShapeError("rows have different lengths")
        return cls.from_dense(np.array(parsed, dtype=np.uint8))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> 'BitMatrix':
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> 'BitMatrix':
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    # -- views --------------------------------------------------------------

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    def to_dense(self) -> np.ndarray:
        return unpack_bits(self.data, self.cols)

    def row(self, r: int) -> np.ndarray:
        return unpack_bits(self.data[r:r + 1], self.cols)[0]

    def __getitem__(self, index) -> int:
        r, c = index
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise IndexError(f"({r}, {c}) outside {self.rows}x{self.cols}")
        word = int(self.data[r, c // WORD_BITS])
        return (word >> (c % WORD_BITS)) & 1

    def transpose(self) -> 'BitMatrix':
        return BitMatrix.from_dense(self.to_dense().T)

    @property
    def T(self) -> 'BitMatrix':
        return self.transpose()

    def select_rows(self, indices: Sequence[int]) -> 'BitMatrix':
        return BitMatrix(len(indices), self.cols, self.data[list(indices)])

    def select_columns(self, indices: Sequence[int]) -> 'BitMatrix':
        return BitMatrix.from_dense(self.to_dense()[:, list(indices)])

    def hstack(self, other: 'BitMatrix') -> 'BitMatrix':
        if self.rows != other.rows:
            raise ShapeError(f"row counts differ: {self.rows} vs {other.rows}")
        return BitMatrix.from_dense(np.hstack([self.to_dense(), other.to_dense()]))

    def nonzero_rows(self) -> 'BitMatrix':
        keep = [r for r in range(self.rows) if np.any(self.data[r])]
        return BitMatrix(len(keep), self.cols, self.data[keep])

    def is_zero(self) -> bool:
        return not np.any(self.data)

    def rank(self) -> int:
        return len(rref_with_transform(self)[2])

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.data, other.data)

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.data.tobytes()))

    def __matmul__(self, other: 'BitMatrix') -> 'BitMatrix':
        return matmul(self, other)

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"

    def __str__(self) -> str:
        return '\n'.join(''.join(str(b) for b in row) for row in self.to_dense())


def matmul(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    """GF(2) product, XOR-accumulating packed rows of ``b``."""
    if a.cols != b.rows:
        raise ShapeError(f"cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}")
    out = np.zeros((a.rows, word_count(b.cols)), dtype=np.uint64)
    selectors = a.to_dense().astype(bool)
    for t in range(a.cols):
        mask = selectors[:, t]
        if mask.any():
            out[mask] ^= b.data[t]
    return BitMatrix(a.rows, b.cols, out)


def vecmat(v, a: BitMatrix) -> np.ndarray:
    """Row vector times matrix; returns a dense 0/1 vector."""
    v = np.asarray(v, dtype=np.uint8)
    if v.shape != (a.rows,):
        raise ShapeError(f"vector of length {v.shape} does not match {a.rows} rows")
    acc = np.zeros(word_count(a.cols), dtype=np.uint64)
    for r in np.flatnonzero(v & 1):
        acc ^= a.data[r]
    return unpack_bits(acc[None, :], a.cols)[0]


def rref_with_transform(a: BitMatrix) -> Tuple[BitMatrix, BitMatrix, List[int]]:
    """Reduce ``a`` to RREF, tracking the row operations.

    Returns ``(rref, elim, pivots)`` with ``elim @ a == rref``. The pivot rule
    is fixed (leftmost column, topmost candidate row) so the RREF is canonical.
    """
    work = a.data.copy()
    elim = np.array(BitMatrix.identity(a.rows).data, copy=True)
    pivots = []
    r = 0
    for c in range(a.cols):
        if r == a.rows:
            break
        w = c // WORD_BITS
        bit = np.uint64(1) << np.uint64(c % WORD_BITS)
        hits = np.flatnonzero(work[r:, w] & bit)
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            work[[r, p]] = work[[p, r]]
            elim[[r, p]] = elim[[p, r]]
        others = np.flatnonzero(work[:, w] & bit)
        others = others[others != r]
        if others.size:
            work[others] ^= work[r]
            elim[others] ^= elim[r]
        pivots.append(c)
        r += 1
    return BitMatrix(a.rows, a.cols, work), BitMatrix(a.rows, a.rows, elim), pivots


def rref(a: BitMatrix) -> BitMatrix:
    return rref_with_transform(a)[0]


def invert(a: BitMatrix) -> BitMatrix:
    if a.rows != a.cols:
        raise ShapeError(f"cannot invert a {a.rows}x{a.cols} matrix")
    _, elim, pivots = rref_with_transform(a)
    if len(pivots) < a.rows:
        raise SingularMatrixError(f"matrix has rank {len(pivots)} < {a.rows}")
    return elim


def rowspan_equal(a: BitMatrix, b: BitMatrix) -> bool:
    """Compare row spaces through their canonical RREF."""
    if a.cols != b.cols:
        raise ShapeError(f"column counts differ: {a.cols} vs {b.cols}")
    return rref(a).nonzero_rows() == rref(b).nonzero_rows()


def solve_right(a: BitMatrix, target) -> np.ndarray:
    """Solve ``x @ a == target`` for ``x``.

    Raises :class:`InconsistentSystemError` when ``target`` is outside the
    row space of ``a``.
    """
    target = np.asarray(target, dtype=np.uint8)
    if target.shape != (a.cols,):
        raise ShapeError(f"target of shape {target.shape} does not match {a.cols} columns")
    reduced, elim, pivots = rref_with_transform(a)
    y = np.zeros(a.rows, dtype=np.uint8)
    for r, c in enumerate(pivots):
        y[r] = target[c]
    if not np.array_equal(vecmat(y, reduced), target & 1):
        raise InconsistentSystemError("target is not in the row space")
    return vecmat(y, elim)
