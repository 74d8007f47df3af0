"""Bit-packed linear algebra over F2.

Bit ``i`` of a vector lives in bit ``i % 64`` of word ``i // 64`` (LSB first),
and padding bits past the logical length are always zero. The two encodings
of a coordinate are related by ``signed = 1 - 2 * bit``: F2 value 0 is +1 and
F2 value 1 is -1.
"""

from __future__ import annotations

import enum
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels

WORD_BITS = 64


class Domain(enum.Enum):
    F2 = "f2"
    PLUS_MINUS_ONE = "pm1"


def to_signed(bits) -> np.ndarray:
    """Map F2 bits to +-1 values (0 -> +1, 1 -> -1)."""
    return 1 - 2 * np.asarray(bits, dtype=np.int64)


def from_signed(values) -> np.ndarray:
    """Inverse of :func:`to_signed`."""
    values = np.asarray(values, dtype=np.int64)
    if not np.all((values == 1) | (values == -1)):
        raise ValueError("signed values must be +1 or -1")
    return ((1 - values) // 2).astype(np.uint8)


def n_words(n: int) -> int:
    return (n + WORD_BITS - 1) // WORD_BITS


def pack_bits(bits) -> np.ndarray:
    """Pack a 2-D 0/1 array of shape (m, n) into (m, n_words(n)) uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 2:
        raise ValueError("expected a 2-D bit array")
    m, n = bits.shape
    w = n_words(n)
    padded = np.zeros((m, w * WORD_BITS), dtype=np.uint8)
    padded[:, :n] = bits & 1
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False).reshape(m, w)


def unpack_bits(words, n: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`; returns a (m, n) uint8 array."""
    words = np.ascontiguousarray(words, dtype=np.uint64)
    m = words.shape[0]
    if m == 0 or words.shape[1] == 0:
        return np.zeros((m, n), dtype=np.uint8)
    as_bytes = words.astype("<u8", copy=False).view(np.uint8).reshape(m, -1)
    return np.unpackbits(as_bytes, axis=1, count=n, bitorder="little")


def _tail_mask(n: int) -> np.uint64:
    rem = n % WORD_BITS
    if rem == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << rem) - 1)


def popcount(words) -> np.ndarray:
    """Population count summed over the last axis."""
    return np.bitwise_count(np.asarray(words, dtype=np.uint64)).sum(axis=-1, dtype=np.int64)


class BitVector:
    """Immutable packed vector in F2^n."""

    __slots__ = ("n", "words")

    def __init__(self, n: int, words=None):
        w = n_words(n)
        if words is None:
            words = np.zeros(w, dtype=np.uint64)
        words = np.array(words, dtype=np.uint64).reshape(-1)
        if words.shape[0] != w:
            raise ValueError(f"length {n} needs {w} words, got {words.shape[0]}")
        if w and words[-1] & ~_tail_mask(n):
            raise ValueError("padding bits beyond length must be zero")
        words.setflags(write=False)
        self.n = int(n)
        self.words = words

    @classmethod
    def from_bits(cls, bits) -> "BitVector":
        bits = np.asarray(bits, dtype=np.uint8).reshape(1, -1)
        return cls(bits.shape[1], pack_bits(bits)[0])

    @classmethod
    def from_string(cls, s: str) -> "BitVector":
        """``"1011"`` -> bits 0..3 = 1, 0, 1, 1."""
        return cls.from_bits([int(c) for c in s])

    @classmethod
    def from_indices(cls, indices: Iterable[int], n: int) -> "BitVector":
        bits = np.zeros(n, dtype=np.uint8)
        idx = np.fromiter(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise IndexError("index out of range")
        bits[idx] = 1
        return cls.from_bits(bits)

    def to_bits(self) -> np.ndarray:
        return unpack_bits(self.words.reshape(1, -1), self.n)[0]

    def indices(self) -> tuple:
        return tuple(int(i) for i in np.flatnonzero(self.to_bits()))

    def ones(self) -> int:
        """Number of set F2 bits (``Ones`` counts the +1 entries, i.e. n - this)."""
        return int(popcount(self.words))

    def __len__(self):
        return self.n

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(i)
        return int((self.words[i // WORD_BITS] >> np.uint64(i % WORD_BITS)) & np.uint64(1))

    def __xor__(self, other: "BitVector") -> "BitVector":
        if self.n != other.n:
            raise ValueError("length mismatch")
        return BitVector(self.n, self.words ^ other.words)

    def __eq__(self, other):
        return isinstance(other, BitVector) and self.n == other.n and np.array_equal(self.words, other.words)

    def __hash__(self):
        return hash((self.n, self.words.tobytes()))

    def __repr__(self):
        return f"BitVector('{''.join(map(str, self.to_bits()))}')"


class BitMatrix:
    """Immutable dense m x n matrix over F2, row-major packed words."""

    __slots__ = ("n_rows", "n_cols", "words")

    def __init__(self, n_rows: int, n_cols: int, words=None):
        w = n_words(n_cols)
        if words is None:
            words = np.zeros((n_rows, w), dtype=np.uint64)
        words = np.array(words, dtype=np.uint64).reshape(n_rows, w)
        if n_rows and w and np.any(words[:, -1] & ~_tail_mask(n_cols)):
            raise ValueError("padding bits beyond n_cols must be zero")
        words.setflags(write=False)
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.words = words

    @classmethod
    def from_bits(cls, bits, n_cols: Optional[int] = None) -> "BitMatrix":
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 2:
            if bits.size:
                raise ValueError("expected a 2-D bit array")
            return cls(0, n_cols or 0)
        m, n = bits.shape
        if n_cols is not None and n != n_cols:
            if m:
                raise ValueError(f"rows have {n} bits, expected {n_cols}")
            n = n_cols
        return cls(m, n, pack_bits(bits) if m else None)

    @classmethod
    def from_strings(cls, rows: Sequence[str]) -> "BitMatrix":
        return cls.from_bits([[int(c) for c in r] for r in rows])

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_bits(np.eye(n, dtype=np.uint8))

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    def to_bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.n_cols)

    def row(self, i: int) -> BitVector:
        return BitVector(self.n_cols, self.words[i])

    def __eq__(self, other):
        return (
            isinstance(other, BitMatrix)
            and self.shape == other.shape
            and np.array_equal(self.words, other.words)
        )

    def __repr__(self):
        return f"BitMatrix({self.n_rows}x{self.n_cols})"


def rank(M: BitMatrix) -> int:
    """F2 rank of ``M`` (the input is left untouched)."""
    if M.n_rows == 0 or M.n_cols == 0:
        return 0
    work = np.array(M.words, dtype=np.uint64)
    pivots = np.empty(min(M.n_rows, M.n_cols), dtype=np.int64)
    return int(_kernels.rref(work, M.n_cols, pivots))


def solve(M: BitMatrix, y: BitVector) -> Optional[BitVector]:
    """Return some x with M x = y over F2, or None if the system is inconsistent.

    Free variables are set to zero, so the answer is unique exactly when
    rank(M) equals the number of columns.
    """
    if y.n != M.n_rows:
        raise ValueError(f"rhs has length {y.n}, matrix has {M.n_rows} rows")
    n = M.n_cols
    if M.n_rows == 0:
        return BitVector(n)
    aug = np.concatenate([M.to_bits(), y.to_bits()[:, None]], axis=1)
    work = pack_bits(aug)
    pivots = np.empty(min(M.n_rows, n) + 1, dtype=np.int64)
    r = int(_kernels.rref(work, n, pivots))
    ybits = unpack_bits(work, n + 1)[:, n]
    if np.any(ybits[r:]):
        return None
    x = np.zeros(n, dtype=np.uint8)
    x[pivots[:r]] = ybits[:r]
    return BitVector.from_bits(x)


def matvec(M: BitMatrix, x: BitVector) -> BitVector:
    """M x over F2."""
    if x.n != M.n_cols:
        raise ValueError("dimension mismatch")
    par = popcount(M.words & x.words[None, :]) & 1
    return BitVector.from_bits(par.astype(np.uint8))


def _check_indices(idx, bound, what):
    idx = np.asarray(sorted(set(int(i) for i in idx)), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= bound):
        raise IndexError(f"{what} index out of range [0, {bound})")
    return idx


def select(M: BitMatrix, rows: Iterable[int], cols: Iterable[int]) -> BitMatrix:
    """Submatrix M(T, S) with rows and columns taken in sorted order."""
    r = _check_indices(rows, M.n_rows, "row")
    c = _check_indices(cols, M.n_cols, "column")
    if r.size == 0 or c.size == 0:
        return BitMatrix(r.size, c.size)
    return BitMatrix.from_bits(M.to_bits()[np.ix_(r, c)])


def xor_combine(M: BitMatrix, T: Iterable[int]) -> BitVector:
    """XOR of the rows in T (entry-wise product in the +-1 domain)."""
    t = _check_indices(T, M.n_rows, "row")
    if t.size == 0:
        raise ValueError("row set must be non-empty")
    return BitVector(M.n_cols, np.bitwise_xor.reduce(M.words[t], axis=0))


def parity(v: BitVector, S: Iterable[int]) -> int:
    """<v, S> over F2; chi_S(v) = 1 - 2 * parity(v, S)."""
    S = list(S)
    if not S:
        return 0
    mask = BitVector.from_indices(S, v.n)
    return int(popcount(v.words & mask.words) & 1)


def row_parities(M: BitMatrix, S: Iterable[int]) -> np.ndarray:
    """Vectorised parity of every row of M against S, as uint8."""
    mask = BitVector.from_indices(S, M.n_cols)
    return (popcount(M.words & mask.words[None, :]) & 1).astype(np.uint8)


def transpose_bits(M: BitMatrix) -> BitMatrix:
    return BitMatrix.from_bits(M.to_bits().T, n_cols=M.n_rows)


def correlation_gram(D: BitMatrix, weights) -> np.ndarray:
    """Integer matrix sum_i w_i * D_pm(i, a) * D_pm(i, b) for +-1 weights.

    D is read in the +-1 domain. The product is exact: each entry is built
    from popcounts of XORed column bit-sets restricted to each sign class.
    """
    weights = np.asarray(weights, dtype=np.int64).reshape(-1)
    if weights.shape[0] != D.n_rows:
        raise ValueError("one weight per row required")
    if not np.all((weights == 1) | (weights == -1)):
        raise ValueError("weights must be +1 or -1")
    if D.n_rows == 0:
        return np.zeros((D.n_cols, D.n_cols), dtype=np.int64)
    cols = pack_bits(D.to_bits().T)
    pos = pack_bits((weights == 1).astype(np.uint8)[None, :])[0]
    neg = pack_bits((weights == -1).astype(np.uint8)[None, :])[0]
    return _kernels.gram_signed(cols, pos, neg)
