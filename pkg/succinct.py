"""
Bit-level primitives for the ESP index.

BitVec is a static rank/select bitvector over numpy-packed bytes, IntSeq a
rank/select/access sequence over a large alphabet, and encode_monotone the
gap+unary code used for the left-symbol array of the grammar.

Conventions: positions are 0-based everywhere. rank counts inclusively,
so rank(c, i) is the number of c's in bits[0..i]. select takes a 1-based
occurrence index k and returns the 0-based position of the k-th c. The
monotone decoder keeps the textbook formula x_i = rank_0(select_1(i)) with
1-based i; select's 0-based answer makes the inclusive rank count exactly
the zeros that precede the i-th one.
"""

import logging

import numpy as np

from errors import InvariantViolation, NotFound, OutOfRange

logger = logging.getLogger(__name__)

BLOCK_BITS = 512
_BLOCK_BYTES = BLOCK_BITS // 8


def _as_bits(bits) -> np.ndarray:
    if isinstance(bits, str):
        arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(bits, dtype=np.int64).ravel()
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise InvariantViolation("bitvector values must be 0 or 1")
    return arr.astype(np.uint8)


class BitVec:
    """Static bitvector with a one-level rank directory.

    Cumulative popcounts are kept per 512-bit block; rank reads the block
    count plus an in-block popcount, select binary-searches the directory
    and scans one block.
    """

    __slots__ = ("length", "_bytes", "_ones_before", "_zeros_before")

    def __init__(self, bits=()):
        arr = _as_bits(bits)
        self._init_packed(np.packbits(arr, bitorder="little"), int(arr.size))

    def _init_packed(self, packed: np.ndarray, length: int):
        self.length = length
        self._bytes = packed
        nblocks = -(-length // BLOCK_BITS)
        padded = np.zeros(nblocks * _BLOCK_BYTES, dtype=np.uint8)
        padded[: packed.size] = packed
        block_ones = np.unpackbits(padded, bitorder="little").reshape(nblocks, BLOCK_BITS).sum(axis=1) if nblocks else np.zeros(0, dtype=np.int64)
        self._ones_before = np.concatenate(([0], np.cumsum(block_ones, dtype=np.int64)))
        starts = np.minimum(np.arange(nblocks + 1, dtype=np.int64) * BLOCK_BITS, length)
        self._zeros_before = starts - self._ones_before

    @classmethod
    def from_bytes(cls, data: bytes, length: int) -> "BitVec":
        """Rebuild from the serialized layout: little-endian bytes, bit 0 is
        the least significant bit of byte 0."""
        if length < 0 or length > 8 * len(data):
            raise InvariantViolation(f"bit length {length} does not fit in {len(data)} bytes")
        if len(data) != -(-length // 8):
            raise InvariantViolation(f"expected {-(-length // 8)} bytes for {length} bits, got {len(data)}")
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little", count=length)
        obj = cls.__new__(cls)
        obj._init_packed(np.packbits(bits, bitorder="little"), length)
        return obj

    def to_bytes(self) -> bytes:
        return self._bytes.tobytes()

    def to_array(self) -> np.ndarray:
        return np.unpackbits(self._bytes, bitorder="little", count=self.length)

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitVec):
            return NotImplemented
        return self.length == other.length and np.array_equal(self._bytes, other._bytes)

    def __repr__(self) -> str:
        if self.length <= 64:
            return "BitVec('" + "".join(str(b) for b in self.to_array()) + "')"
        return f"BitVec(length={self.length}, ones={self.ones})"

    @property
    def ones(self) -> int:
        return int(self._ones_before[-1])

    @property
    def zeros(self) -> int:
        return self.length - self.ones

    @property
    def nbytes(self) -> int:
        """Bytes of the packed bits plus the rank directory."""
        return int(self._bytes.nbytes + self._ones_before.nbytes + self._zeros_before.nbytes)

    def _block(self, b: int) -> np.ndarray:
        lo = b * _BLOCK_BYTES
        count = min(BLOCK_BITS, self.length - b * BLOCK_BITS)
        return np.unpackbits(self._bytes[lo: lo + _BLOCK_BYTES], bitorder="little", count=count)

    def _check(self, i: int):
        if not 0 <= i < self.length:
            raise OutOfRange(f"position {i} outside bitvector of length {self.length}")

    def access(self, i: int) -> int:
        self._check(i)
        return (int(self._bytes[i >> 3]) >> (i & 7)) & 1

    def rank(self, c: int, i: int) -> int:
        """Number of c's in positions 0..i inclusive."""
        self._check(i)
        b, off = divmod(i, BLOCK_BITS)
        ones = int(self._ones_before[b]) + int(self._block(b)[: off + 1].sum())
        return ones if c else i + 1 - ones

    def select(self, c: int, k: int) -> int:
        """0-based position of the k-th (1-based) occurrence of c."""
        cum = self._ones_before if c else self._zeros_before
        total = int(cum[-1])
        if not 1 <= k <= total:
            raise NotFound(f"select({c}, {k}): only {total} occurrences")
        b = int(np.searchsorted(cum, k, side="left")) - 1
        need = k - int(cum[b])
        block = self._block(b)
        hits = np.flatnonzero(block if c else block == 0)
        return b * BLOCK_BITS + int(hits[need - 1])


def bv_rank(b: BitVec, c: int, i: int) -> int:
    return b.rank(c, i)


def bv_select(b: BitVec, c: int, k: int) -> int:
    return b.select(c, k)


def bv_access(b: BitVec, i: int) -> int:
    return b.access(i)


def encode_monotone(xs) -> BitVec:
    """Gap+unary code of a non-decreasing positive sequence: gap g becomes
    0^g 1. n values with last value x_n take n + x_n bits."""
    arr = np.asarray(xs, dtype=np.int64).ravel()
    if arr.size == 0:
        return BitVec()
    if arr[0] < 1:
        raise InvariantViolation(f"monotone sequence must start at >= 1, got {int(arr[0])}")
    if arr.size > 1 and np.any(arr[1:] < arr[:-1]):
        i = int(np.flatnonzero(arr[1:] < arr[:-1])[0])
        raise InvariantViolation(f"sequence decreases at index {i + 1}: {int(arr[i])} -> {int(arr[i + 1])}")
    bits = np.zeros(int(arr[-1]) + arr.size, dtype=np.uint8)
    bits[arr + np.arange(arr.size)] = 1
    return BitVec(bits)


def decode_monotone(u: BitVec, i: int) -> int:
    """x_i for 1-based i."""
    return u.rank(0, u.select(1, i))


def decode_all(u: BitVec) -> np.ndarray:
    ones = np.flatnonzero(u.to_array())
    return ones - np.arange(ones.size)


class IntSeq:
    """access/rank/select over a sequence of non-negative ints.

    Positions are grouped per symbol by a stable argsort; rank is a binary
    search inside the symbol's position list and select an index into it.
    """

    __slots__ = ("_values", "_symbols", "_starts", "_positions")

    def __init__(self, values=()):
        self._values = np.asarray(values, dtype=np.int64).ravel()
        if self._values.size and self._values.min() < 0:
            raise InvariantViolation("IntSeq values must be non-negative")
        order = np.argsort(self._values, kind="stable")
        self._positions = order
        self._symbols, starts = np.unique(self._values[order], return_index=True)
        self._starts = np.append(starts, self._values.size).astype(np.int64)

    def __len__(self) -> int:
        return int(self._values.size)

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def nbytes(self) -> int:
        return int(self._values.nbytes + self._positions.nbytes + self._symbols.nbytes + self._starts.nbytes)

    def _group(self, v: int) -> np.ndarray:
        g = int(np.searchsorted(self._symbols, v))
        if g >= self._symbols.size or self._symbols[g] != v:
            return self._positions[:0]
        return self._positions[self._starts[g]: self._starts[g + 1]]

    def access(self, i: int) -> int:
        if not 0 <= i < self._values.size:
            raise OutOfRange(f"position {i} outside sequence of length {self._values.size}")
        return int(self._values[i])

    def rank(self, v: int, i: int) -> int:
        """Occurrences of v in positions 0..i inclusive."""
        if not 0 <= i < self._values.size:
            raise OutOfRange(f"position {i} outside sequence of length {self._values.size}")
        return int(np.searchsorted(self._group(v), i, side="right"))

    def count_before(self, v: int, end: int) -> int:
        """Occurrences of v in positions [0, end)."""
        return int(np.searchsorted(self._group(v), end, side="left"))

    def select(self, v: int, k: int) -> int:
        group = self._group(v)
        if not 1 <= k <= group.size:
            raise NotFound(f"select({v}, {k}): only {group.size} occurrences")
        return int(group[k - 1])

    def count(self, v: int) -> int:
        return int(self._group(v).size)

    def positions(self, v: int) -> np.ndarray:
        """All positions of v ascending; select(v, 1..count(v)) in one call."""
        return self._group(v)


def seq_access(s: IntSeq, i: int) -> int:
    return s.access(i)


def seq_rank(s: IntSeq, v: int, i: int) -> int:
    return s.rank(v, i)


def seq_select(s: IntSeq, v: int, k: int) -> int:
    return s.select(v, k)
