"""
Succinct encoded ESP index.

Rules are stored as two arrays indexed by variable id - sigma: the left
symbols, which are non-decreasing after the sorted renaming and so go into
a gap+unary bitvector (A_l), and the right symbols in a rank/select
sequence (A_r). Navigation in both directions is rank/select arithmetic:

    left_child(X_k)   m = select_1(A_l, k), left = m - k   (k 1-based)
    right_child(X_k)  access(A_r, k - 1)
    left_parents(Y)   the consecutive run of A_l entries equal to Y + 1
    right_parents(Y)  every select_Y on A_r

Next to the tree the index keeps |val(X)| per variable and the
characteristic vectors of the variables of every cv_stride-th round (plus
the root and the dashed nodes of the rounds in between), marked in FB.

File layout (little-endian; u64 unless stated):
    "SIEDM001" | sigma | n | rounds | |S| | root (u32)
    | round_bounds (rounds + 1) | terminal bitmap (256 bits)
    | A_l bit length | A_l bytes | A_r count | A_r (u32 each)
    | len_vec (n) | FB bit length | FB bytes
    | per stored vector: count (u32), then (symbol u32, freq u32) sorted
    | CRC-32 of everything before it (u32)
"""

import logging
import struct
import threading
import zlib
from collections import Counter
from functools import lru_cache

import numpy as np

import esp
import store
from errors import (
    BadMagic,
    ChecksumMismatch,
    DomainError,
    IndexFormatError,
    InputError,
    InvariantViolation,
    OutOfRange,
    Truncated,
)
from succinct import BitVec, IntSeq, decode_all, encode_monotone

logger = logging.getLogger(__name__)

MAGIC = b"SIEDM001"
_HEADER = struct.Struct("<8sQQQQI")
_U64 = struct.Struct("<Q")
_U32 = struct.Struct("<I")

CV_CACHE_SIZE = 1 << 16


class EspIndex:
    """Immutable after construction; safe for concurrent readers."""

    def __init__(self, *, sigma: int, round_bounds, a_l: BitVec, a_r: IntSeq, len_vec,
                 fb: BitVec, root: int, terminal_bytes, text_len: int, stored=None):
        self.sigma = int(sigma)
        self.round_bounds = [int(b) for b in round_bounds]
        self.a_l = a_l
        self.a_r = a_r
        self.len_vec = np.asarray(len_vec, dtype=np.uint64)
        self.fb = fb
        # Vectors of the FB-marked variables: row k spans
        # cv_syms[cv_offsets[k]:cv_offsets[k + 1]], symbols ascending.
        offsets, syms, freqs = stored if stored is not None else ((0,), (), ())
        self.cv_offsets = np.asarray(offsets, dtype=np.int64)
        self.cv_syms = np.asarray(syms, dtype=np.uint32)
        self.cv_freqs = np.asarray(freqs, dtype=np.uint32)
        self.root = int(root)
        self.text_len = int(text_len)
        self._terminal_bytes = np.asarray(terminal_bytes, dtype=np.uint8)
        self._byte_to_id = np.full(256, -1, dtype=np.int64)
        self._byte_to_id[self._terminal_bytes] = np.arange(self._terminal_bytes.size)
        self._char_vec = lru_cache(maxsize=CV_CACHE_SIZE)(self._compute_char_vec)
        self._tables_lock = threading.Lock()
        self._tables = None

    # --- Shape ---

    @property
    def n(self) -> int:
        return int(self.len_vec.size)

    @property
    def rounds(self) -> int:
        return len(self.round_bounds) - 1

    @property
    def stored_count(self) -> int:
        return int(self.cv_offsets.size - 1)

    @property
    def nbytes(self) -> int:
        """In-memory size of the encoded structures."""
        return (
            self.a_l.nbytes + self.a_r.nbytes + self.fb.nbytes + int(self.len_vec.nbytes)
            + int(self.cv_offsets.nbytes + self.cv_syms.nbytes + self.cv_freqs.nbytes)
        )

    def is_variable(self, x: int) -> bool:
        return self.sigma <= x < self.sigma + self.n

    def _check_symbol(self, x: int):
        if not 0 <= x < self.sigma + self.n:
            raise DomainError(f"{x} is not a symbol of this index (sigma={self.sigma}, n={self.n})")

    def _check_variable(self, x: int):
        if not self.is_variable(x):
            raise DomainError(f"{x} is not a variable (variables are [{self.sigma}, {self.sigma + self.n}))")

    def variable_round(self, x: int) -> int:
        """0 for terminals, r for variables created in round r."""
        self._check_symbol(x)
        if x < self.sigma:
            return 0
        return int(np.searchsorted(self.round_bounds, x, side="right"))

    def length(self, x: int) -> int:
        self._check_symbol(x)
        return 1 if x < self.sigma else int(self.len_vec[x - self.sigma])

    def terminal_id(self, byte: int) -> int | None:
        t = int(self._byte_to_id[byte])
        return None if t < 0 else t

    def terminal_byte(self, t: int) -> int:
        if not 0 <= t < self.sigma:
            raise DomainError(f"{t} is not a terminal")
        return int(self._terminal_bytes[t])

    # --- Navigation ---

    def left_child(self, x: int) -> int:
        self._check_variable(x)
        k = x - self.sigma + 1
        return self.a_l.select(1, k) - k

    def right_child(self, x: int) -> int:
        self._check_variable(x)
        return self.a_r.access(x - self.sigma)

    def _left_run(self, x: int) -> tuple[int, int]:
        """(first rule index, count) of the rules whose left symbol is x."""
        v = x + 1
        zeros = self.a_l.zeros
        if x < 0 or v > zeros:
            return 0, 0
        first = self.a_l.select(0, v) - v + 1
        end = self.a_l.select(0, v + 1) - v if v < zeros else self.a_l.ones
        return first, end - first

    def left_parents(self, x: int) -> list[int]:
        self._check_symbol(x)
        first, count = self._left_run(x)
        return list(range(self.sigma + first, self.sigma + first + count))

    def right_parents(self, x: int) -> list[int]:
        self._check_symbol(x)
        return [self.sigma + int(p) for p in self.a_r.positions(x)]

    def lookup_rule(self, left: int, right: int) -> int | None:
        """The variable with body (left, right), or None."""
        limit = self.sigma + self.n
        if not (0 <= left < limit and 0 <= right < limit):
            return None
        first, count = self._left_run(left)
        if count == 0:
            return None
        before = self.a_r.count_before(right, first)
        if self.a_r.count_before(right, first + count) == before:
            return None
        return self.sigma + self.a_r.select(right, before + 1)

    def tables(self) -> tuple[list[int], list[int], list[int]]:
        """(left, right, length) per variable as plain lists, decoded once
        from A_l / A_r / len_vec. The search loop reads children from here."""
        if self._tables is None:
            with self._tables_lock:
                if self._tables is None:
                    left = (decode_all(self.a_l) - 1).tolist()
                    right = self.a_r.values.tolist()
                    self._tables = (left, right, self.len_vec.tolist())
        return self._tables

    # --- Characteristic vectors ---

    def char_vec(self, x: int) -> Counter:
        """F(x). Cached; callers must not mutate the result."""
        self._check_symbol(x)
        return self._char_vec(x)

    def _compute_char_vec(self, x: int) -> Counter:
        if x < self.sigma:
            return Counter({x: 1})
        i = x - self.sigma
        if self.fb.access(i):
            k = self.fb.rank(1, i) - 1
            lo, hi = int(self.cv_offsets[k]), int(self.cv_offsets[k + 1])
            return Counter(dict(zip(self.cv_syms[lo:hi].tolist(), self.cv_freqs[lo:hi].tolist())))
        vec = self._char_vec(self.left_child(x)) + self._char_vec(self.right_child(x))
        vec[x] += 1
        return vec

    # --- Text ---

    def extract(self, pos: int, length: int) -> bytes:
        """S[pos, pos + length - 1] (1-based) by descending from the root."""
        if length < 0 or pos < 1 or pos - 1 + length > self.text_len:
            raise OutOfRange(f"cannot extract {length} bytes at {pos} from a text of {self.text_len}")
        left, right, lens = self.tables()
        sigma = self.sigma
        lo, hi = pos - 1, pos - 1 + length
        out = bytearray()
        stack = [(self.root, 0)]
        while stack:
            x, off = stack.pop()
            size = 1 if x < sigma else lens[x - sigma]
            if off >= hi or off + size <= lo:
                continue
            if x < sigma:
                out.append(int(self._terminal_bytes[x]))
                continue
            l, r = left[x - sigma], right[x - sigma]
            stack.append((r, off + (1 if l < sigma else lens[l - sigma])))
            stack.append((l, off))
        return bytes(out)

    def text(self) -> bytes:
        return self.extract(1, self.text_len)

    def to_grammar(self) -> esp.EspGrammar:
        """Plain grammar with the index's ids."""
        left, right, _ = self.tables()
        rounds = []
        for r in range(self.rounds):
            lo, hi = self.round_bounds[r], self.round_bounds[r + 1]
            dashed = {right[x - self.sigma] for x in range(lo, hi) if lo <= right[x - self.sigma] < hi}
            rounds.append([
                esp.Rule(x, left[x - self.sigma], right[x - self.sigma], x in dashed)
                for x in range(lo, hi)
            ])
        return esp.EspGrammar(self.sigma, rounds, self.root, self.text_len)

    # --- Sizes ---

    def component_sizes(self) -> dict[str, int]:
        """Serialized bytes per component: the encoded tree (A_l, A_r, round
        bounds), the characteristic vectors (FB and the stored vectors) and
        the length vector."""
        tree = len(self.a_l.to_bytes()) + 8 + 4 * len(self.a_r) + 8 + 8 * len(self.round_bounds)
        vectors = len(self.fb.to_bytes()) + 8 + 4 * self.stored_count + 8 * int(self.cv_syms.size)
        return {"encoded_tree": tree, "char_vecs": vectors, "length_vec": 8 * self.n}

    def describe(self) -> dict:
        info = {
            "sigma": self.sigma,
            "n": self.n,
            "rounds": self.rounds,
            "text_len": self.text_len,
            "root": self.root,
            "stored_vectors": self.stored_count,
        }
        info.update(self.component_sizes())
        info["memory_bytes"] = self.nbytes
        return info

    # --- Serialization ---

    def serialize(self) -> bytes:
        bitmap = np.zeros(256, dtype=np.uint8)
        bitmap[self._terminal_bytes] = 1
        parts = [
            _HEADER.pack(MAGIC, self.sigma, self.n, self.rounds, self.text_len, self.root),
            np.asarray(self.round_bounds, dtype="<u8").tobytes(),
            np.packbits(bitmap, bitorder="little").tobytes(),
            _U64.pack(len(self.a_l)),
            self.a_l.to_bytes(),
            _U64.pack(len(self.a_r)),
            self.a_r.values.astype("<u4").tobytes(),
            self.len_vec.astype("<u8").tobytes(),
            _U64.pack(len(self.fb)),
            self.fb.to_bytes(),
        ]
        # Vector k starts at word 2 * cv_offsets[k] + k: its count, then
        # (symbol, freq) pairs.
        counts = np.diff(self.cv_offsets)
        k = counts.size
        words = np.empty(k + 2 * self.cv_syms.size, dtype="<u4")
        words[2 * self.cv_offsets[:-1] + np.arange(k)] = counts
        slots = 2 * np.arange(self.cv_syms.size) + np.repeat(np.arange(k), counts) + 1
        words[slots] = self.cv_syms
        words[slots + 1] = self.cv_freqs
        parts.append(words.tobytes())
        body = b"".join(parts)
        return body + _U32.pack(zlib.crc32(body))

    @classmethod
    def deserialize(cls, data: bytes) -> "EspIndex":
        data = bytes(data)
        if len(data) < len(MAGIC):
            raise Truncated(f"index stream is {len(data)} bytes, shorter than the magic")
        if data[: len(MAGIC)] != MAGIC:
            raise BadMagic(f"not an index file (magic {data[:len(MAGIC)]!r})")
        if len(data) < _HEADER.size + _U32.size:
            raise Truncated(f"index stream is {len(data)} bytes, shorter than the header")
        body = data[:-_U32.size]
        (crc,) = _U32.unpack(data[-_U32.size:])
        if zlib.crc32(body) != crc:
            raise ChecksumMismatch("index checksum mismatch; the file is corrupt or truncated")

        _, sigma, n, rounds, text_len, root = _HEADER.unpack_from(body)
        reader = _Reader(body, _HEADER.size)
        round_bounds = reader.array("<u8", rounds + 1)
        bitmap = np.unpackbits(np.frombuffer(reader.take(32), dtype=np.uint8), bitorder="little")
        al_bits = reader.u64()
        a_l = BitVec.from_bytes(reader.take(-(-al_bits // 8)), al_bits)
        ar_count = reader.u64()
        a_r = IntSeq(reader.array("<u4", ar_count))
        len_vec = reader.array("<u8", n).astype(np.uint64)
        fb_bits = reader.u64()
        fb = BitVec.from_bytes(reader.take(-(-fb_bits // 8)), fb_bits)
        stored = reader.vectors(fb.ones)
        if reader.remaining:
            raise IndexFormatError(f"{reader.remaining} unexpected trailing bytes")

        terminal_bytes = np.flatnonzero(bitmap)
        problems = []
        if terminal_bytes.size != sigma:
            problems.append(f"terminal bitmap has {terminal_bytes.size} bytes, sigma={sigma}")
        if ar_count != n or fb_bits != n or a_l.ones != n:
            problems.append(f"component lengths disagree with n={n}")
        if round_bounds[0] != sigma or round_bounds[-1] != sigma + n:
            problems.append("round bounds do not cover the variables")
        if n and not sigma <= root < sigma + n:
            problems.append(f"root {root} outside the variables")
        if not problems:
            problems = _rule_problems(sigma, round_bounds, decode_all(a_l) - 1, a_r.values,
                                      len_vec, root, text_len, stored[1])
        if problems:
            raise IndexFormatError("; ".join(problems))

        return cls(
            sigma=sigma, round_bounds=round_bounds.tolist(), a_l=a_l, a_r=a_r,
            len_vec=len_vec, fb=fb, stored=stored, root=root,
            terminal_bytes=terminal_bytes, text_len=text_len,
        )

    def save(self, path: str):
        store.write_bytes(path, self.serialize())
        logger.info("index saved: %s (n=%d, sigma=%d)", path, self.n, self.sigma)

    @classmethod
    def load(cls, path: str) -> "EspIndex":
        with open(path, "rb") as f:
            idx = cls.deserialize(f.read())
        logger.info("index loaded: %s (n=%d, sigma=%d, |S|=%d)", path, idx.n, idx.sigma, idx.text_len)
        return idx


class _Reader:
    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.offset = offset

    @property
    def remaining(self) -> int:
        return len(self.data) - self.offset

    def take(self, size: int) -> bytes:
        if size < 0 or size > self.remaining:
            raise Truncated(f"needed {size} bytes at offset {self.offset}, {self.remaining} left")
        chunk = self.data[self.offset: self.offset + size]
        self.offset += size
        return chunk

    def u64(self) -> int:
        return _U64.unpack(self.take(8))[0]

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def array(self, dtype: str, count: int) -> np.ndarray:
        raw = self.take(count * np.dtype(dtype).itemsize)
        return np.frombuffer(raw, dtype=dtype).astype(np.int64)

    def vectors(self, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """k length-prefixed (symbol, freq) runs as (offsets, syms, freqs)."""
        counts = np.empty(k, dtype=np.int64)
        pos, end = self.offset, len(self.data)
        for j in range(k):
            if pos + 4 > end:
                raise Truncated(f"vector {j} of {k} starts past the end of the stream")
            (counts[j],) = _U32.unpack_from(self.data, pos)
            pos += 4 + 8 * int(counts[j])
        words = self.array("<u4", k + 2 * int(counts.sum()))
        offsets = np.concatenate(([0], np.cumsum(counts)))
        slots = 2 * np.arange(int(offsets[-1])) + np.repeat(np.arange(k), counts) + 1
        return offsets, words[slots], words[slots + 1]


def _rule_problems(sigma: int, round_bounds, lefts, rights, len_vec, root: int,
                   text_len: int, syms) -> list[str]:
    """Structural checks on decoded rules: ids in range, children from
    earlier rounds (or the round's own dashed node), consistent lengths."""
    n = int(len_vec.size)
    if n == 0:
        return ["index has no variables"]
    limit = sigma + n
    bounds = np.asarray(round_bounds, dtype=np.int64)
    lefts = np.asarray(lefts, dtype=np.int64)
    rights = np.asarray(rights, dtype=np.int64)
    if np.any(np.diff(bounds) < 0):
        return ["round bounds decrease"]
    if lefts.min() < 0 or lefts.max() >= limit or rights.min() < 0 or rights.max() >= limit:
        return [f"rule children outside [0, {limit})"]
    if syms.size and int(syms.max()) >= limit:
        return [f"stored vector symbols outside [0, {limit})"]

    def round_of(ids):
        return np.where(ids < sigma, 0, np.searchsorted(bounds, ids, side="right"))

    own = round_of(np.arange(sigma, limit))
    left_round, right_round = round_of(lefts), round_of(rights)
    problems = []
    if np.any(left_round >= own):
        problems.append("a left child is not from an earlier round")
    same = np.flatnonzero(right_round == own)
    dashed = rights[same] - sigma
    if np.any(right_round > own) or np.any(
        (round_of(lefts[dashed]) >= own[same]) | (round_of(rights[dashed]) >= own[same])
    ):
        problems.append("a right child is neither from an earlier round nor a dashed node")
    lens = np.concatenate((np.ones(sigma, dtype=np.int64), np.asarray(len_vec, dtype=np.int64)))
    if not np.array_equal(lens[sigma:], lens[lefts] + lens[rights]):
        problems.append("length vector disagrees with the rules")
    elif lens[root] != text_len:
        problems.append(f"root length {int(lens[root])} is not the text length {text_len}")
    return problems


# --- Construction ---
# Characteristic vectors are built as CSR arrays: (offsets, syms, freqs),
# row k spanning syms[offsets[k]:offsets[k + 1]] with symbols ascending.

def _spans(offsets: np.ndarray, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flat positions of the given CSR rows, concatenated, and the row
    count of each."""
    counts = offsets[rows + 1] - offsets[rows]
    starts = np.repeat(offsets[rows] - (np.cumsum(counts) - counts), counts)
    return np.arange(int(counts.sum())) + starts, counts


def _rows(vecs, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Entries of the given CSR rows as (owner, syms, freqs); owner is the
    position in rows."""
    offsets, syms, freqs = vecs
    idx, counts = _spans(offsets, rows)
    return np.repeat(np.arange(rows.size), counts), syms[idx], freqs[idx]


def _merge(parts, count: int, width: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """CSR of `count` rows summing the (owner, syms, freqs) parts."""
    owner = np.concatenate([p[0] for p in parts])
    key = owner * width + np.concatenate([p[1] for p in parts])
    freqs = np.concatenate([p[2] for p in parts])
    order = np.argsort(key, kind="stable")
    key, freqs = key[order], freqs[order]
    starts = np.flatnonzero(np.concatenate(([True], key[1:] != key[:-1])))
    key = key[starts]
    rows = key // width
    offsets = np.concatenate(([0], np.cumsum(np.bincount(rows, minlength=count))))
    return offsets, key % width, np.add.reduceat(freqs, starts)


def _own(ids: np.ndarray):
    return np.arange(ids.size), ids, np.ones(ids.size, dtype=np.int64)


def _round_vectors(prev, prev_lo: int, lo: int, lefts: np.ndarray, rights: np.ndarray, width: int):
    """F of every variable of the round [lo, lo + len(lefts)) from the CSR of
    the previous round, whose ids start at prev_lo."""
    k = lefts.size
    outer = rights >= lo
    if np.any((lefts < prev_lo) | (lefts >= lo) | (rights < prev_lo) | (rights >= lo + k)):
        raise InvariantViolation(f"a rule of round [{lo}, {lo + k}) has a child outside the previous round")
    plain = np.flatnonzero(~outer)
    first = _merge(
        [_rows(prev, lefts[plain] - prev_lo), _rows(prev, rights[plain] - prev_lo), _own(lo + plain)],
        plain.size, width,
    )
    nested = np.flatnonzero(outer)
    if not nested.size:
        return first
    inner = np.searchsorted(plain, rights[nested] - lo)
    if not plain.size or np.any(plain[np.minimum(inner, plain.size - 1)] != rights[nested] - lo):
        raise InvariantViolation(f"a rule of round [{lo}, {lo + k}) nests under another nested rule")
    second = _merge(
        [_rows(prev, lefts[nested] - prev_lo), _rows(first, inner), _own(lo + nested)],
        nested.size, width,
    )
    # Interleave the two halves back into id order.
    counts = np.zeros(k, dtype=np.int64)
    counts[plain] = np.diff(first[0])
    counts[nested] = np.diff(second[0])
    offsets = np.concatenate(([0], np.cumsum(counts)))
    syms = np.empty(int(offsets[-1]), dtype=np.int64)
    freqs = np.empty_like(syms)
    for rows, (_, s, f) in ((plain, first), (nested, second)):
        idx, _ = _spans(offsets, rows)
        syms[idx] = s
        freqs[idx] = f
    return offsets, syms, freqs


def encode_grammar(g: esp.EspGrammar, terminal_bytes=None, tie_break: str = "right",
                   cv_stride: int = 2) -> EspIndex:
    """Rename g in sorted order (unless it already is) and encode it.

    F is materialized for variables of rounds divisible by cv_stride, for
    the root, and for the dashed nodes of the other rounds; every other
    vector is one step away from stored ones. Vectors are built a round
    at a time and only the previous round's are kept alive.
    """
    if cv_stride < 1:
        raise ValueError(f"cv_stride must be >= 1, got {cv_stride}")
    if terminal_bytes is None:
        if g.sigma > 256:
            raise InvariantViolation(f"sigma={g.sigma} needs an explicit terminal map")
        terminal_bytes = np.arange(g.sigma)
    if g.order != tie_break:
        g = esp.canonicalize(g, tie_break)
    n = g.n
    sigma = g.sigma
    width = sigma + n

    lefts = np.fromiter((r.left for r in g.rules()), dtype=np.int64, count=n)
    rights = np.fromiter((r.right for r in g.rules()), dtype=np.int64, count=n)
    a_l = encode_monotone(lefts + 1)
    a_r = IntSeq(rights)

    round_bounds = [sigma]
    for rs in g.rounds:
        round_bounds.append(round_bounds[-1] + len(rs))
    len_vec = np.fromiter((g.length(r.lhs) for r in g.rules()), dtype=np.uint64, count=n)

    flags = np.zeros(n, dtype=np.uint8)
    prev = (np.arange(sigma + 1), np.arange(sigma), np.ones(sigma, dtype=np.int64))
    prev_lo = 0
    counts, syms, freqs = [], [], []
    for r_no in range(1, len(round_bounds)):
        lo, hi = round_bounds[r_no - 1], round_bounds[r_no]
        ls, rs = lefts[lo - sigma:hi - sigma], rights[lo - sigma:hi - sigma]
        cur = _round_vectors(prev, prev_lo, lo, ls, rs, width)
        keep = np.zeros(hi - lo, dtype=bool)
        if r_no % cv_stride == 0:
            keep[:] = True
        keep[rs[rs >= lo] - lo] = True
        if lo <= g.root < hi:
            keep[g.root - lo] = True
        rows = np.flatnonzero(keep)
        flags[lo - sigma + rows] = 1
        _, s, f = _rows(cur, rows)
        counts.append(cur[0][rows + 1] - cur[0][rows])
        syms.append(s.astype(np.uint32))
        freqs.append(f.astype(np.uint32))
        prev, prev_lo = cur, lo

    offsets = np.concatenate(([0], np.cumsum(np.concatenate(counts))))
    idx = EspIndex(
        sigma=sigma, round_bounds=round_bounds, a_l=a_l, a_r=a_r, len_vec=len_vec,
        fb=BitVec(flags),
        stored=(offsets, np.concatenate(syms), np.concatenate(freqs)),
        root=g.root, terminal_bytes=terminal_bytes, text_len=g.text_len,
    )
    logger.info("index encoded: n=%d sigma=%d rounds=%d stored=%d", n, sigma, idx.rounds, idx.stored_count)
    return idx


def build_grammar(text, tie_break: str = "right") -> tuple[esp.EspGrammar, np.ndarray]:
    """ESP tree of text over terminals 0..sigma-1, the bytes present in
    text in ascending order, plus the byte behind each terminal."""
    data = esp.coerce_bytes(text)
    if len(data) < 2:
        raise InputError(f"a text needs at least two bytes to be indexed, got {len(data)}")
    raw = np.frombuffer(data, dtype=np.uint8)
    present = np.unique(raw)
    byte_to_id = np.full(256, -1, dtype=np.int64)
    byte_to_id[present] = np.arange(present.size)
    grammar = esp.build_esp_tree(byte_to_id[raw], sigma=int(present.size), tie_break=tie_break)
    return grammar, present


def build_index(text, tie_break: str = "right", cv_stride: int = 2) -> EspIndex:
    grammar, present = build_grammar(text, tie_break)
    return encode_grammar(grammar, present, tie_break, cv_stride)
