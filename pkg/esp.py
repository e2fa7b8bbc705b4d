"""
Edit-sensitive parsing (ESP).

A round splits the current symbol sequence into segments (maximal runs,
long repetition-free stretches, short repetition-free stretches), cuts
every segment into blocks of length 2 or 3 and replaces each block by a
variable: a 2-tree X -> AB for pairs, a 2-2-tree Y -> A X, X -> BC for
trigrams. Rounds repeat until one symbol (the root) is left.

Long repetition-free segments are cut at landmarks picked from labels
produced by iterated alphabet reduction, which makes the parse depend only
on a small neighbourhood of each position. That locality is what lets
identical substrings of a text and of a query parse almost identically.

Ids: terminals occupy [0, sigma), variables [sigma, sigma + n). After each
build round the round's rules are sorted by (left, right) and renumbered
consecutively, so the next round's alphabet reduction already sees the
final ids. Queries parsed against an index see the same ids.
"""

import enum
import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from errors import DomainError, InputError, InvariantViolation, QueryTooShort

logger = logging.getLogger(__name__)

TIE_BREAKS = ("right", "creation")


@dataclass(frozen=True, slots=True)
class Rule:
    lhs: int
    left: int
    right: int
    # The dashed X of a 2-2-tree Y -> A X, X -> BC; it belongs to Y's round.
    is_intermediate: bool = False


class SegmentType(enum.IntEnum):
    TYPE1 = 1  # maximal repetition
    TYPE2 = 2  # repetition-free, length >= 2 lg*|S|
    TYPE3 = 3  # short repetition-free


@dataclass(frozen=True, slots=True)
class Segment:
    start: int
    end: int  # exclusive
    kind: SegmentType

    def __len__(self) -> int:
        return self.end - self.start


def coerce_bytes(data) -> bytes:
    if isinstance(data, str):
        return data.encode("utf-8")
    return bytes(data)


def l1_distance(a: Counter, b: Counter) -> int:
    keys = a.keys() | b.keys()
    return sum(abs(a.get(k, 0) - b.get(k, 0)) for k in keys)


def iterated_log(u: int) -> int:
    """lg* u: how many times log2 must be applied before the value is <= 1."""
    if u < 1:
        raise ValueError(f"iterated_log needs u >= 1, got {u}")
    count = 0
    x = float(u)
    while x > 1.0:
        x = math.log2(x)
        count += 1
    return count


def min_type2_length(text_len: int) -> int:
    return 2 * iterated_log(max(text_len, 1))


# --- Segments ---

def _segment_arrays(arr: np.ndarray, text_len: int | None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(starts, ends, kinds) of the segments of arr; ends are exclusive."""
    m = int(arr.size)
    if m < 2:
        raise InvariantViolation(f"cannot segment a sequence of length {m}")
    min_type2 = min_type2_length(text_len or m)

    cuts = np.flatnonzero(arr[1:] != arr[:-1]) + 1
    group_starts = np.concatenate(([0], cuts))
    group_ends = np.append(cuts, m)
    is_run = group_ends - group_starts >= 2

    # A piece is one run, or a maximal stretch of singleton groups.
    opens = is_run.copy()
    opens[0] = True
    opens[1:] |= is_run[:-1]
    piece_starts = group_starts[opens]
    piece_runs = is_run[opens]
    piece_ends = np.append(piece_starts[1:], m)

    # A stretch of length 1 is glued to the span before it, or to the one
    # after it when it opens the sequence.
    keep = piece_runs | (piece_ends - piece_starts > 1)
    starts = piece_starts[keep]
    runs = piece_runs[keep]
    starts[0] = 0
    ends = np.append(starts[1:], m)
    kinds = np.where(
        runs, int(SegmentType.TYPE1),
        np.where(ends - starts >= min_type2, int(SegmentType.TYPE2), int(SegmentType.TYPE3)),
    )
    return starts, ends, kinds.astype(np.int64)


def classify_segments(seq, text_len: int | None = None) -> list[Segment]:
    """Partition seq into maximal repetitions and the repetition-free
    stretches between them.

    A repetition-free stretch of length 1 is glued to the repetition before
    it, or to the one after it when it opens the sequence.
    """
    arr = np.asarray(seq, dtype=np.int64).ravel()
    starts, ends, kinds = _segment_arrays(arr, text_len)
    return [
        Segment(s, e, SegmentType(k))
        for s, e, k in zip(starts.tolist(), ends.tolist(), kinds.tolist())
    ]


# --- Alphabet reduction and landmarks ---
# Labels of many segments live in one array; `head` and `tail` mark the
# first and last label of every segment, and nothing reads across them.

def _label(cur: np.ndarray, other: np.ndarray) -> np.ndarray:
    """2p + bit p of cur, p the lowest bit where cur and other differ."""
    x = cur ^ other
    if np.any(x == 0):
        i = int(np.flatnonzero(x == 0)[0])
        raise InvariantViolation(f"adjacent equal symbols at label {i}")
    p = np.log2(x & -x).astype(np.int64)
    return 2 * p + ((cur >> p) & 1)


def _reduce_once(a: np.ndarray) -> np.ndarray:
    return _label(a[1:], a[:-1])


def _recolor(labels: np.ndarray, head: np.ndarray, tail: np.ndarray) -> np.ndarray:
    out = labels.copy()
    last = out.size - 1
    for v in (5, 4, 3):
        idx = np.flatnonzero(out == v)
        if not idx.size:
            continue
        left = np.where(head[idx], -1, out[idx - 1])
        right = np.where(tail[idx], -1, out[np.minimum(idx + 1, last)])
        out[idx] = np.where(
            (left != 0) & (right != 0), 0,
            np.where((left != 1) & (right != 1), 1, 2),
        )
    return out


def _segment_labels(arr: np.ndarray, starts: np.ndarray, ends: np.ndarray):
    """Reduced labels of the repetition-free segments [starts, ends) of arr,
    one per position start+1..end-1, concatenated.

    Returns (labels, positions, head, tail).
    """
    sizes = ends - starts - 1
    total = int(sizes.sum())
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    owner = np.repeat(np.arange(sizes.size), sizes)
    pos = np.arange(total) - offsets[owner] + starts[owner] + 1
    head = np.zeros(total, dtype=bool)
    head[offsets[:-1]] = True
    tail = np.zeros(total, dtype=bool)
    tail[offsets[1:] - 1] = True
    lone = head & tail

    labels = _label(arr[pos], arr[pos - 1])
    while True:
        active = (np.maximum.reduceat(labels, offsets[:-1]) >= 6)[owner]
        if not active.any():
            break
        # Later passes keep the length: a segment's first label is taken
        # against its successor, with the same differing-bit rule.
        other = np.where(head, np.roll(labels, -1), np.roll(labels, 1))
        step = active & ~lone
        nxt = labels.copy()
        nxt[step] = _label(labels[step], other[step])
        nxt[active & lone] = 0
        labels = nxt
    return _recolor(labels, head, tail), pos, head, tail


def alphabet_reduction(seg) -> np.ndarray:
    """Labels for positions 1..|seg|-1 of a repetition-free sequence.

    One pass of L[i] = 2p + bit(p, seg[i]), p the lowest bit where seg[i]
    and seg[i-1] differ; further passes keep the length until every label
    is below 6, then 5, 4 and 3 are recoloured into {0, 1, 2}.
    """
    a = np.asarray(seg, dtype=np.int64).ravel()
    if a.size < 2:
        raise InvariantViolation("alphabet reduction needs at least two symbols")
    labels, _, _, _ = _segment_labels(a, np.array([0]), np.array([a.size]))
    return labels


def _landmarks(labels: np.ndarray, head: np.ndarray, tail: np.ndarray) -> np.ndarray:
    if labels.size == 0:
        return np.zeros(0, dtype=np.int64)
    prev, nxt = np.roll(labels, 1), np.roll(labels, -1)
    big = np.iinfo(np.int64).max
    maxima = np.flatnonzero(
        (labels > np.where(head, -1, prev)) & (labels > np.where(tail, -1, nxt))
    )
    minima = np.flatnonzero(
        (labels < np.where(head, big, prev)) & (labels < np.where(tail, big, nxt))
    )
    if maxima.size == 0 or minima.size == 0:
        return maxima

    # Minima inside a gap longer than 3 between two maxima of one segment.
    seg = np.cumsum(head) - 1
    k = np.searchsorted(maxima, minima)
    a = maxima[np.maximum(k - 1, 0)]
    b = maxima[np.minimum(k, maxima.size - 1)]
    fill = (
        (k > 0) & (k < maxima.size)
        & (seg[a] == seg[minima]) & (seg[b] == seg[minima])
        & (b - a > 3) & (minima >= a + 2) & (minima <= b - 2)
    )
    return np.union1d(maxima, minima[fill])


def select_landmarks(labels) -> list[int]:
    """Strict local maxima of labels, plus local minima inside landmark gaps
    longer than 3. A boundary position counts as a maximum when it beats
    its only neighbour. Returned ascending; no two are adjacent."""
    lab = np.asarray(labels, dtype=np.int64).ravel()
    if lab.size == 0:
        return []
    head = np.zeros(lab.size, dtype=bool)
    tail = np.zeros(lab.size, dtype=bool)
    head[0] = tail[-1] = True
    return _landmarks(lab, head, tail).tolist()


# --- Blocks ---

def _left_aligned(starts: np.ndarray, lengths: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pairs from the left of every group; an odd group ends in a triple."""
    if np.any(lengths < 2):
        raise InvariantViolation("cannot cut a group shorter than 2 into blocks")
    per = lengths // 2
    first = np.cumsum(per) - per
    total = int(per.sum())
    block_starts = np.repeat(starts, per) + 2 * (np.arange(total) - np.repeat(first, per))
    sizes = np.full(total, 2, dtype=np.int64)
    sizes[(first + per - 1)[lengths % 2 == 1]] = 3
    return block_starts, sizes


def _block_arrays(arr: np.ndarray, text_len: int | None) -> tuple[np.ndarray, np.ndarray]:
    m = int(arr.size)
    seg_starts, seg_ends, kinds = _segment_arrays(arr, text_len)
    cuts = [seg_starts, np.array([m])]

    type2 = kinds == int(SegmentType.TYPE2)
    if type2.any():
        labels, pos, head, tail = _segment_labels(arr, seg_starts[type2], seg_ends[type2])
        marks = _landmarks(labels, head, tail)
        # A landmark on the last position of its segment is dropped.
        marks = pos[marks[~tail[marks]]]
        cuts += [marks, marks + 2]

    # Pieces are the stretches between landmark pairs and the pairs
    # themselves; a piece of length 1 merges into its neighbour.
    bounds = np.unique(np.concatenate(cuts))
    piece_starts = bounds[:-1]
    single = np.diff(bounds) == 1
    opens_segment = np.zeros(m + 1, dtype=bool)
    opens_segment[seg_starts] = True
    first = opens_segment[piece_starts]
    joins = ~first & (single | np.concatenate(([False], single[:-1] & first[:-1])))
    group_starts = piece_starts[~joins]
    return _left_aligned(group_starts, np.diff(np.append(group_starts, m)))


def round_blocks(seq, text_len: int | None = None) -> list[tuple[int, int]]:
    """(start, size) of every block of one round, size 2 or 3."""
    starts, sizes = _block_arrays(np.asarray(seq, dtype=np.int64).ravel(), text_len)
    return list(zip(starts.tolist(), sizes.tolist()))


class RuleTable:
    """Rule table handing out sequential ids from `base`.

    Identical (left, right) bodies share one variable. A build uses one
    table per round and renumbers afterwards; the two-string comparison in
    approx_edm shares one table between both strings and keeps the ids.
    """

    def __init__(self, base: int):
        self.base = base
        self._ids: dict[tuple[int, int], int] = {}
        self.new_rules: list[Rule] = []

    def pair(self, left: int, right: int, intermediate: bool = False) -> int:
        key = (left, right)
        x = self._ids.get(key)
        if x is None:
            x = self.base + len(self.new_rules)
            self._ids[key] = x
            self.new_rules.append(Rule(x, left, right, intermediate))
        return x


class QueryTable:
    """Rule table for parsing a query against an index: bodies the index
    knows reuse its variable, anything else gets a temp id at or above
    `next_id` (which starts past every index id)."""

    def __init__(self, idx, next_id: int):
        self.idx = idx
        self.limit = idx.sigma + idx.n
        self.next_id = next_id
        self._ids: dict[tuple[int, int], int] = {}
        self.new_rules: list[Rule] = []
        self.hits = 0

    def pair(self, left: int, right: int, intermediate: bool = False) -> int:
        key = (left, right)
        x = self._ids.get(key)
        if x is not None:
            return x
        if left < self.limit and right < self.limit:
            x = self.idx.lookup_rule(left, right)
        if x is None:
            x = self.next_id
            self.next_id += 1
            self.new_rules.append(Rule(x, left, right, intermediate))
        else:
            self.hits += 1
        self._ids[key] = x
        return x


def parse_round(seq, table, text_len: int | None = None) -> tuple[np.ndarray, list[Rule]]:
    """Contract seq by one ESP round. Returns the new sequence and the
    rules this call added to `table`."""
    arr = np.asarray(seq, dtype=np.int64).ravel()
    if arr.size < 2:
        raise InvariantViolation("a round needs at least two symbols")
    before = len(table.new_rules)
    starts, sizes = _block_arrays(arr, text_len)
    vals = arr.tolist()
    out = []
    for i, size in zip(starts.tolist(), sizes.tolist()):
        if size == 2:
            out.append(table.pair(vals[i], vals[i + 1]))
        else:
            inner = table.pair(vals[i + 1], vals[i + 2], True)
            out.append(table.pair(vals[i], inner))
    return np.asarray(out, dtype=np.int64), table.new_rules[before:]


def contract_round(seq, base: int, tie_break: str = "right",
                   text_len: int | None = None) -> tuple[np.ndarray, list[Rule]]:
    """One build round over whole arrays: the blocks of parse_round with a
    fresh RuleTable, numbered from `base` in rename_round order.

    Returns the contracted sequence and the round's rules by id.
    """
    if tie_break not in TIE_BREAKS:
        raise ValueError(f"tie_break must be one of {TIE_BREAKS}, got {tie_break!r}")
    arr = np.asarray(seq, dtype=np.int64).ravel()
    if arr.size < 2:
        raise InvariantViolation("a round needs at least two symbols")
    starts, sizes = _block_arrays(arr, text_len)
    blocks = starts.size
    tri = np.flatnonzero(sizes == 3)
    a, b, c = arr[starts], arr[starts + 1], arr[starts[tri] + 2]

    # Row i is block i's top rule: AB, or A(BC) stored as (A, 1, B, C).
    # Rows from `blocks` on are the dashed BC of every triple. Creation
    # order puts a triple's BC just before its outer rule.
    rows = blocks + tri.size
    left = np.concatenate((a, b[tri]))
    flag = np.zeros(rows, dtype=np.int64)
    flag[tri] = 1
    p = np.concatenate((b, c))
    q = np.zeros(rows, dtype=np.int64)
    q[tri] = c
    event = np.concatenate((2 * np.arange(blocks), 2 * tri))
    event[tri] += 1
    dashed = np.zeros(rows, dtype=bool)
    dashed[blocks:] = True

    order = np.lexsort((event, q, p, flag, left))
    sl, sf, sp, sq = left[order], flag[order], p[order], q[order]
    fresh = np.ones(rows, dtype=bool)
    fresh[1:] = (sl[1:] != sl[:-1]) | (sf[1:] != sf[:-1]) | (sp[1:] != sp[:-1]) | (sq[1:] != sq[:-1])
    firsts = np.flatnonzero(fresh)
    uid = np.empty(rows, dtype=np.int64)
    uid[order] = np.cumsum(fresh) - 1

    u_left = sl[firsts]
    if tie_break == "right":
        rank = np.arange(firsts.size)
    else:
        by_creation = np.lexsort((event[order][firsts], u_left))
        rank = np.empty(firsts.size, dtype=np.int64)
        rank[by_creation] = np.arange(firsts.size)
    ids = base + rank

    u_right = sp[firsts].copy()
    u_right[uid[tri]] = ids[uid[blocks:]]
    u_dashed = dashed[order][firsts]

    by_id = np.argsort(rank)
    rules = [
        Rule(x, l, r, d)
        for x, l, r, d in zip(
            ids[by_id].tolist(), u_left[by_id].tolist(), u_right[by_id].tolist(), u_dashed[by_id].tolist(),
        )
    ]
    return ids[uid[:blocks]], rules


# --- Grammar ---

@dataclass
class EspGrammar:
    """Plain SLP produced by ESP: rules per round, root, |val(X)| per symbol."""

    sigma: int
    rounds: list[list[Rule]]
    root: int
    text_len: int
    lengths: dict[int, int] = field(default_factory=dict)
    # Tie-break the ids are already sorted by, if any.
    order: str | None = field(default=None, compare=False)
    _rules: dict[int, Rule] = field(init=False, repr=False, compare=False)
    _round_of: dict[int, int] = field(init=False, repr=False, compare=False)
    _cv: dict[int, Counter] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._rules = {}
        self._round_of = {}
        for r, rules in enumerate(self.rounds, start=1):
            for rule in rules:
                self._rules[rule.lhs] = rule
                self._round_of[rule.lhs] = r
        self._cv = {}
        for rules in self.rounds:
            # Intermediates first: a 2-2-tree root needs its dashed child.
            for rule in sorted(rules, key=lambda x: self._round_of.get(x.right) == self._round_of[x.lhs]):
                if rule.lhs not in self.lengths:
                    self.lengths[rule.lhs] = self.length(rule.left) + self.length(rule.right)

    @property
    def n(self) -> int:
        return len(self._rules)

    def is_variable(self, x: int) -> bool:
        return x in self._rules

    def rule(self, x: int) -> Rule:
        try:
            return self._rules[x]
        except KeyError:
            raise DomainError(f"{x} is not a variable of this grammar") from None

    def left_child(self, x: int) -> int:
        return self.rule(x).left

    def right_child(self, x: int) -> int:
        return self.rule(x).right

    def length(self, x: int) -> int:
        return self.lengths.get(x, 1)

    def round_of(self, x: int) -> int:
        return self._round_of.get(x, 0)

    def variables(self):
        for rules in self.rounds:
            for rule in rules:
                yield rule.lhs

    def rules(self):
        for rules in self.rounds:
            yield from rules

    def char_vec(self, x: int) -> Counter:
        """F(x) = F(left) + F(right) + {x: 1}; terminals give {x: 1}.
        Memoized; callers must not mutate the result."""
        cached = self._cv.get(x)
        if cached is not None:
            return cached
        rule = self._rules.get(x)
        if rule is None:
            vec = Counter({x: 1})
        else:
            vec = self.char_vec(rule.left) + self.char_vec(rule.right)
            vec[x] += 1
        self._cv[x] = vec
        return vec


def expand(grammar, x: int) -> list[int]:
    """Terminal string derived from x."""
    out: list[int] = []
    stack = [x]
    while stack:
        y = stack.pop()
        if grammar.is_variable(y):
            stack.append(grammar.right_child(y))
            stack.append(grammar.left_child(y))
        else:
            out.append(y)
    return out


def rename_round(rules: list[Rule], base: int, tie_break: str = "right", resolve=None) -> tuple[dict[int, int], list[Rule]]:
    """Sort one round's rules and give them consecutive ids from `base`.

    Primary key is the left symbol. Ties go by the right symbol, where a
    same-round right child (the dashed node of a 2-2-tree) sorts after
    every earlier symbol, by its own body; with tie_break="creation" ties
    keep the order the rules were created in. `resolve` maps ids of
    earlier rounds to their already-renamed values.
    """
    if tie_break not in TIE_BREAKS:
        raise ValueError(f"tie_break must be one of {TIE_BREAKS}, got {tie_break!r}")
    resolve = resolve or (lambda x: x)
    same = {r.lhs: r for r in rules}

    def right_key(rule):
        inner = same.get(rule.right)
        if inner is None:
            return (0, resolve(rule.right), 0)
        return (1, resolve(inner.left), resolve(inner.right))

    if tie_break == "right":
        order = sorted(rules, key=lambda r: (resolve(r.left), right_key(r)))
    else:
        order = sorted(rules, key=lambda r: (resolve(r.left), r.lhs))
    mapping = {r.lhs: base + i for i, r in enumerate(order)}
    renamed = [
        Rule(
            mapping[r.lhs],
            resolve(r.left),
            mapping[r.right] if r.right in same else resolve(r.right),
            r.is_intermediate,
        )
        for r in order
    ]
    return mapping, renamed


def canonicalize(g: EspGrammar, tie_break: str = "right") -> EspGrammar:
    """Rename every round of g in sorted order, lowest round first, so ids
    grow with the round and, inside a round, with the left symbol."""
    mapping: dict[int, int] = {}
    base = g.sigma
    rounds = []
    for rules in g.rounds:
        m, renamed = rename_round(rules, base, tie_break, resolve=lambda x: mapping.get(x, x))
        mapping.update(m)
        rounds.append(renamed)
        base += len(renamed)
    return EspGrammar(g.sigma, rounds, mapping.get(g.root, g.root), g.text_len, order=tie_break)


def _as_ids(s) -> np.ndarray:
    if isinstance(s, (bytes, bytearray, memoryview, str)):
        return np.frombuffer(coerce_bytes(s), dtype=np.uint8).astype(np.int64)
    return np.asarray(s, dtype=np.int64).ravel()


def build_esp_tree(s, sigma: int | None = None, tie_break: str = "right") -> EspGrammar:
    """ESP tree of a terminal sequence (ids in [0, sigma)) as an EspGrammar.

    Each round is numbered as soon as it is parsed, so the rules come out
    in canonical order and the next round works on final ids.
    """
    if tie_break not in TIE_BREAKS:
        raise ValueError(f"tie_break must be one of {TIE_BREAKS}, got {tie_break!r}")
    arr = _as_ids(s)
    if arr.size < 2:
        raise InputError(f"a text needs at least two symbols to be indexed, got {arr.size}")
    if sigma is None:
        sigma = int(arr.max()) + 1
    if arr.min() < 0 or arr.max() >= sigma:
        raise InvariantViolation(f"terminal ids must lie in [0, {sigma})")
    text_len = int(arr.size)

    rounds: list[list[Rule]] = []
    base = sigma
    seq = arr
    while seq.size > 1:
        out, rules = contract_round(seq, base, tie_break, text_len)
        logger.debug("round %d: %d -> %d symbols, %d rules", len(rounds) + 1, seq.size, out.size, len(rules))
        rounds.append(rules)
        base += len(rules)
        seq = out

    grammar = EspGrammar(sigma, rounds, int(seq[0]), text_len, order=tie_break)
    logger.info("esp tree: |S|=%d sigma=%d n=%d rounds=%d", text_len, sigma, grammar.n, len(rounds))
    return grammar


# --- Queries ---

@dataclass
class QueryParse:
    """A query parsed with the index's dictionary."""

    query: bytes
    grammar: EspGrammar  # temp rules only; index variables appear as leaves
    char_vec: Counter
    support: frozenset
    temp_terminals: dict[int, int]  # byte -> temp id
    hits: int = 0

    @property
    def root(self) -> int:
        return self.grammar.root

    def __len__(self) -> int:
        return len(self.query)


def parse_query(query, idx) -> QueryParse:
    """ESP-parse a query with the same rounds and lg* threshold as the
    indexed text, looking every block up in the index first.

    Bytes absent from the text and blocks unknown to the index get temp ids
    above sigma + n, so they can never collide with the text's symbols.
    """
    data = coerce_bytes(query)
    if len(data) < 2:
        raise QueryTooShort(f"query must have at least 2 bytes, got {len(data)}")
    limit = idx.sigma + idx.n
    next_id = limit
    temp_terminals: dict[int, int] = {}
    ids = []
    for b in data:
        t = idx.terminal_id(b)
        if t is None:
            t = temp_terminals.get(b)
            if t is None:
                t = temp_terminals[b] = next_id
                next_id += 1
        ids.append(t)

    table = QueryTable(idx, next_id)
    rounds = []
    seq = np.asarray(ids, dtype=np.int64)
    while seq.size > 1:
        seq, new = parse_round(seq, table, idx.text_len)
        rounds.append(new)
    root = int(seq[0])

    temp = {r.lhs: r for rules in rounds for r in rules}
    lengths: dict[int, int] = {}
    vectors: dict[int, Counter] = {}

    def length(x):
        if x in temp:
            if x not in lengths:
                lengths[x] = length(temp[x].left) + length(temp[x].right)
            return lengths[x]
        if x < limit:
            lengths[x] = idx.length(x)
            return lengths[x]
        return 1

    def char_vec(x):
        if x in vectors:
            return vectors[x]
        if x in temp:
            vec = char_vec(temp[x].left) + char_vec(temp[x].right)
            vec[x] += 1
        elif x < limit:
            vec = idx.char_vec(x)
        else:
            vec = Counter({x: 1})
        vectors[x] = vec
        return vec

    length(root)
    fq = Counter(char_vec(root))
    grammar = EspGrammar(idx.sigma, rounds, root, len(data), lengths)
    logger.debug("query parse: |Q|=%d rounds=%d index hits=%d temp rules=%d", len(data), len(rounds), table.hits, len(temp))
    return QueryParse(data, grammar, fq, frozenset(fq), temp_terminals, table.hits)


# --- Two-string approximation ---

def characteristic_vector(s) -> Counter:
    """F(S) of a standalone string over its own ESP tree (byte terminals)."""
    arr = _as_ids(s)
    if arr.size < 2:
        return Counter(arr.tolist())
    g = build_esp_tree(arr, sigma=256)
    return Counter(g.char_vec(g.root))


def _shared_char_vec(arr: np.ndarray, table: RuleTable, text_len: int) -> Counter:
    seq = arr
    while seq.size > 1:
        seq, _ = parse_round(seq, table, text_len)
    rules = {r.lhs: r for r in table.new_rules}
    memo: dict[int, Counter] = {}

    def vec(x):
        if x not in memo:
            rule = rules.get(x)
            if rule is None:
                memo[x] = Counter({x: 1})
            else:
                v = vec(rule.left) + vec(rule.right)
                v[x] += 1
                memo[x] = v
        return memo[x]

    return Counter(vec(int(seq[0])))


def approx_edm(s, q) -> int:
    """||F(S) - F(Q)||_1 with both strings parsed through one rule table, so
    equal subtrees get equal names. Within a lg*-times-log factor of the
    edit distance with moves; d(S, Q) <= 2 * approx_edm(S, Q) always."""
    a, b = _as_ids(s), _as_ids(q)
    text_len = max(a.size, b.size, 1)
    table = RuleTable(base=256)
    return l1_distance(_shared_char_vec(a, table, text_len), _shared_char_vec(b, table, text_len))
