"""
Approximate pattern search over an ESP index.

The query is parsed with the index's dictionary, giving F(Q) and its
support V(Q). Every |Q|-gram of the text is stabbed by the lowest variable
whose two children it straddles. For each variable X at least |Q| long
and each split j (j symbols taken from X's right child) the candidate
decomposition is the maximal subtrees covering the window inside T(X).
mu(Y), the mass of F(Y) outside V(Q), is a lower bound on the distance
contributed by Y, so walks abort as soon as the accumulated bound passes
tau. Survivors are checked with the exact L1 distance, and their
positions come from walking parent links up to the root.
"""

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

import esp
from errors import QueryError, QueryTooLong, QueryTooShort

logger = logging.getLogger(__name__)

_ABORT = -1


@dataclass(frozen=True, slots=True)
class Candidate:
    stab: int
    split: int  # symbols of the window taken from the right child
    decomposition: tuple[int, ...]  # left to right; repeats count twice
    mu_sum: int


@dataclass(frozen=True, slots=True, order=True)
class Occurrence:
    pos: int  # 1-based
    dist: int
    size: int = field(default=1, compare=False)  # parts in the decomposition


@dataclass
class SearchStats:
    traversed: int = 0  # #TN
    candidates: int = 0  # #CAND
    accepted: int = 0  # #TP
    occurrences: int = 0  # #OCC

    def merge(self, other: "SearchStats"):
        self.traversed += other.traversed
        self.candidates += other.candidates
        self.accepted += other.accepted
        self.occurrences += other.occurrences

    def as_dict(self) -> dict[str, int]:
        return {
            "#TN": self.traversed,
            "#CAND": self.candidates,
            "#TP": self.accepted,
            "#OCC": self.occurrences,
        }


def _mu(x, vq, sigma, left, right, memo):
    m = memo.get(x)
    if m is None:
        m = 0 if x in vq else 1
        if x >= sigma:
            m += _mu(left[x - sigma], vq, sigma, left, right, memo)
            m += _mu(right[x - sigma], vq, sigma, left, right, memo)
        memo[x] = m
    return m


def mu(idx, x: int, vq, memo: dict | None = None) -> int:
    """Sum of F(x)(e) over e not in vq."""
    left, right, _ = idx.tables()
    return _mu(x, vq, idx.sigma, left, right, {} if memo is None else memo)


class _Walk:
    __slots__ = ("d", "parts")

    def __init__(self):
        self.d = 0
        self.parts: list[int] = []


class QueryContext:
    """Per-query, per-worker state: counters and the mu, position and
    distance memos."""

    def __init__(self, idx, qp: esp.QueryParse, tau: int, prune: bool = True):
        self.idx = idx
        self.qp = qp
        self.q = len(qp)
        self.tau = tau
        self.prune = prune
        self.vq = qp.support
        self.sigma = idx.sigma
        self.left, self.right, self.lens = idx.tables()
        self.stats = SearchStats()
        self.mu_memo: dict[int, int] = {}
        self.position_memo: dict[int, set[int]] = {}
        self.distance_memo: dict[tuple[int, ...], int] = {}

    def length(self, x: int) -> int:
        return 1 if x < self.sigma else self.lens[x - self.sigma]

    def mu(self, x: int) -> int:
        return _mu(x, self.vq, self.sigma, self.left, self.right, self.mu_memo)

    def find_left(self, x: int, q: int, walk: _Walk) -> int:
        """Cover the last q symbols of val(x), right to left."""
        self.stats.traversed += 1
        if self.prune and walk.d > self.tau:
            return _ABORT
        if q == 0:
            return 0
        size = self.length(x)
        if size <= q:
            walk.d += self.mu(x)
            walk.parts.append(x)
            return q - size
        rest = self.find_left(self.right[x - self.sigma], q, walk)
        if rest > 0:
            return self.find_left(self.left[x - self.sigma], rest, walk)
        return rest

    def find_right(self, x: int, q: int, walk: _Walk) -> int:
        """Cover the first q symbols of val(x), left to right."""
        self.stats.traversed += 1
        if self.prune and walk.d > self.tau:
            return _ABORT
        if q == 0:
            return 0
        size = self.length(x)
        if size <= q:
            walk.d += self.mu(x)
            walk.parts.append(x)
            return q - size
        rest = self.find_right(self.left[x - self.sigma], q, walk)
        if rest > 0:
            return self.find_right(self.right[x - self.sigma], rest, walk)
        return rest


def find_candidates(ctx: QueryContext, x: int) -> list[Candidate]:
    """Decompositions of the |Q|-grams inside val(x), one per split j in
    [0, |Q|], whose mu bound stays within tau.

    j = 0 and j = |Q| cover windows lying wholly in one child. A window
    equal to val(x) is decomposed as (x,) itself.
    """
    q = ctx.q
    i = x - ctx.sigma
    lx, rx = ctx.left[i], ctx.right[i]
    ll, lr = ctx.length(lx), ctx.length(rx)
    out: list[Candidate] = []
    for j in range(max(0, q - ll), min(q, lr) + 1):
        if q - j == ll and j == lr:
            ctx.stats.traversed += 1
            d = ctx.mu(x)
            if d <= ctx.tau:
                out.append(Candidate(x, j, (x,), d))
            continue
        walk = _Walk()
        if ctx.find_left(lx, q - j, walk) != 0:
            continue
        left_parts = walk.parts[::-1]
        walk.parts = []
        if ctx.find_right(rx, j, walk) != 0 or walk.d > ctx.tau:
            continue
        out.append(Candidate(x, j, tuple(left_parts + walk.parts), walk.d))
    ctx.stats.candidates += len(out)
    return out


def decomposition_distance(idx, parts, fq: Counter) -> int:
    """||F(Q) - sum F(part)||_1."""
    g: Counter = Counter()
    for x in parts:
        g.update(idx.char_vec(x))
    return esp.l1_distance(fq, g)


def l1_post_filter(idx, cand: Candidate, fq: Counter, tau: int, memo: dict | None = None) -> int | None:
    """The decomposition's distance if it is within tau, else None. memo
    maps decompositions to distances already computed for fq."""
    if memo is None:
        dist = decomposition_distance(idx, cand.decomposition, fq)
    else:
        dist = memo.get(cand.decomposition)
        if dist is None:
            dist = memo[cand.decomposition] = decomposition_distance(idx, cand.decomposition, fq)
    return dist if dist <= tau else None


def compute_position(idx, x: int, memo: dict | None = None) -> set[int]:
    """1-based start of every node labelled x in the text's parse tree."""
    memo = {} if memo is None else memo
    found = memo.get(x)
    if found is not None:
        return found
    if x == idx.root:
        found = {1}
    else:
        found = set()
        size = idx.length(x)
        for p in idx.right_parents(x):
            shift = idx.length(p) - size
            found.update(pos + shift for pos in compute_position(idx, p, memo))
        for p in idx.left_parents(x):
            found.update(compute_position(idx, p, memo))
    memo[x] = found
    return found


def _validate(idx, data: bytes, tau: int):
    if isinstance(tau, bool) or not isinstance(tau, (int, np.integer)):
        raise QueryError(f"threshold must be an integer, got {tau!r}")
    if tau < 0:
        raise QueryError(f"threshold must be >= 0, got {tau}")
    if len(data) < 2:
        raise QueryTooShort(f"query must have at least 2 bytes, got {len(data)}")
    if len(data) > idx.text_len:
        raise QueryTooLong(f"query of {len(data)} bytes is longer than the text ({idx.text_len})")


def _scan(idx, qp: esp.QueryParse, tau: int, prune: bool, variables: list[int]):
    ctx = QueryContext(idx, qp, tau, prune)
    best: dict[int, tuple[int, int]] = {}
    for x in variables:
        for cand in find_candidates(ctx, x):
            # Windows under shared subtrees repeat decompositions.
            dist = l1_post_filter(idx, cand, qp.char_vec, tau, ctx.distance_memo)
            if dist is None:
                continue
            ctx.stats.accepted += 1
            shift = ctx.length(ctx.left[x - ctx.sigma]) - (ctx.q - cand.split)
            score = (dist, len(cand.decomposition))
            for p in compute_position(idx, x, ctx.position_memo):
                pos = p + shift
                prev = best.get(pos)
                if prev is None or score < prev:
                    best[pos] = score
    return best, ctx.stats


def search(idx, query, tau: int, prune: bool = True, threads: int = 1,
           stats: SearchStats | None = None) -> list[Occurrence]:
    """Positions whose |Q|-gram decomposes within L1 distance tau of Q,
    with the smallest distance seen per position, sorted by position.

    prune=False disables the mu abort; results are identical, only #TN
    grows. With threads > 1 the variables are split across a thread pool.
    """
    data = esp.coerce_bytes(query)
    _validate(idx, data, tau)
    qp = esp.parse_query(data, idx)
    variables = (np.flatnonzero(idx.len_vec >= len(data)) + idx.sigma).tolist()

    total = SearchStats()
    best: dict[int, tuple[int, int]] = {}
    if threads > 1 and len(variables) > threads:
        chunks = [c.tolist() for c in np.array_split(np.asarray(variables), threads)]
        with ThreadPoolExecutor(max_workers=threads) as executor:
            parts = list(executor.map(lambda c: _scan(idx, qp, tau, prune, c), chunks))
    else:
        parts = [_scan(idx, qp, tau, prune, variables)]
    for found, part_stats in parts:
        total.merge(part_stats)
        for pos, score in found.items():
            prev = best.get(pos)
            if prev is None or score < prev:
                best[pos] = score

    result = [Occurrence(pos, dist, size) for pos, (dist, size) in sorted(best.items())]
    total.occurrences = len(result)
    if stats is not None:
        stats.merge(total)
    logger.info(
        "search: |Q|=%d tau=%d variables=%d #TN=%d #CAND=%d #TP=%d #OCC=%d",
        len(data), tau, len(variables), total.traversed, total.candidates, total.accepted, total.occurrences,
    )
    return result


def read_queries(path: str) -> list[bytes]:
    """One query per line; line endings stripped, blank lines skipped."""
    with open(path, "rb") as f:
        lines = [line.rstrip(b"\r\n") for line in f]
    return [line for line in lines if line]


def search_file(idx, path: str, tau: int, prune: bool = True, threads: int = 1,
                stats: SearchStats | None = None) -> list[tuple[bytes, list[Occurrence]]]:
    return [(q, search(idx, q, tau, prune=prune, threads=threads, stats=stats)) for q in read_queries(path)]
