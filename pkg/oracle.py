"""
Brute-force references for checking the index.

exact_edm      breadth-first search over the four edit operations
               (insert, delete, replace, substring move); tiny inputs only.
window_l1      for every window, the maximal subtree decomposition in the
               text's parse tree and its L1 distance to F(Q).
enumerate_stabbed
               every (variable, split, decomposition) triple, by plain
               recursion over the grammar.
verify         search output against the exhaustive reference.

Everything here walks ordinary dicts and lists, never A_l or A_r.
"""

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass

import esp
import index as index_mod
import search as search_mod
from errors import InputError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EdmConfig:
    max_len: int = 6
    max_depth: int = 3

    @classmethod
    def from_prefs(cls, prefs: dict) -> "EdmConfig":
        return cls(prefs.get("oracle_max_len", cls.max_len), prefs.get("oracle_max_depth", cls.max_depth))


# --- Exact EDM ---

def edit_neighbors(s: bytes, alphabet: bytes) -> set[bytes]:
    """Every string one insertion, deletion, replacement or substring move
    away from s. Inserted and replacing characters come from alphabet."""
    out: set[bytes] = set()
    n = len(s)
    for i in range(n + 1):
        for c in alphabet:
            out.add(s[:i] + bytes((c,)) + s[i:])
    for i in range(n):
        out.add(s[:i] + s[i + 1:])
        for c in alphabet:
            if c != s[i]:
                out.add(s[:i] + bytes((c,)) + s[i + 1:])
    for i in range(n):
        for j in range(i + 1, n + 1):
            block, rest = s[i:j], s[:i] + s[j:]
            for k in range(len(rest) + 1):
                if k != i:
                    out.add(rest[:k] + block + rest[k:])
    out.discard(s)
    return out


def edm_distances(s: bytes, alphabet: bytes, max_depth: int) -> dict[bytes, int]:
    """d(s, t) for every t within max_depth operations of s."""
    dist = {s: 0}
    frontier = [s]
    for depth in range(1, max_depth + 1):
        nxt = []
        for t in frontier:
            for u in edit_neighbors(t, alphabet):
                if u not in dist:
                    dist[u] = depth
                    nxt.append(u)
        frontier = nxt
    return dist


def exact_edm(s, q, cfg: EdmConfig = EdmConfig()) -> int | None:
    """Edit distance with moves, or None when it exceeds cfg.max_depth."""
    s, q = esp.coerce_bytes(s), esp.coerce_bytes(q)
    if len(s) > cfg.max_len or len(q) > cfg.max_len:
        raise InputError(f"exact EDM is limited to strings of at most {cfg.max_len} bytes")
    if s == q:
        return 0
    alphabet = bytes(sorted(set(s) | set(q)))
    seen = {s}
    frontier = [s]
    for depth in range(1, cfg.max_depth + 1):
        nxt = []
        for t in frontier:
            for u in edit_neighbors(t, alphabet):
                if u == q:
                    return depth
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    return None


# --- Plain-tree references ---

def _suffix(g: esp.EspGrammar, x: int, size: int, out: list[int]):
    if size == 0:
        return
    if g.length(x) <= size:
        out.append(x)
        return
    right = g.right_child(x)
    rsize = g.length(right)
    if size <= rsize:
        _suffix(g, right, size, out)
    else:
        _suffix(g, g.left_child(x), size - rsize, out)
        out.append(right)


def _prefix(g: esp.EspGrammar, x: int, size: int, out: list[int]):
    if size == 0:
        return
    if g.length(x) <= size:
        out.append(x)
        return
    left = g.left_child(x)
    lsize = g.length(left)
    if size <= lsize:
        _prefix(g, left, size, out)
    else:
        out.append(left)
        _prefix(g, g.right_child(x), size - lsize, out)


def enumerate_stabbed(source, q: int) -> list[tuple[int, int, tuple[int, ...]]]:
    """(X, j, decomposition) for every variable X with |val(X)| >= q and
    every split j; a window equal to val(X) decomposes as (X,)."""
    g = source.to_grammar() if isinstance(source, index_mod.EspIndex) else source
    out = []
    for x in g.variables():
        if g.length(x) < q:
            continue
        left, right = g.left_child(x), g.right_child(x)
        ll, lr = g.length(left), g.length(right)
        for j in range(max(0, q - ll), min(q, lr) + 1):
            if q - j == ll and j == lr:
                out.append((x, j, (x,)))
                continue
            parts: list[int] = []
            _suffix(g, left, q - j, parts)
            _prefix(g, right, j, parts)
            out.append((x, j, tuple(parts)))
    return out


class Reference:
    """Plain-grammar view of an index.

    The grammar either comes straight from the builder (from_text) or is
    decoded once from the index; all walks then use ordinary dicts.
    """

    def __init__(self, idx, grammar: esp.EspGrammar | None = None):
        self.idx = idx
        self.grammar = grammar or idx.to_grammar()
        self._occ: dict[int, list[int]] | None = None

    @classmethod
    def from_text(cls, text, tie_break: str = "right", cv_stride: int = 2) -> "Reference":
        grammar, present = index_mod.build_grammar(text, tie_break)
        idx = index_mod.encode_grammar(grammar, present, tie_break, cv_stride)
        return cls(idx, grammar)

    def occurrences(self) -> dict[int, list[int]]:
        """Symbol -> sorted 1-based starts of its nodes, by a full traversal."""
        if self._occ is None:
            g = self.grammar
            occ: dict[int, list[int]] = defaultdict(list)
            stack = [(g.root, 1)]
            while stack:
                x, p = stack.pop()
                occ[x].append(p)
                if g.is_variable(x):
                    left = g.left_child(x)
                    stack.append((g.right_child(x), p + g.length(left)))
                    stack.append((left, p))
            self._occ = {x: sorted(ps) for x, ps in occ.items()}
        return self._occ

    def decompose(self, pos: int, q: int) -> list[int]:
        """Maximal subtrees covering S[pos, pos + q - 1], left to right."""
        g = self.grammar
        lo, hi = pos - 1, pos - 1 + q
        out: list[int] = []
        stack = [(g.root, 0)]
        while stack:
            x, off = stack.pop()
            end = off + g.length(x)
            if end <= lo or off >= hi:
                continue
            if lo <= off and end <= hi:
                out.append(x)
                continue
            left = g.left_child(x)
            stack.append((g.right_child(x), off + g.length(left)))
            stack.append((left, off))
        return out

    def _distance(self, fq: Counter, parts, memo: dict | None = None) -> int:
        key = tuple(parts)
        if memo is not None and key in memo:
            return memo[key]
        g: Counter = Counter()
        for x in key:
            g.update(self.grammar.char_vec(x))
        dist = esp.l1_distance(fq, g)
        if memo is not None:
            memo[key] = dist
        return dist

    def window_l1(self, query) -> list[int]:
        """Distance of every window; entry i is the window at position i + 1."""
        data = esp.coerce_bytes(query)
        fq = esp.parse_query(data, self.idx).char_vec
        q = len(data)
        memo: dict = {}
        return [self._distance(fq, self.decompose(pos, q), memo) for pos in range(1, self.idx.text_len - q + 2)]

    def stab_search(self, query, tau: int) -> list[tuple[int, int]]:
        """(pos, dist) from exhaustive enumeration plus the L1 filter."""
        data = esp.coerce_bytes(query)
        fq = esp.parse_query(data, self.idx).char_vec
        q = len(data)
        occ = self.occurrences()
        best: dict[int, int] = {}
        memo: dict = {}
        for x, j, parts in enumerate_stabbed(self.grammar, q):
            dist = self._distance(fq, parts, memo)
            if dist > tau:
                continue
            shift = self.grammar.length(self.grammar.left_child(x)) - (q - j)
            for p in occ.get(x, ()):
                pos = p + shift
                if dist < best.get(pos, dist + 1):
                    best[pos] = dist
        return sorted(best.items())


def window_l1(text, query) -> list[int]:
    return Reference.from_text(text).window_l1(query)


def verify(idx, query, tau: int, threads: int = 1) -> dict:
    """Compare search() with the exhaustive reference on one query."""
    stats = search_mod.SearchStats()
    found = {o.pos: o.dist for o in search_mod.search(idx, query, tau, threads=threads, stats=stats)}
    expected = dict(Reference(idx).stab_search(query, tau))
    missing = sorted(p for p in expected if p not in found)
    extra = sorted(p for p in found if p not in expected)
    mismatched = sorted(p for p in found if p in expected and found[p] != expected[p])
    report = {
        "agree": not (missing or extra or mismatched),
        "search": len(found),
        "reference": len(expected),
        "missing": missing,
        "extra": extra,
        "mismatched": mismatched,
    }
    report.update(stats.as_dict())
    if not report["agree"]:
        logger.warning("oracle disagreement: %d missing, %d extra, %d mismatched", len(missing), len(extra), len(mismatched))
    return report
