"""
Tests for the approximate search: the worked abab example, the mu bound,
candidate enumeration, parent-link positions, agreement with the
brute-force references, planted recall at 1 MB and the time trend in tau.
"""

import os
import random
import shutil
import sys
import tempfile
import time
import unittest

# Make the project root importable.
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import esp
import search
from errors import QueryError, QueryTooLong, QueryTooShort
from index import build_index
from oracle import Reference
from search import Candidate, Occurrence, QueryContext, SearchStats
from tests.corpus import mutate, plant, random_text, repetitive_bulk, repetitive_text

HUGE = 10 ** 9
TAUS = (0, 1, 2, 5, 10, 20)


def _pairs(found):
    return [(o.pos, o.dist) for o in found]


def _corpus():
    rng = random.Random(211)
    texts = [repetitive_text(rng, n, seed_len=s) for n, s in ((900, 30), (1500, 48), (2500, 64))]
    texts += [random_text(rng, 700, b"ab"), random_text(rng, 1000, b"acgt")]
    texts.append(repetitive_text(rng, 1800, seed_len=40, alphabet=b"abcdefgh", rate=0.08))
    return texts


def _grid_texts(rng, count=100):
    """Lengths spread log-uniformly over 256..10^4, alternating repetitive
    and random texts over several alphabets."""
    alphabets = (b"acgt", b"ab", b"abcdefgh")
    texts = []
    for i in range(count):
        length = int(round(256 * (10_000 / 256) ** (i / (count - 1))))
        alphabet = alphabets[i % 3]
        if i % 2:
            texts.append(random_text(rng, length, alphabet))
        else:
            texts.append(repetitive_text(rng, length, seed_len=rng.randint(24, 96), alphabet=alphabet,
                                         rate=rng.choice((0.02, 0.05, 0.1))))
    return texts


def _queries(rng, text, q):
    start = rng.randrange(0, len(text) - q + 1)
    out = [text[start: start + q]]
    start = rng.randrange(0, len(text) - q + 1)
    out.append(mutate(rng, text[start: start + q], 0.3, b"acgt")[:q].ljust(q, b"a"))
    out.append(random_text(rng, q, bytes(sorted(set(text)))))
    return out


class TestAbabExample(unittest.TestCase):

    def setUp(self):
        self.idx = build_index(b"abab")

    def test_exact_matches(self):
        self.assertEqual(_pairs(search.search(self.idx, b"ab", 0)), [(1, 0), (3, 0)])

    def test_threshold_one(self):
        self.assertEqual(_pairs(search.search(self.idx, "ab", 1)), [(1, 0), (2, 1), (3, 0)])

    def test_unknown_pair(self):
        # "ba" has no rule in the index; its pair is a temp symbol.
        self.assertEqual(_pairs(search.search(self.idx, b"ba", 1)), [(2, 1)])
        self.assertEqual(search.search(self.idx, b"ba", 0), [])

    def test_whole_text(self):
        self.assertEqual(search.search(self.idx, b"abab", 0), [Occurrence(1, 0)])

    def test_mu(self):
        vq = esp.parse_query(b"ab", self.idx).support
        self.assertEqual(search.mu(self.idx, 3, vq), 1)
        self.assertEqual(search.mu(self.idx, 2, vq), 0)
        self.assertEqual(search.mu(self.idx, 0, frozenset()), 1)

    def test_candidates(self):
        ctx = QueryContext(self.idx, esp.parse_query(b"ab", self.idx), 0)
        self.assertEqual(search.find_candidates(ctx, 2), [Candidate(2, 1, (2,), 0)])
        self.assertEqual(search.find_candidates(ctx, 3), [
            Candidate(3, 0, (2,), 0),
            Candidate(3, 1, (1, 0), 0),
            Candidate(3, 2, (2,), 0),
        ])

    def test_empty_walk(self):
        ctx = QueryContext(self.idx, esp.parse_query(b"ab", self.idx), 0)
        walk = search._Walk()
        self.assertEqual(ctx.find_left(3, 0, walk), 0)
        self.assertEqual(walk.parts, [])

    def test_post_filter(self):
        fq = esp.parse_query(b"ab", self.idx).char_vec
        self.assertEqual(search.l1_post_filter(self.idx, Candidate(3, 1, (1, 0), 0), fq, 1), 1)
        self.assertIsNone(search.l1_post_filter(self.idx, Candidate(3, 1, (1, 0), 0), fq, 0))
        self.assertEqual(search.l1_post_filter(self.idx, Candidate(2, 1, (2,), 0), fq, 0), 0)

    def test_post_filter_memo(self):
        fq = esp.parse_query(b"ab", self.idx).char_vec
        memo = {}
        self.assertEqual(search.l1_post_filter(self.idx, Candidate(3, 1, (1, 0), 0), fq, 1, memo), 1)
        self.assertEqual(memo, {(1, 0): 1})
        self.assertIsNone(search.l1_post_filter(self.idx, Candidate(3, 1, (1, 0), 0), fq, 0, memo))

    def test_positions(self):
        self.assertEqual(search.compute_position(self.idx, 3), {1})
        self.assertEqual(search.compute_position(self.idx, 2), {1, 3})
        self.assertEqual(search.compute_position(self.idx, 1), {2, 4})

    def test_counters(self):
        stats = SearchStats()
        search.search(self.idx, b"ab", 0, stats=stats)
        self.assertEqual(stats.as_dict(), {"#TN": stats.traversed, "#CAND": 4, "#TP": 3, "#OCC": 2})


class TestValidation(unittest.TestCase):

    def setUp(self):
        self.idx = build_index(b"abab")

    def test_short_query(self):
        with self.assertRaises(QueryTooShort):
            search.search(self.idx, b"a", 0)

    def test_long_query(self):
        with self.assertRaises(QueryTooLong):
            search.search(self.idx, b"ababa", 0)

    def test_bad_threshold(self):
        for tau in (-1, 1.5, True, "2"):
            with self.assertRaises(QueryError):
                search.search(self.idx, b"ab", tau)


class TestBounds(unittest.TestCase):

    def setUp(self):
        rng = random.Random(223)
        self.text = repetitive_text(rng, 2000)
        self.idx = build_index(self.text)
        self.qp = esp.parse_query(self.text[500:516], self.idx)

    def test_mu_is_mass_outside_support(self):
        idx, vq = self.idx, self.qp.support
        memo = {}
        for x in range(idx.sigma, idx.sigma + idx.n):
            expected = sum(c for e, c in idx.char_vec(x).items() if e not in vq)
            self.assertEqual(search.mu(idx, x, vq, memo), expected)

    def test_mu_is_monotone_upwards(self):
        idx, vq = self.idx, self.qp.support
        memo = {}
        for x in range(idx.sigma, idx.sigma + idx.n):
            m = search.mu(idx, x, vq, memo)
            self.assertGreaterEqual(m, search.mu(idx, idx.left_child(x), vq, memo))
            self.assertGreaterEqual(m, search.mu(idx, idx.right_child(x), vq, memo))

    def test_mu_sum_bounds_distance(self):
        idx = self.idx
        ctx = QueryContext(idx, self.qp, HUGE, prune=False)
        checked = 0
        for x in range(idx.sigma, idx.sigma + idx.n):
            if idx.length(x) < len(self.qp):
                continue
            for cand in search.find_candidates(ctx, x):
                self.assertEqual(sum(idx.length(p) for p in cand.decomposition), len(self.qp))
                dist = search.l1_post_filter(idx, cand, self.qp.char_vec, HUGE)
                self.assertLessEqual(cand.mu_sum, dist)
                checked += 1
        self.assertGreater(checked, 0)

    def test_positions_match_traversal(self):
        ref = Reference(self.idx)
        occ = ref.occurrences()
        memo = {}
        for x in range(self.idx.sigma, self.idx.sigma + self.idx.n):
            self.assertEqual(search.compute_position(self.idx, x, memo), set(occ[x]))


class TestAgainstReferences(unittest.TestCase):
    """Search output equals the brute-force references on every query."""

    def test_grid(self):
        # Window reference for every query and threshold; the no-prune run
        # at the largest threshold, filtered, must match every pruned run.
        rng = random.Random(227)
        for t, text in enumerate(_grid_texts(rng)):
            idx = build_index(text)
            ref = Reference(idx)
            for q in (4, 8, 16, 64):
                query = _queries(rng, text, q)[(t + q) % 3]
                windows = ref.window_l1(query)
                unpruned = _pairs(search.search(idx, query, max(TAUS), prune=False))
                for tau in TAUS:
                    expected = [(p, d) for p, d in enumerate(windows, start=1) if d <= tau]
                    found = _pairs(search.search(idx, query, tau))
                    self.assertEqual(found, expected, f"text {t} |S|={len(text)} Q={query!r} tau={tau}")
                    self.assertEqual([(p, d) for p, d in unpruned if d <= tau], found)

    def test_stabbed_enumeration(self):
        rng = random.Random(228)
        for text in _corpus():
            idx = build_index(text)
            ref = Reference(idx)
            for q in (4, 8, 16, 64):
                for query in _queries(rng, text, q):
                    stabbed = ref.stab_search(query, max(TAUS))
                    for tau in TAUS:
                        found = _pairs(search.search(idx, query, tau))
                        self.assertEqual(found, [(p, d) for p, d in stabbed if d <= tau], f"Q={query!r} tau={tau}")

    def test_every_window_at_large_threshold(self):
        text = repetitive_text(random.Random(229), 1200)
        idx = build_index(text)
        found = search.search(idx, text[100:110], HUGE)
        self.assertEqual([o.pos for o in found], list(range(1, len(text) - 10 + 2)))

    def test_exact_substring_is_found(self):
        rng = random.Random(233)
        text = repetitive_text(rng, 2000)
        idx = build_index(text)
        for _ in range(10):
            start = rng.randrange(0, len(text) - 12)
            query = text[start: start + 12]
            hits = {o.pos for o in search.search(idx, query, 0)}
            self.assertIn(start + 1, hits)


class TestPruningAndThreads(unittest.TestCase):

    def setUp(self):
        rng = random.Random(239)
        self.text = repetitive_text(rng, 3000)
        self.idx = build_index(self.text)
        self.query = mutate(rng, self.text[1000:1016], 0.2, b"acgt")

    def test_pruning_changes_only_work(self):
        for tau in (0, 3, 8):
            fast, slow = SearchStats(), SearchStats()
            a = search.search(self.idx, self.query, tau, prune=True, stats=fast)
            b = search.search(self.idx, self.query, tau, prune=False, stats=slow)
            self.assertEqual(_pairs(a), _pairs(b))
            self.assertLessEqual(fast.traversed, slow.traversed)
            self.assertLessEqual(fast.candidates, slow.candidates)

    def test_threads_give_same_answer(self):
        for tau in (0, 4):
            one, many = SearchStats(), SearchStats()
            a = search.search(self.idx, self.query, tau, threads=1, stats=one)
            b = search.search(self.idx, self.query, tau, threads=4, stats=many)
            self.assertEqual(_pairs(a), _pairs(b))
            self.assertEqual(one.as_dict(), many.as_dict())

    def test_work_grows_with_threshold(self):
        previous = None
        for tau in TAUS:
            stats = SearchStats()
            search.search(self.idx, self.query, tau, stats=stats)
            self.assertLessEqual(stats.accepted, stats.candidates)
            if previous is not None:
                self.assertGreaterEqual(stats.traversed, previous.traversed)
                self.assertGreaterEqual(stats.candidates, previous.candidates)
                self.assertGreaterEqual(stats.occurrences, previous.occurrences)
            previous = stats


class TestPlanted(unittest.TestCase):

    def test_planted_copies_are_recalled(self):
        rng = random.Random(241)
        host = repetitive_bulk(241, 1 << 20, seed_len=600, rate=0.03)
        pattern = random_text(rng, 64, b"acgt")
        text, planted = plant(rng, host, pattern, 20)
        idx = build_index(text)
        ref = Reference(idx)
        fq = esp.parse_query(pattern, idx).char_vec
        dists = {p: ref._distance(fq, ref.decompose(p, len(pattern))) for p in planted}
        tau = max(dists.values())
        found = {o.pos: o.dist for o in search.search(idx, pattern, tau)}
        for p in planted:
            self.assertEqual(found.get(p), dists[p])


class TestTimingTrend(unittest.TestCase):
    """Search time does not fall as tau grows, up to two inversions."""

    def test_time_grows_with_threshold(self):
        rng = random.Random(251)
        text = repetitive_bulk(251, 100_000, seed_len=500, rate=0.02)
        idx = build_index(text)
        query = mutate(rng, text[40_000:40_032], 0.1, b"acgt")[:32].ljust(32, b"a")
        timings = []
        for tau in TAUS:
            best = None
            for _ in range(3):
                start = time.perf_counter()
                search.search(idx, query, tau)
                elapsed = time.perf_counter() - start
                best = elapsed if best is None else min(best, elapsed)
            timings.append(best)
        inversions = sum(1 for a, b in zip(timings, timings[1:]) if b < a)
        self.assertLessEqual(inversions, 2, timings)


class TestQueryFiles(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.idx = build_index(b"abab")

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def test_read_queries(self):
        path = os.path.join(self.tmp, "queries.txt")
        with open(path, "wb") as f:
            f.write(b"ab\r\n\nba\n")
        self.assertEqual(search.read_queries(path), [b"ab", b"ba"])
        results = search.search_file(self.idx, path, 0)
        self.assertEqual([(q, _pairs(found)) for q, found in results], [(b"ab", [(1, 0), (3, 0)]), (b"ba", [])])


if __name__ == "__main__":
    unittest.main()
