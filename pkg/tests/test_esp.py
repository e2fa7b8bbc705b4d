"""
Tests for edit-sensitive parsing: segmentation, alphabet reduction,
landmarks, one round of contraction, whole trees and the sorted renaming.
"""

import math
import os
import random
import sys
import unittest
from collections import Counter

import numpy as np

# Make the project root importable.
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import esp
from errors import DomainError, InputError, InvariantViolation, QueryTooShort
from esp import EspGrammar, Rule, RuleTable, Segment, SegmentType
from index import build_index
from tests.corpus import random_text, repetitive_text


def _repetition_free(rng, length, alphabet_size):
    out = [rng.randrange(alphabet_size)]
    while len(out) < length:
        v = rng.randrange(alphabet_size)
        if v != out[-1]:
            out.append(v)
    return out


def _reference_blocks(seq):
    """Blocks of one round, one segment at a time, from the public
    segmentation, reduction and landmark functions."""
    blocks = []
    for seg in esp.classify_segments(seq, len(seq)):
        cuts = {seg.start, seg.end}
        if seg.kind == SegmentType.TYPE2:
            labels = esp.alphabet_reduction(seq[seg.start: seg.end])
            for i in esp.select_landmarks(labels):
                p = seg.start + 1 + i
                if p < seg.end - 1:
                    cuts.update((p, p + 2))
        bounds = sorted(cuts)
        pieces = list(zip(bounds, bounds[1:]))
        groups = []
        for k, (a, b) in enumerate(pieces):
            single_head = k == 1 and pieces[0][1] - pieces[0][0] == 1
            if k > 0 and (b - a == 1 or single_head):
                groups[-1][1] = b
            else:
                groups.append([a, b])
        for a, b in groups:
            i = a
            while b - i > 3:
                blocks.append((i, 2))
                i += 2
            blocks.append((i, b - i))
    return blocks


def _bodies(g):
    return [(r.lhs, r.left, r.right) for r in g.rules()]


class TestIteratedLog(unittest.TestCase):

    def test_values(self):
        self.assertEqual(esp.iterated_log(1), 0)
        self.assertEqual(esp.iterated_log(2), 1)
        self.assertEqual(esp.iterated_log(3), 2)
        self.assertEqual(esp.iterated_log(4), 2)
        self.assertEqual(esp.iterated_log(16), 3)
        self.assertEqual(esp.iterated_log(65536), 4)
        self.assertEqual(esp.iterated_log(65537), 5)

    def test_rejects_zero(self):
        with self.assertRaises(ValueError):
            esp.iterated_log(0)

    def test_min_type2_length(self):
        self.assertEqual(esp.min_type2_length(4), 4)
        self.assertEqual(esp.min_type2_length(1000), 8)


class TestClassifySegments(unittest.TestCase):

    def test_single_run(self):
        self.assertEqual(esp.classify_segments([0, 0, 0, 0]), [Segment(0, 4, SegmentType.TYPE1)])

    def test_trailing_singleton_joins_run(self):
        self.assertEqual(esp.classify_segments([0, 0, 0, 1], 100), [Segment(0, 4, SegmentType.TYPE1)])

    def test_leading_singleton_joins_next_run(self):
        self.assertEqual(esp.classify_segments([1, 0, 0, 0], 100), [Segment(0, 4, SegmentType.TYPE1)])

    def test_mixed(self):
        seq = [0, 1, 2, 3, 3, 3, 0, 1]
        self.assertEqual(esp.classify_segments(seq, 8), [
            Segment(0, 3, SegmentType.TYPE3),
            Segment(3, 6, SegmentType.TYPE1),
            Segment(6, 8, SegmentType.TYPE3),
        ])

    def test_threshold_follows_text_length(self):
        seq = [0, 1, 2, 3, 3, 3, 0, 1]
        kinds = [s.kind for s in esp.classify_segments(seq, 2)]
        self.assertEqual(kinds, [SegmentType.TYPE2, SegmentType.TYPE1, SegmentType.TYPE2])

    def test_too_short(self):
        with self.assertRaises(InvariantViolation):
            esp.classify_segments([5])

    def test_random_partitions(self):
        rng = random.Random(17)
        for _ in range(200):
            m = rng.randrange(2, 60)
            seq = [rng.randrange(3) for _ in range(m)]
            segs = esp.classify_segments(seq, 1000)
            self.assertEqual(segs[0].start, 0)
            self.assertEqual(segs[-1].end, m)
            for a, b in zip(segs, segs[1:]):
                self.assertEqual(a.end, b.start)
            for s in segs:
                self.assertGreaterEqual(len(s), 2)
                body = seq[s.start: s.end]
                has_repeat = any(x == y for x, y in zip(body, body[1:]))
                self.assertEqual(has_repeat, s.kind is SegmentType.TYPE1)


class TestAlphabetReduction(unittest.TestCase):

    def test_pairs(self):
        self.assertEqual(esp.alphabet_reduction([0, 1]).tolist(), [1])
        self.assertEqual(esp.alphabet_reduction([5, 4]).tolist(), [0])

    def test_first_pass_label(self):
        # 12 = 1100, 10 = 1010: lowest differing bit 1, 10 has it set.
        self.assertEqual(esp._reduce_once(np.array([12, 10])).tolist(), [3])

    def test_rejects_repeats(self):
        with self.assertRaises(InvariantViolation):
            esp.alphabet_reduction([3, 3, 1])
        with self.assertRaises(InvariantViolation):
            esp.alphabet_reduction([3])

    def test_random_output_is_small_and_repetition_free(self):
        rng = random.Random(23)
        for alphabet in (2, 5, 300, 1 << 20):
            for _ in range(30):
                seq = _repetition_free(rng, rng.randrange(2, 200), alphabet)
                labels = esp.alphabet_reduction(seq).tolist()
                self.assertEqual(len(labels), len(seq) - 1)
                self.assertTrue(set(labels) <= {0, 1, 2})
                self.assertTrue(all(a != b for a, b in zip(labels, labels[1:])))

    def test_one_pass_shrinks_alphabet(self):
        rng = random.Random(29)
        for alphabet in (16, 256, 4096):
            seq = np.array(_repetition_free(rng, 500, alphabet))
            labels = esp._reduce_once(seq)
            self.assertLessEqual(int(labels.max()), 2 * math.ceil(math.log2(alphabet)))


class TestLandmarks(unittest.TestCase):

    def test_small(self):
        self.assertEqual(esp.select_landmarks([1, 3, 2]), [1])
        self.assertEqual(esp.select_landmarks([1, 2]), [1])
        self.assertEqual(esp.select_landmarks([]), [])

    def test_minimum_fills_long_gap(self):
        self.assertEqual(esp.select_landmarks([3, 2, 1, 0, 1, 2, 3]), [0, 3, 6])

    def test_random_spacing(self):
        rng = random.Random(31)
        for _ in range(300):
            labels = _repetition_free(rng, rng.randrange(3, 80), 3)
            marks = esp.select_landmarks(labels)
            self.assertEqual(marks, sorted(set(marks)))
            for a, b in zip(marks, marks[1:]):
                self.assertGreaterEqual(b - a, 2)
            hit = set(marks)
            for i in range(len(labels) - 2):
                self.assertTrue(hit & {i, i + 1, i + 2}, f"no landmark in window {i} of {labels}")


class TestParseRound(unittest.TestCase):

    def test_abab(self):
        table = RuleTable(base=2)
        out, rules = esp.parse_round([0, 1, 0, 1], table, 4)
        self.assertEqual(out.tolist(), [2, 2])
        self.assertEqual(rules, [Rule(2, 0, 1)])

    def test_aaaa(self):
        out, rules = esp.parse_round([0, 0, 0, 0], RuleTable(base=1), 4)
        self.assertEqual(out.tolist(), [1, 1])
        self.assertEqual(rules, [Rule(1, 0, 0)])

    def test_aaaaa_shares_pair(self):
        # aa aaa -> X Y with Y -> a X; the trigram's dashed pair is X itself.
        out, rules = esp.parse_round([0, 0, 0, 0, 0], RuleTable(base=1), 5)
        self.assertEqual(out.tolist(), [1, 2])
        self.assertEqual(rules, [Rule(1, 0, 0), Rule(2, 0, 1)])

    def test_blocks_are_pairs_or_triples(self):
        rng = random.Random(37)
        for alphabet in (2, 4, 26):
            for _ in range(20):
                m = rng.randrange(2, 400)
                seq = [rng.randrange(alphabet) for _ in range(m)]
                blocks = esp.round_blocks(seq, m)
                self.assertEqual(sum(size for _, size in blocks), m)
                self.assertTrue(all(size in (2, 3) for _, size in blocks))
                starts = [s for s, _ in blocks]
                self.assertEqual(starts, sorted(starts))

    def test_contraction_bounds(self):
        rng = np.random.default_rng(41)
        for i in range(1000):
            alphabet = (2, 4, 26)[i % 3]
            length = int(round(10 ** rng.uniform(1, 5)))
            seq = rng.integers(0, alphabet, length)
            base = alphabet
            while seq.size > 1:
                m = int(seq.size)
                seq, new = esp.contract_round(seq, base, text_len=length)
                base += len(new)
                self.assertGreaterEqual(seq.size, math.ceil(m / 3))
                self.assertLessEqual(seq.size, m // 2)

    def test_contract_round_matches_table_and_renaming(self):
        rng = random.Random(43)
        for tie_break in esp.TIE_BREAKS:
            for alphabet in (2, 4, 26):
                for _ in range(15):
                    m = rng.randrange(2, 600)
                    seq = [rng.randrange(alphabet) for _ in range(m)]
                    out, created = esp.parse_round(seq, RuleTable(alphabet), m)
                    mapping, renamed = esp.rename_round(created, alphabet, tie_break)
                    ids, rules = esp.contract_round(seq, alphabet, tie_break, m)
                    self.assertEqual(ids.tolist(), [mapping[x] for x in out.tolist()])
                    self.assertEqual(rules, renamed)

    def test_blocks_match_per_segment_cuts(self):
        rng = random.Random(47)
        seqs = [[rng.randrange(a) for _ in range(rng.randrange(2, 300))] for a in (2, 3, 4, 26) for _ in range(25)]
        seqs += [_repetition_free(rng, rng.randrange(2, 300), 1 << 20) for _ in range(25)]
        for seq in seqs:
            self.assertEqual(esp.round_blocks(seq, len(seq)), _reference_blocks(seq), seq)


class TestBuildTree(unittest.TestCase):

    def test_abab(self):
        g = esp.build_esp_tree([0, 1, 0, 1], sigma=2)
        self.assertEqual(g.rounds, [[Rule(2, 0, 1)], [Rule(3, 2, 2)]])
        self.assertEqual(g.root, 3)
        self.assertEqual(g.length(2), 2)
        self.assertEqual(g.length(3), 4)
        self.assertEqual(g.length(0), 1)
        self.assertEqual(g.round_of(3), 2)
        self.assertEqual(g.round_of(1), 0)

    def test_aaaaa(self):
        g = esp.build_esp_tree([0, 0, 0, 0, 0], sigma=1)
        self.assertEqual(_bodies(g), [(1, 0, 0), (2, 0, 1), (3, 1, 2)])
        self.assertEqual(g.root, 3)
        self.assertEqual(esp.expand(g, g.root), [0] * 5)

    def test_char_vec(self):
        g = esp.build_esp_tree([0, 1, 0, 1], sigma=2)
        self.assertEqual(g.char_vec(2), Counter({0: 1, 1: 1, 2: 1}))
        self.assertEqual(g.char_vec(3), Counter({0: 2, 1: 2, 2: 2, 3: 1}))
        self.assertEqual(g.char_vec(1), Counter({1: 1}))

    def test_terminal_has_no_children(self):
        g = esp.build_esp_tree([0, 1, 0, 1], sigma=2)
        with self.assertRaises(DomainError):
            g.left_child(0)

    def test_too_short(self):
        with self.assertRaises(InputError):
            esp.build_esp_tree(b"a")

    def test_terminal_range(self):
        with self.assertRaises(InvariantViolation):
            esp.build_esp_tree([0, 3, 1], sigma=2)

    def test_expansion_and_depth(self):
        rng = random.Random(43)
        texts = [random_text(rng, n, b"ab") for n in (2, 3, 7, 64, 1000)]
        texts += [repetitive_text(rng, n) for n in (500, 5000)]
        texts.append(random_text(rng, 3000, b"abcdefghijklmnopqrstuvwxyz"))
        for text in texts:
            g = esp.build_esp_tree(text)
            self.assertEqual(bytes(esp.expand(g, g.root)), text)
            self.assertEqual(g.length(g.root), len(text))
            self.assertLessEqual(len(g.rounds), max(1, math.ceil(math.log2(len(text)))))

    def test_bodies_are_unique(self):
        rng = random.Random(47)
        g = esp.build_esp_tree(repetitive_text(rng, 4000))
        bodies = [(r.left, r.right) for r in g.rules()]
        self.assertEqual(len(bodies), len(set(bodies)))

    def test_ids_follow_rounds_and_left_symbols(self):
        rng = random.Random(53)
        g = esp.build_esp_tree(repetitive_text(rng, 3000))
        expected = g.sigma
        for rules in g.rounds:
            self.assertEqual([r.lhs for r in rules], list(range(expected, expected + len(rules))))
            lefts = [r.left for r in rules]
            self.assertEqual(lefts, sorted(lefts))
            expected += len(rules)

    def test_deterministic(self):
        rng = random.Random(59)
        text = repetitive_text(rng, 2000)
        self.assertEqual(esp.build_esp_tree(text), esp.build_esp_tree(text))


class TestRenaming(unittest.TestCase):
    """One round with ab, b(ab), aa, ba created in that order."""

    def _grammar(self):
        rules = [Rule(2, 0, 1, True), Rule(3, 1, 2), Rule(4, 0, 0), Rule(5, 1, 0)]
        return EspGrammar(2, [rules], root=5, text_len=3)

    def test_creation_order_ties(self):
        g = esp.canonicalize(self._grammar(), "creation")
        self.assertEqual(_bodies(g), [(2, 0, 1), (3, 0, 0), (4, 1, 2), (5, 1, 0)])
        self.assertEqual(g.root, 5)

    def test_right_symbol_ties(self):
        g = esp.canonicalize(self._grammar(), "right")
        self.assertEqual(_bodies(g), [(2, 0, 0), (3, 0, 1), (4, 1, 0), (5, 1, 3)])
        self.assertEqual(g.root, 4)

    def test_idempotent(self):
        rng = random.Random(61)
        g = esp.build_esp_tree(repetitive_text(rng, 2500))
        once = esp.canonicalize(g)
        self.assertEqual(_bodies(once), _bodies(g))
        self.assertEqual(_bodies(esp.canonicalize(once)), _bodies(once))

    def test_unknown_tie_break(self):
        with self.assertRaises(ValueError):
            esp.rename_round([Rule(2, 0, 1)], 2, "alphabetical")


class TestQueryParse(unittest.TestCase):

    def setUp(self):
        self.idx = build_index(b"abab")

    def test_known_query(self):
        qp = esp.parse_query(b"ab", self.idx)
        self.assertEqual(qp.char_vec, Counter({0: 1, 1: 1, 2: 1}))
        self.assertEqual(qp.support, frozenset({0, 1, 2}))
        self.assertEqual(qp.root, 2)
        self.assertEqual(qp.hits, 1)
        self.assertEqual(len(qp), 2)

    def test_unknown_byte_gets_temp_id(self):
        qp = esp.parse_query(b"az", self.idx)
        limit = self.idx.sigma + self.idx.n
        self.assertEqual(qp.temp_terminals, {ord("z"): limit})
        self.assertEqual(qp.char_vec, Counter({0: 1, limit: 1, limit + 1: 1}))
        self.assertEqual(qp.hits, 0)

    def test_temp_ids_never_collide(self):
        rng = random.Random(67)
        text = repetitive_text(rng, 3000)
        idx = build_index(text)
        limit = idx.sigma + idx.n
        qp = esp.parse_query(b"acgtxyzacgt" * 3, idx)
        for x in qp.char_vec:
            if x >= limit:
                continue
            # Anything below the limit must be an index symbol.
            self.assertTrue(x < idx.sigma or idx.is_variable(x))

    def test_whole_text_parses_to_root(self):
        rng = random.Random(71)
        text = repetitive_text(rng, 1500)
        idx = build_index(text)
        qp = esp.parse_query(text, idx)
        self.assertEqual(qp.root, idx.root)
        self.assertEqual(qp.char_vec, idx.char_vec(idx.root))

    def test_too_short(self):
        with self.assertRaises(QueryTooShort):
            esp.parse_query(b"a", self.idx)


class TestApproxEdm(unittest.TestCase):

    def test_identical(self):
        self.assertEqual(esp.approx_edm("abab", "abab"), 0)

    def test_swap(self):
        self.assertEqual(esp.approx_edm("ab", "ba"), 2)

    def test_symmetric(self):
        rng = random.Random(73)
        for _ in range(20):
            s = random_text(rng, rng.randrange(2, 40), b"abc")
            q = random_text(rng, rng.randrange(2, 40), b"abc")
            self.assertEqual(esp.approx_edm(s, q), esp.approx_edm(q, s))

    def test_characteristic_vector(self):
        cv = esp.characteristic_vector("abab")
        self.assertEqual(cv[ord("a")], 2)
        self.assertEqual(cv[ord("b")], 2)
        self.assertEqual(sum(cv.values()), 7)

    def test_l1_distance(self):
        self.assertEqual(esp.l1_distance(Counter({1: 2, 2: 1}), Counter({1: 1, 3: 4})), 6)


if __name__ == "__main__":
    unittest.main()
