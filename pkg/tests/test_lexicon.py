import itertools
import math
from collections import defaultdict

import numpy as np
import pytest

from paravec.corpus import ParaphrasePair, tokenize
from paravec.encoders import WORD_AVG, Encoder
from paravec.lexicon import (
    LexiconEntry,
    build_lexicon,
    count_pmi,
    eval_simlex,
    pmi_adjusted,
    pmi_cross,
    read_lexicon,
    write_lexicon,
)
from paravec.store import WORD, EmbeddingMatrix, Vocabulary


def pair(a, b):
    return ParaphrasePair(tokenize(a), tokenize(b))


def oracle_tables(pairs):
    """Independent recount of every PMI table."""
    cross = defaultdict(int)
    cross_total = 0
    side_joint = {"ref": defaultdict(int), "trans": defaultdict(int)}
    side_total = {"ref": 0, "trans": 0}
    freq = defaultdict(int)
    for p in pairs:
        ref_types = sorted(set(p.reference.tokens))
        trans_types = sorted(set(p.translation.tokens))
        for u, v in itertools.product(ref_types, trans_types):
            cross[(u, v)] += 1
            cross[(v, u)] += 1
            cross_total += 2
        for side, types in (("ref", ref_types), ("trans", trans_types)):
            for a, b in itertools.combinations(types, 2):
                side_joint[side][(a, b)] += 1
                side_total[side] += 1
        for u in ref_types:
            freq[u] += 1
        for v in trans_types:
            freq[v] += 1
    return cross, cross_total, side_joint, side_total, freq


def oracle_pmi_cross(tables, u, v):
    cross, cross_total, _, _, freq = tables
    return math.log(cross[(u, v)] * cross_total / (freq[u] * freq[v]))


def oracle_pmi_adjusted(tables, u, v):
    cross, cross_total, side_joint, side_total, freq = tables
    sides = []
    for side in ("ref", "trans"):
        total = side_total[side]
        if total == 0:
            sides.append(0.0)
            continue
        joint = side_joint[side].get((min(u, v), max(u, v)), 0)
        if joint == 0:
            sides.append(math.log(1.0 / total))
        else:
            sides.append(math.log(joint * total / (freq[u] * freq[v])))
    return oracle_pmi_cross(tables, u, v) - (sides[0] + sides[1]) / 2.0


def random_corpus(rng, n_pairs, vocab_size):
    words = [f"v{i}" for i in range(vocab_size)]

    def sent():
        k = int(rng.integers(1, 6))
        return " ".join(rng.choice(words, size=k))

    return [pair(sent(), sent()) for _ in range(n_pairs)]


class TestCounting:
    def test_two_pair_hand_example(self):
        counts = count_pmi([pair("x", "y"), pair("x", "y")])
        assert counts.cross[("x", "y")] == 2
        assert counts.cross[("y", "x")] == 2
        assert counts.cross_total == 4
        assert counts.sent_freq == {"x": 2, "y": 2}
        assert pmi_cross(counts, "x", "y") == pytest.approx(math.log(2), abs=0)

    def test_score_threshold_drops_pairs(self):
        store = EmbeddingMatrix(
            vocab=Vocabulary(units=["good", "bad"], kind=WORD),
            values=np.array([[1.0, 0.0], [-1.0, 0.0]]),
        )
        scorer = Encoder(kind=WORD_AVG, word_store=store)
        counts = count_pmi([pair("good", "good"), pair("good", "bad")], scorer)
        assert counts.n_pairs_counted == 1
        assert counts.n_pairs_filtered == 1
        assert ("good", "bad") not in counts.cross

    def test_length_filter(self):
        long_side = " ".join(f"t{i}" for i in range(31))
        counts = count_pmi([pair(long_side, "ok"), pair("fine", "ok")])
        assert counts.n_pairs_counted == 1
        assert counts.n_pairs_filtered == 1
        assert "t0" not in counts.sent_freq

    def test_count_conservation(self):
        rng = np.random.default_rng(0)
        counts = count_pmi(random_corpus(rng, 30, 12))
        assert sum(counts.cross.values()) == counts.cross_total
        for side in ("ref", "trans"):
            assert sum(counts.side_joint[side].values()) == counts.side_total[side]

    def test_cross_symmetry(self):
        rng = np.random.default_rng(1)
        counts = count_pmi(random_corpus(rng, 25, 10))
        for (u, v), c in counts.cross.items():
            assert counts.cross[(v, u)] == c
            assert pmi_cross(counts, u, v) == pmi_cross(counts, v, u)
            assert pmi_adjusted(counts, u, v) == pmi_adjusted(counts, v, u)

    def test_duplication_invariance(self):
        rng = np.random.default_rng(2)
        corpus = random_corpus(rng, 12, 8)
        once = count_pmi(corpus)
        thrice = count_pmi(corpus * 3)
        checked_adjusted = 0
        for (u, v) in once.cross:
            assert pmi_cross(once, u, v) == pytest.approx(pmi_cross(thrice, u, v), abs=1e-12)
            # the zero-joint floor ln(1/side_total) is deliberately scale
            # dependent, so adjusted PMI is duplication-invariant only when
            # the pair co-occurs within sentences on both sides
            key = (min(u, v), max(u, v))
            if all(once.side_joint[s].get(key, 0) > 0 for s in ("ref", "trans")):
                checked_adjusted += 1
                assert pmi_adjusted(once, u, v) == pytest.approx(
                    pmi_adjusted(thrice, u, v), abs=1e-12
                )
        assert checked_adjusted > 0

    def test_zero_joint_is_absent_not_minus_inf(self):
        counts = count_pmi([pair("a", "b")])
        with pytest.raises(KeyError):
            pmi_cross(counts, "a", "zz")


class TestAgainstOracle:
    @pytest.mark.parametrize("seed", range(5))
    def test_tables_and_pmis_match(self, seed):
        rng = np.random.default_rng(seed)
        corpus = random_corpus(rng, int(rng.integers(5, 40)), int(rng.integers(4, 15)))
        counts = count_pmi(corpus)
        tables = oracle_tables(corpus)
        cross, cross_total, side_joint, side_total, freq = tables
        assert counts.cross == dict(cross)
        assert counts.cross_total == cross_total
        assert counts.sent_freq == dict(freq)
        assert counts.side_total == side_total
        for side in ("ref", "trans"):
            assert counts.side_joint[side] == dict(side_joint[side])
        for u, v in counts.cross:
            assert pmi_cross(counts, u, v) == oracle_pmi_cross(tables, u, v)
            assert pmi_adjusted(counts, u, v) == oracle_pmi_adjusted(tables, u, v)


class TestPathologies:
    def test_within_sentence_only_pair_gets_no_entry(self):
        # "hong kong" always co-occur inside sentences, never across sides
        corpus = [pair("hong kong visit", "trip abroad"), pair("nice hong kong", "a journey")]
        counts = count_pmi(corpus)
        assert ("hong", "kong") not in counts.cross
        entries = build_lexicon(counts, min_joint=1)
        assert not any({e.u, e.v} == {"hong", "kong"} for e in entries)

    def test_cross_only_pair_is_boosted(self):
        # u and v only ever appear on opposite sides; each side still has
        # co-occurrences of other words so the floor is active
        corpus = [
            pair("u filler", "v padding"),
            pair("u other", "v more"),
            pair("x y", "x y"),
        ]
        counts = count_pmi(corpus)
        assert pmi_adjusted(counts, "u", "v") > pmi_cross(counts, "u", "v")


class TestBuildLexicon:
    def test_min_joint_threshold(self):
        corpus = [pair("a", "b")] * 9 + [pair("c", "d")] * 10
        counts = count_pmi(corpus)
        entries = build_lexicon(counts, min_joint=10)
        assert {(e.u, e.v) for e in entries} == {("c", "d")}

    def test_sorted_by_adjusted_pmi(self):
        rng = np.random.default_rng(3)
        counts = count_pmi(random_corpus(rng, 40, 10))
        entries = build_lexicon(counts, min_joint=1)
        keys = [(-e.pmi_adjusted, -e.pmi_cross, e.u, e.v) for e in entries]
        assert keys == sorted(keys)

    def test_canonical_order_and_oracle_equality(self):
        rng = np.random.default_rng(4)
        corpus = random_corpus(rng, 30, 8)
        counts = count_pmi(corpus)
        tables = oracle_tables(corpus)
        cross = tables[0]
        want = [
            LexiconEntry(
                u=u,
                v=v,
                pmi_cross=oracle_pmi_cross(tables, u, v),
                pmi_adjusted=oracle_pmi_adjusted(tables, u, v),
                joint_count=cross[(u, v)],
            )
            for (u, v) in cross
            if u <= v and cross[(u, v)] >= 2
        ]
        want.sort(key=lambda e: (-e.pmi_adjusted, -e.pmi_cross, e.u, e.v))
        assert build_lexicon(counts, min_joint=2) == want


class TestEvalSimlex:
    def test_all_unseen_is_undefined(self):
        with pytest.raises(ValueError):
            eval_simlex([], [("a", "b", 1.0), ("c", "d", 2.0)])

    def test_monotone_lexicon_is_perfect(self):
        entries = [
            LexiconEntry("a", "b", 0.0, 3.0, 5),
            LexiconEntry("c", "d", 0.0, 2.0, 5),
            LexiconEntry("e", "f", 0.0, 1.0, 5),
        ]
        gold = [("a", "b", 9.0), ("c", "d", 5.0), ("e", "f", 2.0), ("zz", "qq", 0.0)]
        assert eval_simlex(entries, gold) == pytest.approx(1.0, abs=1e-12)

    def test_both_orders_are_averaged(self):
        entries = [
            LexiconEntry(u="a", v="b", pmi_cross=0.0, pmi_adjusted=2.0, joint_count=5),
            LexiconEntry(u="b", v="a", pmi_cross=0.0, pmi_adjusted=4.0, joint_count=5),
            LexiconEntry(u="c", v="d", pmi_cross=0.0, pmi_adjusted=3.5, joint_count=5),
        ]
        gold = [("a", "b", 3.0), ("c", "d", 3.5), ("x", "y", 0.0)]
        # (a,b) predicts mean(2,4)=3, matching gold ordering exactly
        assert eval_simlex(entries, gold) == pytest.approx(1.0, abs=1e-12)


def test_lexicon_tsv_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    counts = count_pmi(random_corpus(rng, 25, 8))
    entries = build_lexicon(counts, min_joint=1)
    path = tmp_path / "lexicon.tsv"
    write_lexicon(path, entries, header="# test")
    assert read_lexicon(path) == entries
