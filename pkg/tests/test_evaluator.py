import numpy as np
import pytest

from segrefine.corpus import SegmentedSentence, parse_segmented_line
from segrefine.errors import CorpusMismatch, TextMismatch
from segrefine.evaluator import Metrics, corpus_vocab, evaluate, f_score, score_sentence

# Ten sentence pairs with hand-enumerated counts (see totals below).
GOLD_10 = """\
ab cd
ab cd
ab cd
e
ab ab
xy
xy e
e ab
cd cd cd
ab xy cd
"""
PRED_10 = """\
ab cd
abcd
ab c d
e
ab ab
x y
xy e
ea b
cd cdcd
ab x ycd
"""
TRAIN_VOCAB = frozenset({"ab", "cd", "e"})
# per sentence (gold_n, pred_n, correct_n):
#   (2,2,2) (2,1,0) (2,3,1) (1,1,1) (2,2,2) (1,2,0) (2,2,2) (2,2,0) (3,2,1) (3,3,1)
# totals: gold 20, pred 20, correct 10
# OOV gold words ("xy"): 3, of which recovered: 1 (sentence 7)


def corpus_from(text):
    return [parse_segmented_line(line) for line in text.splitlines()]


class TestFScore:
    def test_perfect(self):
        assert f_score(1.0, 1.0) == 1.0

    def test_zero_precision(self):
        assert f_score(0.0, 0.7) == 0.0
        assert f_score(0.0, 0.0) == 0.0

    def test_published_operating_point(self):
        # printed table rounds the same computation to 90.08 from
        # unrounded inputs; rounded inputs give 0.90074
        f = f_score(0.9032, 0.8983)
        assert abs(f - 0.9007) <= 2e-4


class TestScoreSentence:
    def test_identity(self):
        g = SegmentedSentence(("ab", "cd"))
        assert score_sentence(g, g)[:3] == (2, 2, 2)

    def test_no_span_match(self):
        g = SegmentedSentence(("ab", "cd"))
        p = SegmentedSentence(("abcd",))
        assert score_sentence(g, p)[:3] == (2, 1, 0)

    def test_oversplit(self):
        g = SegmentedSentence(("ab", "cd"))
        p = SegmentedSentence(("ab", "c", "d"))
        assert score_sentence(g, p)[:3] == (2, 3, 1)

    def test_repeated_words_not_cross_matched(self):
        g = SegmentedSentence(("cd", "cd", "cd"))
        p = SegmentedSentence(("cd", "cdcd"))
        assert score_sentence(g, p)[:3] == (3, 2, 1)

    def test_text_mismatch(self):
        with pytest.raises(TextMismatch):
            score_sentence(SegmentedSentence(("ab",)), SegmentedSentence(("ba",)))


class TestEvaluate:
    def test_golden_fixture_counts(self):
        m = evaluate(corpus_from(GOLD_10), corpus_from(PRED_10), TRAIN_VOCAB)
        assert (m.gold_words, m.pred_words, m.correct_words) == (20, 20, 10)
        assert (m.oov_gold, m.oov_correct) == (3, 1)
        assert (m.iv_gold, m.iv_correct) == (17, 9)
        assert m.precision == 0.5
        assert m.recall == 0.5
        assert m.f_score == 0.5
        assert m.oov_rate == 3 / 20
        assert m.oov_recall == 1 / 3
        assert m.iv_recall == 9 / 17

    def test_perfect_prediction(self):
        gold = corpus_from(GOLD_10)
        m = evaluate(gold, gold, TRAIN_VOCAB)
        assert m.precision == m.recall == m.f_score == 1.0
        assert m.oov_recall == 1.0 and m.iv_recall == 1.0

    def test_no_oov_words_reports_one(self):
        gold = [SegmentedSentence(("ab",))]
        m = evaluate(gold, gold, frozenset({"ab"}))
        assert m.oov_gold == 0 and m.oov_recall == 1.0

    def test_single_fixture_oov_rates(self):
        gold = [SegmentedSentence(("ab", "cd"))]
        pred = [SegmentedSentence(("ab", "c", "d"))]
        m = evaluate(gold, pred, frozenset({"ab"}))
        assert m.oov_rate == 0.5
        assert m.iv_recall == 1.0
        assert m.oov_recall == 0.0

    def test_count_consistency_random(self):
        rng = np.random.default_rng(41)
        vocab = ["aa", "b", "ccc"]
        for _ in range(200):
            n = int(rng.integers(1, 6))
            gold = [
                SegmentedSentence(tuple(vocab[i] for i in rng.integers(0, 3, n)))
            ]
            text = gold[0].text
            cuts = sorted({0, len(text)} | {int(p) for p in rng.integers(1, len(text), 3)}) if len(text) > 1 else [0, 1]
            pred = [SegmentedSentence(tuple(text[a:b] for a, b in zip(cuts, cuts[1:])))]
            tv = frozenset({"aa"})
            m = evaluate(gold, pred, tv)
            assert m.oov_correct + m.iv_correct == m.correct_words
            assert m.oov_gold + m.iv_gold == m.gold_words
            if m.precision > 0 and m.recall > 0:
                assert min(m.precision, m.recall) <= m.f_score <= max(m.precision, m.recall)
                assert m.f_score <= (m.precision + m.recall) / 2

    def test_corpus_mismatch(self):
        with pytest.raises(CorpusMismatch):
            evaluate([SegmentedSentence(("a",))], [])
        with pytest.raises(CorpusMismatch):
            evaluate([SegmentedSentence(("ab",))], [SegmentedSentence(("ba",))])


class TestReport:
    def test_fixed_order_and_decimals(self):
        m = evaluate(corpus_from(GOLD_10), corpus_from(PRED_10), TRAIN_VOCAB)
        lines = m.report().splitlines()
        keys = [l.split(":")[0] for l in lines]
        assert keys == [
            "gold_words",
            "pred_words",
            "correct_words",
            "precision",
            "recall",
            "f_score",
            "oov_rate",
            "oov_recall",
            "iv_recall",
        ]
        assert "precision: 0.5000" in lines
        assert "oov_recall: 0.3333" in lines

    def test_tsv_record(self):
        m = evaluate(corpus_from(GOLD_10), corpus_from(PRED_10), TRAIN_VOCAB)
        fields = m.tsv_record().split("\t")
        assert fields[:7] == ["20", "20", "10", "3", "1", "17", "9"]
        assert fields[7:] == ["0.5000", "0.5000", "0.5000", "0.1500", "0.3333", "0.5294"]

    def test_corpus_vocab(self):
        assert corpus_vocab(corpus_from("a b\nb c")) == frozenset({"a", "b", "c"})
