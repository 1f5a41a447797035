"""Bakeoff-style segmentation scoring: P/R/F plus OOV and IV recall.

A predicted word counts as correct iff its character span equals some
gold word's span; matching is offset-based so repeated words cannot
cross-match.  OOV statistics are computed against a training vocabulary
(a set of word strings).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import AbstractSet, Iterable, Sequence

from .corpus import SegmentedSentence
from .errors import CorpusMismatch, TextMismatch


def f_score(p: float, r: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if p + r == 0:
        return 0.0
    return 2.0 * p * r / (p + r)


def _rate(numerator: int, denominator: int) -> float:
    # Empty universe counts as perfectly recovered rather than undefined.
    if denominator == 0:
        return 1.0 if numerator == 0 else 0.0
    return numerator / denominator


@dataclass(frozen=True)
class Metrics:
    gold_words: int
    pred_words: int
    correct_words: int
    oov_gold: int
    oov_correct: int
    iv_gold: int
    iv_correct: int

    @property
    def precision(self) -> float:
        return _rate(self.correct_words, self.pred_words)

    @property
    def recall(self) -> float:
        return _rate(self.correct_words, self.gold_words)

    @property
    def f_score(self) -> float:
        return f_score(self.precision, self.recall)

    @property
    def oov_rate(self) -> float:
        return self.oov_gold / self.gold_words if self.gold_words else 0.0

    @property
    def oov_recall(self) -> float:
        return _rate(self.oov_correct, self.oov_gold)

    @property
    def iv_recall(self) -> float:
        return _rate(self.iv_correct, self.iv_gold)

    def report(self) -> str:
        lines = [
            f"gold_words: {self.gold_words}",
            f"pred_words: {self.pred_words}",
            f"correct_words: {self.correct_words}",
            f"precision: {self.precision:.4f}",
            f"recall: {self.recall:.4f}",
            f"f_score: {self.f_score:.4f}",
            f"oov_rate: {self.oov_rate:.4f}",
            f"oov_recall: {self.oov_recall:.4f}",
            f"iv_recall: {self.iv_recall:.4f}",
        ]
        return "\n".join(lines)

    def tsv_record(self) -> str:
        fields = [
            self.gold_words,
            self.pred_words,
            self.correct_words,
            self.oov_gold,
            self.oov_correct,
            self.iv_gold,
            self.iv_correct,
            f"{self.precision:.4f}",
            f"{self.recall:.4f}",
            f"{self.f_score:.4f}",
            f"{self.oov_rate:.4f}",
            f"{self.oov_recall:.4f}",
            f"{self.iv_recall:.4f}",
        ]
        return "\t".join(str(x) for x in fields)


def _spans(s: SegmentedSentence) -> list[tuple[int, int]]:
    b = s.boundaries
    return list(zip(b, b[1:]))


def score_sentence(
    gold: SegmentedSentence,
    pred: SegmentedSentence,
    train_vocab: AbstractSet[str] = frozenset(),
) -> tuple[int, int, int, list[bool], list[bool]]:
    """Count words for one sentence pair.

    Returns (gold_n, pred_n, correct_n, per-gold-word OOV flags,
    per-gold-word recovered flags).
    """
    if gold.text != pred.text:
        raise TextMismatch("gold and predicted sentence texts differ")
    gold_spans = _spans(gold)
    pred_spans = set(_spans(pred))
    oov_flags = [w not in train_vocab for w in gold.words]
    hit_flags = [sp in pred_spans for sp in gold_spans]
    correct = sum(hit_flags)
    return len(gold.words), len(pred.words), correct, oov_flags, hit_flags


def evaluate(
    gold_corpus: Sequence[SegmentedSentence],
    pred_corpus: Sequence[SegmentedSentence],
    train_vocab: AbstractSet[str] = frozenset(),
) -> Metrics:
    """Micro-averaged corpus metrics over sentence-parallel corpora."""
    if len(gold_corpus) != len(pred_corpus):
        raise CorpusMismatch(
            f"{len(gold_corpus)} gold sentences vs {len(pred_corpus)} predicted"
        )
    gold_n = pred_n = correct_n = 0
    oov_gold = oov_correct = iv_gold = iv_correct = 0
    for i, (g, p) in enumerate(zip(gold_corpus, pred_corpus), 1):
        try:
            gn, pn, cn, oov, hit = score_sentence(g, p, train_vocab)
        except TextMismatch as e:
            raise CorpusMismatch(f"sentence {i}: {e}") from None
        gold_n += gn
        pred_n += pn
        correct_n += cn
        for is_oov, is_hit in zip(oov, hit):
            if is_oov:
                oov_gold += 1
                oov_correct += is_hit
            else:
                iv_gold += 1
                iv_correct += is_hit
    return Metrics(gold_n, pred_n, correct_n, oov_gold, oov_correct, iv_gold, iv_correct)


def corpus_vocab(corpus: Iterable[SegmentedSentence]) -> frozenset[str]:
    """All word strings occurring in a corpus (for OOV bookkeeping)."""
    words: set[str] = set()
    for s in corpus:
        words.update(s.words)
    return frozenset(words)
