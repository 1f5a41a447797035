"""Augmented positional labels and gold alignment for refiner training.

Besides the usual B/M/E/S positional tags, three extra tags -B/-M/-E
mark "virtual words": minimal token spans whose edges land on gold word
boundaries but whose interior was mis-segmented upstream, so the span
covers two or more gold words and cannot be recovered by re-joining
tokens.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .bpe import BpeModel, SubwordSequence, segment_to_subwords
from .corpus import SegmentedSentence
from .errors import TextMismatch


class LabelTag(enum.IntEnum):
    B = 0
    M = 1
    E = 2
    S = 3
    XB = 4  # renders as -B
    XM = 5  # renders as -M
    XE = 6  # renders as -E

    def text(self) -> str:
        return _TAG_TEXT[self]


_TAG_TEXT = {
    LabelTag.B: "B",
    LabelTag.M: "M",
    LabelTag.E: "E",
    LabelTag.S: "S",
    LabelTag.XB: "-B",
    LabelTag.XM: "-M",
    LabelTag.XE: "-E",
}
_TEXT_TAG = {v: k for k, v in _TAG_TEXT.items()}

N_LABELS = len(LabelTag)


def tag_from_text(text: str) -> LabelTag:
    try:
        return _TEXT_TAG[text]
    except KeyError:
        raise ValueError(f"unknown label tag {text!r}") from None


@dataclass(frozen=True)
class LabeledSequence:
    tokens: SubwordSequence
    labels: tuple[LabelTag, ...]

    def __post_init__(self):
        if len(self.tokens.tokens) != len(self.labels):
            raise ValueError("token/label length mismatch")

    def serialize_labels(self) -> str:
        return " ".join(t.text() for t in self.labels)


def _span_labels(n_tokens: int, aligned: bool) -> list[LabelTag]:
    # A one-token span is always S: there is no single-token minus tag and
    # the decoder cannot split inside a token anyway.
    if n_tokens == 1:
        return [LabelTag.S]
    if aligned:
        return [LabelTag.B] + [LabelTag.M] * (n_tokens - 2) + [LabelTag.E]
    return [LabelTag.XB] + [LabelTag.XM] * (n_tokens - 2) + [LabelTag.XE]


def align_labels(cand: SubwordSequence, gold: SegmentedSentence) -> LabeledSequence:
    """Label candidate tokens against the gold segmentation.

    Tokens are scanned left to right and a span is closed at the first
    token whose end offset is a gold boundary.  A span that coincides
    with exactly one gold word gets S or B..E; a span covering several
    gold words is a virtual word and gets -B..-E.  Span equality is
    tested on character offsets, not strings, so repeated words cannot
    cross-match.
    """
    if cand.text != gold.text:
        raise TextMismatch("candidate and gold disagree on the underlying text")
    gold_bounds = set(gold.boundaries)
    next_bound = {}
    bounds_sorted = gold.boundaries
    for a, b in zip(bounds_sorted, bounds_sorted[1:]):
        next_bound[a] = b

    labels: list[LabelTag] = []
    span_start = 0
    span_len = 0
    for tok in cand.tokens:
        span_len += 1
        if tok.end in gold_bounds:
            aligned = next_bound[span_start] == tok.end
            labels.extend(_span_labels(span_len, aligned))
            span_start = tok.end
            span_len = 0
    # The sentence end is always a gold boundary, so every span closed.
    assert span_len == 0
    return LabeledSequence(cand, tuple(labels))


def make_training_pair(
    gold: SegmentedSentence, baseline_out: SegmentedSentence, model: BpeModel
) -> LabeledSequence:
    """Subword-split the upstream output and align it against gold."""
    if baseline_out.text != gold.text:
        raise TextMismatch("baseline output and gold disagree on the underlying text")
    return align_labels(segment_to_subwords(model, baseline_out), gold)


def parse_label_line(line: str) -> tuple[LabelTag, ...]:
    return tuple(tag_from_text(t) for t in line.split())


def load_label_corpus(path) -> list[tuple[LabelTag, ...]]:
    out = []
    with open(path, encoding="utf-8") as f:
        for i, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                out.append(parse_label_line(line))
            except ValueError as e:
                raise ValueError(f"{path}:{i}: {e}") from None
    return out


def save_label_corpus(seqs, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for s in seqs:
            f.write(s.serialize_labels() + "\n")
