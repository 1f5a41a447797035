"""Recover a word segmentation from a labeled subword sequence.

The rule is a single left-to-right scan with a buffer: every token is
appended to the buffer, and labels E, -E and S flush the buffer as one
word.  A trailing non-empty buffer is flushed at end of sequence, so
decoding never fails and never loses text, whatever the label sequence.
"""

from __future__ import annotations

from .bpe import SubwordSequence
from .corpus import SegmentedSentence
from .errors import LengthMismatch
from .labeler import LabelTag

_FLUSH = frozenset({LabelTag.E, LabelTag.XE, LabelTag.S})


def decode(tokens: SubwordSequence, labels) -> SegmentedSentence:
    if len(tokens.tokens) != len(labels):
        raise LengthMismatch(
            f"{len(tokens.tokens)} tokens vs {len(labels)} labels"
        )
    words: list[str] = []
    buf: list[str] = []
    for tok, lab in zip(tokens.tokens, labels):
        buf.append(tok.text)
        if lab in _FLUSH:
            words.append("".join(buf))
            buf = []
    if buf:
        words.append("".join(buf))
    return SegmentedSentence(tuple(words))
