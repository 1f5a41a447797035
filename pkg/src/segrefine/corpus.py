"""Corpus data model, vocabulary construction, and long-sentence splitting.

File conventions used throughout the package:

* segmented corpus: UTF-8, LF line endings, one sentence per line, words
  separated by single ASCII spaces;
* raw corpus: UTF-8, one unsegmented sentence per line;
* vocabulary file: one token per line, 0-based line number is the token
  id, line 0 is the literal reserved token ``<UNK>``.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .errors import EmptyLine

UNK_TOKEN = "<UNK>"
UNK_ID = 0

_FIELDS = re.compile(r"[ \t]+")


@dataclass(frozen=True)
class SegmentedSentence:
    """A sentence as an ordered tuple of non-empty words.

    The underlying raw text is the concatenation of the words; word
    boundaries are derived character offsets into that text.
    """

    words: tuple[str, ...]

    def __post_init__(self):
        if not self.words:
            raise ValueError("a sentence needs at least one word")
        for w in self.words:
            if not w:
                raise ValueError("empty word in sentence")
            if "\n" in w or "\r" in w:
                raise ValueError("line break inside word")

    @cached_property
    def text(self) -> str:
        return "".join(self.words)

    @cached_property
    def boundaries(self) -> tuple[int, ...]:
        """Strictly increasing offsets: 0, then each word's end."""
        offs = [0]
        for w in self.words:
            offs.append(offs[-1] + len(w))
        return tuple(offs)

    def serialize(self) -> str:
        return " ".join(self.words)


def parse_segmented_line(line: str) -> SegmentedSentence:
    """Parse one corpus line into a sentence; empty fields are dropped."""
    words = [w for w in _FIELDS.split(line.strip(" \t\r\n")) if w]
    if not words:
        raise EmptyLine("line contains only whitespace")
    return SegmentedSentence(tuple(words))


def parse_raw_line(line: str) -> str:
    """Validate and trim one raw (unsegmented) input line."""
    text = line.strip()
    if not text:
        raise EmptyLine("line contains only whitespace")
    return text


def load_corpus(path) -> list[SegmentedSentence]:
    sents = []
    with open(path, encoding="utf-8") as f:
        for i, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                sents.append(parse_segmented_line(line))
            except EmptyLine as e:  # pragma: no cover - guarded above
                raise EmptyLine(f"{path}:{i}: {e}") from None
    return sents


def save_corpus(sentences: Iterable[SegmentedSentence], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for s in sentences:
            f.write(s.serialize() + "\n")


def load_raw(path) -> list[str]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                out.append(parse_raw_line(line))
    return out


@dataclass(frozen=True)
class Vocabulary:
    """Dense token ids with a reserved UNK entry at id 0."""

    tokens: tuple[str, ...]

    def __post_init__(self):
        if not self.tokens or self.tokens[0] != UNK_TOKEN:
            raise ValueError(f"vocabulary must start with {UNK_TOKEN}")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("duplicate token in vocabulary")

    @cached_property
    def index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.tokens)}

    @property
    def size(self) -> int:
        return len(self.tokens)

    def lookup(self, token: str) -> int:
        return self.index.get(token, UNK_ID)

    def __contains__(self, token: str) -> bool:
        return token in self.index


def build_vocab(token_seqs: Iterable[Sequence[str]], max_size: int) -> Vocabulary:
    """Build a vocabulary from token sequences, by descending frequency.

    Keeps UNK plus the ``max_size - 1`` most frequent tokens; frequency
    ties are broken lexicographically so identical corpora always yield
    identical vocabularies.
    """
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    counts = Counter()
    for seq in token_seqs:
        counts.update(seq)
    counts.pop(UNK_TOKEN, None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = [t for t, _ in ranked[: max_size - 1]]
    return Vocabulary((UNK_TOKEN, *kept))


def save_vocab(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for t in vocab.tokens:
            f.write(t + "\n")


def load_vocab(path) -> Vocabulary:
    with open(path, encoding="utf-8") as f:
        tokens = tuple(line.rstrip("\n") for line in f if line.rstrip("\n"))
    return Vocabulary(tokens)


def split_long(
    s: SegmentedSentence, max_len: int, terminators: frozenset[str] | set[str]
) -> list[SegmentedSentence]:
    """Split a sentence into pieces of at most ``max_len`` words.

    Cuts are made immediately after a word made up entirely of
    terminator characters; when no terminator is available inside the
    current window, a hard cut at ``max_len`` words is made instead.
    Word order and content are preserved exactly.
    """
    if max_len < 2:
        raise ValueError("max_len must be >= 2")
    pieces: list[tuple[str, ...]] = []
    cur: list[str] = []
    term_at: list[int] = []  # cut candidates: word counts into cur
    for w in s.words:
        if len(cur) == max_len:
            cut = term_at[-1] if term_at else max_len
            pieces.append(tuple(cur[:cut]))
            cur = cur[cut:]
            term_at = [p - cut for p in term_at if p > cut]
        cur.append(w)
        if all(ch in terminators for ch in w):
            term_at.append(len(cur))
    if cur:
        pieces.append(tuple(cur))
    return [SegmentedSentence(p) for p in pieces]
