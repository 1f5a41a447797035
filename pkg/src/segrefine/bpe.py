"""Byte-pair-encoding subword model: learning, application, serialization.

Learning starts from per-word character symbols where the final symbol
carries a ``</w>`` sentinel, and repeatedly merges the corpus-wide most
frequent adjacent symbol pair (frequency ties broken lexicographically
on the pair, for determinism).  Application replays the learned merges
in order on a word's character symbols.

Frequent words end up fully merged into a single piece; rare words stay
split into several pieces, each carrying the binary ``is_subword``
feature.  In the serialized subword corpus, non-final pieces of a split
word get an ``@@`` continuation suffix.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .corpus import SegmentedSentence

WORD_END = "</w>"
CONTINUATION = "@@"


@dataclass(frozen=True)
class SubwordToken:
    """One BPE piece of a word, with offsets into the source sentence."""

    text: str  # sentinel and continuation markers stripped
    start: int
    end: int
    is_subword: bool  # source word was split into >= 2 pieces
    continuation: bool  # non-final piece of a split word

    @property
    def marked_text(self) -> str:
        return self.text + CONTINUATION if self.continuation else self.text


@dataclass(frozen=True)
class SubwordSequence:
    """The subword view of a segmented sentence; spans tile its text."""

    tokens: tuple[SubwordToken, ...]
    source: SegmentedSentence

    @property
    def text(self) -> str:
        return "".join(t.text for t in self.tokens)

    def marked_texts(self) -> list[str]:
        return [t.marked_text for t in self.tokens]

    def serialize(self) -> str:
        return " ".join(self.marked_texts())

    def serialize_feats(self) -> str:
        return " ".join("1" if t.is_subword else "0" for t in self.tokens)


@dataclass(frozen=True)
class BpeModel:
    """Ordered merge rules, highest-frequency first."""

    merges: tuple[tuple[str, str], ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if len(set(self.merges)) != len(self.merges):
            raise ValueError("duplicate merge pair")

    @property
    def n_merges(self) -> int:
        return len(self.merges)

    def split(self, word: str) -> list[str]:
        """Symbols of ``word`` after replaying all merges (last carries </w>)."""
        got = self._cache.get(word)
        if got is None:
            got = _replay(self.merges, word)
            self._cache[word] = got
        return got


def _word_symbols(word: str) -> list[str]:
    syms = list(word)
    syms[-1] = syms[-1] + WORD_END
    return syms


def _merge_once(syms: list[str], left: str, right: str) -> list[str]:
    """Replace every non-overlapping (left, right) adjacency, left to right."""
    out: list[str] = []
    i = 0
    n = len(syms)
    while i < n:
        if i + 1 < n and syms[i] == left and syms[i + 1] == right:
            out.append(left + right)
            i += 2
        else:
            out.append(syms[i])
            i += 1
    return out


def _replay(merges: Iterable[tuple[str, str]], word: str) -> list[str]:
    syms = _word_symbols(word)
    for left, right in merges:
        if len(syms) == 1:
            break
        syms = _merge_once(syms, left, right)
    return syms


def learn_bpe(word_freqs: Mapping[str, int], n_merges: int) -> BpeModel:
    """Learn up to ``n_merges`` merge rules from word frequencies.

    Stops early once no adjacent pair occurs at least twice (weighted by
    word frequency).  Pair statistics are updated incrementally per
    affected word rather than recounted from scratch each iteration.
    """
    if not word_freqs:
        raise ValueError("word_freqs must be non-empty")
    if n_merges < 0:
        raise ValueError("n_merges must be >= 0")

    words: list[list[str]] = []
    freqs: list[int] = []
    for w, c in word_freqs.items():
        if not w:
            raise ValueError("empty word in frequency table")
        words.append(_word_symbols(w))
        freqs.append(c)

    pair_counts: Counter = Counter()
    pair_words: defaultdict[tuple[str, str], set[int]] = defaultdict(set)
    for wi, syms in enumerate(words):
        f = freqs[wi]
        for p in zip(syms, syms[1:]):
            pair_counts[p] += f
            pair_words[p].add(wi)

    merges: list[tuple[str, str]] = []
    while len(merges) < n_merges and pair_counts:
        best_count = max(pair_counts.values())
        if best_count < 2:
            break
        best = min(p for p, c in pair_counts.items() if c == best_count)
        merges.append(best)
        for wi in sorted(pair_words[best]):
            f = freqs[wi]
            old = words[wi]
            new = _merge_once(old, *best)
            words[wi] = new
            old_pairs = Counter(zip(old, old[1:]))
            new_pairs = Counter(zip(new, new[1:]))
            for p, c in (old_pairs - new_pairs).items():
                pair_counts[p] -= c * f
                if pair_counts[p] <= 0:
                    del pair_counts[p]
                if p != best and new_pairs[p] == 0:
                    pair_words[p].discard(wi)
            for p, c in (new_pairs - old_pairs).items():
                pair_counts[p] += c * f
                pair_words[p].add(wi)
        del pair_words[best]
    return BpeModel(tuple(merges))


def apply_bpe(model: BpeModel, word: str) -> list[SubwordToken]:
    """Split one word into subword tokens (spans relative to the word)."""
    if not word:
        raise ValueError("cannot split empty word")
    syms = model.split(word)
    split = len(syms) >= 2
    tokens = []
    pos = 0
    for k, sym in enumerate(syms):
        text = sym[: -len(WORD_END)] if k == len(syms) - 1 else sym
        tokens.append(
            SubwordToken(
                text=text,
                start=pos,
                end=pos + len(text),
                is_subword=split,
                continuation=split and k < len(syms) - 1,
            )
        )
        pos += len(text)
    return tokens


def segment_to_subwords(model: BpeModel, s: SegmentedSentence) -> SubwordSequence:
    """Apply BPE to every word; token spans are sentence offsets."""
    tokens: list[SubwordToken] = []
    offset = 0
    for word in s.words:
        for t in apply_bpe(model, word):
            tokens.append(
                SubwordToken(
                    text=t.text,
                    start=offset + t.start,
                    end=offset + t.end,
                    is_subword=t.is_subword,
                    continuation=t.continuation,
                )
            )
        offset += len(word)
    return SubwordSequence(tuple(tokens), s)


def save_bpe(model: BpeModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"BPE v1 {model.n_merges}\n")
        for left, right in model.merges:
            f.write(f"{left} {right}\n")


def load_bpe(path) -> BpeModel:
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if not header.startswith("BPE v1 "):
            raise ValueError(f"{path}: not a BPE model file")
        merges = []
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            left, right = line.split(" ")
            merges.append((left, right))
    model = BpeModel(tuple(merges))
    declared = int(header.split(" ")[2])
    if declared != model.n_merges:
        raise ValueError(f"{path}: header declares {declared} merges, found {model.n_merges}")
    return model


def parse_subword_line(line: str, feats_line: str) -> tuple[list[str], list[bool], list[bool]]:
    """Parse parallel subword / feature lines into (texts, is_subword, continuation)."""
    pieces = line.split()
    feats = feats_line.split()
    if len(pieces) != len(feats):
        raise ValueError("subword and feature lines disagree in length")
    texts = []
    conts = []
    for p in pieces:
        if p.endswith(CONTINUATION) and len(p) > len(CONTINUATION):
            texts.append(p[: -len(CONTINUATION)])
            conts.append(True)
        else:
            texts.append(p)
            conts.append(False)
    return texts, [f == "1" for f in feats], conts


def subword_sequence_from_fields(
    texts: list[str], is_subword: list[bool], continuation: list[bool]
) -> SubwordSequence:
    """Rebuild a SubwordSequence from parsed fields.

    The source segmentation is implied by the continuation chain: a word
    ends at every token whose continuation flag is off.
    """
    words: list[str] = []
    buf: list[str] = []
    for text, cont in zip(texts, continuation):
        buf.append(text)
        if not cont:
            words.append("".join(buf))
            buf = []
    if buf:  # trailing continuation marker: close the word anyway
        words.append("".join(buf))
    source = SegmentedSentence(tuple(words))
    tokens = []
    pos = 0
    for text, feat, cont in zip(texts, is_subword, continuation):
        tokens.append(SubwordToken(text, pos, pos + len(text), feat, cont))
        pos += len(text)
    return SubwordSequence(tuple(tokens), source)


def load_subword_corpus(tokens_path, feats_path) -> list[SubwordSequence]:
    out = []
    with open(tokens_path, encoding="utf-8") as ft, open(feats_path, encoding="utf-8") as ff:
        for i, (tl, fl) in enumerate(zip(ft, ff), 1):
            if not tl.strip():
                continue
            try:
                texts, feats, conts = parse_subword_line(tl, fl)
            except ValueError as e:
                raise ValueError(f"{tokens_path}:{i}: {e}") from None
            out.append(subword_sequence_from_fields(texts, feats, conts))
    return out


def save_subword_corpus(seqs: Iterable[SubwordSequence], tokens_path, feats_path) -> None:
    with open(tokens_path, "w", encoding="utf-8", newline="\n") as ft, open(
        feats_path, "w", encoding="utf-8", newline="\n"
    ) as ff:
        for s in seqs:
            ft.write(s.serialize() + "\n")
            ff.write(s.serialize_feats() + "\n")
