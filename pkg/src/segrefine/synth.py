"""Synthetic segmented-corpus generator and boundary corruptor.

The generated language mirrors the structural assumptions of the real
task: every word is a whole number of atoms, and each atom is one
alphabet character followed by the atom delimiter, so the atomizer
recovers atoms exactly.  Word frequencies follow a Zipf law.

The corruptor simulates an upstream segmenter's mistakes: it deletes
internal word boundaries (merge errors) and inserts boundaries at atom
boundaries inside words (split errors), never touching the text itself.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .atomizer import TSHEG, AtomizerConfig, atomize
from .corpus import SegmentedSentence

# Deterministic pool of candidate atom characters.
_ATOM_POOL = (
    string.ascii_lowercase
    + string.ascii_uppercase
    + string.digits
    + "".join(chr(c) for c in range(0x00E0, 0x00FF))  # à..þ
    + "".join(chr(c) for c in range(0x03B1, 0x03CA))  # α..ω
    + "".join(chr(c) for c in range(0x0430, 0x0450))  # а..я
    + "".join(chr(c) for c in range(0x0561, 0x0587))  # ա..ֆ
    + "".join(chr(c) for c in range(0x10D0, 0x10F1))  # ა..ჰ
)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic language.

    ``word_len_probs[k]`` is the probability of a word having k+1 atoms;
    ``sentence_len_probs`` maps sentence lengths (in words) to
    probabilities via (lengths, probs).
    """

    n_atoms_alphabet: int = 150
    vocab_size: int = 500
    word_len_probs: tuple[float, ...] = (0.90, 0.08, 0.02, 0.0)
    zipf_exponent: float = 1.4
    sentence_lens: tuple[int, ...] = (2, 3, 4, 5)
    sentence_len_probs: tuple[float, ...] | None = None  # None = uniform
    seed: int = 1
    delimiter: str = TSHEG

    def __post_init__(self):
        if self.n_atoms_alphabet < 1 or self.n_atoms_alphabet > len(_ATOM_POOL):
            raise ValueError(f"alphabet size must be in [1, {len(_ATOM_POOL)}]")
        if abs(sum(self.word_len_probs) - 1.0) > 1e-9:
            raise ValueError("word length probabilities must sum to 1")
        if self.sentence_len_probs is not None and len(self.sentence_len_probs) != len(
            self.sentence_lens
        ):
            raise ValueError("sentence length distribution shape mismatch")

    @property
    def alphabet(self) -> str:
        return _ATOM_POOL[: self.n_atoms_alphabet]


def make_vocab(spec: SynthSpec, rng: np.random.Generator) -> list[str]:
    """Sample ``vocab_size`` distinct words; rank order is Zipf rank."""
    alphabet = spec.alphabet
    lens = np.arange(1, len(spec.word_len_probs) + 1)
    seen: set[str] = set()
    vocab: list[str] = []
    attempts = 0
    while len(vocab) < spec.vocab_size:
        attempts += 1
        if attempts > 200 * spec.vocab_size:
            raise ValueError("word space too small for requested vocabulary")
        n = int(rng.choice(lens, p=np.asarray(spec.word_len_probs)))
        atoms = rng.integers(0, len(alphabet), size=n)
        word = "".join(alphabet[a] + spec.delimiter for a in atoms)
        if word not in seen:
            seen.add(word)
            vocab.append(word)
    return vocab


def zipf_probs(n: int, exponent: float) -> np.ndarray:
    w = 1.0 / np.power(np.arange(1, n + 1, dtype=np.float64), exponent)
    return w / w.sum()


def generate(spec: SynthSpec, n_sentences: int) -> list[SegmentedSentence]:
    """Generate a corpus; fully deterministic for a fixed spec."""
    rng = np.random.default_rng(spec.seed)
    vocab = make_vocab(spec, rng)
    probs = zipf_probs(spec.vocab_size, spec.zipf_exponent)
    lens = np.asarray(spec.sentence_lens)
    if spec.sentence_len_probs is None:
        len_probs = np.full(len(lens), 1.0 / len(lens))
    else:
        len_probs = np.asarray(spec.sentence_len_probs)
    sents = []
    for _ in range(n_sentences):
        m = int(rng.choice(lens, p=len_probs))
        ids = rng.choice(spec.vocab_size, size=m, p=probs)
        sents.append(SegmentedSentence(tuple(vocab[i] for i in ids)))
    return sents


def corrupt(
    gold: SegmentedSentence,
    p_merge: float,
    p_split: float,
    rng: np.random.Generator,
    atom_cfg: AtomizerConfig | None = None,
) -> SegmentedSentence:
    """Randomly merge and split words; the text is preserved exactly.

    Each internal word boundary is deleted with ``p_merge``; each atom
    boundary strictly inside a word is inserted with ``p_split``.  One
    uniform draw is made per candidate position, in ascending offset
    order, so output is reproducible for a fixed generator state.
    """
    if not (0 <= p_merge < 1 and 0 <= p_split < 1):
        raise ValueError("corruption rates must be in [0, 1)")
    cfg = atom_cfg if atom_cfg is not None else AtomizerConfig()
    text = gold.text
    n = len(text)
    word_bounds = set(gold.boundaries)
    atom_bounds = {a.end for a in atomize(text, cfg)}
    atom_bounds.add(0)

    new_bounds = {0, n}
    for pos in range(1, n):
        if pos in word_bounds:
            if rng.random() >= p_merge:
                new_bounds.add(pos)
        elif pos in atom_bounds:
            if rng.random() < p_split:
                new_bounds.add(pos)
    cuts = sorted(new_bounds)
    words = tuple(text[a:b] for a, b in zip(cuts, cuts[1:]))
    return SegmentedSentence(words)


def corrupt_corpus(
    sents: Sequence[SegmentedSentence],
    p_merge: float,
    p_split: float,
    seed: int,
    atom_cfg: AtomizerConfig | None = None,
) -> list[SegmentedSentence]:
    rng = np.random.default_rng(seed)
    return [corrupt(s, p_merge, p_split, rng, atom_cfg) for s in sents]
