import numpy as np
import pytest

from segrefine.bpe import subword_sequence_from_fields
from segrefine.corpus import SegmentedSentence


def seq_from_texts(texts):
    """SubwordSequence with the given token texts, one word per token."""
    n = len(texts)
    return subword_sequence_from_fields(list(texts), [False] * n, [False] * n)


def random_sentence(rng, vocab):
    n = int(rng.integers(1, 8))
    return SegmentedSentence(tuple(vocab[i] for i in rng.integers(0, len(vocab), n)))


def random_cuts(rng, text, required, optional, p=0.5):
    """Boundary set: all required offsets plus a random optional subset."""
    cuts = set(required)
    for pos in optional:
        if rng.random() < p:
            cuts.add(pos)
    return sorted(cuts)


def tokens_from_cuts(text, cuts):
    return [text[a:b] for a, b in zip(cuts, cuts[1:])]
