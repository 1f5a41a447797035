"""Atom segmentation and pre-segmentation on special characters.

Atoms are the minimal units the segmenter may combine into words:
maximal character runs that end with (and keep) a delimiter character,
plus isolated punctuation characters.  Keeping the trailing delimiter
makes atom concatenation reproduce the input exactly, so every
downstream span computation stays offset-exact.
"""

from __future__ import annotations

from dataclasses import dataclass

TSHEG = "་"  # Tibetan syllable delimiter
SHAD = "།"  # Tibetan clause terminator


@dataclass(frozen=True)
class Atom:
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class AtomizerConfig:
    """Character classes driving atomization.

    The default character sets are placeholders for the expert-designed
    lists used by production segmenters; everything is configurable.
    """

    atom_delimiters: frozenset = frozenset({TSHEG})
    punctuation_atoms: frozenset = frozenset({SHAD})
    presegment_chars: frozenset = frozenset({SHAD})


DEFAULT_ATOMIZER = AtomizerConfig()


def atomize(text: str, cfg: AtomizerConfig = DEFAULT_ATOMIZER) -> list[Atom]:
    """Split text into atoms whose spans tile the input with no gaps.

    With an empty delimiter set every non-punctuation character becomes
    its own atom (degenerate character fallback).
    """
    if not text:
        raise ValueError("cannot atomize empty text")
    atoms: list[Atom] = []
    if not cfg.atom_delimiters:
        for i, ch in enumerate(text):
            atoms.append(Atom(ch, i, i + 1))
        return atoms
    start = 0
    for i, ch in enumerate(text):
        if ch in cfg.punctuation_atoms:
            if start < i:
                atoms.append(Atom(text[start:i], start, i))
            atoms.append(Atom(ch, i, i + 1))
            start = i + 1
        elif ch in cfg.atom_delimiters:
            atoms.append(Atom(text[start : i + 1], start, i + 1))
            start = i + 1
    if start < len(text):
        atoms.append(Atom(text[start:], start, len(text)))
    return atoms


def presegment(text: str, cfg: AtomizerConfig = DEFAULT_ATOMIZER) -> list[str]:
    """Cut text after every pre-segmentation character; drop empty pieces."""
    pieces: list[str] = []
    start = 0
    for i, ch in enumerate(text):
        if ch in cfg.presegment_chars:
            pieces.append(text[start : i + 1])
            start = i + 1
    if start < len(text):
        pieces.append(text[start:])
    return pieces
