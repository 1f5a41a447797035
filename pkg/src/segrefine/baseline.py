"""Discriminative baseline segmenter.

An averaged structured perceptron scores b/m/e/s tags on atoms with
window features; a k-best viterbi beam search produces candidate tag
sequences, their word spans are pooled into a word lattice, and the
final segmentation is the lattice's cheapest path under dictionary-
membership edge costs.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .atomizer import Atom, AtomizerConfig, atomize, presegment
from .corpus import SegmentedSentence, parse_raw_line
from .errors import AtomMisalignment, BeamEmpty, NoPath

LABELS = ("b", "m", "e", "s")
START_LABELS = ("b", "s")
NEXT_LABELS = {"b": ("m", "e"), "m": ("m", "e"), "e": ("b", "s"), "s": ("b", "s")}
END_LABELS = frozenset({"e", "s"})

BOS = "<BOS>"
EOS = "<EOS>"


@dataclass
class BaselineConfig:
    beam: int = 8
    in_dict_cost: float = 1.0
    oov_cost: float = 2.0
    epochs: int = 10
    atomizer: AtomizerConfig = field(default_factory=AtomizerConfig)


@dataclass
class PerceptronModel:
    """Sparse linear scoring model over (feature key, label) pairs."""

    weights: dict[tuple[str, str], float] = field(default_factory=dict)
    averaged: dict[tuple[str, str], float] | None = None
    window: int = 2

    @property
    def active_weights(self) -> dict[tuple[str, str], float]:
        return self.averaged if self.averaged is not None else self.weights


@dataclass(frozen=True)
class WordLattice:
    """DAG over atom boundaries; edges are candidate words."""

    n_atoms: int
    edges: frozenset  # of (i, j, word_text)


def _atom_text(atoms: Sequence[Atom], i: int) -> str:
    if i < 0:
        return BOS
    if i >= len(atoms):
        return EOS
    return atoms[i].text


def base_features(atoms: Sequence[Atom], pos: int) -> list[str]:
    """Position features that do not depend on the previous label."""
    c = [_atom_text(atoms, pos + d) for d in (-2, -1, 0, 1, 2)]
    return [
        f"U[-2]={c[0]}",
        f"U[-1]={c[1]}",
        f"U[0]={c[2]}",
        f"U[+1]={c[3]}",
        f"U[+2]={c[4]}",
        f"B[-1,0]={c[1]}∘{c[2]}",
        f"B[0,+1]={c[2]}∘{c[3]}",
    ]


def prev_feature(prev_label: str) -> str:
    return f"PREV={prev_label}"


def extract_features(atoms: Sequence[Atom], pos: int, prev_label: str) -> list[str]:
    if not 0 <= pos < len(atoms):
        raise ValueError(f"position {pos} out of range")
    return base_features(atoms, pos) + [prev_feature(prev_label)]


def _top(hyps: list, beam: int) -> list:
    hyps.sort(key=lambda h: (-h[1], h[0]))
    return hyps[:beam]


def viterbi_beam(
    model: PerceptronModel, atoms: Sequence[Atom], beam: int
) -> list[tuple[tuple[str, ...], float]]:
    """Up to ``beam`` best valid b/m/e/s sequences, best first.

    Scores are summed per-position feature weights with a first-order
    label dependency; score ties are broken by lexicographic label
    order.  With a beam at least as large as the number of label
    sequences this equals exhaustive ranking.
    """
    if beam < 1:
        raise ValueError("beam must be >= 1")
    if not atoms:
        raise BeamEmpty("no atoms to tag")
    w = model.active_weights
    n = len(atoms)
    base = []
    for pos in range(n):
        feats = base_features(atoms, pos)
        base.append(
            {lab: sum(w.get((f, lab), 0.0) for f in feats) for lab in LABELS}
        )
    starts = [lab for lab in START_LABELS if n > 1 or lab in END_LABELS]
    hyps = [
        ((lab,), base[0][lab] + w.get((prev_feature(BOS), lab), 0.0)) for lab in starts
    ]
    hyps = _top(hyps, beam)
    for pos in range(1, n):
        last = pos == n - 1
        grown = []
        for labels, score in hyps:
            pf = prev_feature(labels[-1])
            for lab in NEXT_LABELS[labels[-1]]:
                if last and lab not in END_LABELS:
                    continue
                grown.append(
                    (labels + (lab,), score + base[pos][lab] + w.get((pf, lab), 0.0))
                )
        hyps = _top(grown, beam)
    if not hyps:
        raise BeamEmpty("no transition-valid sequence survived the beam")
    return hyps


def gold_label_sequence(sent: SegmentedSentence, atoms: Sequence[Atom]) -> tuple[str, ...]:
    """b/m/e/s tags implied by a gold segmentation over the atoms."""
    atom_bounds = {a.end for a in atoms} | {0}
    for b in sent.boundaries:
        if b not in atom_bounds:
            raise AtomMisalignment(f"gold boundary at offset {b} falls inside an atom")
    starts = {a.start: i for i, a in enumerate(atoms)}
    labels: list[str] = []
    bounds = sent.boundaries
    for a, b in zip(bounds, bounds[1:]):
        k = starts[b] - starts[a] if b in starts else len(atoms) - starts[a]
        if k == 1:
            labels.append("s")
        else:
            labels.extend(["b"] + ["m"] * (k - 2) + ["e"])
    return tuple(labels)


def _feature_counts(atoms, labels) -> dict[tuple[str, str], int]:
    counts: dict[tuple[str, str], int] = defaultdict(int)
    prev = BOS
    for pos, lab in enumerate(labels):
        for f in base_features(atoms, pos):
            counts[(f, lab)] += 1
        counts[(prev_feature(prev), lab)] += 1
        prev = lab
    return counts


def train_perceptron(
    gold: Sequence[SegmentedSentence],
    cfg: BaselineConfig,
    epochs: int,
    rng_seed: int,
) -> PerceptronModel:
    """Averaged structured perceptron over whole sentences.

    Full-sequence updates: on a wrong prediction, add gold features and
    subtract predicted ones.  Deterministic for a fixed seed and corpus
    order.
    """
    model = PerceptronModel()
    w = model.weights
    acc: dict[tuple[str, str], float] = defaultdict(float)
    rng = np.random.default_rng(rng_seed)
    prepared = []
    for sent in gold:
        atoms = atomize(sent.text, cfg.atomizer)
        prepared.append((atoms, gold_label_sequence(sent, atoms)))
    c = 1
    for _ in range(epochs):
        for idx in rng.permutation(len(prepared)):
            atoms, gl = prepared[idx]
            pred = viterbi_beam(model, atoms, cfg.beam)[0][0]
            if pred != gl:
                delta = defaultdict(int, _feature_counts(atoms, gl))
                for k, v in _feature_counts(atoms, pred).items():
                    delta[k] -= v
                for k, d in delta.items():
                    if d:
                        w[k] = w.get(k, 0.0) + d
                        acc[k] += c * d
            c += 1
    model.averaged = {
        k: v - acc.get(k, 0.0) / c for k, v in w.items() if v - acc.get(k, 0.0) / c != 0.0
    }
    return model


def label_spans(labels: Sequence[str]) -> list[tuple[int, int]]:
    """Word spans (atom index ranges) of a b/m/e/s sequence."""
    spans = []
    start = 0
    for i, lab in enumerate(labels):
        if lab in END_LABELS:
            spans.append((start, i + 1))
            start = i + 1
    if start != len(labels):  # tolerate ill-formed tails
        spans.append((start, len(labels)))
    return spans


def build_lattice(kbest: Sequence[Sequence[str]], atoms: Sequence[Atom]) -> WordLattice:
    """Pool word spans of all k-best tag sequences into one lattice."""
    if not kbest:
        raise ValueError("kbest must be non-empty")
    edges = set()
    for labels in kbest:
        if len(labels) != len(atoms):
            raise ValueError("label sequence does not match atom count")
        for i, j in label_spans(labels):
            edges.add((i, j, "".join(a.text for a in atoms[i:j])))
    return WordLattice(len(atoms), frozenset(edges))


def rerank_shortest_path(
    lat: WordLattice,
    dictionary: frozenset[str] | set[str],
    in_dict_cost: float = 1.0,
    oov_cost: float = 2.0,
) -> SegmentedSentence:
    """Cheapest full path through the lattice.

    Cost ties are broken by fewer words, then by the lexicographically
    smaller word sequence.
    """
    if in_dict_cost >= oov_cost:
        raise ValueError("in_dict_cost must be below oov_cost")
    edges_by_end: dict[int, list[tuple[int, str]]] = defaultdict(list)
    for i, j, word in sorted(lat.edges):
        edges_by_end[j].append((i, word))
    best: dict[int, tuple[float, int, tuple[str, ...]]] = {0: (0.0, 0, ())}
    for j in range(1, lat.n_atoms + 1):
        cands = []
        for i, word in edges_by_end[j]:
            if i in best:
                cost, k, words = best[i]
                step = in_dict_cost if word in dictionary else oov_cost
                cands.append((cost + step, k + 1, words + (word,)))
        if cands:
            best[j] = min(cands)
    if lat.n_atoms not in best:
        raise NoPath("lattice has no full path")
    return SegmentedSentence(best[lat.n_atoms][2])


def segment_perceptron(model: PerceptronModel, cfg: BaselineConfig, text: str) -> SegmentedSentence:
    """Segment with the perceptron's best tag sequence only (no lattice).

    This is the scoring model's own reading of the sentence; the full
    pipeline additionally pools k-best spans into a lattice and
    re-ranks by dictionary membership.
    """
    text = parse_raw_line(text)
    words: list[str] = []
    for piece in presegment(text, cfg.atomizer):
        atoms = atomize(piece, cfg.atomizer)
        labels = viterbi_beam(model, atoms, cfg.beam)[0][0]
        for i, j in label_spans(labels):
            words.append("".join(a.text for a in atoms[i:j]))
    return SegmentedSentence(tuple(words))


def segment_baseline(
    model: PerceptronModel,
    dictionary: frozenset[str] | set[str],
    cfg: BaselineConfig,
    text: str,
) -> SegmentedSentence:
    """Full baseline pipeline on one raw sentence."""
    text = parse_raw_line(text)
    words: list[str] = []
    for piece in presegment(text, cfg.atomizer):
        atoms = atomize(piece, cfg.atomizer)
        kbest = viterbi_beam(model, atoms, cfg.beam)
        lat = build_lattice([labels for labels, _ in kbest], atoms)
        words.extend(
            rerank_shortest_path(lat, dictionary, cfg.in_dict_cost, cfg.oov_cost).words
        )
    return SegmentedSentence(tuple(words))


def corpus_dictionary(gold: Iterable[SegmentedSentence]) -> frozenset[str]:
    words: set[str] = set()
    for s in gold:
        words.update(s.words)
    return frozenset(words)


def save_perceptron(model: PerceptronModel, path) -> None:
    """Averaged weights as sorted feature/label/weight text lines."""
    weights = model.active_weights
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("PERCEPTRON v1\n")
        for (key, lab), v in sorted(weights.items()):
            if "\t" in key or "\n" in key:
                raise ValueError(f"feature key {key!r} cannot be serialized")
            f.write(f"{key}\t{lab}\t{v:.17g}\n")


def load_perceptron(path) -> PerceptronModel:
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != "PERCEPTRON v1":
            raise ValueError(f"{path}: not a perceptron model file")
        weights: dict[tuple[str, str], float] = {}
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            key, lab, val = line.split("\t")
            weights[(key, lab)] = float(val)
    return PerceptronModel(weights=weights, averaged=weights)


def save_dictionary(words: Iterable[str], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for word in sorted(set(words)):
            f.write(word + "\n")


def load_dictionary(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as f:
        return frozenset(line.rstrip("\n") for line in f if line.rstrip("\n"))
