"""Minibatch training loop, batched prediction, and embedding warm-start.

Sequences are bucketed by length (stable on input order), padded within
each batch with a reserved padding id whose embedding is zero, and the
padding is masked out of the loss.  Batch order is reshuffled each
epoch from the run's seed, so training is fully reproducible.

After every epoch the validation inputs are decoded and scored; the
epoch whose segmentation F-score is strictly best supplies the returned
model, mirroring selection on a held-out set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..bpe import SubwordSequence, subword_sequence_from_fields
from ..corpus import SegmentedSentence, Vocabulary
from ..decoder import decode
from ..errors import DimensionMismatch, LengthExceeded
from ..evaluator import evaluate
from ..labeler import LabeledSequence, LabelTag
from . import network, optim
from .params import TaggerConfig, TaggerModel, init_model


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    val_f: float


@dataclass
class TrainResult:
    model: TaggerModel
    history: list[EpochStats]
    pretrained_matched: int | None = None


@dataclass
class Batch:
    token_ids: np.ndarray  # (T, B)
    feat_ids: np.ndarray  # (T, B)
    label_ids: np.ndarray  # (T, B)
    mask: np.ndarray  # (T, B)


def encode_tokens(seq: SubwordSequence, vocab: Vocabulary) -> tuple[list[int], list[int]]:
    token_ids = [vocab.lookup(t) for t in seq.marked_texts()]
    feat_ids = [1 if t.is_subword else 0 for t in seq.tokens]
    return token_ids, feat_ids


def _make_batches(
    encoded: list[tuple[list[int], list[int], list[int]]],
    batch_size: int,
    pad_token: int,
    pad_feat: int,
) -> list[Batch]:
    order = sorted(range(len(encoded)), key=lambda i: (len(encoded[i][0]), i))
    batches = []
    for start in range(0, len(order), batch_size):
        members = order[start : start + batch_size]
        T = max(len(encoded[i][0]) for i in members)
        B = len(members)
        tok = np.full((T, B), pad_token, dtype=np.int64)
        fea = np.full((T, B), pad_feat, dtype=np.int64)
        lab = np.zeros((T, B), dtype=np.int64)
        mask = np.zeros((T, B))
        for b, i in enumerate(members):
            ts, fs, ls = encoded[i]
            n = len(ts)
            tok[:n, b] = ts
            fea[:n, b] = fs
            lab[:n, b] = ls
            mask[:n, b] = 1.0
        batches.append(Batch(tok, fea, lab, mask))
    return batches


def train_step(
    model: TaggerModel,
    batch: Batch,
    state: optim.AdaDeltaState,
    dropout_rng: np.random.Generator | None,
) -> float:
    """One forward/loss/backward/scale-clip/update cycle; returns loss."""
    cfg = model.config
    cache = network.forward_batch(
        model, batch.token_ids, batch.feat_ids, batch.mask, dropout_rng=dropout_rng
    )
    loss = network.loss_from_probs(cache.probs, batch.label_ids, batch.mask)
    grads = network.backward_batch(model, cache, batch.token_ids, batch.feat_ids, batch.label_ids)
    optim.clip_and_scale(grads, cfg.grad_scale, cfg.grad_clip[0], cfg.grad_clip[1])
    deltas = optim.adadelta_step(state, grads)
    optim.apply_deltas(model.params(), deltas)
    return loss


def predict_labels(model: TaggerModel, seq: SubwordSequence, vocab: Vocabulary) -> list[LabelTag]:
    """Per-token argmax labels; ties resolve to the lowest tag index."""
    token_ids, feat_ids = encode_tokens(seq, vocab)
    probs = network.forward(model, token_ids, feat_ids)
    return [LabelTag(int(k)) for k in probs.argmax(axis=1)]


def predict_labels_many(
    model: TaggerModel,
    seqs: list[SubwordSequence],
    vocab: Vocabulary,
    batch_size: int = 64,
) -> list[list[LabelTag]]:
    """Batched inference over a corpus, preserving input order."""
    encoded = []
    for s in seqs:
        ts, fs = encode_tokens(s, vocab)
        encoded.append((ts, fs, [0] * len(ts)))
    batches = _make_batches(encoded, batch_size, model.pad_token_id, model.pad_feat_id)
    order = sorted(range(len(encoded)), key=lambda i: (len(encoded[i][0]), i))
    out: list = [None] * len(seqs)
    pos = 0
    for batch in batches:
        cache = network.forward_batch(model, batch.token_ids, batch.feat_ids, batch.mask)
        pred = cache.probs.argmax(axis=2)  # (T, B)
        for b in range(batch.token_ids.shape[1]):
            i = order[pos]
            n = int(batch.mask[:, b].sum())
            out[i] = [LabelTag(int(k)) for k in pred[:n, b]]
            pos += 1
    return out


def refine_sequences(
    model: TaggerModel,
    seqs: list[SubwordSequence],
    vocab: Vocabulary,
    batch_size: int = 64,
) -> list[SegmentedSentence]:
    """Tag and decode a corpus of subword sequences.

    Sequences longer than the model's max_len are tagged in chunks cut
    at word boundaries of the incoming segmentation, then re-joined, so
    arbitrarily long sentences survive refinement.
    """
    max_len = model.config.max_len
    pieces: list[SubwordSequence] = []
    spans: list[tuple[int, int]] = []  # sentence -> piece range
    for s in seqs:
        start = len(pieces)
        for chunk in _chunk_sequence(s, max_len):
            pieces.append(chunk)
        spans.append((start, len(pieces)))
    labels = predict_labels_many(model, pieces, vocab, batch_size)
    decoded = [decode(p, l) for p, l in zip(pieces, labels)]
    out = []
    for a, b in spans:
        words: list[str] = []
        for d in decoded[a:b]:
            words.extend(d.words)
        out.append(SegmentedSentence(tuple(words)))
    return out


def _chunk_sequence(seq: SubwordSequence, max_len: int) -> list[SubwordSequence]:
    if len(seq.tokens) <= max_len:
        return [seq]
    chunks = []
    cur: list = []
    for tok in seq.tokens:
        cur.append(tok)
        # cut only between words (never inside a continuation chain)
        if len(cur) >= max_len and not tok.continuation:
            chunks.append(cur)
            cur = []
    if cur:
        chunks.append(cur)
    out = []
    for toks in chunks:
        out.append(
            subword_sequence_from_fields(
                [t.text for t in toks],
                [t.is_subword for t in toks],
                [t.continuation for t in toks],
            )
        )
    return out


def train(
    cfg: TaggerConfig,
    train_set: list[LabeledSequence],
    val_gold: list[SegmentedSentence],
    val_inputs: list[SubwordSequence],
    vocab: Vocabulary,
    rng_seed: int,
    pretrained_emb=None,
) -> TrainResult:
    """Train a tagger and return the validation-best model plus the log."""
    if not train_set:
        raise ValueError("empty training set")
    if len(val_gold) != len(val_inputs):
        raise ValueError("validation gold/input sentence counts differ")
    rng = np.random.default_rng(rng_seed)
    model = init_model(cfg, vocab.size, rng)
    matched = None
    if pretrained_emb is not None:
        matched = load_pretrained_embeddings(pretrained_emb, vocab, model)
    state = optim.AdaDeltaState(rho=cfg.rho, epsilon=cfg.epsilon)

    encoded = []
    for ls in train_set:
        ts, fs = encode_tokens(ls.tokens, vocab)
        if len(ts) > cfg.max_len:
            raise LengthExceeded(
                f"training sequence of {len(ts)} tokens exceeds max_len {cfg.max_len}"
            )
        encoded.append((ts, fs, [int(t) for t in ls.labels]))
    batches = _make_batches(encoded, cfg.batch, model.pad_token_id, model.pad_feat_id)

    best_model = model.copy()
    best_f = -1.0
    history: list[EpochStats] = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(batches))
        losses = []
        for bi in order:
            losses.append(train_step(model, batches[bi], state, dropout_rng=rng))
        pred = refine_sequences(model, val_inputs, vocab, batch_size=max(cfg.batch, 1))
        val_f = evaluate(val_gold, pred).f_score
        history.append(EpochStats(epoch, float(np.mean(losses)), val_f))
        if val_f > best_f:
            best_f = val_f
            best_model = model.copy()
    return TrainResult(best_model, history, matched)


def load_pretrained_embeddings(path, vocab: Vocabulary, model: TaggerModel) -> int:
    """Overwrite embedding rows for tokens found in a text vector file.

    Rows are ``token v1 .. v_d`` with d equal to the model's token
    embedding size; unknown tokens are ignored, unmatched vocabulary
    entries keep their initialization.  Returns the matched count.
    """
    d = model.config.token_emb
    matched = 0
    with open(path, encoding="utf-8") as f:
        for ln, line in enumerate(f, 1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2 or not parts[0]:
                continue
            if len(parts) - 1 != d:
                raise DimensionMismatch(
                    f"{path}:{ln}: vector has {len(parts) - 1} dims, expected {d}"
                )
            if parts[0] in vocab:
                model.emb_token[vocab.lookup(parts[0])] = [float(v) for v in parts[1:]]
                matched += 1
    return matched
