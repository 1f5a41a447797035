"""Forward, loss, and backward passes through the full tagger stack.

Layer 0 input is the concatenation of token and feature embeddings.
Layers alternate unroll direction starting forward, all same-direction
layers sharing one parameter set.  Each subword's label distribution is
a softmax over the top layer's hidden state.

Backward direction is realized by flipping the time axis of a layer's
input and mask, running the forward-direction kernel, and flipping the
output back, so both directions exercise identical kernel code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import LengthExceeded, ShapeMismatch
from . import kernels
from .kernels_py import sigmoid
from .params import LstmParams, TaggerModel


def lstm_step(p: LstmParams, x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray):
    """Single recurrent step on plain vectors; returns (h_t, c_t)."""
    H = p.hidden
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    for v in (x_t, h_prev, c_prev):
        if v.shape != (H,):
            raise ShapeMismatch(f"expected vectors of dim {H}, got {v.shape}")
    raw = p.Wx @ x_t + p.Wh @ h_prev
    i = sigmoid(raw[:H])
    f = sigmoid(raw[H : 2 * H])
    g = raw[2 * H : 3 * H]
    o = sigmoid(raw[3 * H :])
    c_t = f * c_prev + i * g
    h_t = o * np.tanh(c_t) + (1.0 - i) * x_t
    return h_t, c_t


def run_layer(p: LstmParams, inputs, direction: str = "forward") -> list[np.ndarray]:
    """Unroll one layer over a sequence of vectors, h0 = c0 = 0.

    Outputs are returned in the original time order for both
    directions.
    """
    if direction not in ("forward", "backward"):
        raise ValueError(f"unknown direction {direction!r}")
    if len(inputs) == 0:
        raise ShapeMismatch("empty input sequence")
    order = range(len(inputs)) if direction == "forward" else range(len(inputs) - 1, -1, -1)
    h = np.zeros(p.hidden)
    c = np.zeros(p.hidden)
    out: list = [None] * len(inputs)
    for t in order:
        h, c = lstm_step(p, inputs[t], h, c)
        out[t] = h
    return out


@dataclass
class ForwardCache:
    """Everything the batched backward pass needs."""

    x0: np.ndarray  # (T, B, H) embedding layer output (pre-dropout)
    mask: np.ndarray  # (T, B)
    layer_inputs: list  # per layer: (T, B, H) input after dropout
    layer_caches: list  # per layer: (h, c, gates) in kernel time order
    drop_masks: list  # per layer: (T, B, H) scaled dropout mask or None
    h_top: np.ndarray  # (T, B, H)
    probs: np.ndarray  # (T, B, n_labels)


def _layer_run(p, inp, mask, reverse, backend):
    if reverse:
        h, c, gates = backend.lstm_forward(p.Wx, p.Wh, inp[::-1].copy(), mask[::-1].copy())
        return h[::-1].copy(), (h, c, gates)
    h, c, gates = backend.lstm_forward(p.Wx, p.Wh, inp, mask)
    return h, (h, c, gates)


def forward_batch(
    model: TaggerModel,
    token_ids: np.ndarray,
    feat_ids: np.ndarray,
    mask: np.ndarray,
    dropout_rng: np.random.Generator | None = None,
    backend=None,
) -> ForwardCache:
    """Batched forward pass; dropout is applied only when a generator
    is supplied (training mode), as inverted dropout on layer inputs."""
    if backend is None:
        backend = kernels.active
    cfg = model.config
    T, B = token_ids.shape
    if T > cfg.max_len:
        raise LengthExceeded(f"sequence length {T} exceeds max_len {cfg.max_len}")
    if feat_ids.shape != (T, B) or mask.shape != (T, B):
        raise ShapeMismatch("token/feature/mask shapes disagree")
    if token_ids.max() > model.pad_token_id or token_ids.min() < 0:
        raise ShapeMismatch("token id out of range")
    if feat_ids.max() > model.pad_feat_id or feat_ids.min() < 0:
        raise ShapeMismatch("feature id out of range")

    x0 = np.concatenate(
        [model.emb_token[token_ids], model.emb_feat[feat_ids]], axis=2
    )
    mask = np.ascontiguousarray(mask, dtype=np.float64)

    layer_inputs = []
    layer_caches = []
    drop_masks = []
    inp = x0
    keep = 1.0 - cfg.dropout
    for layer in range(cfg.n_layers):
        if dropout_rng is not None and cfg.dropout > 0.0:
            dm = (dropout_rng.random(inp.shape) < keep) / keep
            inp = inp * dm
        else:
            dm = None
        drop_masks.append(dm)
        layer_inputs.append(np.ascontiguousarray(inp))
        p = model.layer_params(layer)
        out, cache = _layer_run(p, layer_inputs[-1], mask, reverse=layer % 2 == 1, backend=backend)
        layer_caches.append(cache)
        inp = out

    h_top = inp
    logits = h_top.reshape(T * B, cfg.hidden) @ model.W_out.T + model.b_out
    logits -= logits.max(axis=1, keepdims=True)
    ex = np.exp(logits)
    probs = (ex / ex.sum(axis=1, keepdims=True)).reshape(T, B, cfg.n_labels)
    return ForwardCache(x0, mask, layer_inputs, layer_caches, drop_masks, h_top, probs)


def loss_from_probs(probs: np.ndarray, label_ids: np.ndarray, mask: np.ndarray) -> float:
    """Mean over real tokens of -log p(gold label)."""
    T, B, L = probs.shape
    if label_ids.shape != (T, B):
        raise ShapeMismatch("label shape disagrees with probabilities")
    n_tokens = mask.sum()
    if n_tokens == 0:
        raise ShapeMismatch("batch contains no real tokens")
    p = probs.reshape(T * B, L)[np.arange(T * B), label_ids.reshape(-1)]
    logp = np.log(p) * mask.reshape(-1)
    return float(-logp.sum() / n_tokens)


def backward_batch(
    model: TaggerModel,
    cache: ForwardCache,
    token_ids: np.ndarray,
    feat_ids: np.ndarray,
    label_ids: np.ndarray,
    backend=None,
) -> dict[str, np.ndarray]:
    """Gradients of the mean token loss for every named parameter."""
    if backend is None:
        backend = kernels.active
    cfg = model.config
    T, B, L = cache.probs.shape
    H = cfg.hidden
    mask_flat = cache.mask.reshape(-1)
    n_tokens = mask_flat.sum()

    dlogits = cache.probs.reshape(T * B, L).copy()
    dlogits[np.arange(T * B), label_ids.reshape(-1)] -= 1.0
    dlogits *= mask_flat[:, None] / n_tokens

    h_top_flat = cache.h_top.reshape(T * B, H)
    grads = {
        "out.W": dlogits.T @ h_top_flat,
        "out.b": dlogits.sum(axis=0),
    }
    dh = (dlogits @ model.W_out).reshape(T, B, H)

    dWx = {"fwd": np.zeros_like(model.fwd.Wx), "bwd": np.zeros_like(model.bwd.Wx)}
    dWh = {"fwd": np.zeros_like(model.fwd.Wh), "bwd": np.zeros_like(model.bwd.Wh)}
    for layer in range(cfg.n_layers - 1, -1, -1):
        p = model.layer_params(layer)
        name = "fwd" if layer % 2 == 0 else "bwd"
        inp = cache.layer_inputs[layer]
        h, c, gates = cache.layer_caches[layer]
        if layer % 2 == 1:
            dx_r, dwx, dwh = backend.lstm_backward(
                p.Wx, p.Wh, inp[::-1].copy(), cache.mask[::-1].copy(), h, c, gates, dh[::-1].copy()
            )
            dx = dx_r[::-1].copy()
        else:
            dx, dwx, dwh = backend.lstm_backward(
                p.Wx, p.Wh, inp, cache.mask, h, c, gates, dh
            )
        dWx[name] += dwx
        dWh[name] += dwh
        dm = cache.drop_masks[layer]
        if dm is not None:
            dx = dx * dm
        dh = dx

    grads["fwd.Wx"] = dWx["fwd"]
    grads["fwd.Wh"] = dWh["fwd"]
    grads["bwd.Wx"] = dWx["bwd"]
    grads["bwd.Wh"] = dWh["bwd"]

    te = cfg.token_emb
    grads["emb_token"] = np.zeros_like(model.emb_token)
    grads["emb_feat"] = np.zeros_like(model.emb_feat)
    np.add.at(grads["emb_token"], token_ids.reshape(-1), dh[:, :, :te].reshape(-1, te))
    np.add.at(
        grads["emb_feat"], feat_ids.reshape(-1), dh[:, :, te:].reshape(-1, cfg.feat_emb)
    )
    return grads


def forward(model: TaggerModel, token_ids, feat_ids) -> np.ndarray:
    """Label probability rows for one sequence (inference mode)."""
    tok = np.asarray(token_ids, dtype=np.int64).reshape(-1, 1)
    fea = np.asarray(feat_ids, dtype=np.int64).reshape(-1, 1)
    if tok.shape != fea.shape:
        raise ShapeMismatch("token and feature id lengths differ")
    mask = np.ones(tok.shape)
    cache = forward_batch(model, tok, fea, mask)
    return cache.probs[:, 0, :]


def loss(probs: np.ndarray, labels) -> float:
    """Mean -log p(gold) over one sequence's rows."""
    labels = np.asarray(labels, dtype=np.int64)
    n, L = probs.shape
    if labels.shape != (n,):
        raise ShapeMismatch("labels do not match probability rows")
    return float(-np.log(probs[np.arange(n), labels]).mean())
