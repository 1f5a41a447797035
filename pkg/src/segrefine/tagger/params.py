"""Tagger model parameters, initialization, and binary serialization.

The recurrent stack uses exactly two LSTM parameter sets: one shared by
all forward-direction layers, one by all backward-direction layers.
Gate weight matrices are stored stacked as (4*hidden, hidden) blocks in
gate order i, f, c, o; the individual matrices remain addressable as
views for inspection and for the serialized form.

Model file layout (all integers little-endian u32, floats little-endian
f64, tensors C-order):

    magic "STGR" | version | config-JSON length | config JSON (UTF-8)
    | tensor count | per tensor: name length, name, rank, dims, data

The round trip is bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ShapeMismatch
from ..labeler import N_LABELS

MAGIC = b"STGR"
VERSION = 1

GATE_ORDER = ("i", "f", "c", "o")


def xavier_init(shape, fan_in: int, magnitude: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform init on (-b, b) with b = sqrt(3 * magnitude / fan_in)."""
    if fan_in < 1:
        raise ValueError("fan_in must be >= 1")
    b = np.sqrt(3.0 * magnitude / fan_in)
    return rng.uniform(-b, b, size=shape)


@dataclass
class LstmParams:
    """One direction's shared weights, gate-stacked: (4H, H) each."""

    Wx: np.ndarray
    Wh: np.ndarray

    def __post_init__(self):
        if self.Wx.shape != self.Wh.shape or self.Wx.shape[0] != 4 * self.Wx.shape[1]:
            raise ShapeMismatch(f"bad LSTM weight shapes {self.Wx.shape}, {self.Wh.shape}")

    @property
    def hidden(self) -> int:
        return self.Wx.shape[1]

    def _block(self, which: str, gate: str) -> np.ndarray:
        h = self.hidden
        k = GATE_ORDER.index(gate)
        m = self.Wx if which == "x" else self.Wh
        return m[k * h : (k + 1) * h]

    # Individual gate matrices as views into the stacked storage.
    @property
    def W_xi(self):
        return self._block("x", "i")

    @property
    def W_hi(self):
        return self._block("h", "i")

    @property
    def W_xf(self):
        return self._block("x", "f")

    @property
    def W_hf(self):
        return self._block("h", "f")

    @property
    def W_xc(self):
        return self._block("x", "c")

    @property
    def W_hc(self):
        return self._block("h", "c")

    @property
    def W_xo(self):
        return self._block("x", "o")

    @property
    def W_ho(self):
        return self._block("h", "o")

    def copy(self) -> "LstmParams":
        return LstmParams(self.Wx.copy(), self.Wh.copy())


@dataclass(frozen=True)
class TaggerConfig:
    n_layers: int = 8
    hidden: int = 512
    token_emb: int = 256
    feat_emb: int = 256
    n_labels: int = N_LABELS
    dropout: float = 0.1
    batch: int = 150
    grad_scale: float = 0.1
    grad_clip: tuple[float, float] = (-1.0, 1.0)
    rho: float = 0.9
    epsilon: float = 1e-5
    xavier_magnitude: float = 2.34
    max_len: int = 120
    epochs: int = 15

    def __post_init__(self):
        if self.token_emb + self.feat_emb != self.hidden:
            raise ShapeMismatch(
                "token_emb + feat_emb must equal hidden "
                f"({self.token_emb} + {self.feat_emb} != {self.hidden}); "
                "the input-bypass term needs matching dimensions"
            )
        if self.n_layers % 2 != 0 or self.n_layers < 2:
            raise ValueError("n_layers must be a positive even number")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.grad_clip[0] >= self.grad_clip[1]:
            raise ValueError("bad gradient clip range")


@dataclass
class TaggerModel:
    """Embeddings, two shared LSTM parameter sets, output projection."""

    config: TaggerConfig
    vocab_size: int
    emb_token: np.ndarray  # (vocab_size + 1, token_emb); last row = padding
    emb_feat: np.ndarray  # (3, feat_emb); rows 0/1 = feature, row 2 = padding
    fwd: LstmParams
    bwd: LstmParams
    W_out: np.ndarray  # (n_labels, hidden)
    b_out: np.ndarray  # (n_labels,)

    def __post_init__(self):
        cfg = self.config
        checks = [
            (self.emb_token.shape, (self.vocab_size + 1, cfg.token_emb)),
            (self.emb_feat.shape, (3, cfg.feat_emb)),
            (self.fwd.Wx.shape, (4 * cfg.hidden, cfg.hidden)),
            (self.bwd.Wx.shape, (4 * cfg.hidden, cfg.hidden)),
            (self.W_out.shape, (cfg.n_labels, cfg.hidden)),
            (self.b_out.shape, (cfg.n_labels,)),
        ]
        for got, want in checks:
            if got != want:
                raise ShapeMismatch(f"tensor shape {got}, expected {want}")

    @property
    def pad_token_id(self) -> int:
        return self.vocab_size

    @property
    def pad_feat_id(self) -> int:
        return 2

    def params(self) -> dict[str, np.ndarray]:
        """Named trainable tensors (stacked LSTM form)."""
        return {
            "emb_token": self.emb_token,
            "emb_feat": self.emb_feat,
            "fwd.Wx": self.fwd.Wx,
            "fwd.Wh": self.fwd.Wh,
            "bwd.Wx": self.bwd.Wx,
            "bwd.Wh": self.bwd.Wh,
            "out.W": self.W_out,
            "out.b": self.b_out,
        }

    def layer_params(self, layer: int) -> LstmParams:
        """Layer indices are 0-based; even layers run forward."""
        return self.fwd if layer % 2 == 0 else self.bwd

    def copy(self) -> "TaggerModel":
        return TaggerModel(
            config=self.config,
            vocab_size=self.vocab_size,
            emb_token=self.emb_token.copy(),
            emb_feat=self.emb_feat.copy(),
            fwd=self.fwd.copy(),
            bwd=self.bwd.copy(),
            W_out=self.W_out.copy(),
            b_out=self.b_out.copy(),
        )


def init_model(cfg: TaggerConfig, vocab_size: int, rng: np.random.Generator) -> TaggerModel:
    """Xavier-initialized model; padding rows are zeroed after drawing."""
    mag = cfg.xavier_magnitude
    emb_token = xavier_init((vocab_size + 1, cfg.token_emb), cfg.token_emb, mag, rng)
    emb_feat = xavier_init((3, cfg.feat_emb), cfg.feat_emb, mag, rng)
    emb_token[vocab_size] = 0.0
    emb_feat[2] = 0.0
    fwd = LstmParams(
        xavier_init((4 * cfg.hidden, cfg.hidden), cfg.hidden, mag, rng),
        xavier_init((4 * cfg.hidden, cfg.hidden), cfg.hidden, mag, rng),
    )
    bwd = LstmParams(
        xavier_init((4 * cfg.hidden, cfg.hidden), cfg.hidden, mag, rng),
        xavier_init((4 * cfg.hidden, cfg.hidden), cfg.hidden, mag, rng),
    )
    W_out = xavier_init((cfg.n_labels, cfg.hidden), cfg.hidden, mag, rng)
    b_out = np.zeros(cfg.n_labels)
    return TaggerModel(cfg, vocab_size, emb_token, emb_feat, fwd, bwd, W_out, b_out)


def _config_json(cfg: TaggerConfig, vocab_size: int) -> bytes:
    d = {
        "n_layers": cfg.n_layers,
        "hidden": cfg.hidden,
        "token_emb": cfg.token_emb,
        "feat_emb": cfg.feat_emb,
        "n_labels": cfg.n_labels,
        "dropout": cfg.dropout,
        "batch": cfg.batch,
        "grad_scale": cfg.grad_scale,
        "grad_clip_lo": cfg.grad_clip[0],
        "grad_clip_hi": cfg.grad_clip[1],
        "rho": cfg.rho,
        "epsilon": cfg.epsilon,
        "xavier_magnitude": cfg.xavier_magnitude,
        "max_len": cfg.max_len,
        "epochs": cfg.epochs,
        "vocab_size": vocab_size,
    }
    return json.dumps(d, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _named_tensors(model: TaggerModel) -> dict[str, np.ndarray]:
    """Serialized view: individual gate matrices, not the stacked blocks."""
    out = {
        "emb_token": model.emb_token,
        "emb_feat": model.emb_feat,
        "out.W": model.W_out,
        "out.b": model.b_out,
    }
    for prefix, p in (("fwd", model.fwd), ("bwd", model.bwd)):
        for name in ("W_xi", "W_hi", "W_xf", "W_hf", "W_xc", "W_hc", "W_xo", "W_ho"):
            out[f"{prefix}.{name}"] = getattr(p, name)
    return out


def save_model(model: TaggerModel, path) -> None:
    tensors = _named_tensors(model)
    cfg_blob = _config_json(model.config, model.vocab_size)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<I", len(cfg_blob)))
        f.write(cfg_blob)
        f.write(struct.pack("<I", len(tensors)))
        for name in sorted(tensors):
            arr = np.ascontiguousarray(tensors[name], dtype="<f8")
            blob = name.encode("utf-8")
            f.write(struct.pack("<I", len(blob)))
            f.write(blob)
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.tobytes())


def load_model(path) -> TaggerModel:
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise ValueError(f"{path}: not a tagger model file")
        (version,) = struct.unpack("<I", f.read(4))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported model version {version}")
        (cfg_len,) = struct.unpack("<I", f.read(4))
        d = json.loads(f.read(cfg_len).decode("utf-8"))
        cfg = TaggerConfig(
            n_layers=d["n_layers"],
            hidden=d["hidden"],
            token_emb=d["token_emb"],
            feat_emb=d["feat_emb"],
            n_labels=d["n_labels"],
            dropout=d["dropout"],
            batch=d["batch"],
            grad_scale=d["grad_scale"],
            grad_clip=(d["grad_clip_lo"], d["grad_clip_hi"]),
            rho=d["rho"],
            epsilon=d["epsilon"],
            xavier_magnitude=d["xavier_magnitude"],
            max_len=d["max_len"],
            epochs=d["epochs"],
        )
        vocab_size = d["vocab_size"]
        (n_tensors,) = struct.unpack("<I", f.read(4))
        tensors: dict[str, np.ndarray] = {}
        for _ in range(n_tensors):
            (name_len,) = struct.unpack("<I", f.read(4))
            name = f.read(name_len).decode("utf-8")
            (rank,) = struct.unpack("<I", f.read(4))
            dims = struct.unpack(f"<{rank}I", f.read(4 * rank))
            n_items = int(np.prod(dims)) if rank else 1
            data = np.frombuffer(f.read(8 * n_items), dtype="<f8").reshape(dims)
            tensors[name] = np.array(data, dtype=np.float64)

    def stack(prefix: str, which: str) -> np.ndarray:
        return np.concatenate(
            [tensors[f"{prefix}.W_{which}{g}"] for g in GATE_ORDER], axis=0
        )

    return TaggerModel(
        config=cfg,
        vocab_size=vocab_size,
        emb_token=tensors["emb_token"],
        emb_feat=tensors["emb_feat"],
        fwd=LstmParams(stack("fwd", "x"), stack("fwd", "h")),
        bwd=LstmParams(stack("bwd", "x"), stack("bwd", "h")),
        W_out=tensors["out.W"],
        b_out=tensors["out.b"],
    )
