"""Neural subword sequence tagger with gated-residual LSTM layers."""

from .kernels import available_backends, backend_name, get_backend
from .network import forward, loss, lstm_step, run_layer
from .optim import AdaDeltaState, adadelta_step, clip_and_scale
from .params import (
    LstmParams,
    TaggerConfig,
    TaggerModel,
    init_model,
    load_model,
    save_model,
    xavier_init,
)
from .training import (
    EpochStats,
    load_pretrained_embeddings,
    predict_labels,
    refine_sequences,
    train,
)

__all__ = [
    "AdaDeltaState",
    "EpochStats",
    "LstmParams",
    "TaggerConfig",
    "TaggerModel",
    "adadelta_step",
    "available_backends",
    "backend_name",
    "clip_and_scale",
    "forward",
    "get_backend",
    "init_model",
    "load_model",
    "load_pretrained_embeddings",
    "loss",
    "lstm_step",
    "predict_labels",
    "refine_sequences",
    "run_layer",
    "save_model",
    "train",
    "xavier_init",
]
