"""Pipeline configuration: flat ``key = value`` file with per-module sections.

All defaults are pre-filled; a config file (path from ``--config`` or
the ``SEGREFINE_CONFIG`` environment variable) overrides defaults, and
explicit CLI flags override both.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

from .atomizer import SHAD, TSHEG, AtomizerConfig

ENV_VAR = "SEGREFINE_CONFIG"

DEFAULTS: dict[str, dict[str, str]] = {
    "corpus": {
        "max_len": "120",
        "terminators": SHAD + "/",
    },
    "atomizer": {
        "atom_delimiters": TSHEG,
        "punctuation_atoms": SHAD,
        "presegment_chars": SHAD,
    },
    "baseline": {
        "beam": "8",
        "epochs": "10",
        "in_dict_cost": "1.0",
        "oov_cost": "2.0",
    },
    "bpe": {
        "n_merges": "20000",
    },
    "tagger": {
        "n_layers": "8",
        "hidden": "512",
        "token_emb": "256",
        "feat_emb": "256",
        "dropout": "0.1",
        "batch": "150",
        "grad_scale": "0.1",
        "grad_clip_lo": "-1.0",
        "grad_clip_hi": "1.0",
        "rho": "0.9",
        "epsilon": "1e-5",
        "xavier_magnitude": "2.34",
        "max_len": "120",
        "epochs": "15",
        "vocab_size": "18559",
    },
    "synth": {
        "alphabet_size": "150",
        "vocab_size": "500",
        "word_len_probs": "0.90,0.08,0.02,0.0",
        "zipf_exponent": "1.4",
        "sentence_lens": "2:5",
        "delimiter": TSHEG,
    },
}


@dataclass
class Config:
    parser: configparser.ConfigParser

    def get(self, section: str, key: str) -> str:
        return self.parser.get(section, key)

    def getint(self, section: str, key: str) -> int:
        return self.parser.getint(section, key)

    def getfloat(self, section: str, key: str) -> float:
        return self.parser.getfloat(section, key)

    def atomizer(self) -> AtomizerConfig:
        return AtomizerConfig(
            atom_delimiters=frozenset(self.get("atomizer", "atom_delimiters")),
            punctuation_atoms=frozenset(self.get("atomizer", "punctuation_atoms")),
            presegment_chars=frozenset(self.get("atomizer", "presegment_chars")),
        )

    def terminators(self) -> frozenset[str]:
        return frozenset(self.get("corpus", "terminators"))


def _base_parser() -> configparser.ConfigParser:
    p = configparser.ConfigParser(interpolation=None)
    p.read_dict(DEFAULTS)
    return p


def load_config(path: str | None = None) -> Config:
    """Defaults, overlaid with the given file (or $SEGREFINE_CONFIG)."""
    p = _base_parser()
    if path is None:
        path = os.environ.get(ENV_VAR)
    if path:
        with open(path, encoding="utf-8") as f:
            p.read_file(f)
    return Config(p)


def dump_default_config() -> str:
    lines = []
    for section, entries in DEFAULTS.items():
        lines.append(f"[{section}]")
        for k, v in entries.items():
            lines.append(f"{k} = {v}")
        lines.append("")
    return "\n".join(lines)
