"""Gradient post-processing and the adaptive update rule.

Gradients are scaled first and clipped second, then fed to an
accumulator-based step-size rule: squared-gradient and squared-delta
running averages with decay rho, and a denominator constant epsilon
inside both square roots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def clip_and_scale(
    grads: dict[str, np.ndarray], scale: float, lo: float, hi: float
) -> dict[str, np.ndarray]:
    """g <- clamp(g * scale, lo, hi), in place; returns the dict."""
    if lo >= hi:
        raise ValueError("clip range must satisfy lo < hi")
    for g in grads.values():
        np.multiply(g, scale, out=g)
        np.clip(g, lo, hi, out=g)
    return grads


@dataclass
class AdaDeltaState:
    rho: float = 0.9
    epsilon: float = 1e-5
    eg2: dict[str, np.ndarray] = field(default_factory=dict)
    edx2: dict[str, np.ndarray] = field(default_factory=dict)


def adadelta_step(state: AdaDeltaState, grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Per-parameter deltas; accumulators are updated in place.

        E[g^2]  <- rho E[g^2]  + (1 - rho) g^2
        delta    = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
        E[dx^2] <- rho E[dx^2] + (1 - rho) delta^2
    """
    rho, eps = state.rho, state.epsilon
    deltas = {}
    for name, g in grads.items():
        eg2 = state.eg2.get(name)
        if eg2 is None:
            eg2 = state.eg2[name] = np.zeros_like(g)
            state.edx2[name] = np.zeros_like(g)
        edx2 = state.edx2[name]
        eg2 *= rho
        eg2 += (1.0 - rho) * g * g
        delta = -np.sqrt(edx2 + eps) / np.sqrt(eg2 + eps) * g
        edx2 *= rho
        edx2 += (1.0 - rho) * delta * delta
        deltas[name] = delta
    return deltas


def apply_deltas(params: dict[str, np.ndarray], deltas: dict[str, np.ndarray]) -> None:
    for name, d in deltas.items():
        params[name] += d
