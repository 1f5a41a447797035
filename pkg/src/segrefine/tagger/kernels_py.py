"""Pure numpy LSTM sequence kernels (reference backend).

Both backends implement the same two entry points over float64 C-order
arrays:

    lstm_forward(Wx, Wh, x, mask)  -> (h, c, gates)
    lstm_backward(Wx, Wh, x, mask, h, c, gates, dh) -> (dx, dWx, dWh)

Shapes: Wx, Wh (4H, H) gate-stacked i/f/c/o; x, h, c, dh, dx (T, B, H);
gates (T, B, 4H) post-activation (the cell candidate is linear); mask
(T, B) with 1.0 on real positions and 0.0 on padding.

The recurrent cell computes, per step:

    i = sigmoid(Wxi x + Whi h_prev)        f = sigmoid(Wxf x + Whf h_prev)
    c = f * c_prev + i * (Wxc x + Whc h_prev)
    o = sigmoid(Wxo x + Who h_prev)
    h = o * tanh(c) + (1 - i) * x

i.e. no bias terms, a linear cell candidate, and an input bypass gated
by (1 - i).  Hidden and cell states are multiplied by the step mask, so
padded positions stay exactly zero and batched results match unpadded
per-sequence runs.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def lstm_forward(Wx, Wh, x, mask):
    T, B, H = x.shape
    h = np.zeros((T, B, H))
    c = np.zeros((T, B, H))
    gates = np.empty((T, B, 4 * H))
    h_prev = np.zeros((B, H))
    c_prev = np.zeros((B, H))
    for t in range(T):
        raw = x[t] @ Wx.T + h_prev @ Wh.T
        i = sigmoid(raw[:, :H])
        f = sigmoid(raw[:, H : 2 * H])
        g = raw[:, 2 * H : 3 * H]
        o = sigmoid(raw[:, 3 * H :])
        m = mask[t][:, None]
        ct = (f * c_prev + i * g) * m
        ht = (o * np.tanh(ct) + (1.0 - i) * x[t]) * m
        gates[t, :, :H] = i
        gates[t, :, H : 2 * H] = f
        gates[t, :, 2 * H : 3 * H] = g
        gates[t, :, 3 * H :] = o
        h[t] = ht
        c[t] = ct
        h_prev = ht
        c_prev = ct
    return h, c, gates


def lstm_backward(Wx, Wh, x, mask, h, c, gates, dh_out):
    T, B, H = x.shape
    dx = np.zeros_like(x)
    dWx = np.zeros_like(Wx)
    dWh = np.zeros_like(Wh)
    dh_rec = np.zeros((B, H))
    dc_rec = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        m = mask[t][:, None]
        i = gates[t, :, :H]
        f = gates[t, :, H : 2 * H]
        g = gates[t, :, 2 * H : 3 * H]
        o = gates[t, :, 3 * H :]
        h_prev = h[t - 1] if t > 0 else np.zeros((B, H))
        c_prev = c[t - 1] if t > 0 else np.zeros((B, H))

        dh = (dh_out[t] + dh_rec) * m
        tc = np.tanh(c[t])
        dc = (dh * o * (1.0 - tc * tc) + dc_rec) * m
        do = dh * tc
        di = dc * g - dh * x[t]
        df = dc * c_prev
        dg = dc * i

        draw = np.empty((B, 4 * H))
        draw[:, :H] = di * i * (1.0 - i)
        draw[:, H : 2 * H] = df * f * (1.0 - f)
        draw[:, 2 * H : 3 * H] = dg
        draw[:, 3 * H :] = do * o * (1.0 - o)

        dWx += draw.T @ x[t]
        dWh += draw.T @ h_prev
        dx[t] = draw @ Wx + dh * (1.0 - i)
        dh_rec = draw @ Wh
        dc_rec = dc * f
    return dx, dWx, dWh
