"""Recurrent cell math: closed forms, a duplicate-implementation oracle,
direction duality, masking exactness, and backend agreement."""

import numpy as np
import pytest

from segrefine.errors import ShapeMismatch
from segrefine.tagger import kernels, kernels_py
from segrefine.tagger.network import lstm_step, run_layer
from segrefine.tagger.params import LstmParams


def zero_params(h):
    return LstmParams(np.zeros((4 * h, h)), np.zeros((4 * h, h)))


def random_params(rng, h, scale=0.4):
    return LstmParams(rng.normal(0, scale, (4 * h, h)), rng.normal(0, scale, (4 * h, h)))


def oracle_step(p, x, h_prev, c_prev):
    """Straight-line re-implementation of the recurrent cell equations."""

    def sig(z):
        return 1.0 / (1.0 + np.exp(-z))

    i = sig(p.W_xi @ x + p.W_hi @ h_prev)
    f = sig(p.W_xf @ x + p.W_hf @ h_prev)
    c = f * c_prev + i * (p.W_xc @ x + p.W_hc @ h_prev)
    o = sig(p.W_xo @ x + p.W_ho @ h_prev)
    h = o * np.tanh(c) + (1.0 - i) * x
    return h, c


class TestLstmStep:
    def test_zero_weight_closed_form(self):
        p = zero_params(4)
        x = np.full(4, 0.2)
        h, c = lstm_step(p, x, np.zeros(4), np.zeros(4))
        assert np.allclose(c, 0.0, atol=1e-15)
        assert np.allclose(h, 0.1, atol=1e-15)

    def test_zero_fixed_point(self):
        p = zero_params(4)
        h, c = lstm_step(p, np.zeros(4), np.zeros(4), np.zeros(4))
        assert np.all(h == 0.0) and np.all(c == 0.0)

    def test_zero_weight_carry_form(self):
        # with zero weights every gate is 1/2, so
        # h = tanh(c_prev / 2) / 2 + x / 2 and c = c_prev / 2
        rng = np.random.default_rng(1)
        p = zero_params(6)
        x, c_prev = rng.normal(0, 1, 6), rng.normal(0, 1, 6)
        h, c = lstm_step(p, x, np.zeros(6), c_prev)
        assert np.max(np.abs(c - 0.5 * c_prev)) < 1e-12
        assert np.max(np.abs(h - (0.5 * np.tanh(0.5 * c_prev) + 0.5 * x))) < 1e-12

    def test_matches_duplicate_implementation(self):
        rng = np.random.default_rng(2)
        p = random_params(rng, 4)
        for _ in range(20):
            x, hp, cp = rng.normal(0, 1, (3, 4))
            h, c = lstm_step(p, x, hp, cp)
            ho, co = oracle_step(p, x, hp, cp)
            assert np.max(np.abs(h - ho)) < 1e-12
            assert np.max(np.abs(c - co)) < 1e-12

    def test_shape_check(self):
        with pytest.raises(ShapeMismatch):
            lstm_step(zero_params(4), np.zeros(3), np.zeros(4), np.zeros(4))


class TestRunLayer:
    def test_length_one_direction_symmetric(self):
        rng = np.random.default_rng(3)
        p = random_params(rng, 5)
        x = [rng.normal(0, 1, 5)]
        np.testing.assert_array_equal(run_layer(p, x, "forward")[0], run_layer(p, x, "backward")[0])

    def test_zero_weights_halve_input(self):
        p = zero_params(4)
        xs = [np.full(4, v) for v in (0.2, -0.6, 1.0)]
        for direction in ("forward", "backward"):
            outs = run_layer(p, xs, direction)
            for x, h in zip(xs, outs):
                assert np.max(np.abs(h - 0.5 * x)) < 1e-15

    def test_direction_duality(self):
        rng = np.random.default_rng(4)
        p = random_params(rng, 5)
        xs = [rng.normal(0, 1, 5) for _ in range(6)]
        fwd_on_reversed = run_layer(p, xs[::-1], "forward")
        bwd = run_layer(p, xs, "backward")
        for a, b in zip(fwd_on_reversed[::-1], bwd):
            np.testing.assert_array_equal(a, b)

    def test_matches_batched_kernel(self):
        rng = np.random.default_rng(5)
        p = random_params(rng, 6)
        xs = [rng.normal(0, 1, 6) for _ in range(7)]
        x = np.ascontiguousarray(np.stack(xs)[:, None, :])
        mask = np.ones((7, 1))
        h, _, _ = kernels_py.lstm_forward(p.Wx, p.Wh, x, mask)
        outs = run_layer(p, xs, "forward")
        for t in range(7):
            assert np.max(np.abs(h[t, 0] - outs[t])) < 1e-12


class TestMasking:
    def test_padded_batch_equals_unpadded(self):
        # padded positions must not leak into real ones, in either
        # direction, so batched results equal per-sequence runs exactly
        rng = np.random.default_rng(6)
        H = 5
        p = random_params(rng, H)
        lens = [4, 2, 7]
        seqs = [rng.normal(0, 1, (n, H)) for n in lens]
        T = max(lens)
        x = np.zeros((T, len(lens), H))
        mask = np.zeros((T, len(lens)))
        for b, s in enumerate(seqs):
            x[: lens[b], b] = s
            mask[: lens[b], b] = 1.0
        h, c, _ = kernels_py.lstm_forward(p.Wx, p.Wh, x, mask)
        for b, s in enumerate(seqs):
            hb, cb, _ = kernels_py.lstm_forward(
                p.Wx, p.Wh, np.ascontiguousarray(s[:, None, :]), np.ones((lens[b], 1))
            )
            # batched BLAS may differ from the single-sequence run in the
            # last ulp; padded positions must be exactly zero though
            assert np.max(np.abs(h[: lens[b], b] - hb[:, 0])) < 1e-12
            if lens[b] < T:
                assert np.all(h[lens[b] :, b] == 0.0)
                assert np.all(c[lens[b] :, b] == 0.0)

    def test_reversed_padding_stays_zero(self):
        rng = np.random.default_rng(7)
        H = 4
        p = random_params(rng, H)
        x = np.zeros((5, 1, H))
        mask = np.zeros((5, 1))
        x[2:, 0] = rng.normal(0, 1, (3, H))
        mask[2:, 0] = 1.0  # padding at the start, as a reversed layer sees it
        h, _, _ = kernels_py.lstm_forward(p.Wx, p.Wh, x, mask)
        assert np.max(np.abs(h[:2, 0])) == 0.0
        hb, _, _ = kernels_py.lstm_forward(
            p.Wx, p.Wh, np.ascontiguousarray(x[2:]), np.ones((3, 1))
        )
        assert np.max(np.abs(h[2:, 0] - hb[:, 0])) < 1e-12


needs_c = pytest.mark.skipif(
    "c" not in kernels.available_backends(), reason="compiled backend not built"
)


@needs_c
class TestBackendAgreement:
    def test_forward_and_backward_match(self):
        rng = np.random.default_rng(8)
        ck = kernels.get_backend("c")
        for _ in range(5):
            T, B, H = int(rng.integers(1, 7)), int(rng.integers(1, 5)), int(rng.integers(1, 9))
            p = random_params(rng, H)
            x = np.ascontiguousarray(rng.normal(0, 1, (T, B, H)))
            mask = np.ascontiguousarray((rng.random((T, B)) < 0.8).astype(float))
            mask[0] = 1.0
            a = kernels_py.lstm_forward(p.Wx, p.Wh, x, mask)
            b = ck.lstm_forward(p.Wx, p.Wh, x, mask)
            for ga, gb in zip(a, b):
                assert np.max(np.abs(ga - gb)) < 1e-12
            dh = np.ascontiguousarray(rng.normal(0, 1, (T, B, H)))
            ra = kernels_py.lstm_backward(p.Wx, p.Wh, x, mask, *a, dh)
            rb = ck.lstm_backward(p.Wx, p.Wh, x, mask, *b, dh)
            for ga, gb in zip(ra, rb):
                assert np.max(np.abs(ga - gb)) < 1e-12
