import numpy as np
import pytest

from segrefine.bpe import BpeModel, learn_bpe, segment_to_subwords
from segrefine.corpus import build_vocab
from segrefine.errors import DimensionMismatch, LengthExceeded
from segrefine.labeler import LabelTag, make_training_pair
from segrefine.synth import SynthSpec, corrupt, generate
from segrefine.tagger import network, optim
from segrefine.tagger.params import TaggerConfig, init_model, save_model
from segrefine.tagger.training import (
    Batch,
    encode_tokens,
    load_pretrained_embeddings,
    predict_labels,
    train,
    train_step,
)

TINY = dict(n_layers=2, hidden=8, token_emb=4, feat_emb=4, dropout=0.0, batch=2, epochs=1)


def tiny_batch(rng, model, T=5, B=2, pad_last=False):
    tok = rng.integers(0, model.vocab_size, (T, B))
    fea = rng.integers(0, 2, (T, B))
    lab = rng.integers(0, 7, (T, B))
    mask = np.ones((T, B))
    if pad_last:
        mask[-1, -1] = 0.0
        tok[-1, -1] = model.pad_token_id
        fea[-1, -1] = model.pad_feat_id
    return Batch(tok, fea, lab, mask)


def numeric_grads(model, batch, h=1e-5, dropout_seed=None):
    def loss_fn():
        rng = np.random.default_rng(dropout_seed) if dropout_seed is not None else None
        cache = network.forward_batch(
            model, batch.token_ids, batch.feat_ids, batch.mask, dropout_rng=rng
        )
        return network.loss_from_probs(cache.probs, batch.label_ids, batch.mask)

    out = {}
    for name, p in model.params().items():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            lp = loss_fn()
            p[idx] = orig - h
            lm = loss_fn()
            p[idx] = orig
            g[idx] = (lp - lm) / (2 * h)
            it.iternext()
        out[name] = g
    return out


def max_rel_err(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-4)))


class TestForward:
    def test_rows_sum_to_one(self):
        model = init_model(TaggerConfig(**TINY), 10, np.random.default_rng(1))
        probs = network.forward(model, [1, 2, 3], [0, 1, 0])
        assert probs.shape == (3, 7)
        assert np.max(np.abs(probs.sum(axis=1) - 1.0)) < 1e-6

    def test_zero_projection_uniform(self):
        model = init_model(TaggerConfig(**TINY), 10, np.random.default_rng(2))
        model.W_out[:] = 0.0
        model.b_out[:] = 0.0
        probs = network.forward(model, [1, 2], [0, 0])
        assert np.max(np.abs(probs - 1.0 / 7)) < 1e-12

    def test_deterministic(self):
        model = init_model(TaggerConfig(**TINY), 10, np.random.default_rng(3))
        a = network.forward(model, [4, 5, 6, 7], [1, 0, 1, 0])
        b = network.forward(model, [4, 5, 6, 7], [1, 0, 1, 0])
        np.testing.assert_array_equal(a, b)

    def test_length_cap(self):
        cfg = TaggerConfig(max_len=4, **TINY)
        model = init_model(cfg, 10, np.random.default_rng(4))
        with pytest.raises(LengthExceeded):
            network.forward(model, [1] * 5, [0] * 5)


class TestLoss:
    def test_perfect_prediction_zero(self):
        probs = np.zeros((3, 7))
        probs[np.arange(3), [1, 4, 2]] = 1.0
        assert network.loss(probs, [1, 4, 2]) == 0.0

    def test_uniform_is_log7(self):
        probs = np.full((5, 7), 1.0 / 7)
        assert abs(network.loss(probs, [0, 6, 3, 2, 1]) - np.log(7)) < 1e-12

    def test_batch_is_token_weighted_mean(self):
        # two sequences of lengths 2 and 1 in one padded batch
        rng = np.random.default_rng(5)
        model = init_model(TaggerConfig(**TINY), 10, rng)
        tok = np.array([[1, 2], [3, model.pad_token_id]])
        fea = np.array([[0, 1], [1, model.pad_feat_id]])
        lab = np.array([[0, 5], [2, 0]])
        mask = np.array([[1.0, 1.0], [1.0, 0.0]])
        cache = network.forward_batch(model, tok, fea, mask)
        batch_loss = network.loss_from_probs(cache.probs, lab, mask)
        per_tok = []
        for t, b in [(0, 0), (1, 0), (0, 1)]:
            per_tok.append(-np.log(cache.probs[t, b, lab[t, b]]))
        assert abs(batch_loss - np.mean(per_tok)) < 1e-12


class TestBackward:
    def test_gradients_match_finite_differences(self):
        cfg = TaggerConfig(**TINY)
        model = init_model(cfg, 20, np.random.default_rng(6))
        batch = tiny_batch(np.random.default_rng(7), model, pad_last=True)
        cache = network.forward_batch(model, batch.token_ids, batch.feat_ids, batch.mask)
        grads = network.backward_batch(model, cache, batch.token_ids, batch.feat_ids, batch.label_ids)
        num = numeric_grads(model, batch)
        for name in grads:
            assert max_rel_err(grads[name], num[name]) < 1e-4, name

    def test_gradients_with_fixed_dropout_mask(self):
        cfg = TaggerConfig(n_layers=2, hidden=8, token_emb=4, feat_emb=4, dropout=0.3, batch=2, epochs=1)
        model = init_model(cfg, 12, np.random.default_rng(8))
        batch = tiny_batch(np.random.default_rng(9), model, T=4)
        seed = 123
        cache = network.forward_batch(
            model, batch.token_ids, batch.feat_ids, batch.mask,
            dropout_rng=np.random.default_rng(seed),
        )
        grads = network.backward_batch(model, cache, batch.token_ids, batch.feat_ids, batch.label_ids)
        num = numeric_grads(model, batch, dropout_seed=seed)
        for name in grads:
            assert max_rel_err(grads[name], num[name]) < 1e-4, name

    def test_output_bias_gradient_identity(self):
        model = init_model(TaggerConfig(**TINY), 10, np.random.default_rng(10))
        batch = tiny_batch(np.random.default_rng(11), model)
        cache = network.forward_batch(model, batch.token_ids, batch.feat_ids, batch.mask)
        grads = network.backward_batch(model, cache, batch.token_ids, batch.feat_ids, batch.label_ids)
        T, B, L = cache.probs.shape
        onehot = np.zeros((T * B, L))
        onehot[np.arange(T * B), batch.label_ids.reshape(-1)] = 1.0
        want = (cache.probs.reshape(T * B, L) - onehot).mean(axis=0)
        np.testing.assert_allclose(grads["out.b"], want, atol=1e-12)

    def test_duplicate_batch_leaves_gradients_unchanged(self):
        model = init_model(TaggerConfig(**TINY), 10, np.random.default_rng(12))
        b1 = tiny_batch(np.random.default_rng(13), model)
        b2 = Batch(
            np.tile(b1.token_ids, (1, 2)),
            np.tile(b1.feat_ids, (1, 2)),
            np.tile(b1.label_ids, (1, 2)),
            np.tile(b1.mask, (1, 2)),
        )
        g1 = network.backward_batch(
            model,
            network.forward_batch(model, b1.token_ids, b1.feat_ids, b1.mask),
            b1.token_ids, b1.feat_ids, b1.label_ids,
        )
        g2 = network.backward_batch(
            model,
            network.forward_batch(model, b2.token_ids, b2.feat_ids, b2.mask),
            b2.token_ids, b2.feat_ids, b2.label_ids,
        )
        for name in g1:
            np.testing.assert_allclose(g1[name], g2[name], atol=1e-12)


class TestOptim:
    def test_clip_and_scale_examples(self):
        g = {"w": np.array([5.0, 200.0, -200.0, 20.0])}
        optim.clip_and_scale(g, 0.1, -1.0, 1.0)
        np.testing.assert_array_equal(g["w"], [0.5, 1.0, -1.0, 1.0])

    def test_clip_range_validated(self):
        with pytest.raises(ValueError):
            optim.clip_and_scale({}, 0.1, 1.0, -1.0)

    def test_adadelta_first_step(self):
        state = optim.AdaDeltaState(rho=0.9, epsilon=1e-5)
        deltas = optim.adadelta_step(state, {"w": np.array([1.0])})
        want = -np.sqrt(1e-5) / np.sqrt(0.1 + 1e-5)
        assert abs(deltas["w"][0] - want) < 1e-12
        assert abs(deltas["w"][0] + 0.0099995) < 1e-6

    def test_zero_gradient_decays_state(self):
        state = optim.AdaDeltaState()
        optim.adadelta_step(state, {"w": np.array([2.0])})
        eg2 = state.eg2["w"].copy()
        deltas = optim.adadelta_step(state, {"w": np.array([0.0])})
        assert deltas["w"][0] == 0.0
        np.testing.assert_allclose(state.eg2["w"], 0.9 * eg2)

    def test_delta_opposes_gradient(self):
        rng = np.random.default_rng(14)
        state = optim.AdaDeltaState()
        for _ in range(5):
            g = rng.normal(0, 1, 16)
            deltas = optim.adadelta_step(state, {"w": g})
            nz = g != 0
            assert np.all(np.sign(deltas["w"][nz]) == -np.sign(g[nz]))


def toy_task(n_sentences, seed, n_merges=40):
    spec = SynthSpec(seed=seed, vocab_size=40, n_atoms_alphabet=30)
    gold = generate(spec, n_sentences)
    rng = np.random.default_rng(seed + 1)
    bad = [corrupt(s, 0.2, 0.2, rng) for s in gold]
    freqs = {}
    for s in gold:
        for w in s.words:
            freqs[w] = freqs.get(w, 0) + 1
    bpe = learn_bpe(freqs, n_merges)
    pairs = [make_training_pair(g, b, bpe) for g, b in zip(gold, bad)]
    vocab = build_vocab((p.tokens.marked_texts() for p in pairs), 5000)
    return gold, bad, bpe, pairs, vocab


class TestTrainLoop:
    def test_loss_strictly_decreases(self):
        gold, bad, bpe, pairs, vocab = toy_task(50, seed=21)
        cfg = TaggerConfig(n_layers=2, hidden=16, token_emb=8, feat_emb=8, batch=16, epochs=3)
        dev_in = [segment_to_subwords(bpe, b) for b in bad[:10]]
        res = train(cfg, pairs, gold[:10], dev_in, vocab, rng_seed=1)
        losses = [st.mean_loss for st in res.history]
        assert losses[0] > losses[1] > losses[2]

    def test_byte_identical_reruns(self, tmp_path):
        gold, bad, bpe, pairs, vocab = toy_task(30, seed=22)
        cfg = TaggerConfig(n_layers=2, hidden=16, token_emb=8, feat_emb=8, batch=8, epochs=2)
        dev_in = [segment_to_subwords(bpe, b) for b in bad[:5]]
        paths = []
        for k in range(2):
            res = train(cfg, pairs, gold[:5], dev_in, vocab, rng_seed=5)
            p = tmp_path / f"m{k}.stgr"
            save_model(res.model, p)
            paths.append(p)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_memorizes_one_sentence(self):
        # drive the optimizer directly so epoch-best selection (which
        # keeps the earliest F-tied model) cannot mask the overfit
        gold, bad, bpe, pairs, vocab = toy_task(6, seed=23)
        pair = pairs[0]
        cfg = TaggerConfig(n_layers=2, hidden=16, token_emb=8, feat_emb=8, batch=4, epochs=1, dropout=0.0)
        model = init_model(cfg, vocab.size, np.random.default_rng(2))
        state = optim.AdaDeltaState(rho=cfg.rho, epsilon=cfg.epsilon)
        ts, fs = encode_tokens(pair.tokens, vocab)
        batch = Batch(
            np.array([ts] * 4).T,
            np.array([fs] * 4).T,
            np.array([[int(l) for l in pair.labels]] * 4).T,
            np.ones((len(ts), 4)),
        )
        for _ in range(300):
            train_step(model, batch, state, dropout_rng=None)
        got = predict_labels(model, pair.tokens, vocab)
        assert tuple(got) == pair.labels


class TestPredict:
    def test_uniform_model_all_b(self):
        model = init_model(TaggerConfig(**TINY), 10, np.random.default_rng(15))
        model.W_out[:] = 0.0
        model.b_out[:] = 0.0
        seq = segment_to_subwords(BpeModel(()), generate(SynthSpec(seed=3, vocab_size=10), 1)[0])
        vocab = build_vocab([seq.marked_texts()], 100)
        labels = predict_labels(model, seq, vocab)
        assert all(l is LabelTag.B for l in labels)

    def test_length_preserved(self):
        model = init_model(TaggerConfig(**TINY), 50, np.random.default_rng(16))
        for s in generate(SynthSpec(seed=4, vocab_size=20), 10):
            seq = segment_to_subwords(BpeModel(()), s)
            vocab = build_vocab([seq.marked_texts()], 100)
            assert len(predict_labels(model, seq, vocab)) == len(seq.tokens)


class TestPretrainedEmbeddings:
    def make(self, tmp_path, rows):
        p = tmp_path / "vecs.txt"
        p.write_text("\n".join(rows) + "\n", encoding="utf-8")
        return p

    def test_full_coverage(self, tmp_path):
        model = init_model(TaggerConfig(**TINY), 2, np.random.default_rng(17))
        vocab = build_vocab([["aa", "bb"]], 3)
        rows = [f"{t} 1 2 3 4" for t in vocab.tokens]
        assert load_pretrained_embeddings(self.make(tmp_path, rows), vocab, model) == 3
        np.testing.assert_array_equal(model.emb_token[vocab.lookup("aa")], [1, 2, 3, 4])

    def test_empty_file(self, tmp_path):
        model = init_model(TaggerConfig(**TINY), 2, np.random.default_rng(18))
        before = model.emb_token.copy()
        assert load_pretrained_embeddings(self.make(tmp_path, []), vocab=build_vocab([["aa"]], 2), model=model) == 0
        np.testing.assert_array_equal(model.emb_token, before)

    def test_surgical_update(self, tmp_path):
        model = init_model(TaggerConfig(**TINY), 2, np.random.default_rng(19))
        vocab = build_vocab([["aa", "bb"]], 3)
        before = model.emb_token.copy()
        n = load_pretrained_embeddings(self.make(tmp_path, ["bb 9 9 9 9"]), vocab, model)
        assert n == 1
        row = vocab.lookup("bb")
        np.testing.assert_array_equal(model.emb_token[row], [9, 9, 9, 9])
        untouched = [i for i in range(3) if i != row]
        np.testing.assert_array_equal(model.emb_token[untouched], before[untouched])

    def test_dimension_mismatch(self, tmp_path):
        model = init_model(TaggerConfig(**TINY), 2, np.random.default_rng(20))
        with pytest.raises(DimensionMismatch):
            load_pretrained_embeddings(
                self.make(tmp_path, ["aa 1 2 3"]), build_vocab([["aa"]], 2), model
            )


class TestTrainStep:
    def test_updates_all_parameters(self):
        model = init_model(TaggerConfig(**TINY), 10, np.random.default_rng(24))
        before = {k: v.copy() for k, v in model.params().items()}
        state = optim.AdaDeltaState()
        batch = tiny_batch(np.random.default_rng(25), model)
        loss = train_step(model, batch, state, dropout_rng=None)
        assert np.isfinite(loss)
        changed = [k for k, v in model.params().items() if not np.array_equal(v, before[k])]
        assert "out.W" in changed and "fwd.Wx" in changed

    def test_pad_embedding_stays_zero(self):
        model = init_model(TaggerConfig(**TINY), 10, np.random.default_rng(26))
        state = optim.AdaDeltaState()
        rng = np.random.default_rng(27)
        for _ in range(3):
            train_step(model, tiny_batch(rng, model, pad_last=True), state, dropout_rng=None)
        assert np.all(model.emb_token[model.pad_token_id] == 0.0)
        assert np.all(model.emb_feat[model.pad_feat_id] == 0.0)
