"""Command-line pipeline orchestration.

Subcommands cover the whole workflow: synthetic data generation,
baseline training/segmentation, BPE learning/application, label-file
construction, refiner training, refinement of an existing segmentation,
evaluation, and the chained raw-text pipeline.

Every stochastic subcommand takes an explicit seed; reruns with
identical inputs and seeds produce byte-identical outputs.  Exit codes:
0 success, 1 data error (one-line diagnostic on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import baseline as bl
from . import bpe as bpe_mod
from . import corpus as corpus_mod
from . import evaluator, labeler, synth
from .config import ENV_VAR, dump_default_config, load_config
from .errors import CorpusMismatch, SegrefineError
from .tagger import params as tparams
from .tagger import training as ttrain


def _add_config_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--config",
        default=None,
        help=f"config file path (default: ${ENV_VAR} if set, else built-in defaults)",
    )


def _collect_freqs(sents) -> dict[str, int]:
    freqs: dict[str, int] = {}
    for s in sents:
        for w in s.words:
            freqs[w] = freqs.get(w, 0) + 1
    return freqs


# ---------------------------------------------------------------- synth-gen


def _cmd_synth_gen(args) -> int:
    cfg = load_config(args.config)
    word_probs = tuple(
        float(x) for x in (args.word_len_probs or cfg.get("synth", "word_len_probs")).split(",")
    )
    lens_spec = args.sentence_lens or cfg.get("synth", "sentence_lens")
    lo, hi = (int(x) for x in lens_spec.split(":"))
    spec = synth.SynthSpec(
        n_atoms_alphabet=args.alphabet_size or cfg.getint("synth", "alphabet_size"),
        vocab_size=args.vocab_size or cfg.getint("synth", "vocab_size"),
        word_len_probs=word_probs,
        zipf_exponent=args.zipf if args.zipf is not None else cfg.getfloat("synth", "zipf_exponent"),
        sentence_lens=tuple(range(lo, hi + 1)),
        seed=args.seed,
        delimiter=cfg.get("synth", "delimiter"),
    )
    outputs: list[tuple[str, int, str | None]] = []
    if args.out:
        outputs.append((args.out, args.n_sentences, args.corrupt_out))
    else:
        for split in ("train", "dev", "test"):
            path = getattr(args, f"out_{split}")
            if path:
                outputs.append(
                    (path, getattr(args, f"n_{split}"), getattr(args, f"corrupt_out_{split}"))
                )
        if not outputs:
            raise SegrefineError("either --out or one of --out-train/dev/test is required")
    if any(n <= 0 for _, n, _ in outputs):
        raise SegrefineError("every requested output needs a positive sentence count")
    total = args.skip + sum(n for _, n, _ in outputs)
    sents = synth.generate(spec, total)
    need_corrupt = any(c for _, _, c in outputs)
    rng = np.random.default_rng(args.corrupt_seed) if need_corrupt else None
    pos = args.skip
    for path, n, corrupt_path in outputs:
        part = sents[pos : pos + n]
        pos += n
        corpus_mod.save_corpus(part, path)
        if corrupt_path:
            bad = [synth.corrupt(s, args.p_merge, args.p_split, rng, cfg.atomizer()) for s in part]
            corpus_mod.save_corpus(bad, corrupt_path)
    return 0


# ------------------------------------------------------------- baseline


def _baseline_cfg(args, cfg) -> bl.BaselineConfig:
    return bl.BaselineConfig(
        beam=args.beam or cfg.getint("baseline", "beam"),
        in_dict_cost=getattr(args, "in_dict_cost", None) or cfg.getfloat("baseline", "in_dict_cost"),
        oov_cost=getattr(args, "oov_cost", None) or cfg.getfloat("baseline", "oov_cost"),
        atomizer=cfg.atomizer(),
    )


def _cmd_train_baseline(args) -> int:
    cfg = load_config(args.config)
    bcfg = _baseline_cfg(args, cfg)
    gold = corpus_mod.load_corpus(args.corpus)
    epochs = args.epochs or cfg.getint("baseline", "epochs")
    model = bl.train_perceptron(gold, bcfg, epochs, args.seed)
    bl.save_perceptron(model, args.model_out)
    bl.save_dictionary(bl.corpus_dictionary(gold), args.dict_out)
    return 0


def _cmd_segment_baseline(args) -> int:
    cfg = load_config(args.config)
    bcfg = _baseline_cfg(args, cfg)
    model = bl.load_perceptron(args.model)
    dictionary = bl.load_dictionary(args.dict)
    out = []
    for text in corpus_mod.load_raw(args.input):
        out.append(bl.segment_baseline(model, dictionary, bcfg, text))
    corpus_mod.save_corpus(out, args.out)
    return 0


# ------------------------------------------------------------------ BPE


def _cmd_learn_bpe(args) -> int:
    sents = corpus_mod.load_corpus(args.corpus)
    model = bpe_mod.learn_bpe(_collect_freqs(sents), args.merges)
    bpe_mod.save_bpe(model, args.out)
    return 0


def _cmd_apply_bpe(args) -> int:
    model = bpe_mod.load_bpe(args.bpe)
    sents = corpus_mod.load_corpus(args.corpus)
    seqs = [bpe_mod.segment_to_subwords(model, s) for s in sents]
    bpe_mod.save_subword_corpus(seqs, args.out_tokens, args.out_feats)
    return 0


# ----------------------------------------------------------- make-labels


def _cmd_make_labels(args) -> int:
    cfg = load_config(args.config)
    gold_sents = corpus_mod.load_corpus(args.gold)
    base_sents = corpus_mod.load_corpus(args.baseline)
    if len(gold_sents) != len(base_sents):
        raise SegrefineError(
            f"{args.gold}: {len(gold_sents)} sentences vs {args.baseline}: {len(base_sents)}"
        )
    model = bpe_mod.load_bpe(args.bpe)
    max_words = args.max_len or cfg.getint("corpus", "max_len")
    max_tokens = cfg.getint("tagger", "max_len")
    terms = cfg.terminators()
    pairs: list[labeler.LabeledSequence] = []
    skipped = 0
    for i, (gold, base) in enumerate(zip(gold_sents, base_sents), 1):
        if gold.text != base.text:
            raise SegrefineError(f"{args.baseline}:{i}: text differs from gold")
        if len(gold.words) > max_words:
            gold_pieces = corpus_mod.split_long(gold, max_words, terms)
            base_pieces = _parallel_pieces(base, gold_pieces)
        else:
            gold_pieces = [gold]
            base_pieces = [base]
        for g, b in zip(gold_pieces, base_pieces):
            ls = labeler.make_training_pair(g, b, model)
            if len(ls.labels) > max_tokens:
                skipped += 1
                continue
            pairs.append(ls)
    bpe_mod.save_subword_corpus((p.tokens for p in pairs), args.out_tokens, args.out_feats)
    labeler.save_label_corpus(pairs, args.out_labels)
    if skipped:
        print(f"skipped {skipped} over-long pieces", file=sys.stderr)
    return 0


def _parallel_pieces(base: corpus_mod.SegmentedSentence, gold_pieces):
    """Cut a parallel segmentation at the gold pieces' text boundaries."""
    out = []
    start = 0
    text = base.text
    base_bounds = set(base.boundaries)
    for g in gold_pieces:
        end = start + len(g.text)
        cuts = sorted(b for b in base_bounds if start <= b <= end)
        if not cuts or cuts[0] != start:
            cuts = [start] + cuts
        if cuts[-1] != end:
            cuts.append(end)
        words = tuple(text[a:b] for a, b in zip(cuts, cuts[1:]))
        out.append(corpus_mod.SegmentedSentence(words))
        start = end
    return out


# ---------------------------------------------------------- train-refiner


def _tagger_config(args, cfg) -> tparams.TaggerConfig:
    t = cfg.parser["tagger"]
    return tparams.TaggerConfig(
        n_layers=args.layers or int(t["n_layers"]),
        hidden=args.hidden or int(t["hidden"]),
        token_emb=args.token_emb or int(t["token_emb"]),
        feat_emb=args.feat_emb or int(t["feat_emb"]),
        dropout=args.dropout if args.dropout is not None else float(t["dropout"]),
        batch=args.batch or int(t["batch"]),
        grad_scale=float(t["grad_scale"]),
        grad_clip=(float(t["grad_clip_lo"]), float(t["grad_clip_hi"])),
        rho=float(t["rho"]),
        epsilon=float(t["epsilon"]),
        xavier_magnitude=float(t["xavier_magnitude"]),
        max_len=args.max_len or int(t["max_len"]),
        epochs=args.epochs or int(t["epochs"]),
    )


def _load_labeled(tokens_path, feats_path, labels_path) -> list[labeler.LabeledSequence]:
    seqs = bpe_mod.load_subword_corpus(tokens_path, feats_path)
    labels = labeler.load_label_corpus(labels_path)
    if len(seqs) != len(labels):
        raise SegrefineError(
            f"{tokens_path}: {len(seqs)} sequences vs {labels_path}: {len(labels)} label lines"
        )
    out = []
    for i, (s, l) in enumerate(zip(seqs, labels), 1):
        if len(s.tokens) != len(l):
            raise SegrefineError(f"{labels_path}:{i}: {len(l)} labels for {len(s.tokens)} tokens")
        out.append(labeler.LabeledSequence(s, l))
    return out


def _cmd_train_refiner(args) -> int:
    cfg = load_config(args.config)
    tcfg = _tagger_config(args, cfg)
    train_set = _load_labeled(args.train_tokens, args.train_feats, args.train_labels)
    val_inputs = bpe_mod.load_subword_corpus(args.val_tokens, args.val_feats)
    val_gold = corpus_mod.load_corpus(args.val_gold)
    vocab_size = args.vocab_size or cfg.getint("tagger", "vocab_size")
    vocab = corpus_mod.build_vocab((s.tokens.marked_texts() for s in train_set), vocab_size)
    result = ttrain.train(
        tcfg,
        train_set,
        val_gold,
        val_inputs,
        vocab,
        args.seed,
        pretrained_emb=args.pretrained_emb,
    )
    model, history = result.model, result.history
    if args.pretrained_emb:
        print(f"pretrained embeddings matched: {result.pretrained_matched}")
    for st in history:
        print(f"epoch {st.epoch}: loss {st.mean_loss:.6f} val_f {st.val_f:.4f}")
    best = max(history, key=lambda s: (s.val_f, -s.epoch))
    print(f"best epoch: {best.epoch} (val_f {best.val_f:.4f})")
    tparams.save_model(model, args.model_out)
    corpus_mod.save_vocab(vocab, args.vocab_out)
    return 0


def _cmd_refine(args) -> int:
    model = tparams.load_model(args.model)
    vocab = corpus_mod.load_vocab(args.vocab)
    bpe_model = bpe_mod.load_bpe(args.bpe)
    sents = corpus_mod.load_corpus(args.input)
    seqs = [bpe_mod.segment_to_subwords(bpe_model, s) for s in sents]
    refined = ttrain.refine_sequences(model, seqs, vocab, batch_size=model.config.batch)
    corpus_mod.save_corpus(refined, args.out)
    return 0


# -------------------------------------------------------------- evaluate


def _cmd_evaluate(args) -> int:
    gold = corpus_mod.load_corpus(args.gold)
    pred = corpus_mod.load_corpus(args.pred)
    if args.train_vocab and args.train_corpus:
        raise SegrefineError("--train-vocab and --train-corpus are mutually exclusive")
    vocab: frozenset[str] = frozenset()
    if args.train_vocab:
        vocab = bl.load_dictionary(args.train_vocab)
    elif args.train_corpus:
        vocab = evaluator.corpus_vocab(corpus_mod.load_corpus(args.train_corpus))
    try:
        metrics = evaluator.evaluate(gold, pred, vocab)
    except CorpusMismatch as e:
        raise CorpusMismatch(f"{args.pred} vs {args.gold}: {e}") from None
    text = metrics.tsv_record() if args.tsv else metrics.report()
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text + "\n")
    return 0


# -------------------------------------------------------------- pipeline


def _cmd_pipeline(args) -> int:
    cfg = load_config(args.config)
    bcfg = _baseline_cfg(args, cfg)
    pmodel = bl.load_perceptron(args.baseline_model)
    dictionary = bl.load_dictionary(args.dict)
    bpe_model = bpe_mod.load_bpe(args.bpe)
    tmodel = tparams.load_model(args.model)
    vocab = corpus_mod.load_vocab(args.vocab)
    segmented = [
        bl.segment_baseline(pmodel, dictionary, bcfg, text)
        for text in corpus_mod.load_raw(args.input)
    ]
    seqs = [bpe_mod.segment_to_subwords(bpe_model, s) for s in segmented]
    refined = ttrain.refine_sequences(tmodel, seqs, vocab, batch_size=tmodel.config.batch)
    corpus_mod.save_corpus(refined, args.out)
    return 0


# ----------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="segrefine",
        description="two-stage word segmentation toolkit (baseline + subword LSTM refiner)",
    )
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-gen", help="generate (and optionally corrupt) a synthetic corpus")
    _add_config_flag(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--vocab-size", type=int)
    p.add_argument("--alphabet-size", type=int)
    p.add_argument("--zipf", type=float)
    p.add_argument("--word-len-probs")
    p.add_argument("--sentence-lens", help="lo:hi uniform range of words per sentence")
    p.add_argument("--skip", type=int, default=0,
                   help="discard this many sentences from the stream first")
    p.add_argument("--out")
    p.add_argument("--n-sentences", type=int, default=0)
    p.add_argument("--out-train")
    p.add_argument("--n-train", type=int, default=0)
    p.add_argument("--out-dev")
    p.add_argument("--n-dev", type=int, default=0)
    p.add_argument("--out-test")
    p.add_argument("--n-test", type=int, default=0)
    p.add_argument("--p-merge", type=float, default=0.0)
    p.add_argument("--p-split", type=float, default=0.0)
    p.add_argument("--corrupt-seed", type=int, default=0)
    p.add_argument("--corrupt-out")
    p.add_argument("--corrupt-out-train")
    p.add_argument("--corrupt-out-dev")
    p.add_argument("--corrupt-out-test")
    p.set_defaults(func=_cmd_synth_gen)

    p = sub.add_parser("train-baseline", help="train the perceptron baseline")
    _add_config_flag(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--dict-out", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--beam", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_train_baseline)

    p = sub.add_parser("segment-baseline", help="segment raw text with the baseline")
    _add_config_flag(p)
    p.add_argument("--model", required=True)
    p.add_argument("--dict", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--beam", type=int)
    p.add_argument("--in-dict-cost", type=float)
    p.add_argument("--oov-cost", type=float)
    p.set_defaults(func=_cmd_segment_baseline)

    p = sub.add_parser("learn-bpe", help="learn BPE merges from a segmented corpus")
    _add_config_flag(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--merges", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_learn_bpe)

    p = sub.add_parser("apply-bpe", help="split a segmented corpus into subwords")
    _add_config_flag(p)
    p.add_argument("--bpe", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-tokens", required=True)
    p.add_argument("--out-feats", required=True)
    p.set_defaults(func=_cmd_apply_bpe)

    p = sub.add_parser("make-labels", help="build refiner training files from gold + baseline output")
    _add_config_flag(p)
    p.add_argument("--gold", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--bpe", required=True)
    p.add_argument("--out-tokens", required=True)
    p.add_argument("--out-feats", required=True)
    p.add_argument("--out-labels", required=True)
    p.add_argument("--max-len", type=int)
    p.set_defaults(func=_cmd_make_labels)

    p = sub.add_parser("train-refiner", help="train the neural tagger")
    _add_config_flag(p)
    p.add_argument("--train-tokens", required=True)
    p.add_argument("--train-feats", required=True)
    p.add_argument("--train-labels", required=True)
    p.add_argument("--val-tokens", required=True)
    p.add_argument("--val-feats", required=True)
    p.add_argument("--val-gold", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--vocab-out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--token-emb", type=int)
    p.add_argument("--feat-emb", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--max-len", type=int)
    p.add_argument("--vocab-size", type=int)
    p.add_argument("--pretrained-emb")
    p.set_defaults(func=_cmd_train_refiner)

    p = sub.add_parser("refine", help="refine an existing segmented corpus")
    _add_config_flag(p)
    p.add_argument("--input", required=True)
    p.add_argument("--bpe", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_refine)

    p = sub.add_parser("evaluate", help="score a predicted corpus against gold")
    _add_config_flag(p)
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--train-vocab")
    p.add_argument("--train-corpus")
    p.add_argument("--tsv", action="store_true", help="single machine-readable line")
    p.add_argument("--out", help="also write the report to this file")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("pipeline", help="raw text -> baseline -> refiner -> segmented corpus")
    _add_config_flag(p)
    p.add_argument("--input", required=True)
    p.add_argument("--baseline-model", required=True)
    p.add_argument("--dict", required=True)
    p.add_argument("--bpe", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--beam", type=int)
    p.set_defaults(func=_cmd_pipeline)

    return top


def run(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    if "--dump-config" in argv:
        print(dump_default_config())
        return 0
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def main() -> None:
    try:
        sys.exit(run())
    except (SegrefineError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
