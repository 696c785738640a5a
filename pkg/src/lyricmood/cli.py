"""Command-line surface: preprocess | synth | train-embed | train |
evaluate | tag | gradcheck.

Every option can also come from a key=value config file (--config);
an explicit command-line flag wins. All randomness flows from the
documented seed keys, so any seeded command is byte-reproducible.

Exit codes: 0 success, 1 verification failure, 2 usage/config error,
3 numerical failure.
"""

import argparse
import os
import sys

import numpy as np

from . import corpus, embeddings, evaluation, features, svm
from . import nn
from .errors import LyricMoodError, NonFiniteLossError

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

NEURAL_MODELS = ("cnn", "rnn", "lstm")
SVM_MODELS = ("svm-tfidf", "svm-liwc")


class UsageError(Exception):
    pass


# --- config handling ----------------------------------------------------------


def _parse_bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_widths(text):
    widths = tuple(int(p) for p in str(text).replace(",", " ").split())
    if not widths:
        raise ValueError("widths list is empty")
    return widths


def read_config_file(path):
    """key=value pairs, UTF-8, with # comments."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{line_no}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def resolve_options(args, spec):
    """Merge defaults, the config file, and explicit flags (flag wins).

    `spec` maps option name -> (default, cast). Unknown config keys are
    rejected so typos cannot silently change a run.
    """
    merged = {key: default for key, (default, _) in spec.items()}
    config_path = getattr(args, "config", None)
    if config_path:
        if not os.path.exists(config_path):
            raise UsageError(f"config file not found: {config_path}")
        for key, raw in read_config_file(config_path).items():
            if key not in spec:
                raise UsageError(f"unknown config key {key!r}")
            _, cast = spec[key]
            try:
                merged[key] = cast(raw)
            except (ValueError, TypeError) as exc:
                raise UsageError(f"bad value for config key {key!r}: {exc}") from None
    for key in spec:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return argparse.Namespace(**merged)


def _require_file(path, what):
    if path is None:
        raise UsageError(f"missing required {what}")
    if not os.path.exists(path):
        raise UsageError(f"{what} not found: {path}")
    return path


# --- preprocess ---------------------------------------------------------------

PREPROCESS_SPEC = {
    "mode": ("lexicon", str),
    "test_fraction": (0.1, float),
    "seed": (0, int),
}


def _load_input_documents(path):
    """Either a JSONL file or a directory of per-class subdirectories."""
    if os.path.isdir(path):
        docs = []
        for entry in sorted(os.listdir(path)):
            sub = os.path.join(path, entry)
            if not os.path.isdir(sub):
                continue
            label = corpus.MoodLabel.from_name(entry)
            for fname in sorted(os.listdir(sub)):
                fpath = os.path.join(sub, fname)
                if not os.path.isfile(fpath):
                    continue
                with open(fpath, encoding="utf-8") as fh:
                    text = fh.read()
                doc_id = os.path.splitext(fname)[0]
                docs.append(
                    corpus.LyricDocument(
                        id=f"{entry}/{doc_id}", raw_text=text, label=label
                    )
                )
        return docs
    return corpus.load_documents_jsonl(path)


def cmd_preprocess(args):
    opts = resolve_options(args, PREPROCESS_SPEC)
    in_path = _require_file(args.input, "input corpus")
    if opts.mode not in ("lexicon", "whitespace"):
        raise UsageError(f"unknown mode {opts.mode!r}")
    seg_lex = None
    if opts.mode == "lexicon":
        seg_lex = corpus.SegmenterLexicon.load(
            _require_file(args.seg_lexicon, "segmenter lexicon")
        )

    docs = _load_input_documents(in_path)

    # de-duplication criterion: exact raw-text equality, first doc kept
    seen, unique = set(), []
    for doc in docs:
        if doc.raw_text in seen:
            continue
        seen.add(doc.raw_text)
        unique.append(doc)
    n_dupes = len(docs) - len(unique)

    processed, n_empty = [], 0
    for doc in unique:
        if doc.label is None:
            raise corpus.UnknownLabelError(
                f"document {doc.id!r} has no label", doc_id=doc.id
            )
        if opts.mode == "lexicon":
            cleaned = corpus.clean_lyric_text(doc.raw_text)
            tokens = corpus.segment(cleaned, seg_lex, mode="lexicon")
        else:
            # pre-segmented input: strip LRC tags, keep tokens as given
            tokens = corpus.segment(corpus.strip_lrc_tags(doc.raw_text), mode="whitespace")
        if not tokens:
            n_empty += 1
            continue
        processed.append(
            corpus.LyricDocument(
                id=doc.id,
                title=doc.title,
                artist=doc.artist,
                raw_text=doc.raw_text,
                tokens=tuple(tokens),
                label=doc.label,
                num_lines=corpus.count_lyric_lines(doc.raw_text),
            )
        )

    ds = corpus.split_dataset(processed, test_fraction=opts.test_fraction, seed=opts.seed)
    corpus.save_dataset_jsonl(ds, args.out)
    if n_dupes:
        print(f"dropped {n_dupes} duplicate documents (identical raw text)")
    if n_empty:
        print(f"dropped {n_empty} documents with no tokens after cleaning")
    print(corpus.format_dataset_stats(corpus.dataset_stats(ds)))
    print(f"wrote {len(ds)} documents to {args.out}")
    return EXIT_OK


# --- synth ---------------------------------------------------------------------

SYNTH_SPEC = {
    "docs_per_class": (500, int),
    "vocab_size": (500, int),
    "signal_bigrams": (3, int),
    "doc_len": (80, int),
    "noise_prob": (0.1, float),
    "seed": (7, int),
}


def cmd_synth(args):
    opts = resolve_options(args, SYNTH_SPEC)
    cfg = corpus.SynthConfig(
        docs_per_class=opts.docs_per_class,
        vocab_size=opts.vocab_size,
        signal_bigrams_per_class=opts.signal_bigrams,
        doc_len=opts.doc_len,
        noise_prob=opts.noise_prob,
        seed=opts.seed,
    )
    docs = corpus.generate_synthetic_corpus(cfg)
    corpus.save_documents_jsonl(docs, args.out)
    print(f"wrote {len(docs)} synthetic documents to {args.out}")
    return EXIT_OK


# --- train-embed -----------------------------------------------------------------

TRAIN_EMBED_SPEC = {
    "split": ("train", str),
    "dim": (300, int),
    "window": (5, int),
    "negatives": (5, int),
    "epochs": (5, int),
    "lr_start": (0.025, float),
    "lr_end": (1e-4, float),
    "min_count": (5, int),
    "seed": (1, int),
}


def cmd_train_embed(args):
    opts = resolve_options(args, TRAIN_EMBED_SPEC)
    ds = corpus.load_dataset_jsonl(_require_file(args.dataset, "dataset"))
    docs = ds.documents if opts.split == "all" else ds.subset(opts.split)
    if not docs:
        raise UsageError(f"dataset has no {opts.split!r} documents")
    cfg = embeddings.CbowConfig(
        window=opts.window,
        negatives=opts.negatives,
        dim=opts.dim,
        epochs=opts.epochs,
        lr_start=opts.lr_start,
        lr_end=opts.lr_end,
        min_count=opts.min_count,
        seed=opts.seed,
    )
    vocab, encoded = embeddings.prepare_cbow_corpus(docs, cfg.min_count)
    emb, losses = embeddings.train_cbow(encoded, vocab, cfg)
    embeddings.save_embeddings(emb, args.out)
    for epoch, loss in enumerate(losses, start=1):
        print(f"epoch {epoch} mean_loss {loss:.6f}")
    print(f"wrote {len(vocab)} x {emb.dim} embeddings to {args.out}")
    return EXIT_OK


# --- train ----------------------------------------------------------------------

TRAIN_SPEC = {
    "epochs": (10, int),
    "batch_size": (100, int),
    "lr": (1e-3, float),
    "l2": (1e-4, float),
    "seed": (0, int),
    "max_len": (100, int),
    "filters": (64, int),
    "widths": ((2, 3, 4, 5), _parse_widths),
    "dropout": (0.5, float),
    "hidden": (128, int),
    "clip": (5.0, float),
    "shuffle": (True, _parse_bool),
    "C": (1.0, float),
    "gamma": (None, float),
    "tol": (1e-3, float),
    "max_passes": (10, int),
    "min_count": (1, int),
}


def _encode_split(docs, vocab, max_len):
    X = np.stack([corpus.encode_document(d, vocab, max_len) for d in docs])
    y = np.array([int(d.label) for d in docs], dtype=np.int64)
    return X, y


def _build_neural(kind, emb_dim, opts):
    if kind == "cnn":
        return nn.CnnClassifier(
            emb_dim=emb_dim,
            max_len=opts.max_len,
            widths=opts.widths,
            filters=opts.filters,
            dropout=opts.dropout,
            seed=opts.seed,
        )
    cls = nn.RnnClassifier if kind == "rnn" else nn.LstmClassifier
    return cls(emb_dim=emb_dim, hidden=opts.hidden, max_len=opts.max_len, seed=opts.seed)


def _train_neural(kind, opts, args):
    emb = embeddings.load_embeddings(_require_file(args.embeddings, "embeddings file"))
    ds = corpus.load_dataset_jsonl(_require_file(args.dataset, "dataset"))
    train_docs = ds.subset(corpus.TRAIN)
    if not train_docs:
        raise UsageError("dataset has no train documents")
    X, y = _encode_split(train_docs, emb.vocab, opts.max_len)
    model = _build_neural(kind, emb.dim, opts)
    cfg = nn.TrainConfig(
        epochs=opts.epochs,
        batch_size=opts.batch_size,
        lr=opts.lr,
        l2=opts.l2,
        seed=opts.seed,
        shuffle=opts.shuffle,
        clip=opts.clip if model.is_recurrent else None,
    )
    history = nn.fit(model, X, y, emb, cfg)
    nn.save_model(model, args.out)
    log_path = args.log or args.out + ".log.csv"
    with open(log_path, "w", encoding="utf-8") as fh:
        fh.write("epoch,loss,accuracy\n")
        for epoch, (loss, acc) in enumerate(history, start=1):
            fh.write(f"{epoch},{loss!r},{acc!r}\n")
    if history:
        print(f"final train loss {history[-1][0]:.6f} accuracy {history[-1][1]:.4f}")
    print(f"wrote model to {args.out}, log to {log_path}")
    return EXIT_OK


def _train_svm(kind, opts, args):
    ds = corpus.load_dataset_jsonl(_require_file(args.dataset, "dataset"))
    train_docs = ds.subset(corpus.TRAIN)
    if not train_docs:
        raise UsageError("dataset has no train documents")
    y = np.array([int(d.label) for d in train_docs], dtype=np.int64)

    if kind == "svm-tfidf":
        vocab = corpus.build_vocabulary(train_docs, min_count=opts.min_count)
        tfidf = features.fit_tfidf(train_docs, vocab)
        rows = [features.transform_tfidf(d, tfidf).values for d in train_docs]
        X = svm.l2_normalize_rows(np.vstack(rows))
    else:
        lexicon = features.load_lexicon(_require_file(args.lexicon, "category lexicon"))
        raw = np.vstack(
            [
                features.liwc_features(
                    d.tokens, lexicon, num_lines=d.num_lines
                ).values
                for d in train_docs
            ]
        )
        standardizer = svm.Standardizer.fit(raw)
        X = standardizer.transform(raw)

    msvm = svm.train_multiclass(
        X, y, C=opts.C, gamma=opts.gamma, tol=opts.tol,
        max_passes=opts.max_passes, seed=opts.seed,
    )
    if kind == "svm-tfidf":
        bundle = svm.SvmBundle("tfidf", msvm, tfidf=tfidf)
    else:
        bundle = svm.SvmBundle("liwc", msvm, lexicon=lexicon, standardizer=standardizer)
    svm.save_svm_bundle(bundle, args.out)

    pred = svm.predict_multiclass(msvm, X)
    train_acc = float(np.mean([int(p) == t for p, t in zip(pred, y)]))
    log_path = args.log or args.out + ".log.csv"
    with open(log_path, "w", encoding="utf-8") as fh:
        fh.write("epoch,loss,accuracy\n")
        fh.write(f"1,0.0,{train_acc!r}\n")
    print(f"final train accuracy {train_acc:.4f}")
    print(f"wrote model to {args.out}, log to {log_path}")
    return EXIT_OK


def cmd_train(args):
    opts = resolve_options(args, TRAIN_SPEC)
    if args.model in NEURAL_MODELS:
        return _train_neural(args.model, opts, args)
    if args.model in SVM_MODELS:
        return _train_svm(args.model, opts, args)
    raise UsageError(f"unknown model kind {args.model!r}")


# --- evaluate --------------------------------------------------------------------


def _detect_model_kind(path):
    from .nn.serialize import FORMAT_TAG

    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    if first == FORMAT_TAG:
        return "neural"
    if first == svm.BUNDLE_TAG:
        return "svm"
    raise UsageError(f"unrecognized model file {path!r}")


def _predictions_for(args, docs):
    """Labels and probability rows for documents, from any model file."""
    kind = _detect_model_kind(_require_file(args.model, "model file"))
    if kind == "neural":
        model = nn.load_model(args.model)
        emb = embeddings.load_embeddings(_require_file(args.embeddings, "embeddings file"))
        if emb.dim != model.emb_dim:
            raise UsageError(
                f"embedding dim {emb.dim} does not match model dim {model.emb_dim}"
            )
        X = np.stack(
            [corpus.encode_document(d, emb.vocab, model.max_len) for d in docs]
        )
        return nn.predict(model, X, emb)
    bundle = svm.load_svm_bundle(args.model)
    values = bundle.decision_values(docs)
    # uncalibrated display scores: softmax over the 4 decision values
    shifted = values - values.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    labels = [corpus.MoodLabel(int(c)) for c in values.argmax(axis=1)]
    return labels, probs


def cmd_evaluate(args):
    ds = corpus.load_dataset_jsonl(_require_file(args.dataset, "dataset"))
    docs = ds.subset(args.split)
    if not docs:
        raise UsageError(f"dataset has no {args.split!r} documents")
    pred, _ = _predictions_for(args, docs)
    true = [d.label for d in docs]
    cm = evaluation.confusion_matrix(true, pred)
    report = evaluation.class_report(cm)
    print(evaluation.render_class_report(report))
    print()
    names = [l.name.lower() for l in corpus.MoodLabel]
    print("confusion matrix (rows = true, cols = predicted):")
    print(f"{'':<12}" + "".join(f"{n:>11}" for n in names))
    for label in corpus.MoodLabel:
        row = "".join(f"{int(v):>11d}" for v in cm[int(label)])
        print(f"{names[int(label)]:<12}" + row)
    print()
    print(f"Accuracy (%) {100.0 * report.accuracy:.2f}")
    if args.report_csv:
        evaluation.class_report_csv(report, args.report_csv)
    if args.cm_csv:
        evaluation.confusion_matrix_csv(cm, args.cm_csv)
    return EXIT_OK


# --- tag -------------------------------------------------------------------------


def cmd_tag(args):
    path = _require_file(args.input, "lyric file")
    with open(path, encoding="utf-8") as fh:
        raw = fh.read()
    if args.mode == "lexicon":
        seg_lex = corpus.SegmenterLexicon.load(
            _require_file(args.seg_lexicon, "segmenter lexicon")
        )
        tokens = corpus.segment(corpus.clean_lyric_text(raw), seg_lex, mode="lexicon")
    else:
        tokens = corpus.segment(corpus.strip_lrc_tags(raw), mode="whitespace")
    if not tokens:
        raise UsageError("no tokens left after cleaning; nothing to tag")
    doc = corpus.LyricDocument(
        id=os.path.basename(path),
        raw_text=raw,
        tokens=tuple(tokens),
        num_lines=corpus.count_lyric_lines(raw),
    )
    labels, probs = _predictions_for(args, [doc])
    print(f"label {labels[0].name.lower()}")
    for label in corpus.MoodLabel:
        print(f"p({label.name.lower()}) {probs[0][int(label)]:.12f}")
    return EXIT_OK


# --- gradcheck --------------------------------------------------------------------


def cmd_gradcheck(args):
    from .nn.gradcheck import check_cbow_groups

    results = nn.run_checks(args.component)
    failed = []
    for name, err, tol, ok in results:
        status = "PASS" if ok else "FAIL"
        print(f"{name:<14} max_rel_error {err:.3e}  tol {tol:.0e}  {status}")
        if name == "cbow":
            for group, group_err in check_cbow_groups().items():
                print(f"  cbow.{group:<22} {group_err:.3e}")
        if not ok:
            failed.append(name)
    if failed:
        print(f"gradient check FAILED for: {', '.join(failed)}")
        return EXIT_VERIFY
    print("all gradient checks passed")
    return EXIT_OK


# --- parser ------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lyricmood",
        description="Mood tagging for Chinese song lyrics (4 classes).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="clean, segment, label-check, split")
    p.add_argument("--input", required=True, help="JSONL corpus or per-class directory")
    p.add_argument("--out", required=True, help="processed dataset JSONL")
    p.add_argument("--config")
    p.add_argument("--mode", choices=["lexicon", "whitespace"])
    p.add_argument("--seg-lexicon", dest="seg_lexicon", help="one word per line")
    p.add_argument("--test-fraction", dest="test_fraction", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("synth", help="generate the planted-bigram corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--docs-per-class", dest="docs_per_class", type=int)
    p.add_argument("--vocab-size", dest="vocab_size", type=int)
    p.add_argument("--signal-bigrams", dest="signal_bigrams", type=int)
    p.add_argument("--doc-len", dest="doc_len", type=int)
    p.add_argument("--noise-prob", dest="noise_prob", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-embed", help="train CBOW embeddings")
    p.add_argument("--dataset", required=True, help="processed dataset JSONL")
    p.add_argument("--out", required=True, help="word2vec-format text file")
    p.add_argument("--config")
    p.add_argument("--split", choices=["train", "test", "all"])
    p.add_argument("--dim", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--negatives", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr-start", dest="lr_start", type=float)
    p.add_argument("--lr-end", dest="lr_end", type=float)
    p.add_argument("--min-count", dest="min_count", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train_embed)

    p = sub.add_parser("train", help="train a classifier")
    p.add_argument("--model", required=True,
                   choices=list(NEURAL_MODELS) + list(SVM_MODELS))
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--log", help="training log CSV (default: <out>.log.csv)")
    p.add_argument("--config")
    p.add_argument("--embeddings", help="required for cnn/rnn/lstm")
    p.add_argument("--lexicon", help="required for svm-liwc")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--l2", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-len", dest="max_len", type=int)
    p.add_argument("--filters", type=int)
    p.add_argument("--widths", type=_parse_widths)
    p.add_argument("--dropout", type=float)
    p.add_argument("--hidden", type=int)
    p.add_argument("--clip", type=float)
    p.add_argument("--C", dest="C", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-passes", dest="max_passes", type=int)
    p.add_argument("--min-count", dest="min_count", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="report metrics on a dataset split")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--embeddings", help="required for neural models")
    p.add_argument("--report-csv", dest="report_csv")
    p.add_argument("--cm-csv", dest="cm_csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("tag", help="predict the mood of one lyric file")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="raw lyric text file")
    p.add_argument("--embeddings", help="required for neural models")
    p.add_argument("--mode", choices=["lexicon", "whitespace"], default="lexicon")
    p.add_argument("--seg-lexicon", dest="seg_lexicon")
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--component", default="all",
                   choices=["all", "layers", "cnn", "rnn", "lstm", "cbow"])
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except NonFiniteLossError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, LyricMoodError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
