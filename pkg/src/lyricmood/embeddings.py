"""CBOW word embeddings with negative sampling, trained from scratch.

The hidden vector is the mean of the context words' input vectors; the
loss contrasts the true center word against k noise words drawn from a
unigram^0.75 table. Training is sequential and bit-reproducible given the
config seed. The PAD row (index 0) stays exactly zero forever so padding
cannot leak signal into downstream convolutions.
"""

from dataclasses import dataclass

import numpy as np

from .corpus import Vocabulary, build_vocabulary
from .errors import (
    EmptyContextError,
    EmptyCorpusError,
    EmptyVocabularyError,
    ParseError,
    UnknownWordError,
    ZeroVectorError,
)


@dataclass
class CbowConfig:
    window: int = 5
    negatives: int = 5
    dim: int = 300
    epochs: int = 5
    lr_start: float = 0.025
    lr_end: float = 1e-4
    min_count: int = 5
    seed: int = 1
    # both off by default so training stays an exact function of the corpus
    dynamic_window: bool = False
    subsample: float = 0.0

    def __post_init__(self):
        if self.window < 1 or self.negatives < 1 or self.dim < 1:
            raise ValueError("window, negatives and dim must be >= 1")
        if not self.lr_start >= self.lr_end > 0:
            raise ValueError("need lr_start >= lr_end > 0")
        if self.subsample < 0:
            raise ValueError("subsample threshold must be >= 0")


class EmbeddingMatrix:
    """Input and output vector tables tied to a vocabulary."""

    def __init__(self, input_vectors, output_vectors, vocab):
        self.input_vectors = np.asarray(input_vectors, dtype=np.float64)
        self.output_vectors = np.asarray(output_vectors, dtype=np.float64)
        self.vocab = vocab
        if self.input_vectors.shape != self.output_vectors.shape:
            raise ValueError("input/output vector tables must share a shape")
        if self.input_vectors.shape[0] != len(vocab):
            raise ValueError("vector table rows must match vocabulary size")

    @property
    def dim(self):
        return self.input_vectors.shape[1]

    def vector(self, word):
        if word not in self.vocab:
            raise UnknownWordError(f"word {word!r} not in embedding vocabulary")
        return self.input_vectors[self.vocab.index(word)]

    @classmethod
    def initialize(cls, vocab, dim, seed=1):
        """word2vec-style init: inputs uniform in [-.5/d, .5/d], outputs 0."""
        rng = np.random.default_rng([seed & 0xFFFFFFFF, 0xE1])
        inputs = (rng.random((len(vocab), dim)) - 0.5) / dim
        inputs[Vocabulary.PAD] = 0.0
        outputs = np.zeros((len(vocab), dim))
        return cls(inputs, outputs, vocab)


class UnigramTable:
    """Cumulative distribution with p(w) proportional to count(w)^0.75."""

    def __init__(self, indices, probs):
        self.indices = np.asarray(indices, dtype=np.int64)
        self.probs = np.asarray(probs, dtype=np.float64)
        if abs(self.probs.sum() - 1.0) > 1e-12:
            raise ValueError("unigram probabilities must sum to 1")
        self.cumulative = np.cumsum(self.probs)
        self.cumulative[-1] = 1.0

    def __len__(self):
        return len(self.indices)

    def sample(self, rng, n=1):
        """Draw n word indices from the table."""
        picks = np.searchsorted(self.cumulative, rng.random(n), side="right")
        return self.indices[picks]


def build_unigram_table(vocab):
    """Negative-sampling distribution over non-reserved vocabulary words."""
    indices = np.arange(2, len(vocab), dtype=np.int64)
    if indices.size == 0:
        raise EmptyVocabularyError("unigram table needs at least one real word")
    counts = np.array(
        [vocab.counts.get(vocab.token(i), 1) for i in indices], dtype=np.float64
    )
    weights = counts**0.75
    return UnigramTable(indices, weights / weights.sum())


def negative_sample(table, target, k, rng):
    """Draw k negatives, redrawing on collision with the target.

    Each slot redraws at most 100 times and then accepts the collision;
    with any realistic vocabulary this never happens, but it bounds the
    loop for degenerate single-word tables.
    """
    out = np.empty(k, dtype=np.int64)
    for slot in range(k):
        pick = table.sample(rng, 1)[0]
        attempts = 0
        while pick == target and attempts < 100:
            pick = table.sample(rng, 1)[0]
            attempts += 1
        out[slot] = pick
    return out


def _sigmoid(x):
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def cbow_loss_and_grads(emb, center, context, negatives):
    """Negative-sampling loss and analytic gradients for one position.

    Returns (loss, grad_context_row, grad_output_rows) where
    grad_context_row is the shared gradient applied to every context
    word's input vector and grad_output_rows aligns with
    [center, *negatives].
    """
    context = np.asarray(context, dtype=np.int64)
    if context.size == 0:
        raise EmptyContextError("CBOW needs at least one context token")
    h = emb.input_vectors[context].mean(axis=0)
    rows = np.concatenate(([center], negatives)).astype(np.int64)
    out = emb.output_vectors[rows]
    scores = out @ h
    sig = _sigmoid(scores)
    # loss = -log sigma(s_pos) - sum log sigma(-s_neg), in stable form
    loss = np.logaddexp(0.0, -scores[0]) + np.logaddexp(0.0, scores[1:]).sum()
    resid = sig.copy()
    resid[0] -= 1.0  # d loss / d score
    grad_out = resid[:, None] * h[None, :]
    grad_h = resid @ out
    return loss, grad_h / context.size, grad_out


def cbow_step(emb, center, context, table, k, lr, rng):
    """Sample negatives, apply one SGD step in place, return the loss."""
    negatives = negative_sample(table, center, k, rng)
    loss, grad_ctx, grad_out = cbow_loss_and_grads(emb, center, context, negatives)
    rows = np.concatenate(([center], negatives)).astype(np.int64)
    # context/negative rows may repeat; accumulate with unbuffered adds
    np.subtract.at(emb.output_vectors, rows, lr * grad_out)
    np.subtract.at(
        emb.input_vectors,
        np.asarray(context, dtype=np.int64),
        lr * grad_ctx[None, :],
    )
    return loss


def _positions(doc, window, rng=None):
    """Yield (center, context-index-array) for trainable positions.

    With an rng the effective radius shrinks to a random 1..window per
    position (the word2vec trick that weights nearby words more).
    """
    n = len(doc)
    for pos in range(n):
        center = doc[pos]
        if center == Vocabulary.PAD:
            continue
        radius = window if rng is None else int(rng.integers(1, window + 1))
        lo, hi = max(0, pos - radius), min(n, pos + radius + 1)
        ctx = [doc[j] for j in range(lo, hi) if j != pos and doc[j] != Vocabulary.PAD]
        if ctx:
            yield center, np.asarray(ctx, dtype=np.int64)


def subsample_corpus(corpus, vocab, threshold, seed=1):
    """Randomly discard occurrences of very frequent words.

    Each occurrence of word w with relative corpus frequency f survives
    with probability min(1, sqrt(threshold / f)); a one-shot,
    deterministic thinning of the training stream.
    """
    if threshold <= 0:
        return [np.asarray(doc, dtype=np.int64) for doc in corpus]
    total = sum(vocab.counts.values())
    keep_p = np.ones(len(vocab))
    for token, count in vocab.counts.items():
        freq = count / total
        keep_p[vocab.token_to_index[token]] = min(1.0, np.sqrt(threshold / freq))
    rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x5B])
    thinned = []
    for doc in corpus:
        doc = np.asarray(doc, dtype=np.int64)
        kept = doc[rng.random(len(doc)) < keep_p[doc]]
        if kept.size:
            thinned.append(kept)
    return thinned


def train_cbow(corpus, vocab, cfg):
    """Train CBOW over token-index documents; returns (matrix, epoch losses).

    The learning rate decays linearly from lr_start to lr_end over the
    full run. Documents are visited in corpus order each epoch, so the
    result is a pure function of (corpus, vocab, cfg).
    """
    corpus = [np.asarray(doc, dtype=np.int64) for doc in corpus]
    if not corpus:
        raise EmptyCorpusError("CBOW training corpus is empty")
    if cfg.subsample > 0:
        corpus = subsample_corpus(corpus, vocab, cfg.subsample, seed=cfg.seed)
        if not corpus:
            raise EmptyCorpusError("subsampling removed the whole corpus")
    emb = EmbeddingMatrix.initialize(vocab, cfg.dim, seed=cfg.seed)
    if cfg.epochs == 0:
        return emb, []
    table = build_unigram_table(vocab)
    rng = np.random.default_rng([cfg.seed & 0xFFFFFFFF, 0x0E])
    window_rng = (
        np.random.default_rng([cfg.seed & 0xFFFFFFFF, 0x0F])
        if cfg.dynamic_window
        else None
    )

    # the lr schedule is pinned to the full-window position count; with
    # dynamic windows the actual step count can fall slightly short
    steps_per_epoch = sum(1 for doc in corpus for _ in _positions(doc, cfg.window))
    total_steps = max(1, steps_per_epoch * cfg.epochs)
    lr_span = cfg.lr_start - cfg.lr_end

    epoch_losses = []
    step = 0
    for _ in range(cfg.epochs):
        loss_sum, n = 0.0, 0
        for doc in corpus:
            for center, ctx in _positions(doc, cfg.window, rng=window_rng):
                frac = min(1.0, step / max(1, total_steps - 1))
                lr = cfg.lr_start - lr_span * frac
                loss_sum += cbow_step(emb, center, ctx, table, cfg.negatives, lr, rng)
                step += 1
                n += 1
        epoch_losses.append(loss_sum / max(1, n))
    return emb, epoch_losses


def prepare_cbow_corpus(docs, min_count):
    """Build a vocabulary and the index documents used for CBOW training.

    Tokens below min_count are dropped from the training stream entirely
    (word2vec convention) rather than mapped to UNK, so rare words do not
    pollute the contexts of the words that are kept.
    """
    vocab = build_vocabulary(docs, min_count=min_count)
    encoded = []
    for doc in docs:
        tokens = getattr(doc, "tokens", doc)
        idx = [vocab.token_to_index[t] for t in tokens if t in vocab]
        if idx:
            encoded.append(np.asarray(idx, dtype=np.int64))
    if not encoded:
        raise EmptyCorpusError("no document survives the min_count filter")
    return vocab, encoded


# --- similarity queries -------------------------------------------------------


def cosine_similarity(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("vectors must share a shape")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine similarity undefined for zero vectors")
    return float(np.dot(a, b) / (na * nb))


def nearest_neighbors(word, emb, top_k=10):
    """Top-k non-reserved words by cosine over input vectors.

    The query itself is excluded; ties break toward the smaller
    vocabulary index.
    """
    if word not in emb.vocab:
        raise UnknownWordError(f"word {word!r} not in embedding vocabulary")
    query_idx = emb.vocab.index(word)
    query = emb.input_vectors[query_idx]
    scored = []
    for idx in range(2, len(emb.vocab)):
        if idx == query_idx:
            continue
        row = emb.input_vectors[idx]
        if not row.any():
            continue  # zero rows (possible in hand-written files) have no angle
        scored.append((cosine_similarity(query, row), idx))
    scored.sort(key=lambda si: (-si[0], si[1]))
    return [(emb.vocab.token(idx), sim) for sim, idx in scored[:top_k]]


# --- persistence --------------------------------------------------------------


def save_embeddings(emb, path):
    """word2vec text format: 'V d' header then one word + vector per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(emb.vocab)} {emb.dim}\n")
        for idx in range(len(emb.vocab)):
            vec = " ".join(f"{v:.6f}" for v in emb.input_vectors[idx])
            fh.write(f"{emb.vocab.token(idx)} {vec}\n")


def load_embeddings(path):
    """Read the word2vec text format back into an EmbeddingMatrix.

    Only input vectors are stored in this format; output vectors load as
    zeros. The first two rows must be the reserved PAD and UNK entries that
    save_embeddings wrote.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.strip():
            raise ParseError("empty embeddings file", line=1)
        parts = header.split()
        if len(parts) != 2:
            raise ParseError(f"bad header {header.strip()!r}", line=1)
        try:
            n_rows, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"bad header {header.strip()!r}", line=1) from None
        if n_rows < 2 or dim < 1:
            raise ParseError("header must declare >= 2 rows and dim >= 1", line=1)

        words, vectors = [], np.zeros((n_rows, dim))
        row = 0
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            if row >= n_rows:
                raise ParseError("more vector lines than the header declares", line=line_no)
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ParseError(
                    f"expected word + {dim} values, got {len(parts) - 1}", line=line_no
                )
            try:
                vectors[row] = [float(v) for v in parts[1:]]
            except ValueError:
                raise ParseError("non-numeric vector component", line=line_no) from None
            words.append(parts[0])
            row += 1
        if row != n_rows:
            raise ParseError(f"header declares {n_rows} rows, file has {row}")

    from .corpus import PAD_TOKEN, UNK_TOKEN

    if words[0] != PAD_TOKEN or words[1] != UNK_TOKEN:
        raise ParseError("first two rows must be the reserved PAD and UNK entries")
    vocab = Vocabulary(words[2:], {w: 1 for w in words[2:]})
    return EmbeddingMatrix(vectors, np.zeros_like(vectors), vocab)
