"""Mini-batch training and prediction over frozen embedding lookups."""

from dataclasses import dataclass

import numpy as np

from ..corpus import MoodLabel, Vocabulary
from ..errors import EmptyDatasetError, NonFiniteLossError
from .layers import softmax_cross_entropy
from .optim import Adam, clip_global_norm


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 100
    lr: float = 1e-3
    l2: float = 1e-4
    seed: int = 0
    shuffle: bool = True
    clip: float = None  # global-norm clip; used for the recurrent models

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


def sequence_lengths(X_idx):
    """Count of non-PAD tokens per row, floored at 1."""
    return np.maximum((X_idx != Vocabulary.PAD).sum(axis=1), 1)


def _l2_penalty(model, l2):
    if not l2:
        return 0.0
    params = model.parameters()
    return 0.5 * l2 * sum(float((params[n] ** 2).sum()) for n in model.l2_param_names())


def fit(model, X_idx, y, emb, cfg):
    """Train in place; returns per-epoch (loss, accuracy) history.

    Embeddings are frozen: batches are built by row lookup into the
    embedding table and no gradient ever reaches it. The reported loss
    includes the L2 penalty that the optimizer's weight decay implements.
    Bit-reproducible given (model init, data, cfg).
    """
    X_idx = np.asarray(X_idx, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    n = len(X_idx)
    if n == 0:
        raise EmptyDatasetError("training split is empty")
    if X_idx.max(initial=0) >= len(emb.vocab):
        raise ValueError("dataset indices exceed the embedding vocabulary")

    params = model.parameters()
    opt = Adam(params, lr=cfg.lr, weight_decay=cfg.l2,
               decay_params=model.l2_param_names())
    shuffle_rng = np.random.default_rng([cfg.seed & 0xFFFFFFFF, 0xA0])
    dropout_rng = np.random.default_rng([cfg.seed & 0xFFFFFFFF, 0xA1])

    lengths_all = sequence_lengths(X_idx)
    history = []
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(n) if cfg.shuffle else np.arange(n)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, cfg.batch_size):
            rows = order[start : start + cfg.batch_size]
            xb = emb.input_vectors[X_idx[rows]]
            logits, cache = model.forward(
                xb, lengths=lengths_all[rows], mode="train", rng=dropout_rng
            )
            loss, dlogits, probs = softmax_cross_entropy(logits, y[rows])
            loss += _l2_penalty(model, cfg.l2)
            if not np.isfinite(loss):
                raise NonFiniteLossError(f"non-finite loss at epoch {epoch}")
            grads, _ = model.backward(cache, dlogits)
            if cfg.clip is not None:
                clip_global_norm(grads, cfg.clip)
            opt.step(grads)
            loss_sum += loss * len(rows)
            correct += int((probs.argmax(axis=1) == y[rows]).sum())
        history.append((loss_sum / n, correct / n))
    return history


def predict(model, X_idx, emb, batch_size=200):
    """Inference-mode labels and class probabilities."""
    X_idx = np.asarray(X_idx, dtype=np.int64)
    lengths_all = sequence_lengths(X_idx)
    labels = []
    all_probs = []
    for start in range(0, len(X_idx), batch_size):
        rows = slice(start, start + batch_size)
        xb = emb.input_vectors[X_idx[rows]]
        logits, _ = model.forward(xb, lengths=lengths_all[rows], mode="infer")
        shifted = logits - logits.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        probs = exp / exp.sum(axis=1, keepdims=True)
        all_probs.append(probs)
        labels.extend(MoodLabel(int(c)) for c in logits.argmax(axis=1))
    probs = np.concatenate(all_probs) if all_probs else np.zeros((0, 4))
    return labels, probs
