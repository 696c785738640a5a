"""Finite-difference verification of every analytic gradient in the stack.

Central differences with epsilon 1e-5 against the hand-derived backward
passes, reported as |analytic - numeric| / max(1e-12, |analytic| + |numeric|).
Isolated layers must agree to 1e-6; the full CNN/RNN/LSTM/CBOW graphs
to 1e-4.
"""

import numpy as np

from ..corpus import Vocabulary
from ..embeddings import EmbeddingMatrix, cbow_loss_and_grads
from ..errors import NonFiniteLossError
from . import layers as L
from .models import CnnClassifier, LstmClassifier, RnnClassifier

LAYER_TOL = 1e-6
MODEL_TOL = 1e-4
SOFTMAX_TOL = 1e-8
EPS = 1e-5


def rel_error(analytic, numeric):
    return abs(analytic - numeric) / max(1e-12, abs(analytic) + abs(numeric))


def fd_max_rel_error(loss_fn, tensors, analytic, eps=EPS, max_per_tensor=200, rng=None):
    """Worst relative error between analytic and central-difference grads.

    `tensors` maps names to the live arrays the loss closure reads;
    entries are perturbed in place and restored. Tensors larger than
    `max_per_tensor` are subsampled (seeded) instead of swept fully.
    """
    worst = 0.0
    for name, tensor in tensors.items():
        flat = tensor.reshape(-1)
        gflat = np.asarray(analytic[name], dtype=np.float64).reshape(-1)
        if rng is not None and max_per_tensor and flat.size > max_per_tensor:
            picks = rng.choice(flat.size, size=max_per_tensor, replace=False)
        else:
            picks = range(flat.size)
        for i in picks:
            orig = flat[i]
            flat[i] = orig + eps
            lp = loss_fn()
            flat[i] = orig - eps
            lm = loss_fn()
            flat[i] = orig
            if not (np.isfinite(lp) and np.isfinite(lm)):
                raise NonFiniteLossError(f"non-finite loss while probing {name}")
            worst = max(worst, rel_error(gflat[i], (lp - lm) / (2.0 * eps)))
    return worst


def _weighted_sum_check(forward, backward, x, params, seed):
    """Check a layer through loss = sum(forward(x) * R) for random fixed R."""
    rng = np.random.default_rng(seed)
    out, cache = forward()
    R = rng.standard_normal(out.shape)
    dx, grads = backward(R, cache)
    analytic = dict(grads)
    analytic["input"] = dx
    tensors = dict(params)
    tensors["input"] = x

    def loss_fn():
        out, _ = forward()
        return float((out * R).sum())

    return fd_max_rel_error(loss_fn, tensors, analytic)


def check_dense():
    rng = np.random.default_rng(11)
    layer = L.Dense(3, 5, seed=4)
    x = rng.standard_normal((4, 5))
    return _weighted_sum_check(
        lambda: layer.forward(x), layer.backward, x, {"W": layer.W, "b": layer.b}, 12
    )


def check_conv():
    rng = np.random.default_rng(21)
    layer = L.Conv1d(width=2, filters=3, in_dim=4, seed=5)
    x = rng.standard_normal((2, 6, 4))
    return _weighted_sum_check(
        lambda: layer.forward(x), layer.backward, x, {"W": layer.W, "b": layer.b}, 22
    )


def check_tanh():
    rng = np.random.default_rng(31)
    layer = L.Tanh()
    x = rng.standard_normal((3, 7))
    return _weighted_sum_check(lambda: layer.forward(x), layer.backward, x, {}, 32)


def check_batchnorm():
    rng = np.random.default_rng(41)
    layer = L.BatchNorm1d(3)
    layer.gamma[:] = rng.uniform(0.5, 1.5, 3)
    layer.beta[:] = rng.standard_normal(3)
    x = rng.standard_normal((4, 5, 3)) * 2.0 + 1.0
    return _weighted_sum_check(
        lambda: layer.forward(x, mode="train", update_running=False),
        layer.backward,
        x,
        {"gamma": layer.gamma, "beta": layer.beta},
        42,
    )


def check_maxpool():
    rng = np.random.default_rng(51)
    layer = L.GlobalMaxPool()
    x = rng.standard_normal((3, 6, 4))
    return _weighted_sum_check(lambda: layer.forward(x), layer.backward, x, {}, 52)


def check_dropout():
    rng = np.random.default_rng(61)
    layer = L.Dropout(0.5)
    x = rng.standard_normal((4, 8))
    # frozen mask: an identically seeded rng is rebuilt on every forward
    forward = lambda: layer.forward(x, mode="train", rng=np.random.default_rng(613))
    return _weighted_sum_check(forward, layer.backward, x, {}, 62)


def check_softmax_xent():
    rng = np.random.default_rng(71)
    logits = rng.standard_normal((5, 4))
    labels = rng.integers(0, 4, 5)
    _, grad, _ = L.softmax_cross_entropy(logits, labels)

    def loss_fn():
        return L.softmax_cross_entropy(logits, labels)[0]

    return fd_max_rel_error(loss_fn, {"logits": logits}, {"logits": grad})


def _model_check(model, x, labels, lengths=None, dropout_seed=None):
    def forward():
        rng = None if dropout_seed is None else np.random.default_rng(dropout_seed)
        return model.forward(x, lengths=lengths, mode="train", rng=rng,
                             update_running=False)

    logits, cache = forward()
    _, dlogits, _ = L.softmax_cross_entropy(logits, labels)
    grads, dx = model.backward(cache, dlogits)
    analytic = dict(grads)
    analytic["input"] = dx
    tensors = dict(model.parameters())
    tensors["input"] = x

    def loss_fn():
        logits, _ = forward()
        return L.softmax_cross_entropy(logits, labels)[0]

    return fd_max_rel_error(loss_fn, tensors, analytic,
                            rng=np.random.default_rng(0xFD))


def check_cnn():
    rng = np.random.default_rng(81)
    model = CnnClassifier(emb_dim=5, max_len=7, widths=(2, 3), filters=3,
                          dropout=0.5, seed=8)
    x = rng.standard_normal((2, 7, 5))
    labels = np.array([0, 2])
    return _model_check(model, x, labels, dropout_seed=811)


def check_rnn():
    rng = np.random.default_rng(91)
    model = RnnClassifier(emb_dim=4, hidden=3, seed=9)
    x = rng.standard_normal((2, 5, 4))
    labels = np.array([1, 3])
    return _model_check(model, x, labels, lengths=np.array([5, 3]))


def check_lstm():
    rng = np.random.default_rng(101)
    model = LstmClassifier(emb_dim=4, hidden=3, seed=10)
    x = rng.standard_normal((2, 5, 4))
    labels = np.array([0, 1])
    return _model_check(model, x, labels, lengths=np.array([5, 3]))


def check_cbow_groups():
    """Per-parameter-group errors: input vectors vs output vectors."""
    rng = np.random.default_rng(111)
    vocab = Vocabulary([f"w{i}" for i in range(6)], {f"w{i}": i + 1 for i in range(6)})
    emb = EmbeddingMatrix.initialize(vocab, dim=5, seed=11)
    emb.input_vectors[1:] = rng.standard_normal((len(vocab) - 1, 5)) * 0.3
    emb.output_vectors[:] = rng.standard_normal((len(vocab), 5)) * 0.3
    center = 3
    context = np.array([2, 4, 5, 2])
    negatives = np.array([6, 7, 2])

    _, grad_ctx, grad_out = cbow_loss_and_grads(emb, center, context, negatives)
    g_in = np.zeros_like(emb.input_vectors)
    np.add.at(g_in, context, grad_ctx[None, :])
    g_out = np.zeros_like(emb.output_vectors)
    rows = np.concatenate(([center], negatives))
    np.add.at(g_out, rows, grad_out)

    def loss_fn():
        return float(cbow_loss_and_grads(emb, center, context, negatives)[0])

    return {
        "input_vectors": fd_max_rel_error(
            loss_fn, {"t": emb.input_vectors}, {"t": g_in}
        ),
        "output_vectors": fd_max_rel_error(
            loss_fn, {"t": emb.output_vectors}, {"t": g_out}
        ),
    }


def check_cbow():
    return max(check_cbow_groups().values())


LAYER_CHECKS = [
    ("dense", check_dense, LAYER_TOL),
    ("conv1d", check_conv, LAYER_TOL),
    ("tanh", check_tanh, LAYER_TOL),
    ("batchnorm", check_batchnorm, LAYER_TOL),
    ("maxpool", check_maxpool, LAYER_TOL),
    ("dropout", check_dropout, LAYER_TOL),
    ("softmax_xent", check_softmax_xent, SOFTMAX_TOL),
]

MODEL_CHECKS = [
    ("cnn", check_cnn, MODEL_TOL),
    ("rnn", check_rnn, MODEL_TOL),
    ("lstm", check_lstm, MODEL_TOL),
    ("cbow", check_cbow, MODEL_TOL),
]


def run_checks(which="all"):
    """Run the named component checks; returns [(name, error, tol, ok)].

    `which` is "all", "layers", or one of cnn/rnn/lstm/cbow.
    """
    if which in (None, "all"):
        selected = LAYER_CHECKS + MODEL_CHECKS
    elif which == "layers":
        selected = LAYER_CHECKS
    else:
        selected = [entry for entry in MODEL_CHECKS if entry[0] == which]
        if not selected:
            raise ValueError(f"unknown gradcheck component {which!r}")
    results = []
    for name, fn, tol in selected:
        err = fn()
        results.append((name, err, tol, err < tol))
    return results
