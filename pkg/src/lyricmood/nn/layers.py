"""Neural layers with explicit forward/backward passes, double precision.

Every forward returns (output, cache); every backward takes (upstream
gradient, cache) and returns (input gradient, parameter gradients).
Inference-mode forwards are pure. No autodiff: each backward is the
hand-derived gradient, and all of them are covered by the
finite-difference harness in gradcheck.py.
"""

import numpy as np

from ..errors import (
    DegenerateBatchError,
    DimensionMismatchError,
    InputTooShortError,
)


class Conv1d:
    """Valid 1D convolution over (N, T, D) inputs, stride 1.

    out[n, t, f] = bias[f] + sum_{i<w, j<D} weights[f, i, j] * x[n, t+i, j]
    """

    def __init__(self, width, filters, in_dim, seed=0):
        self.width = int(width)
        self.filters = int(filters)
        self.in_dim = int(in_dim)
        if self.width < 1 or self.filters < 1:
            raise ValueError("width and filters must be >= 1")
        rng = np.random.default_rng([seed & 0xFFFFFFFF, 0xC0])
        limit = 1.0 / np.sqrt(self.width * self.in_dim)
        self.W = rng.uniform(-limit, limit, (self.filters, self.width, self.in_dim))
        self.b = np.zeros(self.filters)

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        n, t, d = x.shape
        if d != self.in_dim:
            raise DimensionMismatchError(f"conv expects depth {self.in_dim}, got {d}")
        if t < self.width:
            raise InputTooShortError(f"sequence length {t} < kernel width {self.width}")
        windows = np.lib.stride_tricks.sliding_window_view(x, self.width, axis=1)
        # windows: (N, T', D, w) -> flatten to rows for one big matmul
        t_out = t - self.width + 1
        flat = windows.transpose(0, 1, 3, 2).reshape(n * t_out, self.width * self.in_dim)
        w_flat = self.W.reshape(self.filters, self.width * self.in_dim)
        out = (flat @ w_flat.T).reshape(n, t_out, self.filters) + self.b
        assert out.shape == (n, t_out, self.filters)
        return out, (x, flat)

    def backward(self, dout, cache):
        x, flat = cache
        n, t, _ = x.shape
        t_out = t - self.width + 1
        dflat = dout.reshape(n * t_out, self.filters)
        dW = (dflat.T @ flat).reshape(self.filters, self.width, self.in_dim)
        db = dflat.sum(axis=0)
        dx = np.zeros_like(x)
        for i in range(self.width):
            # each kernel slot i touched x[:, i : i + t_out, :]
            dx[:, i : i + t_out, :] += np.einsum("ntf,fd->ntd", dout, self.W[:, i, :])
        return dx, {"W": dW, "b": db}


class Tanh:
    def forward(self, x):
        out = np.tanh(x)
        return out, out

    def backward(self, dout, cache):
        return dout * (1.0 - cache**2), {}


class BatchNorm1d:
    """Per-channel normalization over the (N, T) axes of (N, T, F) inputs."""

    def __init__(self, channels, momentum=0.9, eps=1e-5):
        self.channels = int(channels)
        self.momentum = float(momentum)
        self.eps = float(eps)
        self.gamma = np.ones(self.channels)
        self.beta = np.zeros(self.channels)
        self.running_mean = np.zeros(self.channels)
        self.running_var = np.ones(self.channels)

    def forward(self, x, mode="infer", update_running=True):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.channels:
            raise DimensionMismatchError(
                f"batchnorm expects {self.channels} channels, got {x.shape[-1]}"
            )
        if mode == "train":
            m = x.shape[0] * x.shape[1]
            if m < 2:
                raise DegenerateBatchError("train-mode batchnorm needs >= 2 values per channel")
            mean = x.mean(axis=(0, 1))
            var = x.var(axis=(0, 1))  # biased, 1/m
            if update_running:
                unbiased = var * m / (m - 1)
                self.running_mean = self.momentum * self.running_mean + (1 - self.momentum) * mean
                self.running_var = self.momentum * self.running_var + (1 - self.momentum) * unbiased
        elif mode == "infer":
            mean, var = self.running_mean, self.running_var
        else:
            raise ValueError(f"unknown mode {mode!r}")
        inv = 1.0 / np.sqrt(var + self.eps)
        xn = (x - mean) * inv
        out = self.gamma * xn + self.beta
        cache = (xn, inv, mode)
        return out, cache

    def backward(self, dout, cache):
        xn, inv, mode = cache
        dgamma = (dout * xn).sum(axis=(0, 1))
        dbeta = dout.sum(axis=(0, 1))
        dxn = dout * self.gamma
        if mode == "infer":
            dx = dxn * inv
        else:
            m = xn.shape[0] * xn.shape[1]
            # d/dx of (x - mean(x)) / sqrt(var(x) + eps), batch statistics
            dx = (
                dxn
                - dxn.mean(axis=(0, 1))
                - xn * (dxn * xn).mean(axis=(0, 1))
            ) * inv
        return dx, {"gamma": dgamma, "beta": dbeta}


class GlobalMaxPool:
    """Reduce (N, T, F) to (N, F); gradient flows to the first argmax."""

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1] < 1:
            raise InputTooShortError("max pool needs at least one time step")
        idx = x.argmax(axis=1)  # first maximal index on ties
        out = np.take_along_axis(x, idx[:, None, :], axis=1)[:, 0, :]
        return out, (idx, x.shape)

    def backward(self, dout, cache):
        idx, shape = cache
        dx = np.zeros(shape)
        np.put_along_axis(dx, idx[:, None, :], dout[:, None, :], axis=1)
        return dx, {}


class Dropout:
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p)."""

    def __init__(self, p=0.5):
        if not 0.0 <= p < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        self.p = float(p)

    def forward(self, x, mode="infer", rng=None):
        if mode == "infer" or self.p == 0.0:
            return np.asarray(x, dtype=np.float64), None
        if rng is None:
            raise ValueError("train-mode dropout needs an rng")
        mask = (rng.random(x.shape) >= self.p) / (1.0 - self.p)
        return x * mask, mask

    def backward(self, dout, cache):
        if cache is None:
            return dout, {}
        return dout * cache, {}


class Dense:
    """y = x @ W.T + b with W of shape (out, in)."""

    def __init__(self, out_dim, in_dim, seed=0):
        rng = np.random.default_rng([seed & 0xFFFFFFFF, 0xDE])
        limit = 1.0 / np.sqrt(in_dim)
        self.W = rng.uniform(-limit, limit, (out_dim, in_dim))
        self.b = np.zeros(out_dim)

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.W.shape[1]:
            raise DimensionMismatchError(
                f"dense expects {self.W.shape[1]} inputs, got {x.shape[-1]}"
            )
        return x @ self.W.T + self.b, x

    def backward(self, dout, cache):
        x = cache
        dW = dout.T @ x if x.ndim == 2 else np.outer(dout, x)
        db = dout.sum(axis=0) if x.ndim == 2 else dout
        dx = dout @ self.W
        return dx, {"W": dW, "b": db}


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy over the batch with a numerically stable softmax.

    Returns (loss, grad wrt logits, probabilities). The gradient is
    (probs - onehot) / N, matching the mean reduction.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(exp.sum(axis=1, keepdims=True))
    loss = -log_probs[np.arange(n), labels].mean()
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1.0
    grad /= n
    return float(loss), grad, probs
