"""The three classifier architectures over frozen embedding inputs.

All models consume a pre-embedded batch (N, T, D) and produce logits
(N, 4). Parameters live in plain numpy arrays exposed through
`parameters()`; `backward` returns a gradient dict with matching keys.
The recurrent models additionally take per-sample sequence lengths so
trailing padding is skipped.
"""

import numpy as np

from ..errors import StaleCacheError
from .layers import BatchNorm1d, Conv1d, Dense, Dropout, GlobalMaxPool, Tanh

N_CLASSES = 4


def _sigmoid(x):
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class CnnClassifier:
    """Parallel conv branches -> tanh -> batchnorm -> global max pool,
    concatenated, dropped out, and classified by a dense softmax head.

    The per-branch order conv -> tanh -> batchnorm is the default;
    `bn_before_activation=True` swaps the middle two stages.
    """

    arch = "cnn"
    is_recurrent = False

    def __init__(self, emb_dim=300, max_len=100, widths=(2, 3, 4, 5), filters=64,
                 dropout=0.5, bn_momentum=0.9, bn_eps=1e-5,
                 bn_before_activation=False, seed=0):
        self.emb_dim = int(emb_dim)
        self.max_len = int(max_len)
        self.widths = tuple(int(w) for w in widths)
        self.filters = int(filters)
        self.dropout_rate = float(dropout)
        self.bn_before_activation = bool(bn_before_activation)
        self.convs = [
            Conv1d(w, self.filters, self.emb_dim, seed=seed * 1013 + w)
            for w in self.widths
        ]
        self.bns = [
            BatchNorm1d(self.filters, momentum=bn_momentum, eps=bn_eps)
            for _ in self.widths
        ]
        self.act = Tanh()
        self.pool = GlobalMaxPool()
        self.drop = Dropout(self.dropout_rate)
        self.head = Dense(N_CLASSES, self.filters * len(self.widths), seed=seed * 1013 + 997)

    def config(self):
        return {
            "emb_dim": self.emb_dim,
            "max_len": self.max_len,
            "widths": list(self.widths),
            "filters": self.filters,
            "dropout": self.dropout_rate,
            "bn_momentum": self.bns[0].momentum,
            "bn_eps": self.bns[0].eps,
            "bn_before_activation": self.bn_before_activation,
        }

    @classmethod
    def from_config(cls, cfg):
        return cls(**cfg, seed=0)

    def parameters(self):
        params = {}
        for w, conv, bn in zip(self.widths, self.convs, self.bns):
            params[f"conv{w}.W"] = conv.W
            params[f"conv{w}.b"] = conv.b
            params[f"bn{w}.gamma"] = bn.gamma
            params[f"bn{w}.beta"] = bn.beta
        params["head.W"] = self.head.W
        params["head.b"] = self.head.b
        return params

    def l2_param_names(self):
        return {f"conv{w}.W" for w in self.widths} | {"head.W"}

    def state_tensors(self):
        """Parameters plus batchnorm running statistics, for persistence."""
        state = dict(self.parameters())
        for w, bn in zip(self.widths, self.bns):
            state[f"bn{w}.running_mean"] = bn.running_mean
            state[f"bn{w}.running_var"] = bn.running_var
        return state

    def load_state_tensors(self, state):
        for name, target in self.state_tensors().items():
            value = state[name]
            if value.shape != target.shape:
                raise ValueError(f"tensor {name} has shape {value.shape}, want {target.shape}")
            target[...] = value

    def forward(self, x, lengths=None, mode="infer", rng=None, update_running=True):
        x = np.asarray(x, dtype=np.float64)
        n, t, d = x.shape
        assert d == self.emb_dim, f"embedding dim {d} != model dim {self.emb_dim}"
        branch_caches = []
        pooled = []
        for conv, bn in zip(self.convs, self.bns):
            z, c_conv = conv.forward(x)
            if self.bn_before_activation:
                z, c_bn = bn.forward(z, mode=mode, update_running=update_running)
                z, c_act = self.act.forward(z)
            else:
                z, c_act = self.act.forward(z)
                z, c_bn = bn.forward(z, mode=mode, update_running=update_running)
            z, c_pool = self.pool.forward(z)
            pooled.append(z)
            branch_caches.append((c_conv, c_act, c_bn, c_pool))
        feats = np.concatenate(pooled, axis=1)
        dropped, c_drop = self.drop.forward(feats, mode=mode, rng=rng)
        logits, c_head = self.head.forward(dropped)
        assert logits.shape == (n, N_CLASSES)
        cache = (x.shape, branch_caches, c_drop, c_head)
        return logits, cache

    def backward(self, cache, dlogits):
        x_shape, branch_caches, c_drop, c_head = cache
        if dlogits.shape != (x_shape[0], N_CLASSES):
            raise StaleCacheError(
                f"gradient shape {dlogits.shape} does not match cached batch {x_shape[0]}"
            )
        grads = {}
        dfeat, g_head = self.head.backward(dlogits, c_head)
        grads["head.W"] = g_head["W"]
        grads["head.b"] = g_head["b"]
        dfeat, _ = self.drop.backward(dfeat, c_drop)
        dx = np.zeros(x_shape)
        for k, (w, conv, bn) in enumerate(zip(self.widths, self.convs, self.bns)):
            c_conv, c_act, c_bn, c_pool = branch_caches[k]
            dz = dfeat[:, k * self.filters : (k + 1) * self.filters]
            dz, _ = self.pool.backward(dz, c_pool)
            if self.bn_before_activation:
                dz, _ = self.act.backward(dz, c_act)
                dz, g_bn = bn.backward(dz, c_bn)
            else:
                dz, g_bn = bn.backward(dz, c_bn)
                dz, _ = self.act.backward(dz, c_act)
            dz, g_conv = conv.backward(dz, c_conv)
            grads[f"conv{w}.W"] = g_conv["W"]
            grads[f"conv{w}.b"] = g_conv["b"]
            grads[f"bn{w}.gamma"] = g_bn["gamma"]
            grads[f"bn{w}.beta"] = g_bn["beta"]
            dx += dz
        return grads, dx


class RnnClassifier:
    """Elman network: h_t = tanh(W_x x_t + W_h h_{t-1} + b), head on h_T.

    Trailing padding is skipped via per-sample lengths: once t reaches a
    sample's length its hidden state freezes, so the head always sees the
    state at the last real token.
    """

    arch = "rnn"
    is_recurrent = True

    def __init__(self, emb_dim=300, hidden=128, max_len=100, seed=0):
        self.emb_dim = int(emb_dim)
        self.hidden = int(hidden)
        self.max_len = int(max_len)
        rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x44])
        lim_x = 1.0 / np.sqrt(self.emb_dim)
        lim_h = 1.0 / np.sqrt(self.hidden)
        self.W_x = rng.uniform(-lim_x, lim_x, (self.hidden, self.emb_dim))
        self.W_h = rng.uniform(-lim_h, lim_h, (self.hidden, self.hidden))
        self.b = np.zeros(self.hidden)
        self.head = Dense(N_CLASSES, self.hidden, seed=seed * 1013 + 997)

    def config(self):
        return {"emb_dim": self.emb_dim, "hidden": self.hidden,
                "max_len": self.max_len}

    @classmethod
    def from_config(cls, cfg):
        return cls(**cfg, seed=0)

    def parameters(self):
        return {
            "W_x": self.W_x,
            "W_h": self.W_h,
            "b": self.b,
            "head.W": self.head.W,
            "head.b": self.head.b,
        }

    def l2_param_names(self):
        return {"W_x", "W_h", "head.W"}

    def state_tensors(self):
        return self.parameters()

    def load_state_tensors(self, state):
        for name, target in self.state_tensors().items():
            value = state[name]
            if value.shape != target.shape:
                raise ValueError(f"tensor {name} has shape {value.shape}, want {target.shape}")
            target[...] = value

    def forward(self, x, lengths=None, mode="infer", rng=None, update_running=True):
        x = np.asarray(x, dtype=np.float64)
        n, t, d = x.shape
        assert d == self.emb_dim
        if lengths is None:
            lengths = np.full(n, t, dtype=np.int64)
        lengths = np.maximum(np.asarray(lengths, dtype=np.int64), 1)
        h = np.zeros((n, self.hidden))
        steps = []
        for step in range(t):
            mask = (step < lengths).astype(np.float64)[:, None]
            h_new = np.tanh(x[:, step] @ self.W_x.T + h @ self.W_h.T + self.b)
            steps.append((h, h_new, mask))
            h = mask * h_new + (1.0 - mask) * h
        logits, c_head = self.head.forward(h)
        assert logits.shape == (n, N_CLASSES)
        return logits, (x, steps, c_head)

    def backward(self, cache, dlogits):
        x, steps, c_head = cache
        if dlogits.shape != (x.shape[0], N_CLASSES):
            raise StaleCacheError("gradient shape does not match cached batch")
        dh, g_head = self.head.backward(dlogits, c_head)
        grads = {
            "head.W": g_head["W"],
            "head.b": g_head["b"],
            "W_x": np.zeros_like(self.W_x),
            "W_h": np.zeros_like(self.W_h),
            "b": np.zeros_like(self.b),
        }
        dx = np.zeros_like(x)
        for step in range(len(steps) - 1, -1, -1):
            h_prev, h_new, mask = steps[step]
            da = (dh * mask) * (1.0 - h_new**2)
            grads["W_x"] += da.T @ x[:, step]
            grads["W_h"] += da.T @ h_prev
            grads["b"] += da.sum(axis=0)
            dx[:, step] = da @ self.W_x
            dh = da @ self.W_h + dh * (1.0 - mask)
        return grads, dx


class LstmClassifier:
    """Single-layer LSTM with a dense softmax head on the final state.

    Gate pre-activations are packed as [input, forget, candidate, output]
    rows of one (4H, .) matrix pair; the forget-gate bias initializes
    to 1 so early training does not erase the cell state.
    """

    arch = "lstm"
    is_recurrent = True

    def __init__(self, emb_dim=300, hidden=128, max_len=100, seed=0):
        self.emb_dim = int(emb_dim)
        self.hidden = int(hidden)
        self.max_len = int(max_len)
        rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x77])
        lim_x = 1.0 / np.sqrt(self.emb_dim)
        lim_h = 1.0 / np.sqrt(self.hidden)
        self.W_x = rng.uniform(-lim_x, lim_x, (4 * self.hidden, self.emb_dim))
        self.W_h = rng.uniform(-lim_h, lim_h, (4 * self.hidden, self.hidden))
        self.b = np.zeros(4 * self.hidden)
        self.b[self.hidden : 2 * self.hidden] = 1.0  # forget gate
        self.head = Dense(N_CLASSES, self.hidden, seed=seed * 1013 + 997)

    def config(self):
        return {"emb_dim": self.emb_dim, "hidden": self.hidden,
                "max_len": self.max_len}

    @classmethod
    def from_config(cls, cfg):
        return cls(**cfg, seed=0)

    def parameters(self):
        return {
            "W_x": self.W_x,
            "W_h": self.W_h,
            "b": self.b,
            "head.W": self.head.W,
            "head.b": self.head.b,
        }

    def l2_param_names(self):
        return {"W_x", "W_h", "head.W"}

    def state_tensors(self):
        return self.parameters()

    def load_state_tensors(self, state):
        for name, target in self.state_tensors().items():
            value = state[name]
            if value.shape != target.shape:
                raise ValueError(f"tensor {name} has shape {value.shape}, want {target.shape}")
            target[...] = value

    def forward(self, x, lengths=None, mode="infer", rng=None, update_running=True):
        x = np.asarray(x, dtype=np.float64)
        n, t, d = x.shape
        assert d == self.emb_dim
        if lengths is None:
            lengths = np.full(n, t, dtype=np.int64)
        lengths = np.maximum(np.asarray(lengths, dtype=np.int64), 1)
        hd = self.hidden
        h = np.zeros((n, hd))
        c = np.zeros((n, hd))
        steps = []
        cell_trace = []
        for step in range(t):
            mask = (step < lengths).astype(np.float64)[:, None]
            a = x[:, step] @ self.W_x.T + h @ self.W_h.T + self.b
            i = _sigmoid(a[:, :hd])
            f = _sigmoid(a[:, hd : 2 * hd])
            g = np.tanh(a[:, 2 * hd : 3 * hd])
            o = _sigmoid(a[:, 3 * hd :])
            c_new = f * c + i * g
            tanh_c = np.tanh(c_new)
            h_new = o * tanh_c
            steps.append((h, c, i, f, g, o, tanh_c, mask))
            h = mask * h_new + (1.0 - mask) * h
            c = mask * c_new + (1.0 - mask) * c
            cell_trace.append(c)
        logits, c_head = self.head.forward(h)
        assert logits.shape == (n, N_CLASSES)
        return logits, (x, steps, c_head, cell_trace)

    def backward(self, cache, dlogits):
        x, steps, c_head, _ = cache
        if dlogits.shape != (x.shape[0], N_CLASSES):
            raise StaleCacheError("gradient shape does not match cached batch")
        hd = self.hidden
        dh, g_head = self.head.backward(dlogits, c_head)
        grads = {
            "head.W": g_head["W"],
            "head.b": g_head["b"],
            "W_x": np.zeros_like(self.W_x),
            "W_h": np.zeros_like(self.W_h),
            "b": np.zeros_like(self.b),
        }
        dx = np.zeros_like(x)
        dc = np.zeros((x.shape[0], hd))
        for step in range(len(steps) - 1, -1, -1):
            h_prev, c_prev, i, f, g, o, tanh_c, mask = steps[step]
            dh_eff = dh * mask
            dc_eff = dc * mask
            do = dh_eff * tanh_c
            dc_new = dc_eff + dh_eff * o * (1.0 - tanh_c**2)
            di = dc_new * g
            df = dc_new * c_prev
            dg = dc_new * i
            da = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g**2),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            grads["W_x"] += da.T @ x[:, step]
            grads["W_h"] += da.T @ h_prev
            grads["b"] += da.sum(axis=0)
            dx[:, step] = da @ self.W_x
            dh = da @ self.W_h + dh * (1.0 - mask)
            dc = dc_new * f + dc * (1.0 - mask)
        return grads, dx


ARCHITECTURES = {
    "cnn": CnnClassifier,
    "rnn": RnnClassifier,
    "lstm": LstmClassifier,
}
