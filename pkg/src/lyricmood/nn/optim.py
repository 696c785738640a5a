"""Adam with optional L2 weight decay, and global-norm gradient clipping."""

import numpy as np


class Adam:
    """Adam over a dict of named parameter tensors, updated in place.

    L2 regularization enters as an additive gradient term decay * param,
    applied only to tensors named in `decay_params` (weights, not biases
    or batchnorm parameters). Default moments beta1=0.9, beta2=0.999,
    eps=1e-8.
    """

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8,
                 weight_decay=0.0, decay_params=()):
        self.params = dict(params)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.decay_params = frozenset(decay_params)
        self.t = 0
        self.m = {name: np.zeros_like(p) for name, p in self.params.items()}
        self.v = {name: np.zeros_like(p) for name, p in self.params.items()}

    def step(self, grads):
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, param in self.params.items():
            g = grads[name]
            if self.weight_decay and name in self.decay_params:
                g = g + self.weight_decay * param
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            param -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def global_norm(grads):
    """Euclidean norm over every entry of every gradient tensor."""
    total = 0.0
    for g in grads.values():
        total += float((g * g).sum())
    return np.sqrt(total)


def clip_global_norm(grads, clip):
    """Scale all gradients in place so their joint norm is at most `clip`.

    Direction is preserved; returns the pre-clip norm.
    """
    norm = global_norm(grads)
    if clip is not None and norm > clip:
        scale = clip / norm
        for g in grads.values():
            g *= scale
    return norm
