import numpy as np
import pytest

from lyricmood.corpus import LyricDocument, MoodLabel


def make_docs(sizes, tokens=("x",)):
    """One minimal labeled document list with the given per-class sizes."""
    docs = []
    i = 0
    for label, n in zip(MoodLabel, sizes):
        for _ in range(n):
            docs.append(LyricDocument(id=f"d{i}", tokens=tokens, label=label))
            i += 1
    return docs


def planted_pair_corpus(n_sentences=5000, n_pairs=40, n_noise=120, sent_len=12,
                        reps=3, seed=0):
    """Sentences of uniform noise with `reps` adjacent plants of one word
    pair each; returns (sentences, pair list)."""
    rng = np.random.default_rng(seed)
    pairs = [(f"a{i}", f"b{i}") for i in range(n_pairs)]
    noise = [f"n{i}" for i in range(n_noise)]
    sentences = []
    for _ in range(n_sentences):
        a, b = pairs[rng.integers(n_pairs)]
        sent = [noise[k] for k in rng.integers(0, n_noise, sent_len)]
        for s in rng.choice(sent_len - 1, size=reps, replace=False):
            sent[s], sent[s + 1] = a, b
        sentences.append(sent)
    return sentences, pairs


def two_blobs(n_per=50, centers=((0.0, 0.0), (3.0, 3.0)), std=0.5, seed=42):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(c, std, (n_per, 2)) for c in centers])
    y = np.array([1.0] * n_per + [-1.0] * n_per)
    return X, y


def four_blobs(n_per=80, std=0.6, seed=42):
    rng = np.random.default_rng(seed)
    centers = [(0.0, 0.0), (4.0, 4.0), (0.0, 4.0), (4.0, 0.0)]
    X = np.vstack([rng.normal(c, std, (n_per, 2)) for c in centers])
    y = np.repeat(np.arange(4), n_per)
    order = rng.permutation(len(y))
    return X[order], y[order]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
