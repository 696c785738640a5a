import math

import numpy as np
import pytest

from lyricmood import svm as S
from lyricmood.corpus import MoodLabel
from lyricmood.errors import DimensionMismatchError, SingleClassInputError

from conftest import four_blobs, two_blobs


def recover_alphas(model, X):
    """Map stored SV coefficients back onto the training rows."""
    alphas = np.zeros(len(X))
    for sv, coeff in zip(model.support_vectors, model.coefficients):
        i = np.where((X == sv).all(axis=1))[0][0]
        alphas[i] = abs(coeff)
    return alphas


def dual_objective(alphas, y, K):
    Q = (y[:, None] * y[None, :]) * K
    return alphas.sum() - 0.5 * alphas @ Q @ alphas


def kkt_violations(model, X, y, tol):
    f = S.decision_function(model, X)
    alphas = recover_alphas(model, X)
    C = model.C
    out = []
    for i in range(len(X)):
        yf = y[i] * f[i]
        if alphas[i] < 1e-12:
            out.append(max(0.0, (1.0 - tol) - yf))
        elif alphas[i] > C - 1e-12:
            out.append(max(0.0, yf - (1.0 + tol)))
        else:
            out.append(max(0.0, abs(yf - 1.0) - tol))
    return np.array(out)


# --- kernel ---------------------------------------------------------------------


def test_rbf_identical_points():
    assert S.rbf_kernel([1.0, 2.0], [1.0, 2.0], gamma=3.0) == pytest.approx(1.0)


def test_rbf_unit_distance():
    assert S.rbf_kernel([0.0, 0.0], [1.0, 0.0], gamma=1.0) == pytest.approx(
        math.exp(-1), abs=1e-12
    )


def test_rbf_monotone_in_gamma():
    x, z = np.array([0.0, 0.0]), np.array([0.5, 0.5])
    values = [S.rbf_kernel(x, z, g) for g in (0.1, 1.0, 10.0, 100.0)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-8


def test_rbf_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        S.rbf_kernel([1.0], [1.0, 2.0], gamma=1.0)


def test_kernel_matrix_symmetric_unit_diagonal_psd(rng):
    X = rng.standard_normal((30, 4))
    K = S.rbf_kernel_matrix(X, X, gamma=0.7)
    assert np.allclose(K, K.T)
    assert np.allclose(np.diag(K), 1.0)
    assert np.linalg.eigvalsh(K).min() >= -1e-9


def test_kernel_matrix_matches_pairwise(rng):
    A = rng.standard_normal((5, 3))
    B = rng.standard_normal((4, 3))
    K = S.rbf_kernel_matrix(A, B, gamma=0.3)
    for i in range(5):
        for j in range(4):
            assert K[i, j] == pytest.approx(S.rbf_kernel(A[i], B[j], 0.3), abs=1e-12)


# --- smo ----------------------------------------------------------------------------


def test_smo_symmetric_two_points():
    X = np.array([[1.0, 0.0], [-1.0, 0.0]])
    y = np.array([1.0, -1.0])
    model = S.smo_train(X, y, C=10.0, gamma=1.0, seed=0)
    assert abs(model.bias) < 1e-6
    assert len(model.coefficients) == 2
    alphas = np.abs(model.coefficients)
    assert alphas[0] == pytest.approx(alphas[1], abs=1e-6)
    # midpoint of a symmetric model scores 0
    assert S.decision_function(model, np.array([0.0, 0.0])) == pytest.approx(0.0, abs=1e-9)


def test_smo_single_class_raises():
    X = np.array([[0.0], [1.0]])
    with pytest.raises(SingleClassInputError):
        S.smo_train(X, np.array([1.0, 1.0]))


def test_smo_dual_matches_grid_search_oracle():
    # 4-point instance; oracle = exhaustive grid over the constrained simplex
    X = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    y = np.array([1.0, 1.0, -1.0, -1.0])
    gamma, C = 0.5, 1.0
    K = S.rbf_kernel_matrix(X, X, gamma)
    Q = (y[:, None] * y[None, :]) * K

    step = 0.005
    grid = np.arange(0.0, C + 1e-12, step)
    A1, A2, A3 = np.meshgrid(grid, grid, grid, indexing="ij")
    A4 = A1 + A2 - A3  # enforces sum(alpha_i y_i) = 0
    feasible = (A4 >= 0) & (A4 <= C)
    a = np.stack([A1, A2, A3, A4], axis=-1)
    vals = a.sum(-1) - 0.5 * np.einsum("...i,ij,...j->...", a, Q, a)
    grid_best = np.where(feasible, vals, -np.inf).max()

    model = S.smo_train(X, y, C=C, gamma=gamma, seed=0)
    smo_dual = dual_objective(recover_alphas(model, X), y, K)
    assert abs(smo_dual - grid_best) < 1e-3


def test_smo_separable_blobs_100_percent():
    X, y = two_blobs(seed=42)
    model = S.smo_train(X, y, C=1.0, gamma=0.5, seed=1)
    assert (np.sign(S.decision_function(model, X)) == y).all()


def test_smo_kkt_on_blobs():
    X, y = two_blobs(n_per=50, seed=42)
    tol = 1e-3
    model = S.smo_train(X, y, C=1.0, gamma=0.5, tol=tol, seed=1)
    assert kkt_violations(model, X, y, tol).max() == 0.0


def test_smo_kkt_on_overlapping_blobs():
    # soft margin genuinely active here
    X, y = two_blobs(n_per=60, centers=((0, 0), (2, 2)), std=1.2, seed=7)
    tol = 1e-3
    model = S.smo_train(X, y, C=1.0, gamma=0.5, tol=tol, seed=3)
    assert kkt_violations(model, X, y, tol).max() == 0.0


def test_smo_alpha_constraints():
    X, y = two_blobs(seed=9)
    model = S.smo_train(X, y, C=1.0, gamma=0.5, seed=2)
    alphas = np.abs(model.coefficients)
    assert (alphas > 0).all() and (alphas <= 1.0 + 1e-12).all()
    # sum alpha_i y_i = sum of stored coefficients (others are zero)
    assert abs(model.coefficients.sum()) < 1e-6


def test_smo_deterministic_given_seed():
    X, y = two_blobs(n_per=30, seed=21)
    a = S.smo_train(X, y, C=1.0, gamma=0.5, seed=5)
    b = S.smo_train(X, y, C=1.0, gamma=0.5, seed=5)
    assert np.array_equal(a.coefficients, b.coefficients)
    assert a.bias == b.bias


def test_decision_at_free_support_vectors():
    X, y = two_blobs(n_per=40, seed=3)
    tol = 1e-3
    model = S.smo_train(X, y, C=1.0, gamma=0.5, tol=tol, seed=4)
    alphas = recover_alphas(model, X)
    f = S.decision_function(model, X)
    free = (alphas > 1e-9) & (alphas < 1.0 - 1e-9)
    assert free.any()
    assert np.abs(y[free] * f[free] - 1.0).max() <= tol


def test_decision_no_support_vectors_returns_bias():
    model = S.BinarySvmModel(np.zeros((0, 2)), np.zeros(0), bias=0.25,
                             gamma=1.0, C=1.0)
    assert S.decision_function(model, np.array([5.0, 5.0])) == 0.25


def test_scaling_invariance():
    # scale features by s and gamma by 1/s^2: decision values unchanged
    X, y = two_blobs(n_per=25, seed=13)
    s = 2.0
    m1 = S.smo_train(X, y, C=1.0, gamma=0.8, seed=6)
    m2 = S.smo_train(X * s, y, C=1.0, gamma=0.8 / s**2, seed=6)
    probe = np.random.default_rng(0).normal(1.5, 1.0, (20, 2))
    v1 = S.decision_function(m1, probe)
    v2 = S.decision_function(m2, probe * s)
    assert np.abs(v1 - v2).max() < 1e-9


def test_default_gamma():
    X = np.array([[0.0, 2.0], [4.0, 6.0]])
    assert S.default_gamma(X) == pytest.approx(1.0 / (2 * X.var()))
    assert S.default_gamma(np.ones((3, 5))) == pytest.approx(1.0 / 5)


# --- multiclass ------------------------------------------------------------------------


def test_predict_multiclass_argmax():
    class Fixed:
        def __init__(self, v):
            self.v = v

    msvm = S.MulticlassSvm.__new__(S.MulticlassSvm)
    msvm.models = {}
    values = np.array([[-1.0, 3.0, 0.0, 1.0]])
    msvm.decision_values = lambda X: values
    assert S.predict_multiclass(msvm, np.zeros((1, 2)))[0] is MoodLabel.CATHARSIS


def test_predict_multiclass_tie_smallest_code():
    msvm = S.MulticlassSvm.__new__(S.MulticlassSvm)
    msvm.models = {}
    msvm.decision_values = lambda X: np.array([[2.0, 0.0, 2.0, -1.0]])
    assert S.predict_multiclass(msvm, np.zeros((1, 2)))[0] is MoodLabel.HAPPINESS


def test_multiclass_four_blobs():
    X, y = four_blobs(seed=42)
    train, test = np.arange(0, 240), np.arange(240, 320)
    msvm = S.train_multiclass(X[train], y[train], C=1.0, seed=2)
    pred = S.predict_multiclass(msvm, X[test])
    acc = np.mean([int(p) == t for p, t in zip(pred, y[test])])
    assert acc >= 0.95


# --- scaling helpers ---------------------------------------------------------------------


def test_l2_normalize_rows():
    X = np.array([[3.0, 4.0], [0.0, 0.0]])
    N = S.l2_normalize_rows(X)
    assert np.allclose(N[0], [0.6, 0.8])
    assert (N[1] == 0).all()


def test_standardizer_train_stats(rng):
    X = rng.normal(5.0, 3.0, (200, 4))
    std = S.Standardizer.fit(X)
    Z = std.transform(X)
    assert np.abs(Z.mean(axis=0)).max() < 1e-9
    assert np.abs(Z.std(axis=0) - 1.0).max() < 1e-9


def test_standardizer_constant_feature():
    X = np.column_stack([np.ones(10), np.arange(10.0)])
    std = S.Standardizer.fit(X)
    Z = std.transform(X)
    assert (Z[:, 0] == 0).all()


# --- persistence ---------------------------------------------------------------------------


def test_svm_bundle_tfidf_roundtrip(tmp_path):
    from lyricmood.corpus import build_vocabulary
    from lyricmood.features import fit_tfidf

    rng = np.random.default_rng(4)
    docs = [[f"t{rng.integers(12)}" for _ in range(10)] for _ in range(40)]
    labels = np.array([i % 4 for i in range(40)])
    vocab = build_vocabulary(docs, min_count=1)
    tfidf = fit_tfidf(docs, vocab)
    from lyricmood.features import transform_tfidf

    X = S.l2_normalize_rows(
        np.vstack([transform_tfidf(d, tfidf).values for d in docs])
    )
    msvm = S.train_multiclass(X, labels, C=1.0, seed=3)
    bundle = S.SvmBundle("tfidf", msvm, tfidf=tfidf)
    path = tmp_path / "svm.model"
    S.save_svm_bundle(bundle, path)
    loaded = S.load_svm_bundle(path)

    before = bundle.decision_values(docs)
    after = loaded.decision_values(docs)
    assert np.array_equal(before, after)  # bitwise identical
    assert [int(p) for p in bundle.predict(docs)] == [int(p) for p in loaded.predict(docs)]


def test_svm_bundle_liwc_roundtrip(tmp_path):
    from lyricmood.features import CategoryLexicon, liwc_features

    lex = CategoryLexicon([("w0", "happy", 1.0), ("w1", "sad", 2.0)])
    rng = np.random.default_rng(5)
    docs = [[f"w{rng.integers(6)}" for _ in range(8)] for _ in range(40)]
    labels = np.array([i % 4 for i in range(40)])
    raw = np.vstack([liwc_features(d, lex).values for d in docs])
    std = S.Standardizer.fit(raw)
    msvm = S.train_multiclass(std.transform(raw), labels, C=1.0, seed=6)
    bundle = S.SvmBundle("liwc", msvm, lexicon=lex, standardizer=std)
    path = tmp_path / "svm.model"
    S.save_svm_bundle(bundle, path)
    loaded = S.load_svm_bundle(path)
    assert np.array_equal(bundle.decision_values(docs), loaded.decision_values(docs))
    assert loaded.lexicon.categories == lex.categories
