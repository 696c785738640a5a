"""RBF-kernel soft-margin SVM trained by simplified SMO, plus one-vs-rest.

The solver follows the simplified SMO scheme: sweep every example, and
whenever one violates its KKT condition beyond tol, optimize its
multiplier jointly with a partner (seeded random order, falling back to
a full scan so a fixable violation is never skipped), clipping to
[0, C]. Training stops after `max_passes` consecutive full sweeps that
change nothing, at which point every example satisfies KKT within tol
unless no partner could move it.
"""

import numpy as np

from . import features as F
from .corpus import MoodLabel, Vocabulary
from .errors import DimensionMismatchError, ParseError, SingleClassInputError


def rbf_kernel(x, z, gamma):
    """exp(-gamma * ||x - z||^2)."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise DimensionMismatchError(f"kernel operands {x.shape} vs {z.shape}")
    diff = x - z
    return float(np.exp(-gamma * np.dot(diff, diff)))


def rbf_kernel_matrix(A, B, gamma):
    """Pairwise RBF kernel between the rows of A and B."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatchError(f"kernel operands {A.shape} vs {B.shape}")
    sq = (
        (A**2).sum(axis=1)[:, None]
        + (B**2).sum(axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def default_gamma(X):
    """1 / (n_features * variance), the scale-aware default."""
    X = np.asarray(X, dtype=np.float64)
    var = X.var()
    if var > 0:
        return 1.0 / (X.shape[1] * var)
    return 1.0 / X.shape[1]


class BinarySvmModel:
    """Support vectors, their alpha*y coefficients, and the bias."""

    def __init__(self, support_vectors, coefficients, bias, gamma, C):
        self.support_vectors = np.asarray(support_vectors, dtype=np.float64)
        self.coefficients = np.asarray(coefficients, dtype=np.float64)
        self.bias = float(bias)
        self.gamma = float(gamma)
        self.C = float(C)
        if len(self.support_vectors) != len(self.coefficients):
            raise ValueError("one coefficient per support vector required")
        alphas = np.abs(self.coefficients)
        if len(alphas) and not np.all((alphas > 0) & (alphas <= self.C + 1e-12)):
            raise ValueError("stored alphas must lie in (0, C]")


def smo_train(X, y, C=1.0, gamma=None, tol=1e-3, max_passes=10, seed=0,
              max_sweeps=10_000):
    """Train a binary RBF SVM; y holds +-1 labels."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not (np.any(y > 0) and np.any(y < 0)):
        raise SingleClassInputError("need at least one example of each sign")
    if not np.all(np.isfinite(X)):
        raise ValueError("training rows must be finite")
    if gamma is None:
        gamma = default_gamma(X)

    m = len(y)
    K = rbf_kernel_matrix(X, X, gamma)
    alphas = np.zeros(m)
    b = 0.0
    rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x51F])

    def f(i):
        return float(np.dot(alphas * y, K[:, i]) + b)

    def try_pair(i, j, E_i):
        """Jointly optimize (alpha_i, alpha_j); returns True if they moved."""
        nonlocal b
        E_j = f(j) - y[j]
        ai_old, aj_old = alphas[i], alphas[j]
        if y[i] != y[j]:
            L, H = max(0.0, aj_old - ai_old), min(C, C + aj_old - ai_old)
        else:
            L, H = max(0.0, ai_old + aj_old - C), min(C, ai_old + aj_old)
        if L >= H:
            return False
        eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
        if eta >= 0:
            return False
        aj = aj_old - y[j] * (E_i - E_j) / eta
        aj = min(H, max(L, aj))
        if abs(aj - aj_old) < 1e-5:
            return False
        ai = ai_old + y[i] * y[j] * (aj_old - aj)
        alphas[i], alphas[j] = ai, aj
        b1 = b - E_i - y[i] * (ai - ai_old) * K[i, i] - y[j] * (aj - aj_old) * K[i, j]
        b2 = b - E_j - y[i] * (ai - ai_old) * K[i, j] - y[j] * (aj - aj_old) * K[j, j]
        if 0.0 < ai < C:
            b = b1
        elif 0.0 < aj < C:
            b = b2
        else:
            b = 0.5 * (b1 + b2)
        return True

    passes = 0
    sweeps = 0
    while passes < max_passes and sweeps < max_sweeps:
        changed = 0
        for i in range(m):
            E_i = f(i) - y[i]
            r_i = y[i] * E_i
            if not ((r_i < -tol and alphas[i] < C) or (r_i > tol and alphas[i] > 0)):
                continue
            # random partner first; if that pair cannot move, fall back to a
            # randomized scan so a violating point is never abandoned while
            # some partner could still fix it
            for j in rng.permutation(m):
                if j != i and try_pair(i, int(j), E_i):
                    changed += 1
                    break
        sweeps += 1
        passes = passes + 1 if changed == 0 else 0

    keep = alphas > 0
    return BinarySvmModel(X[keep], (alphas * y)[keep], b, gamma, C)


def decision_function(model, x):
    """Sum of coeff_i * K(sv_i, x) + bias; accepts one vector or a matrix."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if len(model.support_vectors) == 0:
        values = np.full(len(X), model.bias)
    else:
        if X.shape[1] != model.support_vectors.shape[1]:
            raise DimensionMismatchError(
                f"model dim {model.support_vectors.shape[1]}, input dim {X.shape[1]}"
            )
        K = rbf_kernel_matrix(X, model.support_vectors, model.gamma)
        values = K @ model.coefficients + model.bias
    return float(values[0]) if single else values


class MulticlassSvm:
    """Four one-vs-rest binary models sharing one feature space."""

    def __init__(self, models):
        if sorted(models) != [int(label) for label in MoodLabel]:
            raise ValueError("need exactly one binary model per mood class")
        self.models = dict(models)

    def decision_values(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        values = np.zeros((len(X), len(MoodLabel)))
        for code, model in self.models.items():
            values[:, code] = decision_function(model, X)
        return values


def train_multiclass(X, y_codes, C=1.0, gamma=None, tol=1e-3, max_passes=10, seed=0):
    """Train 4 one-vs-rest binary SVMs on integer class codes."""
    X = np.asarray(X, dtype=np.float64)
    y_codes = np.asarray(y_codes, dtype=np.int64)
    if gamma is None:
        gamma = default_gamma(X)
    models = {}
    for label in MoodLabel:
        y = np.where(y_codes == int(label), 1.0, -1.0)
        models[int(label)] = smo_train(
            X, y, C=C, gamma=gamma, tol=tol, max_passes=max_passes,
            seed=(seed * 31 + int(label)),
        )
    return MulticlassSvm(models)


def predict_multiclass(msvm, x):
    """Argmax of the 4 decision values; ties go to the smallest class code."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    values = msvm.decision_values(x)
    codes = np.argmax(values, axis=1)
    labels = [MoodLabel(int(c)) for c in codes]
    return labels[0] if single else labels


# --- feature scaling helpers --------------------------------------------------


def l2_normalize_rows(X):
    """Scale each row to unit L2 norm (zero rows stay zero)."""
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return X / norms


class Standardizer:
    """Per-feature (x - mean) / std with train statistics; std 0 maps to 1."""

    def __init__(self, mean, std):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.std = np.asarray(std, dtype=np.float64)

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=np.float64)
        std = X.std(axis=0)
        std[std == 0.0] = 1.0
        return cls(X.mean(axis=0), std)

    def transform(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std


# --- self-contained classifier bundles ----------------------------------------


class SvmBundle:
    """One-vs-rest SVM plus the fitted feature pipeline used to train it.

    Bundling the tf-idf statistics (or lexicon + standardizer) with the
    four binary models lets evaluation and tagging run from the model
    file alone. kind is "tfidf" (document-normalized tf-idf vectors) or
    "liwc" (standardized category percentages).
    """

    def __init__(self, kind, msvm, tfidf=None, lexicon=None, standardizer=None,
                 long_word_min_chars=3):
        if kind not in ("tfidf", "liwc"):
            raise ValueError(f"unknown feature kind {kind!r}")
        if kind == "tfidf" and tfidf is None:
            raise ValueError("tfidf bundle needs the fitted TfidfModel")
        if kind == "liwc" and (lexicon is None or standardizer is None):
            raise ValueError("liwc bundle needs the lexicon and standardizer")
        self.kind = kind
        self.msvm = msvm
        self.tfidf = tfidf
        self.lexicon = lexicon
        self.standardizer = standardizer
        self.long_word_min_chars = int(long_word_min_chars)

    def featurize(self, docs):
        if self.kind == "tfidf":
            rows = [F.transform_tfidf(doc, self.tfidf).values for doc in docs]
            return l2_normalize_rows(np.vstack(rows)) if rows else np.zeros((0, 0))
        rows = [
            F.liwc_features(
                getattr(doc, "tokens", doc),
                self.lexicon,
                raw_text=getattr(doc, "raw_text", None),
                num_lines=getattr(doc, "num_lines", None),
                long_word_min_chars=self.long_word_min_chars,
            ).values
            for doc in docs
        ]
        return self.standardizer.transform(np.vstack(rows)) if rows else np.zeros((0, 0))

    def predict(self, docs):
        return predict_multiclass(self.msvm, self.featurize(docs))

    def decision_values(self, docs):
        return self.msvm.decision_values(self.featurize(docs))


BUNDLE_TAG = "lyricmood-svm v1"


def _write_binary(fh, code, model):
    dim = model.support_vectors.shape[1] if model.support_vectors.ndim == 2 else 0
    fh.write(
        f"binary {code} C {model.C:.17g} gamma {model.gamma:.17g} "
        f"b {model.bias:.17g} n_sv {len(model.coefficients)} dim {dim}\n"
    )
    for coeff, sv in zip(model.coefficients, model.support_vectors):
        fh.write(f"{coeff:.17g} " + " ".join(f"{v:.17g}" for v in sv) + "\n")


def save_svm_bundle(bundle, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(BUNDLE_TAG + "\n")
        fh.write(f"feature {bundle.kind}\n")
        if bundle.kind == "tfidf":
            terms = bundle.tfidf.schema
            fh.write(f"tfidf num_docs {bundle.tfidf.num_docs} terms {len(terms)}\n")
            for term in terms:
                fh.write(f"term {term} {bundle.tfidf.doc_freq.get(term, 0)}\n")
        else:
            fh.write(
                f"liwc entries {len(bundle.lexicon.entries)} "
                f"long_word_min_chars {bundle.long_word_min_chars}\n"
            )
            for word, category, weight in bundle.lexicon.entries:
                fh.write(f"entry\t{word}\t{category}\t{weight:.17g}\n")
            fh.write("mean " + " ".join(f"{v:.17g}" for v in bundle.standardizer.mean) + "\n")
            fh.write("std " + " ".join(f"{v:.17g}" for v in bundle.standardizer.std) + "\n")
        for label in MoodLabel:
            _write_binary(fh, int(label), bundle.msvm.models[int(label)])


def load_svm_bundle(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != BUNDLE_TAG:
        raise ParseError(f"not a {BUNDLE_TAG} file", line=1)
    if len(lines) < 2 or not lines[1].startswith("feature "):
        raise ParseError("missing feature kind", line=2)
    kind = lines[1].split()[1]

    ln = 2
    tfidf = lexicon = standardizer = None
    long_word_min_chars = 3
    if kind == "tfidf":
        head = lines[ln].split()
        if head[0] != "tfidf":
            raise ParseError("missing tfidf section", line=ln + 1)
        num_docs, n_terms = int(head[2]), int(head[4])
        ln += 1
        terms, doc_freq = [], {}
        for _ in range(n_terms):
            _, term, df = lines[ln].split()
            terms.append(term)
            if int(df) > 0:
                doc_freq[term] = int(df)
            ln += 1
        vocab = Vocabulary(terms, {t: 1 for t in terms})
        tfidf = F.TfidfModel(vocab, doc_freq, num_docs)
    elif kind == "liwc":
        head = lines[ln].split()
        if head[0] != "liwc":
            raise ParseError("missing liwc section", line=ln + 1)
        n_entries = int(head[2])
        long_word_min_chars = int(head[4])
        ln += 1
        entries = []
        for _ in range(n_entries):
            _, word, category, weight = lines[ln].split("\t")
            entries.append((word, category, float(weight)))
            ln += 1
        lexicon = F.CategoryLexicon(entries)
        mean = np.array(lines[ln].split()[1:], dtype=np.float64)
        std = np.array(lines[ln + 1].split()[1:], dtype=np.float64)
        standardizer = Standardizer(mean, std)
        ln += 2
    else:
        raise ParseError(f"unknown feature kind {kind!r}", line=2)

    models = {}
    while ln < len(lines) and lines[ln].strip():
        head = lines[ln].split()
        if head[0] != "binary":
            raise ParseError(f"expected binary model header, got {lines[ln]!r}", line=ln + 1)
        code = int(head[1])
        C, gamma, bias = float(head[3]), float(head[5]), float(head[7])
        n_sv, dim = int(head[9]), int(head[11])
        ln += 1
        coeffs = np.zeros(n_sv)
        svs = np.zeros((n_sv, dim))
        for r in range(n_sv):
            vals = np.array(lines[ln].split(), dtype=np.float64)
            coeffs[r] = vals[0]
            svs[r] = vals[1:]
            ln += 1
        models[code] = BinarySvmModel(svs, coeffs, bias, gamma, C)
    return SvmBundle(
        kind,
        MulticlassSvm(models),
        tfidf=tfidf,
        lexicon=lexicon,
        standardizer=standardizer,
        long_word_min_chars=long_word_min_chars,
    )
