"""Classical feature extraction feeding the SVM baselines.

Two extractors: tf-idf vectors over the training vocabulary, and
LIWC-style category percentage vectors computed from a user-supplied
word-category lexicon.
"""

import math
from collections import Counter

import numpy as np

from .errors import DuplicateEntryError, EmptyCorpusError, ParseError


class FeatureVector:
    """Dense feature values paired with their ordered schema."""

    def __init__(self, values, schema):
        self.values = np.asarray(values, dtype=np.float64)
        self.schema = list(schema)
        if self.values.shape != (len(self.schema),):
            raise ValueError("values and schema lengths differ")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature values must be finite")

    def __len__(self):
        return len(self.values)


def save_features_csv(vectors, path):
    """Write feature vectors as CSV; the header is the shared schema."""
    if not vectors:
        raise EmptyCorpusError("no feature vectors to write")
    schema = vectors[0].schema
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(schema) + "\n")
        for vec in vectors:
            if vec.schema != schema:
                raise ValueError("feature vectors disagree on schema")
            fh.write(",".join(repr(float(v)) for v in vec.values) + "\n")


# --- tf-idf -----------------------------------------------------------------


class TfidfModel:
    """Document frequencies fitted on a training corpus.

    The weight of term t in document d is f(t,d) * ln(|D| / f_t): raw count
    times log inverse document frequency, natural log, no smoothing. Terms
    unseen at fit time (including PAD/UNK) get weight 0.
    """

    def __init__(self, vocab, doc_freq, num_docs):
        self.vocab = vocab
        self.doc_freq = dict(doc_freq)
        self.num_docs = int(num_docs)
        if self.num_docs < 1:
            raise ValueError("num_docs must be >= 1")
        for term, df in self.doc_freq.items():
            if not 1 <= df <= self.num_docs:
                raise ValueError(f"doc_freq[{term!r}]={df} outside [1, |D|]")

    @property
    def schema(self):
        """Vocabulary terms in index order (reserved slots excluded)."""
        return self.vocab.index_to_token[2:]


def fit_tfidf(train_docs, vocab):
    """Count, per vocabulary term, the training documents containing it."""
    docs = list(train_docs)
    if not docs:
        raise EmptyCorpusError("tf-idf needs at least one training document")
    doc_freq = Counter()
    for doc in docs:
        tokens = getattr(doc, "tokens", doc)
        doc_freq.update({t for t in tokens if t in vocab})
    return TfidfModel(vocab, doc_freq, len(docs))


def transform_tfidf(doc, model):
    """tf-idf vector of a tokenized document over the fitted vocabulary."""
    tokens = getattr(doc, "tokens", doc)
    counts = Counter(tokens)
    values = np.zeros(len(model.vocab) - 2, dtype=np.float64)
    log_d = math.log(model.num_docs)
    for term, tf in counts.items():
        df = model.doc_freq.get(term)
        if df is None:
            continue
        values[model.vocab.token_to_index[term] - 2] = tf * (log_d - math.log(df))
    return FeatureVector(values, model.schema)


# --- category lexicon (LIWC-style) -------------------------------------------

DESCRIPTIVE_FIELDS = ("word_count", "mean_tokens_per_line", "long_word_fraction")


class CategoryLexicon:
    """Word list L = {(word, category, weight)} with a fixed category order."""

    def __init__(self, entries):
        self.entries = []
        self.categories = []
        self._by_word = {}
        seen = set()
        for word, category, weight in entries:
            if (word, category) in seen:
                raise DuplicateEntryError(f"duplicate entry ({word!r}, {category!r})")
            seen.add((word, category))
            weight = float(weight)
            if weight <= 0:
                raise ValueError(f"weight for ({word!r}, {category!r}) must be > 0")
            if category not in self.categories:
                self.categories.append(category)
            self.entries.append((word, category, weight))
            self._by_word.setdefault(word, []).append((category, weight))

    def __len__(self):
        return len(self.entries)

    def lookup(self, word):
        return self._by_word.get(word, ())


def load_lexicon(path):
    """Parse a tab-separated lexicon: word<TAB>category<TAB>weight.

    Blank lines and `#` comments are ignored. Category order is
    first-appearance order and is reused for every feature vector.
    """
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(
                    f"expected word<TAB>category<TAB>weight, got {line!r}", line=line_no
                )
            word, category, weight_s = (p.strip() for p in parts)
            if not word or not category:
                raise ParseError("empty word or category", line=line_no)
            try:
                weight = float(weight_s)
            except ValueError:
                raise ParseError(f"bad weight {weight_s!r}", line=line_no) from None
            if weight <= 0:
                raise ParseError(f"weight must be > 0, got {weight}", line=line_no)
            entries.append((word, category, weight))
    return CategoryLexicon(entries)


def liwc_features(tokens, lexicon, raw_text=None, num_lines=None,
                  long_word_min_chars=3):
    """Category percentages plus three descriptive statistics.

    Schema: word_count, mean_tokens_per_line, long_word_fraction, then one
    column per lexicon category holding 100 * (weighted matches) / words.
    The line count for the tokens-per-line statistic comes from
    `num_lines` when given, else from `raw_text`, else the document
    counts as one line. A token of >= `long_word_min_chars` characters
    counts as long (the CJK stand-in for LIWC's six-letter-word category).
    """
    tokens = list(getattr(tokens, "tokens", tokens))
    word_count = len(tokens)
    if num_lines is None:
        if raw_text:
            from .corpus import count_lyric_lines

            num_lines = count_lyric_lines(raw_text)
        else:
            num_lines = 1
    mean_tokens_per_line = word_count / max(1, num_lines)
    long_fraction = (
        sum(1 for t in tokens if len(t) >= long_word_min_chars) / word_count
        if word_count
        else 0.0
    )

    totals = dict.fromkeys(lexicon.categories, 0.0)
    for tok in tokens:
        for category, weight in lexicon.lookup(tok):
            totals[category] += weight
    scale = 100.0 / max(1, word_count)
    values = [float(word_count), mean_tokens_per_line, long_fraction]
    values += [totals[c] * scale for c in lexicon.categories]
    return FeatureVector(values, list(DESCRIPTIVE_FIELDS) + lexicon.categories)
