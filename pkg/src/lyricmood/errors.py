"""Exception types shared across the toolkit."""


class LyricMoodError(Exception):
    """Base class for all toolkit errors."""


# corpus
class LexiconEmptyError(LyricMoodError):
    """Lexicon-mode segmentation requested with an empty lexicon."""


class EmptyVocabularyError(LyricMoodError):
    """No token survived the vocabulary frequency threshold."""


class ClassTooSmallError(LyricMoodError):
    """A mood class has fewer than 2 documents; stratified split impossible."""


class ConfigInfeasibleError(LyricMoodError):
    """Synthetic-corpus configuration cannot satisfy its own guarantees."""


class UnknownLabelError(LyricMoodError):
    """A document carries a label string outside the 4 mood classes."""

    def __init__(self, message, doc_id=None):
        super().__init__(message)
        self.doc_id = doc_id


class ParseError(LyricMoodError):
    """A data file is malformed; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


# features
class EmptyCorpusError(LyricMoodError):
    """An operation requiring at least one document received none."""


class DuplicateEntryError(LyricMoodError):
    """A category lexicon contains the same (word, category) pair twice."""


# embeddings
class ZeroVectorError(LyricMoodError):
    """Cosine similarity is undefined for a zero vector."""


class UnknownWordError(LyricMoodError):
    """Queried word is not in the embedding vocabulary."""


class EmptyContextError(LyricMoodError):
    """A CBOW step needs at least one non-padding context token."""


# svm
class DimensionMismatchError(LyricMoodError):
    """Operands disagree on feature dimensionality."""


class SingleClassInputError(LyricMoodError):
    """Binary SVM training needs at least one example of each sign."""


# nn
class InputTooShortError(LyricMoodError):
    """Sequence shorter than the convolution kernel width."""


class DegenerateBatchError(LyricMoodError):
    """Batch statistics undefined: fewer than 2 values per channel."""


class StaleCacheError(LyricMoodError):
    """Backward called with a cache whose shapes do not match."""


class NonFiniteLossError(LyricMoodError):
    """Training produced a NaN or infinite loss."""


class EmptyDatasetError(LyricMoodError):
    """Training requires a non-empty dataset."""


# eval
class LengthMismatchError(LyricMoodError):
    """True and predicted label sequences differ in length."""


class EmptyMatrixError(LyricMoodError):
    """Metrics are undefined on a confusion matrix with zero total."""


class UnknownClassError(LyricMoodError):
    """Requested mood class has no documents in the dataset."""
