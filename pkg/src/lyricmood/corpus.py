"""Lyric corpus handling: cleaning, segmentation, vocabularies, splits.

The pipeline is clean -> segment -> encode. Every step is a pure function
of its inputs (plus an explicit seed where randomness is involved), so the
whole preprocessing chain is reproducible bit for bit.
"""

import json
import re
from collections import Counter
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import (
    ClassTooSmallError,
    ConfigInfeasibleError,
    EmptyVocabularyError,
    LexiconEmptyError,
    ParseError,
    UnknownLabelError,
)

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"


class MoodLabel(IntEnum):
    """The four mood classes with their stable integer codes."""

    HAPPINESS = 0
    CATHARSIS = 1
    SADNESS = 2
    QUIET = 3

    @classmethod
    def from_name(cls, name, doc_id=None):
        """Parse a class name case-insensitively."""
        try:
            return cls[str(name).strip().upper()]
        except KeyError:
            raise UnknownLabelError(
                f"unknown mood label {name!r}"
                + (f" (document {doc_id!r})" if doc_id else ""),
                doc_id=doc_id,
            ) from None


@dataclass
class LyricDocument:
    id: str
    raw_text: str = ""
    title: str = None
    artist: str = None
    tokens: tuple = ()
    label: MoodLabel = None
    num_lines: int = None  # non-empty lines of the original text, if known

    def __post_init__(self):
        if not self.id:
            raise ValueError("document id must be non-empty")
        self.tokens = tuple(self.tokens)
        if any((not t) or t.isspace() for t in self.tokens):
            raise ValueError(f"document {self.id!r} has empty/whitespace tokens")


# --- cleaning ---------------------------------------------------------------

# LRC time tags: [mm:ss], [mm:ss.xx], [mm:ss.xxx]
_TIME_TAG = re.compile(r"\[\d{1,3}:\d{2}(?:\.\d{1,3})?\]")
# whole-line LRC metadata headers
_META_LINE = re.compile(
    r"^[ \t]*\[(?:ti|ar|al|by|offset)\s*:[^\]\n]*\][ \t]*$",
    re.IGNORECASE | re.MULTILINE,
)
# CJK Unified Ideographs: base block plus extensions A-G
_CJK_RANGES = (
    "一-鿿"
    "㐀-䶿"
    "\U00020000-\U0002a6df"
    "\U0002a700-\U0002ebef"
    "\U00030000-\U0003134f"
)
_NON_CJK = re.compile(f"[^{_CJK_RANGES}]")


def clean_lyric_text(raw):
    """Strip LRC tags and keep only CJK ideographs, space-separated.

    Steps, in order: drop time tags, drop metadata header lines, replace
    every non-CJK character with a space, collapse whitespace runs. Latin
    text therefore vanishes entirely; that matches the intended
    Chinese-only pipeline.
    """
    text = _TIME_TAG.sub(" ", raw)
    text = _META_LINE.sub(" ", text)
    text = _NON_CJK.sub(" ", text)
    return " ".join(text.split())


def strip_lrc_tags(raw):
    """Remove time tags and metadata lines but keep all other characters."""
    text = _TIME_TAG.sub(" ", raw)
    text = _META_LINE.sub(" ", text)
    return text


def count_lyric_lines(raw):
    """Number of lines still carrying content after LRC tags are removed."""
    return sum(1 for line in strip_lrc_tags(raw).splitlines() if line.strip())


# --- segmentation -----------------------------------------------------------


class SegmenterLexicon:
    """Word list driving forward-maximum-matching segmentation."""

    def __init__(self, entries):
        self.entries = frozenset(e for e in entries if e and not e.isspace())
        self.max_word_len = max((len(e) for e in self.entries), default=0)

    def __len__(self):
        return len(self.entries)

    @classmethod
    def load(cls, path):
        """Read a UTF-8 lexicon, one word per line."""
        with open(path, encoding="utf-8") as fh:
            return cls(line.strip() for line in fh)


def segment(text, lexicon=None, mode="lexicon"):
    """Tokenize cleaned text.

    mode="whitespace" splits on spaces (for pre-segmented corpora).
    mode="lexicon" runs forward maximum matching: at each position take the
    longest lexicon word starting there, else emit the single character.
    Spaces are skipped; joining the tokens restores every non-space
    character in order.
    """
    if mode == "whitespace":
        return [t for t in text.split() if t]
    if mode != "lexicon":
        raise ValueError(f"unknown segmentation mode {mode!r}")
    if lexicon is None or len(lexicon) == 0:
        raise LexiconEmptyError("lexicon-mode segmentation needs a non-empty lexicon")

    tokens = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        match = text[i]
        for width in range(min(lexicon.max_word_len, n - i), 1, -1):
            cand = text[i : i + width]
            if cand in lexicon.entries:
                match = cand
                break
        tokens.append(match)
        i += len(match)
    return tokens


# --- vocabulary -------------------------------------------------------------


class Vocabulary:
    """Bijective token<->index table with PAD=0 and UNK=1 reserved."""

    PAD = 0
    UNK = 1

    def __init__(self, tokens, counts):
        """`tokens` are real tokens in index order (index 2 onward)."""
        self.index_to_token = [PAD_TOKEN, UNK_TOKEN, *tokens]
        self.token_to_index = {t: i + 2 for i, t in enumerate(tokens)}
        self.counts = dict(counts)
        if len(self.token_to_index) != len(self.index_to_token) - 2:
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self):
        return len(self.index_to_token)

    def __contains__(self, token):
        return token in self.token_to_index

    def index(self, token):
        return self.token_to_index.get(token, self.UNK)

    def token(self, index):
        return self.index_to_token[index]


def build_vocabulary(docs, min_count=1):
    """Count tokens over documents and keep those with frequency >= min_count.

    Indices 2..V+1 are assigned in descending frequency, ties broken
    lexicographically so builds are reproducible. `docs` may be
    LyricDocuments or plain token sequences.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter()
    for doc in docs:
        counts.update(getattr(doc, "tokens", doc))
    counts.pop(PAD_TOKEN, None)
    counts.pop(UNK_TOKEN, None)
    kept = [(t, c) for t, c in counts.items() if c >= min_count]
    if not kept:
        raise EmptyVocabularyError(
            f"no token reaches min_count={min_count} over {len(counts)} distinct tokens"
        )
    kept.sort(key=lambda tc: (-tc[1], tc[0]))
    return Vocabulary([t for t, _ in kept], dict(kept))


def encode_document(doc, vocab, max_len=100):
    """Map the first `max_len` tokens to indices, right-padded with PAD=0."""
    tokens = getattr(doc, "tokens", doc)
    out = np.full(max_len, Vocabulary.PAD, dtype=np.int64)
    for i, tok in enumerate(tokens[:max_len]):
        out[i] = vocab.index(tok)
    return out


# --- datasets ---------------------------------------------------------------

TRAIN, TEST = "train", "test"


@dataclass
class LabeledDataset:
    """Tokenized, labeled documents plus their train/test assignment."""

    documents: list
    split: list
    seed: int = None

    def __post_init__(self):
        if len(self.documents) != len(self.split):
            raise ValueError("split tags must cover all documents")
        for doc in self.documents:
            if doc.label is None:
                raise ValueError(f"document {doc.id!r} is unlabeled")
            if not doc.tokens:
                raise ValueError(f"document {doc.id!r} has no tokens")
        bad = set(self.split) - {TRAIN, TEST}
        if bad:
            raise ValueError(f"unknown split tags: {sorted(bad)}")

    def __len__(self):
        return len(self.documents)

    def subset(self, split):
        return [d for d, s in zip(self.documents, self.split) if s == split]


def _round_half_away(x):
    # round() in Python is banker's rounding; the split contract wants
    # half-away-from-zero (11,427 docs at 0.1 must give 1,143 test docs).
    return int(np.floor(x + 0.5)) if x >= 0 else -int(np.floor(-x + 0.5))


def split_dataset(docs, test_fraction=0.1, seed=0):
    """Stratified train/test split, deterministic given the seed.

    Each class is shuffled by its own generator seeded with (seed, class),
    and round(class_size * test_fraction) documents go to the test split.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    docs = list(docs)
    by_class = {label: [] for label in MoodLabel}
    for pos, doc in enumerate(docs):
        if doc.label is None:
            raise ValueError(f"document {doc.id!r} is unlabeled")
        by_class[MoodLabel(doc.label)].append(pos)
    for label, members in by_class.items():
        if len(members) < 2:
            raise ClassTooSmallError(
                f"class {label.name} has {len(members)} documents (need >= 2)"
            )

    split = [TRAIN] * len(docs)
    for label, members in by_class.items():
        rng = np.random.default_rng([seed & 0xFFFFFFFF, int(label)])
        order = rng.permutation(len(members))
        n_test = _round_half_away(len(members) * test_fraction)
        for k in order[:n_test]:
            split[members[k]] = TEST
    return LabeledDataset(documents=docs, split=split, seed=seed)


def dataset_stats(ds):
    """Per-class (total, train, test) document counts."""
    stats = {label: [0, 0, 0] for label in MoodLabel}
    for doc, split in zip(ds.documents, ds.split):
        row = stats[MoodLabel(doc.label)]
        row[0] += 1
        row[1 if split == TRAIN else 2] += 1
    return {label: tuple(row) for label, row in stats.items()}


def format_dataset_stats(stats):
    lines = [f"{'class':<12}{'total':>8}{'train':>8}{'test':>8}"]
    totals = [0, 0, 0]
    for label in MoodLabel:
        total, train, test = stats[label]
        totals[0] += total
        totals[1] += train
        totals[2] += test
        lines.append(f"{label.name.lower():<12}{total:>8}{train:>8}{test:>8}")
    lines.append(f"{'all':<12}{totals[0]:>8}{totals[1]:>8}{totals[2]:>8}")
    return "\n".join(lines)


# --- synthetic corpora ------------------------------------------------------


@dataclass(frozen=True)
class SynthConfig:
    """Configuration for the planted-bigram verification corpus."""

    docs_per_class: int = 500
    vocab_size: int = 500
    signal_bigrams_per_class: int = 3
    doc_len: int = 80
    noise_prob: float = 0.1
    seed: int = 7
    classes: int = 4


# the base CJK block holds 20,992 ideographs; synthetic tokens are drawn
# from it so the corpus survives the CJK-only cleaning unchanged
_CJK_BASE = 0x4E00
_CJK_BASE_SIZE = 0x9FFF - 0x4E00 + 1


def synthetic_signal_bigrams(cfg):
    """The disjoint signal bigrams owned by each class, in class order."""
    toks = [chr(_CJK_BASE + i) for i in range(cfg.vocab_size)]
    out = []
    for c in range(cfg.classes):
        base = c * cfg.signal_bigrams_per_class * 2
        out.append(
            [(toks[base + 2 * j], toks[base + 2 * j + 1])
             for j in range(cfg.signal_bigrams_per_class)]
        )
    return out


def generate_synthetic_corpus(cfg):
    """Labeled corpus where each class plants its own signal bigrams.

    Documents are noise tokens from a shared Zipf-like unigram
    distribution; each class-owned bigram is planted at a random
    non-overlapping position with probability 1 - noise_prob. Signal
    tokens never occur as noise, so cross-class signal frequency is
    exactly zero and a bigram-presence classifier is perfect at
    noise_prob = 0.
    """
    n_signal = cfg.classes * cfg.signal_bigrams_per_class * 2
    if cfg.classes != len(MoodLabel):
        raise ConfigInfeasibleError(f"classes must be {len(MoodLabel)}")
    if cfg.docs_per_class < 10:
        raise ConfigInfeasibleError("docs_per_class must be >= 10")
    if cfg.vocab_size < n_signal + 10:
        raise ConfigInfeasibleError(
            f"vocab_size {cfg.vocab_size} < {n_signal + 10} needed for disjoint signals"
        )
    if cfg.vocab_size > _CJK_BASE_SIZE:
        raise ConfigInfeasibleError(f"vocab_size capped at {_CJK_BASE_SIZE}")
    if cfg.doc_len < 4 * cfg.signal_bigrams_per_class - 2:
        # guarantees a free adjacent slot always exists while planting
        raise ConfigInfeasibleError("doc_len too small to plant all bigrams")
    if not 0.0 <= cfg.noise_prob <= 1.0:
        raise ConfigInfeasibleError("noise_prob must be in [0, 1]")

    toks = [chr(_CJK_BASE + i) for i in range(cfg.vocab_size)]
    noise = toks[n_signal:]
    weights = 1.0 / np.arange(1, len(noise) + 1)
    weights /= weights.sum()
    bigrams = synthetic_signal_bigrams(cfg)

    rng = np.random.default_rng([cfg.seed & 0xFFFFFFFF, 0x51])
    docs = []
    for c in range(cfg.classes):
        label = MoodLabel(c)
        name = label.name.lower()
        for i in range(cfg.docs_per_class):
            body = [noise[k] for k in rng.choice(len(noise), cfg.doc_len, p=weights)]
            occupied = np.zeros(cfg.doc_len, dtype=bool)
            for a, b in bigrams[c]:
                if rng.random() >= 1.0 - cfg.noise_prob:
                    continue
                free = [p for p in range(cfg.doc_len - 1)
                        if not occupied[p] and not occupied[p + 1]]
                p = free[rng.integers(len(free))]
                body[p], body[p + 1] = a, b
                occupied[p] = occupied[p + 1] = True
            docs.append(
                LyricDocument(
                    id=f"synth-{name}-{i:04d}",
                    raw_text=" ".join(body),
                    tokens=tuple(body),
                    label=label,
                )
            )
    return docs


# --- file formats -----------------------------------------------------------


def load_documents_jsonl(path):
    """Read raw input documents: {id, title?, artist?, label?, text}."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", line=line_no) from None
            if not isinstance(row, dict) or not row.get("id"):
                raise ParseError("document needs a non-empty 'id'", line=line_no)
            label = row.get("label")
            docs.append(
                LyricDocument(
                    id=str(row["id"]),
                    title=row.get("title"),
                    artist=row.get("artist"),
                    raw_text=row.get("text", ""),
                    label=None if label is None else MoodLabel.from_name(label, row["id"]),
                )
            )
    return docs


def save_documents_jsonl(docs, path):
    """Write raw input documents (text + label), one JSON object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            row = {"id": doc.id}
            if doc.title is not None:
                row["title"] = doc.title
            if doc.artist is not None:
                row["artist"] = doc.artist
            if doc.label is not None:
                row["label"] = doc.label.name.lower()
            row["text"] = doc.raw_text
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def save_dataset_jsonl(ds, path):
    """Write a processed dataset: {id, label_code, tokens, split} per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc, split in zip(ds.documents, ds.split):
            row = {
                "id": doc.id,
                "label_code": int(doc.label),
                "tokens": list(doc.tokens),
                "split": split,
            }
            if doc.num_lines is not None:
                row["lines"] = doc.num_lines
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def load_dataset_jsonl(path):
    """Read a processed dataset written by save_dataset_jsonl."""
    docs, split = [], []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", line=line_no) from None
            try:
                docs.append(
                    LyricDocument(
                        id=str(row["id"]),
                        tokens=tuple(row["tokens"]),
                        label=MoodLabel(int(row["label_code"])),
                        num_lines=row.get("lines"),
                    )
                )
                split.append(row["split"])
            except (KeyError, ValueError) as exc:
                raise ParseError(f"bad dataset row ({exc})", line=line_no) from None
    return LabeledDataset(documents=docs, split=split)
