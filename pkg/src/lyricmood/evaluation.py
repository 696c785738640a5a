"""Accuracy, per-class precision/recall/F1 reports, and word-frequency
summaries over the 4 mood classes."""

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import MoodLabel
from .errors import EmptyMatrixError, LengthMismatchError, UnknownClassError

N_CLASSES = len(MoodLabel)

# canonical column order of the comparative results table
CANONICAL_MODELS = ("TF-IDF+SVM", "LIWC+SVM", "CNN", "RNN", "LSTM")


def confusion_matrix(true, pred):
    """4x4 counts, rows = true class, columns = predicted class."""
    true = list(true)
    pred = list(pred)
    if len(true) != len(pred):
        raise LengthMismatchError(f"{len(true)} true labels vs {len(pred)} predictions")
    if not true:
        raise EmptyMatrixError("need at least one (true, predicted) pair")
    cm = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for t, p in zip(true, pred):
        cm[int(t), int(p)] += 1
    return cm


@dataclass
class ClassReport:
    precision: tuple
    recall: tuple
    f1: tuple
    support: tuple
    macro: tuple  # (precision, recall, f1)
    accuracy: float
    total: int


def class_report(cm):
    """Per-class precision/recall/F1 with support, macro averages and accuracy.

    Zero denominators yield 0 rates; F1 is 0 when precision + recall is 0.
    """
    cm = np.asarray(cm, dtype=np.int64)
    total = int(cm.sum())
    if total == 0:
        raise EmptyMatrixError("confusion matrix is empty")
    precision, recall, f1, support = [], [], [], []
    for c in range(N_CLASSES):
        col = int(cm[:, c].sum())
        row = int(cm[c, :].sum())
        tp = int(cm[c, c])
        p = tp / col if col else 0.0
        r = tp / row if row else 0.0
        f = 2 * p * r / (p + r) if (p + r) else 0.0
        precision.append(p)
        recall.append(r)
        f1.append(f)
        support.append(row)
    macro = (
        float(np.mean(precision)),
        float(np.mean(recall)),
        float(np.mean(f1)),
    )
    return ClassReport(
        precision=tuple(precision),
        recall=tuple(recall),
        f1=tuple(f1),
        support=tuple(support),
        macro=macro,
        accuracy=float(np.trace(cm)) / total,
        total=total,
    )


def accuracy(cm):
    cm = np.asarray(cm, dtype=np.int64)
    total = int(cm.sum())
    if total == 0:
        raise EmptyMatrixError("confusion matrix is empty")
    return float(np.trace(cm)) / total


REPORT_COLUMNS = ("Precision", "Recall", "F1-score", "Support")


def render_class_report(report):
    """Aligned text table with the Precision/Recall/F1-score/Support columns
    and a closing Avg/Total row."""
    name_width = max(len("Avg/Total"), max(len(l.name.title()) for l in MoodLabel))
    header = f"{'':<{name_width}}" + "".join(f"{c:>11}" for c in REPORT_COLUMNS)
    lines = [header]
    for label in MoodLabel:
        c = int(label)
        lines.append(
            f"{label.name.title():<{name_width}}"
            f"{report.precision[c]:>11.2f}{report.recall[c]:>11.2f}"
            f"{report.f1[c]:>11.2f}{report.support[c]:>11d}"
        )
    lines.append(
        f"{'Avg/Total':<{name_width}}"
        f"{report.macro[0]:>11.2f}{report.macro[1]:>11.2f}"
        f"{report.macro[2]:>11.2f}{report.total:>11d}"
    )
    return "\n".join(lines)


def class_report_csv(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("class," + ",".join(c.lower() for c in REPORT_COLUMNS) + "\n")
        for label in MoodLabel:
            c = int(label)
            fh.write(
                f"{label.name.lower()},{report.precision[c]!r},{report.recall[c]!r},"
                f"{report.f1[c]!r},{report.support[c]}\n"
            )
        fh.write(
            f"avg_total,{report.macro[0]!r},{report.macro[1]!r},"
            f"{report.macro[2]!r},{report.total}\n"
        )


def confusion_matrix_csv(cm, path):
    names = [l.name.lower() for l in MoodLabel]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("true\\predicted," + ",".join(names) + "\n")
        for label in MoodLabel:
            row = ",".join(str(int(v)) for v in cm[int(label)])
            fh.write(f"{names[int(label)]},{row}\n")


def comparison_table(results):
    """Two-row comparative table: model names, then accuracy percentages.

    Known models render in the canonical order; any extra entries follow
    alphabetically. Accuracies arrive as fractions in [0, 1].
    """
    if not results:
        raise EmptyMatrixError("no results to tabulate")
    ordered = [m for m in CANONICAL_MODELS if m in results]
    ordered += sorted(k for k in results if k not in CANONICAL_MODELS)
    widths = [max(len(m), 6) for m in ordered]
    head = "  ".join(f"{m:>{w}}" for m, w in zip(ordered, widths))
    vals = "  ".join(f"{100.0 * results[m]:>{w}.2f}" for m, w in zip(ordered, widths))
    return f"{'Models':<14}{head}\n{'Accuracy (%)':<14}{vals}"


def word_frequency_report(ds, label, top_k, stoplist=()):
    """Most frequent tokens of one class, stoplist removed.

    Ranked by count, ties broken lexicographically for reproducibility.
    """
    label = MoodLabel(label)
    stop = set(stoplist)
    counts = Counter()
    seen = False
    for doc in ds.documents:
        if MoodLabel(doc.label) != label:
            continue
        seen = True
        counts.update(t for t in doc.tokens if t not in stop)
    if not seen:
        raise UnknownClassError(f"dataset has no {label.name} documents")
    ranked = sorted(counts.items(), key=lambda tc: (-tc[1], tc[0]))
    return ranked[: max(0, int(top_k))]


def overlap_score(list_a, list_b):
    """Jaccard similarity of the token sets of two ranked lists."""
    set_a = {t if isinstance(t, str) else t[0] for t in list_a}
    set_b = {t if isinstance(t, str) else t[0] for t in list_b}
    union = set_a | set_b
    if not union:
        return 0.0
    return len(set_a & set_b) / len(union)
