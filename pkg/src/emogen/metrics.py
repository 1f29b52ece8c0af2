"""Automatic evaluation: corpus BLEU, distinct-n, average length, accuracy, macro-F1.

Conventions are pinned for reproducibility:

* BLEU is corpus-level BLEU-4 with a single reference per hypothesis.
  Modified n-gram precisions are clipped against reference counts and summed
  over the corpus; the brevity penalty is exp(1 - r/c) when the candidate
  corpus is shorter than the reference corpus. A precision whose clipped
  count is zero is floored at 1 / (2 * candidate n-gram count), with the
  count clamped to at least 1, so small corpora stay finite.
* distinct-n divides the number of unique n-grams across the whole corpus by
  the total number of n-gram tokens across the corpus. Sentences shorter
  than n contribute nothing.
* BLEU and distinct-n tokenize with the package tokenizer so metric tokens
  match model tokens; average length counts whitespace-separated words.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import DataError, NumericError
from .text import tokenize


def _ngrams(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def bleu(hypotheses: Sequence[str], references: Sequence[str]) -> float:
    """Corpus BLEU-4 in [0, 100]."""
    if len(hypotheses) != len(references):
        raise DataError(
            f"hypothesis/reference count mismatch: {len(hypotheses)} vs {len(references)}"
        )
    if not hypotheses:
        raise DataError("empty corpus")
    hyp_tokens = [tokenize(h) for h in hypotheses]
    ref_tokens = [tokenize(r) for r in references]
    c = sum(len(t) for t in hyp_tokens)
    r = sum(len(t) for t in ref_tokens)
    if c == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        clipped = 0
        total = 0
        for hyp, ref in zip(hyp_tokens, ref_tokens):
            counts = Counter(_ngrams(hyp, n))
            ref_counts = Counter(_ngrams(ref, n))
            total += max(0, len(hyp) - n + 1)
            clipped += sum(min(cnt, ref_counts[g]) for g, cnt in counts.items())
        p_n = clipped / total if clipped > 0 else 1.0 / (2.0 * max(1, total))
        log_sum += math.log(p_n)
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    return 100.0 * bp * math.exp(log_sum / 4.0)


def distinct_n(hypotheses: Sequence[str], n: int) -> float:
    """Unique n-grams over total n-gram tokens, both counted corpus-wide."""
    if not hypotheses:
        raise DataError("empty corpus")
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    seen: set[tuple[str, ...]] = set()
    total = 0
    for sentence in hypotheses:
        grams = _ngrams(tokenize(sentence), n)
        total += len(grams)
        seen.update(grams)
    if total == 0:
        raise NumericError(f"no {n}-grams in corpus: distinct-{n} undefined")
    return len(seen) / total


def avg_len(hypotheses: Sequence[str]) -> float:
    """Mean whitespace-token count per hypothesis."""
    if not hypotheses:
        raise DataError("empty corpus")
    return sum(len(h.split()) for h in hypotheses) / len(hypotheses)


def classification_scores(
    pred: Sequence[str], gold: Sequence[str], labels: Sequence[str]
) -> tuple[float, float]:
    """(accuracy, macro-F1) over the declared label set.

    Per-label F1 is 0 whenever precision + recall is 0; macro-F1 averages
    over every declared label, present in the gold data or not.
    """
    if len(pred) != len(gold):
        raise DataError(f"prediction/gold length mismatch: {len(pred)} vs {len(gold)}")
    if not pred:
        raise DataError("empty prediction list")
    label_set = set(labels)
    for value in list(pred) + list(gold):
        if value not in label_set:
            raise DataError(f"label '{value}' not in declared set {sorted(label_set)}")
    correct = sum(1 for p, g in zip(pred, gold) if p == g)
    accuracy = correct / len(pred)
    f1_total = 0.0
    for label in labels:
        tp = sum(1 for p, g in zip(pred, gold) if p == label and g == label)
        fp = sum(1 for p, g in zip(pred, gold) if p == label and g != label)
        fn = sum(1 for p, g in zip(pred, gold) if p != label and g == label)
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        f1_total += f1
    return accuracy, f1_total / len(labels)


@dataclass
class MetricsReport:
    """One evaluation run; classification fields stay None when not measured."""

    bleu: float
    distinct1: float
    distinct2: float
    avg_len: float
    accuracy: float | None = None
    macro_f1: float | None = None
    counts: dict | None = None

    def __post_init__(self):
        if not 0.0 <= self.bleu <= 100.0:
            raise NumericError(f"bleu {self.bleu} outside [0, 100]")
        for name in ("distinct1", "distinct2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise NumericError(f"{name} {v} outside [0, 1]")
        for name in ("accuracy", "macro_f1"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise NumericError(f"{name} {v} outside [0, 1]")

    def to_dict(self) -> dict:
        out = {
            "bleu": self.bleu,
            "distinct1": self.distinct1,
            "distinct2": self.distinct2,
            "avg_len": self.avg_len,
            "counts": self.counts or {},
        }
        if self.accuracy is not None:
            out["accuracy"] = self.accuracy
            out["macro_f1"] = self.macro_f1
        return out


def build_report(
    hypotheses: Sequence[str],
    references: Sequence[str],
    pred: Sequence[str] | None = None,
    gold: Sequence[str] | None = None,
    labels: Sequence[str] | None = None,
) -> MetricsReport:
    counts = {"generation": len(hypotheses)}
    accuracy = macro_f1 = None
    if pred is not None:
        if gold is None or labels is None:
            raise DataError("classification scoring needs pred, gold and labels")
        accuracy, macro_f1 = classification_scores(pred, gold, labels)
        counts["classification"] = len(pred)
    return MetricsReport(
        bleu=bleu(hypotheses, references),
        distinct1=distinct_n(hypotheses, 1),
        distinct2=distinct_n(hypotheses, 2),
        avg_len=avg_len(hypotheses),
        accuracy=accuracy,
        macro_f1=macro_f1,
        counts=counts,
    )
