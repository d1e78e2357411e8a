"""Confusion matrices, per-class precision/recall/F1 and per-dialect reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import LabelError, ShotfitError


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # rows = gold, columns = predicted
    class_order: tuple[str, ...]

    @property
    def total(self):
        return int(self.counts.sum())


@dataclass
class EvalReport:
    per_class: dict
    macro_f1: float
    weighted_f1: float
    per_dialect: dict = field(default_factory=dict)
    n_examples: int = 0
    duration_seconds: float = 0.0

    def to_dict(self):
        return {
            "per_class": {k: dict(v) for k, v in self.per_class.items()},
            "macro_f1": self.macro_f1,
            "weighted_f1": self.weighted_f1,
            "per_dialect": {d: r.to_dict() for d, r in self.per_dialect.items()},
            "n_examples": self.n_examples,
            "duration_seconds": self.duration_seconds,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            per_class={k: dict(v) for k, v in data["per_class"].items()},
            macro_f1=data["macro_f1"],
            weighted_f1=data["weighted_f1"],
            per_dialect={d: cls.from_dict(r) for d, r in data.get("per_dialect", {}).items()},
            n_examples=data["n_examples"],
            duration_seconds=data["duration_seconds"],
        )


def confusion_matrix(gold: Sequence[str], pred: Sequence[str], class_order: Sequence[str]) -> ConfusionMatrix:
    gold, pred = list(gold), list(pred)
    if len(gold) != len(pred):
        raise LabelError(f"gold has {len(gold)} labels, predictions {len(pred)}")
    if not gold:
        raise LabelError("cannot build a confusion matrix from zero examples")
    index = {lab: i for i, lab in enumerate(class_order)}
    counts = np.zeros((len(index), len(index)), dtype=np.int64)
    for g, p in zip(gold, pred):
        if g not in index or p not in index:
            raise LabelError(f"label {g if g not in index else p!r} not in class order {tuple(class_order)}")
        counts[index[g], index[p]] += 1
    return ConfusionMatrix(counts, tuple(class_order))


def _ratio(num, den):
    return num / den if den else 0.0


def f1_report(matrix: ConfusionMatrix) -> EvalReport:
    """Per-class scores plus macro and support-weighted F1.

    Undefined ratios (0/0) score 0. Classes without gold support are
    reported but left out of both averages.
    """
    counts = matrix.counts
    if counts.sum() == 0:
        raise LabelError("confusion matrix is empty")
    per_class, f1s, supports = {}, [], []
    for i, lab in enumerate(matrix.class_order):
        tp = int(counts[i, i])
        support = int(counts[i, :].sum())
        predicted = int(counts[:, i].sum())
        p = _ratio(tp, predicted)
        r = _ratio(tp, support)
        f = _ratio(2 * p * r, p + r)
        per_class[lab] = {"precision": p, "recall": r, "f1": f}
        if support:
            f1s.append(f)
            supports.append(support)
    macro = float(np.mean(f1s))
    weighted = float(np.dot(f1s, supports) / sum(supports))
    return EvalReport(per_class, macro, weighted, {}, int(counts.sum()), 0.0)


def evaluate_labels(gold, pred, class_order, duration_seconds=0.0) -> EvalReport:
    report = f1_report(confusion_matrix(gold, pred, class_order))
    report.duration_seconds = duration_seconds
    return report


def dialect_breakdown(corpus, predictions: Sequence[str | None], class_order=None,
                      duration_seconds: float = 0.0) -> EvalReport:
    """Overall report with one child report per dialect.

    ``predictions`` aligns with ``corpus.reviews``.
    """
    reviews = list(corpus)
    predictions = list(predictions)
    if len(predictions) != len(reviews):
        raise LabelError(f"{len(predictions)} predictions for {len(reviews)} reviews")
    for r, p in zip(reviews, predictions):
        if p is None:
            raise ShotfitError(f"review {r.id!r} has no prediction")
        if r.sentiment is None:
            raise LabelError(f"review {r.id!r} has no gold sentiment")
    if class_order is None:
        class_order = tuple(dict.fromkeys([r.sentiment for r in reviews] + predictions))
    report = evaluate_labels([r.sentiment for r in reviews], predictions, class_order, duration_seconds)
    for dialect in dict.fromkeys(r.dialect for r in reviews):
        sub = [(r.sentiment, p) for r, p in zip(reviews, predictions) if r.dialect == dialect]
        gold, pred = zip(*sub)
        report.per_dialect[dialect] = evaluate_labels(gold, pred, class_order, duration_seconds)
    return report


def format_duration(seconds: float) -> str:
    """Seconds as h:m:s with zero padding, e.g. ``02:16:12``."""
    total = int(round(seconds))
    h, rem = divmod(total, 3600)
    m, s = divmod(rem, 60)
    return f"{h:02d}:{m:02d}:{s:02d}"


def format_dialect_table(report: EvalReport) -> str:
    """Dialect x class F1 table (percentages), one row per (dialect, class)."""
    lines = [f"{'Dialect':<12}{'Class':<12}{'F1 %':>8}"]
    for dialect, child in report.per_dialect.items():
        first = True
        for lab, scores in child.per_class.items():
            name = dialect if first else ""
            lines.append(f"{name:<12}{lab:<12}{100 * scores['f1']:>8.2f}")
            first = False
    lines.append(f"{'overall':<12}{'macro':<12}{100 * report.macro_f1:>8.2f}")
    lines.append(f"{'':<12}{'weighted':<12}{100 * report.weighted_f1:>8.2f}")
    lines.append(f"duration {format_duration(report.duration_seconds)} over {report.n_examples} examples")
    return "\n".join(lines)
