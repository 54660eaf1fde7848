"""Confusion-matrix metrics with an explicit zero-denominator convention."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True)
class Prediction:
    example_id: str
    gold_label: str
    pred_label: str | None = None  # None marks a failed example

    @property
    def failed(self) -> bool:
        return self.pred_label is None


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    fn: int
    tn: int
    n_failed: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn + self.n_failed

    @property
    def accuracy(self) -> float:
        scored = self.tp + self.fp + self.fn + self.tn
        return (self.tp + self.tn) / scored if scored else 0.0

    @property
    def precision(self) -> float:
        predicted_positive = self.tp + self.fp
        return self.tp / predicted_positive if predicted_positive else 0.0

    @property
    def recall(self) -> float:
        actual_positive = self.tp + self.fn
        return self.tp / actual_positive if actual_positive else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @property
    def zero_denominator_flags(self) -> tuple[str, ...]:
        """Ratios whose denominator was zero and were pinned to 0 by convention."""
        flags = []
        if self.tp + self.fp + self.fn + self.tn == 0:
            flags.append("accuracy")
        if self.tp + self.fp == 0:
            flags.append("precision")
        if self.tp + self.fn == 0:
            flags.append("recall")
        if self.precision + self.recall == 0:
            flags.append("f1")
        return tuple(flags)

    def to_json_dict(self) -> dict:
        # Full-precision ratios; rounding happens only in rendered reports.
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "n_failed": self.n_failed,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "zero_denominator_flags": list(self.zero_denominator_flags),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Metrics":
        return cls(tp=data["tp"], fp=data["fp"], fn=data["fn"], tn=data["tn"],
                   n_failed=data["n_failed"])


def compute_metrics(predictions: Iterable[Prediction], positive_label: str) -> Metrics:
    """Count the confusion matrix; failed examples land in n_failed only."""
    tp = fp = fn = tn = failed = 0
    for prediction in predictions:
        if prediction.failed:
            failed += 1
            continue
        gold_positive = prediction.gold_label == positive_label
        pred_positive = prediction.pred_label == positive_label
        if pred_positive and gold_positive:
            tp += 1
        elif pred_positive:
            fp += 1
        elif gold_positive:
            fn += 1
        else:
            tn += 1
    return Metrics(tp=tp, fp=fp, fn=fn, tn=tn, n_failed=failed)
