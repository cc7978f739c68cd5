"""Binary detection metrics: confusion counts, ratios, ROC, and AUC.

The positive class is fake/fraudulent throughout. Two score orientations
appear at the boundary: confusion() consumes the discriminator's
probability-of-real (predicted real iff score >= threshold, ties to
real), while roc_curve() and auc() consume fake-scores, where larger
means more suspicious. Reports carry both the single-threshold counts
and the full curve.
"""

import json
from dataclasses import dataclass

from .errors import DimensionError, DomainError


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with fake as the positive class."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise DomainError(f"{name} must be a non-negative integer, got {v!r}")

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class Ratios:
    accuracy: float
    precision: float
    recall: float
    f1: float
    degenerate: tuple


def confusion(scores, labels, threshold: float) -> ConfusionMatrix:
    """Count the four cells at one operating point.

    scores are probabilities of being real; labels use 1=real, 0=fake.
    A sample is predicted real iff its score >= threshold, so a score
    exactly at the threshold resolves to predicted-real.
    """
    if len(scores) != len(labels):
        raise DimensionError(
            f"{len(scores)} scores vs {len(labels)} labels")
    if not 0.0 <= threshold <= 1.0:
        raise DomainError(f"threshold must lie in [0, 1], got {threshold}")
    tp = fp = fn = tn = 0
    for i, (score, label) in enumerate(zip(scores, labels)):
        if label not in (0, 1):
            raise DomainError(f"label at index {i} must be 0 or 1, got {label!r}")
        predicted_real = score >= threshold
        if label == 0 and not predicted_real:
            tp += 1
        elif label == 1 and not predicted_real:
            fp += 1
        elif label == 0:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, fn, tn)


def ratios(cm: ConfusionMatrix) -> Ratios:
    """Accuracy, precision, recall, and F1 from one confusion matrix.

    A ratio whose denominator is zero is reported as 0.0 and named in
    the degenerate tuple instead of propagating a NaN.
    """
    if cm.total == 0:
        raise DomainError("confusion matrix is empty")
    degenerate = []
    accuracy = (cm.tp + cm.tn) / cm.total
    if cm.tp + cm.fp == 0:
        precision = 0.0
        degenerate.append("precision")
    else:
        precision = cm.tp / (cm.tp + cm.fp)
    if cm.tp + cm.fn == 0:
        recall = 0.0
        degenerate.append("recall")
    else:
        recall = cm.tp / (cm.tp + cm.fn)
    if precision + recall == 0.0:
        f1 = 0.0
        degenerate.append("f1")
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return Ratios(accuracy, precision, recall, f1, tuple(degenerate))


def roc_curve(fake_scores, labels):
    """Threshold sweep over fake-scores; returns [(fpr, tpr), ...].

    All samples sharing a score enter the curve together, so ties add a
    single diagonal segment. The first point is always (0, 0) and the
    last (1, 1).
    """
    if len(fake_scores) != len(labels):
        raise DimensionError(
            f"{len(fake_scores)} scores vs {len(labels)} labels")
    n_pos = sum(1 for v in labels if v == 0)
    n_neg = sum(1 for v in labels if v == 1)
    if n_pos + n_neg != len(labels):
        bad = next(v for v in labels if v not in (0, 1))
        raise DomainError(f"labels must be 0 or 1, got {bad!r}")
    if n_pos == 0:
        raise DomainError("no fake (positive) samples: ROC needs both classes")
    if n_neg == 0:
        raise DomainError("no real (negative) samples: ROC needs both classes")
    by_score = {}
    for score, label in zip(fake_scores, labels):
        pos, neg = by_score.get(score, (0, 0))
        if label == 0:
            pos += 1
        else:
            neg += 1
        by_score[score] = (pos, neg)
    points = [(0.0, 0.0)]
    tp = fp = 0
    for score in sorted(by_score, reverse=True):
        pos, neg = by_score[score]
        tp += pos
        fp += neg
        points.append((fp / n_neg, tp / n_pos))
    return points


def auc(roc_points) -> float:
    """Trapezoidal area under a roc_curve() result.

    With grouped ties this equals the Mann-Whitney pair statistic
    (#concordant + half #tied) / (n_pos * n_neg).
    """
    if len(roc_points) < 2:
        raise DomainError(f"need at least 2 ROC points, got {len(roc_points)}")
    if roc_points[0] != (0.0, 0.0) or roc_points[-1] != (1.0, 1.0):
        raise DomainError(
            f"ROC must span (0,0) to (1,1), got {roc_points[0]} to "
            f"{roc_points[-1]}")
    area = 0.0
    for (x0, y0), (x1, y1) in zip(roc_points, roc_points[1:]):
        if x1 < x0 or y1 < y0:
            raise DomainError(
                f"ROC points must be non-decreasing, got ({x0}, {y0}) then "
                f"({x1}, {y1})")
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


@dataclass(frozen=True)
class MetricsReport:
    """Full evaluation summary at one threshold plus the ROC sweep."""

    confusion: ConfusionMatrix
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float
    roc_points: tuple
    recall_by_fake_kind: dict
    degenerate: tuple

    def to_json(self) -> str:
        doc = {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1_score": self.f1,
            "auc": self.auc,
            "confusion": {"tp": self.confusion.tp, "fp": self.confusion.fp,
                          "fn": self.confusion.fn, "tn": self.confusion.tn},
            "recall_by_fake_kind": dict(self.recall_by_fake_kind),
            "degenerate": list(self.degenerate),
            "roc_points": [[x, y] for x, y in self.roc_points],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        rows = [("accuracy", self.accuracy), ("precision", self.precision),
                ("recall", self.recall), ("f1_score", self.f1),
                ("auc", self.auc), ("tp", self.confusion.tp),
                ("fp", self.confusion.fp), ("fn", self.confusion.fn),
                ("tn", self.confusion.tn)]
        for kind in sorted(self.recall_by_fake_kind):
            rows.append((f"recall_{kind}", self.recall_by_fake_kind[kind]))
        return "metric,value\n" + "".join(
            f"{name},{value!r}\n" for name, value in rows)


def build_report(real_scores, labels, fake_kinds, threshold: float) -> MetricsReport:
    """Assemble a MetricsReport from one scored batch.

    real_scores are discriminator probabilities of real; labels use
    1=real, 0=fake; fake_kinds names each fake's source ("n/a" for real
    samples) and feeds the per-kind recall breakdown.
    """
    if len(real_scores) != len(labels) or len(labels) != len(fake_kinds):
        raise DimensionError(
            f"{len(real_scores)} scores vs {len(labels)} labels vs "
            f"{len(fake_kinds)} fake kinds")
    cm = confusion(real_scores, labels, threshold)
    r = ratios(cm)
    fake_scores = [1.0 - s for s in real_scores]
    points = roc_curve(fake_scores, labels)
    area = auc(points)
    by_kind = {}
    for score, label, kind in zip(real_scores, labels, fake_kinds):
        if label == 0:
            caught, seen = by_kind.get(kind, (0, 0))
            by_kind[kind] = (caught + (1 if score < threshold else 0), seen + 1)
    recall_by_kind = {kind: caught / seen
                      for kind, (caught, seen) in sorted(by_kind.items())}
    return MetricsReport(cm, r.accuracy, r.precision, r.recall, r.f1, area,
                         tuple(points), recall_by_kind, r.degenerate)
