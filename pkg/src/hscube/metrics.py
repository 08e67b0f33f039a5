"""Class-based pooled confusion metrics and image-based mean accuracy.

Class-based protocol: every annotated pixel of every test image forms one
pool; each reporting class gets a one-vs-rest confusion over that pool, and
sensitivity, specificity, accuracy, and balanced accuracy (the arithmetic
mean of sensitivity and specificity) are computed per class, plus an
unweighted average across classes.  Pixels whose ground-truth class is
outside the reporting set never enter the pool.

Image-based protocol: per test image, the fraction of its reporting-class
annotated pixels predicted correctly (any class), averaged unweighted over
images.

A class absent from the pool makes some ratio 0/0; the affected metrics are
defined as 0, the row is flagged degenerate, and report averages exclude it.
Reported percentages are rounded half-up to two decimals.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

import numpy as np

from .dataio import ClassRegistry


@dataclass(frozen=True)
class ClassConfusion:
    """One-vs-rest confusion counts for one class over a pixel pool."""

    class_id: int
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ClassMetrics:
    """Metrics in [0, 1]; multiply by 100 for reporting."""

    sensitivity: float
    specificity: float
    accuracy: float
    balanced_accuracy: float
    degenerate: bool = False


def percent(value: float) -> str:
    """Format a [0, 1] metric as a percentage, half-up to 2 decimals."""
    return str(Decimal(value * 100).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def pool_confusions(
    y_true: np.ndarray,
    y_pred: np.ndarray,
    reporting_ids: Sequence[int],
) -> list[ClassConfusion]:
    """One-vs-rest confusions per reporting class over a pooled pixel set.

    Pixels whose true class is outside ``reporting_ids`` are dropped from
    the pool entirely (they count neither as positives nor negatives).
    """
    t = np.asarray(y_true)
    p = np.asarray(y_pred)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError(
            f"predictions must align with labels; got {p.shape} vs {t.shape}"
        )
    keep = np.isin(t, reporting_ids)
    t = t[keep]
    p = p[keep]
    confusions = []
    for cid in reporting_ids:
        truth = t == cid
        pred = p == cid
        tp = int(np.count_nonzero(truth & pred))
        fn = int(np.count_nonzero(truth & ~pred))
        fp = int(np.count_nonzero(~truth & pred))
        tn = int(np.count_nonzero(~truth & ~pred))
        confusions.append(ClassConfusion(class_id=cid, tp=tp, fp=fp, tn=tn, fn=fn))
    return confusions


def class_metrics(conf: ClassConfusion) -> ClassMetrics:
    """Sensitivity, specificity, accuracy, and their balanced mean.

    Raises:
        ValueError: all four counts are zero (empty pool).
    """
    if conf.total == 0:
        raise ValueError("confusion is all-zero; metrics undefined")
    pos = conf.tp + conf.fn
    neg = conf.tn + conf.fp
    degenerate = pos == 0 or neg == 0
    sensitivity = conf.tp / pos if pos else 0.0
    specificity = conf.tn / neg if neg else 0.0
    return ClassMetrics(
        sensitivity=sensitivity,
        specificity=specificity,
        accuracy=(conf.tp + conf.tn) / conf.total,
        balanced_accuracy=(sensitivity + specificity) / 2.0,
        degenerate=degenerate,
    )


def average_class_metrics(metrics: Sequence[ClassMetrics]) -> ClassMetrics:
    """Unweighted arithmetic mean of each metric over the given classes."""
    if not metrics:
        raise ValueError("cannot average an empty metric list")
    n = len(metrics)
    return ClassMetrics(
        sensitivity=sum(m.sensitivity for m in metrics) / n,
        specificity=sum(m.specificity for m in metrics) / n,
        accuracy=sum(m.accuracy for m in metrics) / n,
        balanced_accuracy=sum(m.balanced_accuracy for m in metrics) / n,
        degenerate=any(m.degenerate for m in metrics),
    )


def image_based_accuracy(
    per_image: Iterable[tuple[np.ndarray, np.ndarray]],
    reporting_ids: Sequence[int],
) -> float:
    """Mean over images of (correct reporting-class pixels / annotated ones).

    Images with no reporting-class annotated pixels are excluded.  Each
    image weighs equally regardless of its pixel count.
    """
    accuracies = []
    for y_true, y_pred in per_image:
        t = np.asarray(y_true)
        p = np.asarray(y_pred)
        if t.shape != p.shape:
            raise ValueError("per-image predictions must align with labels")
        keep = np.isin(t, reporting_ids)
        if not np.any(keep):
            continue
        accuracies.append(float(np.mean(t[keep] == p[keep])))
    if not accuracies:
        raise ValueError("no image has annotated reporting-class pixels")
    return float(np.mean(accuracies))


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassReport:
    """Per-class rows plus the cross-class average (degenerates excluded)."""

    rows: tuple[tuple[str, ClassMetrics], ...]
    average: ClassMetrics | None
    excluded_from_average: tuple[str, ...]


def build_class_report(
    confusions: Sequence[ClassConfusion],
    registry: ClassRegistry,
) -> ClassReport:
    rows = []
    usable = []
    excluded = []
    for conf in confusions:
        name = registry.name_of(conf.class_id)
        m = class_metrics(conf)
        rows.append((name, m))
        if m.degenerate:
            excluded.append(name)
        else:
            usable.append(m)
    average = average_class_metrics(usable) if usable else None
    return ClassReport(rows=tuple(rows), average=average,
                       excluded_from_average=tuple(excluded))


_COLUMNS = ("Sensitivity", "Specificity", "Accuracy", "Balanced accuracy")


def _metric_cells(m: ClassMetrics) -> tuple[str, str, str, str]:
    return (percent(m.sensitivity), percent(m.specificity),
            percent(m.accuracy), percent(m.balanced_accuracy))


def class_report_text(report: ClassReport) -> str:
    name_width = max([len("Class"), len("Average")]
                     + [len(name) for name, _ in report.rows])
    header = "Class".ljust(name_width) + "".join(c.rjust(19) for c in _COLUMNS)
    lines = [header, "-" * len(header)]
    for name, m in report.rows:
        mark = "*" if m.degenerate else ""
        cells = _metric_cells(m)
        lines.append((name + mark).ljust(name_width)
                     + "".join(c.rjust(19) for c in cells))
    lines.append("-" * len(header))
    if report.average is not None:
        cells = _metric_cells(report.average)
        lines.append("Average".ljust(name_width)
                     + "".join(c.rjust(19) for c in cells))
    if report.excluded_from_average:
        lines.append("* degenerate (class absent from pool); excluded from the average")
    return "\n".join(lines) + "\n"


def class_report_csv(report: ClassReport) -> str:
    lines = ["class,sensitivity,specificity,accuracy,balanced_accuracy"]
    for name, m in report.rows:
        lines.append(",".join((f'"{name}"',) + _metric_cells(m)))
    if report.average is not None:
        lines.append(",".join(('"Average"',) + _metric_cells(report.average)))
    return "\n".join(lines) + "\n"
