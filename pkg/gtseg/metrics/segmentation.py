from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

RATIO_METRICS = ("acc", "se", "sp", "js", "dice", "f1", "auc")
STD_SCOPE = "population std over folds"


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    tn: int
    fn: int
    acc: float
    se: float
    sp: float
    js: float
    dice: float
    f1: float
    auc: Optional[float] = None
    flags: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def as_dict(self) -> Dict[str, Any]:
        row = asdict(self)
        row["flags"] = ";".join(self.flags)
        return row


# -------------------------------------------------------------------
# Internal helpers
# -------------------------------------------------------------------
def _binary(name: str, array) -> np.ndarray:
    array = np.asarray(array)
    if not np.all((array == 0) | (array == 1)):
        raise ValueError(f"{name} must be binary (0/1)")
    return array.astype(bool)


def _ratio(numerator: int, denominator: int, name: str, flags: List[str]) -> float:
    # an empty denominator means the condition holds vacuously
    if denominator == 0:
        flags.append(name)
        return 1.0
    return numerator / denominator


# -------------------------------------------------------------------
# Public API
# -------------------------------------------------------------------
def confusion(pred_mask, target) -> Tuple[int, int, int, int]:
    """Pixelwise (tp, fp, tn, fn)."""
    pred = _binary("prediction", pred_mask)
    truth = _binary("target", target)
    if pred.shape != truth.shape:
        raise ValueError(f"prediction shape {pred.shape} differs from target shape {truth.shape}")
    tp = int(np.count_nonzero(pred & truth))
    fp = int(np.count_nonzero(pred & ~truth))
    fn = int(np.count_nonzero(~pred & truth))
    tn = int(pred.size - tp - fp - fn)
    return tp, fp, tn, fn


def report(counts: Sequence[int], probs=None, target=None) -> MetricsReport:
    """
    ACC, SE, SP, JS, DICE and F1 from confusion counts; AUC when a probability
    map and its target are supplied. Zero denominators yield 1.0 and are
    listed in ``flags``.
    """
    tp, fp, tn, fn = (int(c) for c in counts)
    if min(tp, fp, tn, fn) < 0:
        raise ValueError(f"confusion counts must be non-negative, got {counts}")
    total = tp + fp + tn + fn
    if total == 0:
        raise ValueError("confusion counts cover no pixels")

    flags: List[str] = []
    dice = _ratio(2 * tp, 2 * tp + fp + fn, "dice", flags)
    auc_value = None
    if probs is not None:
        if target is None:
            raise ValueError("auc needs the target alongside the probabilities")
        auc_value = auc(probs, target)
    return MetricsReport(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        acc=(tp + tn) / total,
        se=_ratio(tp, tp + fn, "se", flags),
        sp=_ratio(tn, tn + fp, "sp", flags),
        js=_ratio(tp, tp + fp + fn, "js", flags),
        dice=dice,
        f1=dice,
        auc=auc_value,
        flags=tuple(sorted(flags)),
    )


def auc(probs, target) -> float:
    """
    Area under the ROC curve: sweep the threshold over the sorted unique
    scores and integrate with the trapezoid rule. Tied scores move together,
    which gives them half credit.
    """
    scores = np.asarray(probs, dtype=np.float64).ravel()
    labels = _binary("target", target).ravel()
    if scores.shape != labels.shape:
        raise ValueError(f"probs has {scores.size} values, target has {labels.size}")
    positives = int(labels.sum())
    negatives = labels.size - positives
    if positives == 0 or negatives == 0:
        raise ValueError("auc needs at least one positive and one negative pixel")

    order = np.argsort(-scores, kind="mergesort")
    scores, labels = scores[order], labels[order]
    # last index of every run of equal scores
    cut = np.r_[np.nonzero(np.diff(scores))[0], scores.size - 1]
    tps = np.cumsum(labels)[cut]
    fps = (cut + 1) - tps
    tpr = np.r_[0.0, tps / positives]
    fpr = np.r_[0.0, fps / negatives]
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def aggregate_folds(reports: Sequence[MetricsReport]) -> Dict[str, Dict[str, float]]:
    """Mean and population std of each ratio metric across folds."""
    if not reports:
        raise ValueError("no reports to aggregate")
    frame = pd.DataFrame([r.as_dict() for r in reports])
    out: Dict[str, Dict[str, float]] = {}
    for name in RATIO_METRICS:
        column = pd.to_numeric(frame[name], errors="coerce").dropna()
        if column.empty:
            continue
        out[name] = {"mean": float(column.mean()), "std": float(column.std(ddof=0))}
    return out


def reports_frame(labels: Sequence[str], reports: Sequence[MetricsReport], label_column: str = "fold") -> pd.DataFrame:
    """
    One row per report plus a final ``mean±std`` row for the ratio metrics.
    """
    if len(labels) != len(reports):
        raise ValueError("labels and reports must have the same length")
    rows = []
    for label, rep in zip(labels, reports):
        row = {label_column: label}
        row.update(rep.as_dict())
        rows.append(row)
    summary: Dict[str, Any] = {label_column: "mean±std"}
    for name, stats in aggregate_folds(reports).items():
        summary[name] = f"{stats['mean']:.6f}±{stats['std']:.6f}"
    rows.append(summary)
    return pd.DataFrame(rows)
