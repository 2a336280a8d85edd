"""
Evaluation measures: confusion matrix, per-class and support-weighted
precision / recall / F1, and one-vs-rest AUC (Mann-Whitney, ties count half).
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from pipeline.errors import PipelineError

logger = logging.getLogger(__name__)

FLAG_PRECISION_UNDEFINED = "precision-undefined-as-zero"
FLAG_NO_SUPPORT = "no-support"
FLAG_AUC_UNDEFINED = "auc-undefined"


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """rows = gold label, columns = predicted label."""
    grid: np.ndarray

    @property
    def label_count(self) -> int:
        return self.grid.shape[0]

    @property
    def total(self) -> int:
        return int(self.grid.sum())

    @property
    def support(self) -> np.ndarray:
        return self.grid.sum(axis=1)

    def accuracy(self) -> float:
        return int(np.trace(self.grid)) / self.total


@dataclass(frozen=True, eq=False)
class PRF:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    flags: tuple


@dataclass(frozen=True)
class AUCResult:
    per_class: tuple
    weighted: float
    macro: float
    flags: tuple


@dataclass(frozen=True, eq=False)
class EvalReport:
    precision: float
    recall: float
    f1: float
    auc: float
    confusion: ConfusionMatrix
    prf: PRF
    auc_detail: AUCResult
    count: int

    def per_class_rows(self, label_names: Sequence[str]) -> list:
        rows = []
        for c, name in enumerate(label_names):
            flags = [f for f in (self.prf.flags[c], self.auc_detail.flags[c]) if f]
            auc = self.auc_detail.per_class[c]
            rows.append({
                "class": name,
                "support": int(self.prf.support[c]),
                "precision": float(self.prf.precision[c]),
                "recall": float(self.prf.recall[c]),
                "f1": float(self.prf.f1[c]),
                "auc": "" if auc is None else auc,
                "flags": ";".join(flags),
            })
        rows.append({
            "class": "macro avg", "support": self.count,
            "precision": self.prf.macro_precision, "recall": self.prf.macro_recall,
            "f1": self.prf.macro_f1, "auc": self.auc_detail.macro, "flags": "",
        })
        rows.append({
            "class": "weighted avg", "support": self.count,
            "precision": self.precision, "recall": self.recall,
            "f1": self.f1, "auc": self.auc, "flags": "",
        })
        return rows


def _ids(labels) -> np.ndarray:
    return np.array([getattr(label, "id", label) for label in labels], dtype=np.int64)


def confusion_matrix(preds: Sequence, golds: Sequence, label_count: Optional[int] = None) -> ConfusionMatrix:
    if len(preds) != len(golds):
        raise ValueError(f"preds ({len(preds)}) and golds ({len(golds)}) differ in length")
    if not golds:
        raise ValueError("confusion_matrix needs at least one instance")
    p, g = _ids(preds), _ids(golds)
    n = label_count if label_count is not None else int(max(p.max(), g.max())) + 1
    grid = np.zeros((n, n), dtype=np.int64)
    np.add.at(grid, (g, p), 1)
    return ConfusionMatrix(grid=grid)


def prf_weighted(cm: ConfusionMatrix) -> PRF:
    """
    Per class: P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R), with 0 for
    undefined ratios. Weighted means use gold support over classes with support > 0.
    """
    if cm.total < 1:
        raise ValueError("confusion matrix is empty")
    grid = cm.grid
    tp = np.diag(grid).astype(np.float64)
    predicted = grid.sum(axis=0).astype(np.float64)
    support = grid.sum(axis=1)

    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(predicted > 0, tp / np.maximum(predicted, 1), 0.0)
        recall = np.where(support > 0, tp / np.maximum(support, 1), 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / np.where(denom > 0, denom, 1.0), 0.0)

    flags = []
    for c in range(cm.label_count):
        if support[c] == 0:
            flags.append(FLAG_NO_SUPPORT)
        elif predicted[c] == 0:
            flags.append(FLAG_PRECISION_UNDEFINED)
        else:
            flags.append("")

    present = support > 0
    total = cm.total
    return PRF(
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        weighted_precision=float((support * precision).sum() / total),
        # support-weighted recall reduces to trace/total; computed that way so it is exact
        weighted_recall=cm.accuracy(),
        weighted_f1=float((support * f1).sum() / total),
        macro_precision=float(precision[present].mean()),
        macro_recall=float(recall[present].mean()),
        macro_f1=float(f1[present].mean()),
        flags=tuple(flags),
    )


def mann_whitney_auc(pos_scores: np.ndarray, neg_scores: np.ndarray) -> float:
    """P(score_pos > score_neg) + 0.5·P(tie), by sorted-rank counting."""
    neg_sorted = np.sort(neg_scores)
    below = np.searchsorted(neg_sorted, pos_scores, side="left")
    at_or_below = np.searchsorted(neg_sorted, pos_scores, side="right")
    concordant = int(below.sum())
    ties = int((at_or_below - below).sum())
    return (concordant + 0.5 * ties) / (len(pos_scores) * len(neg_scores))


def auc_one_vs_rest(scores, golds: Sequence, label_count: Optional[int] = None) -> AUCResult:
    """
    Per-class one-vs-rest AUC on column c of the score matrix. Classes lacking a
    positive or a negative are flagged and left out of the weighted mean.
    """
    scores = np.asarray(scores, dtype=np.float64)
    g = _ids(golds)
    if scores.ndim != 2 or scores.shape[0] != len(g) or len(g) == 0:
        raise ValueError("scores must be an (instances × classes) matrix matching golds")
    n_labels = label_count if label_count is not None else scores.shape[1]

    per_class, flags = [], []
    weights, values = [], []
    for c in range(n_labels):
        positive = g == c
        n_pos = int(positive.sum())
        if n_pos == 0 or n_pos == len(g):
            per_class.append(None)
            flags.append(FLAG_AUC_UNDEFINED)
            continue
        auc = mann_whitney_auc(scores[positive, c], scores[~positive, c])
        per_class.append(auc)
        flags.append("")
        weights.append(n_pos)
        values.append(auc)

    if not values:
        raise PipelineError("AUC undefined for this test set")
    skipped = [c for c, f in enumerate(flags) if f]
    if skipped:
        logger.warning(f"AUC skipped for classes {skipped} (no positive or no negative instances)")

    w = np.asarray(weights, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    return AUCResult(
        per_class=tuple(per_class),
        weighted=float((w * v).sum() / w.sum()),
        macro=float(v.mean()),
        flags=tuple(flags),
    )


def evaluate(probas: np.ndarray, golds: Sequence, label_count: int) -> EvalReport:
    """Score a probability matrix against gold labels; predictions are row argmaxes."""
    probas = np.asarray(probas, dtype=np.float64)
    preds = np.argmax(probas, axis=1).tolist()
    cm = confusion_matrix(preds, golds, label_count)
    prf = prf_weighted(cm)
    auc = auc_one_vs_rest(probas, golds, label_count)
    return EvalReport(
        precision=prf.weighted_precision,
        recall=prf.weighted_recall,
        f1=prf.weighted_f1,
        auc=auc.weighted,
        confusion=cm,
        prf=prf,
        auc_detail=auc,
        count=cm.total,
    )
