"""Detection metrics: confusion counts, ROC/AUC, and detection rate at an FP cap.

Headline metric is the detection rate at a 1% false-positive budget: the true
positive rate at the largest decision threshold whose FPR stays within the
budget. F1/precision/recall/accuracy are reported at a fixed 0.5 threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..dataset.corpus import BENIGN, SE


class MetricsError(Exception):
    pass


@dataclass(frozen=True)
class ScoredExample:
    id: str
    true_label: str  # "benign" | "se"
    score_se: float


@dataclass(frozen=True)
class EvalReport:
    threshold: float
    tn: int
    fn: int
    fp: int
    tp: int
    f1: float
    recall: float
    precision: float
    accuracy: float
    auc: float
    roc: tuple[tuple[float, float], ...]  # (fpr, tpr) points
    dr_at_fp: tuple[float, float]  # (budget, rate)

    def to_row(self) -> dict:
        return {
            "F1": self.f1,
            "Recall": self.recall,
            "Precision": self.precision,
            "Accuracy": self.accuracy,
            "Confusion Matrix": f"TN: {self.tn} FN: {self.fn} FP: {self.fp} TP: {self.tp}",
            "AUC": self.auc,
            "DR at 1% FP": self.dr_at_fp[1],
        }


def _validate(scored: list[ScoredExample]) -> None:
    if not scored:
        raise MetricsError("empty score set")
    for s in scored:
        if s.true_label not in (BENIGN, SE):
            raise MetricsError(f"unknown label {s.true_label!r} on {s.id}")
        if not (s.score_se == s.score_se and abs(s.score_se) != float("inf")):
            raise MetricsError(f"non-finite score on {s.id}")


def confusion(
    scored: list[ScoredExample], threshold: float = 0.5
) -> tuple[int, int, int, int]:
    """(TN, FN, FP, TP) with "attack" predicted iff score_se >= threshold."""
    _validate(scored)
    tn = fn = fp = tp = 0
    for s in scored:
        predicted_se = s.score_se >= threshold
        if s.true_label == SE:
            tp, fn = tp + predicted_se, fn + (not predicted_se)
        else:
            fp, tn = fp + predicted_se, tn + (not predicted_se)
    return tn, fn, fp, tp


def rates_from_confusion(tn: int, fn: int, fp: int, tp: int) -> dict:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / (tn + fn + fp + tp)
    return {"precision": precision, "recall": recall, "f1": f1, "accuracy": accuracy}


def roc_auc(scored: list[ScoredExample]) -> tuple[list[tuple[float, float]], float]:
    """ROC points by descending-score threshold sweep and trapezoid AUC.

    Equal scores collapse into a single threshold, so the curve is invariant
    under any strictly increasing rescaling of the scores.
    """
    _validate(scored)
    n_pos = sum(1 for s in scored if s.true_label == SE)
    n_neg = len(scored) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricsError("ROC needs both classes present")
    ordered = sorted(scored, key=lambda s: -s.score_se)
    points = [(0.0, 0.0)]
    auc = 0.0
    tp = fp = 0
    i = 0
    while i < len(ordered):
        j = i
        while j < len(ordered) and ordered[j].score_se == ordered[i].score_se:
            if ordered[j].true_label == SE:
                tp += 1
            else:
                fp += 1
            j += 1
        prev_fpr, prev_tpr = points[-1]
        fpr, tpr = fp / n_neg, tp / n_pos
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2
        points.append((fpr, tpr))
        i = j
    return points, auc


def dr_at_fp(scored: list[ScoredExample], fp_budget: float = 0.01) -> float:
    """Max TPR over all thresholds whose FPR does not exceed the budget."""
    if not 0.0 <= fp_budget <= 1.0:
        raise MetricsError(f"fp_budget {fp_budget} outside [0, 1]")
    points, _ = roc_auc(scored)
    return max(tpr for fpr, tpr in points if fpr <= fp_budget)


def threshold_at_fp(scored: list[ScoredExample], fp_budget: float = 0.01) -> float:
    """Largest decision threshold whose FPR stays within the budget."""
    if not 0.0 <= fp_budget <= 1.0:
        raise MetricsError(f"fp_budget {fp_budget} outside [0, 1]")
    _validate(scored)
    neg_scores = sorted(
        (s.score_se for s in scored if s.true_label == BENIGN), reverse=True
    )
    if not neg_scores:
        raise MetricsError("no benign examples to set the budget against")
    budget_count = int(fp_budget * len(neg_scores) + 1e-9)  # fp <= floor(budget * n_neg)
    above_max = max(s.score_se for s in scored) + 1.0  # predicts nothing: FPR 0
    best_tpr, best_threshold = -1.0, above_max
    candidates = sorted({s.score_se for s in scored} | {above_max}, reverse=True)
    pos_scores = [s.score_se for s in scored if s.true_label == SE]
    for threshold in candidates:
        fp = sum(1 for v in neg_scores if v >= threshold)
        if fp > budget_count:
            continue
        tpr = sum(1 for v in pos_scores if v >= threshold) / len(pos_scores)
        if tpr > best_tpr or (tpr == best_tpr and threshold > best_threshold):
            best_tpr, best_threshold = tpr, threshold
    return best_threshold


def metrics_report(
    scored: list[ScoredExample], threshold: float = 0.5, fp_budget: float = 0.01
) -> EvalReport:
    tn, fn, fp, tp = confusion(scored, threshold)
    rates = rates_from_confusion(tn, fn, fp, tp)
    roc, auc = roc_auc(scored)
    return EvalReport(
        threshold=threshold,
        tn=tn, fn=fn, fp=fp, tp=tp,
        f1=rates["f1"], recall=rates["recall"],
        precision=rates["precision"], accuracy=rates["accuracy"],
        auc=auc,
        roc=tuple(roc),
        dr_at_fp=(fp_budget, dr_at_fp(scored, fp_budget)),
    )
