"""Evaluation metrics: rank correlations, mass concentration, calibration,
accuracy/F1, ensemble diversity, and OOD detection scores."""

from __future__ import annotations

import numpy as np
from scipy import stats

from .ensemble import batch_array
from .errors import (
    AllZero,
    DegenerateVariance,
    EmptyInput,
    EmptySet,
    LengthMismatch,
    TooFewMembers,
)


def _paired(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.size != b.size:
        raise LengthMismatch(f"paired vectors disagree: {a.shape} vs {b.shape}")
    if a.size < 2:
        raise LengthMismatch("need at least two observations")
    return a, b


def _constant(x: np.ndarray) -> bool:
    # spans at float-noise scale rank nothing but rounding error
    span = float(x.max() - x.min())
    return span <= 1e-12 * max(1.0, abs(float(x.max())), abs(float(x.min())))


def _check_degenerate(a: np.ndarray, b: np.ndarray) -> None:
    if _constant(a) or _constant(b):
        raise DegenerateVariance("rank correlation is undefined for a constant input")


def spearman(a, b) -> float:
    """Pearson correlation of fractional ranks (average-rank ties)."""
    a, b = _paired(a, b)
    _check_degenerate(a, b)
    return float(stats.spearmanr(a, b).statistic)


def kendall(a, b) -> float:
    """Kendall's tau-b (tie-corrected pair ordering agreement)."""
    a, b = _paired(a, b)
    _check_degenerate(a, b)
    return float(stats.kendalltau(a, b, variant="b").statistic)


def aucc_curve(scores) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative normalized mass over sample fraction, sorted descending.

    Returns (fractions, cumulative mass) including the (0, 0) anchor.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise EmptyInput("no scores supplied")
    if np.any(s < 0):
        raise ValueError("scores must be non-negative")
    total = s.sum()
    if total == 0:
        raise AllZero("all scores are zero")
    cum = np.sort(s)[::-1].cumsum() / total
    n = s.size
    x = np.concatenate([[0.0], np.arange(1, n + 1) / n])
    y = np.concatenate([[0.0], cum])
    return x, y


def aucc(scores) -> float:
    """Area under the cumulative mass curve; 0.5 means no concentration."""
    x, y = aucc_curve(scores)
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1])) / 2.0)


def ece(confidences, correct, bins: int = 15) -> float:
    """Expected calibration error over equal-width confidence bins."""
    conf = np.asarray(confidences, dtype=np.float64)
    hits = np.asarray(correct, dtype=bool)
    if conf.size == 0:
        raise EmptyInput("no samples supplied")
    if conf.shape != hits.shape:
        raise LengthMismatch(f"confidence/correct disagree: {conf.shape} vs {hits.shape}")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if conf.min() < 0 or conf.max() > 1:
        raise ValueError("confidences must lie in [0, 1]")
    idx = np.minimum((conf * bins).astype(int), bins - 1)
    n = conf.size
    total = 0.0
    for b in range(bins):
        mask = idx == b
        nb = int(mask.sum())
        if nb == 0:
            continue
        total += (nb / n) * abs(hits[mask].mean() - conf[mask].mean())
    return float(total)


def diversity(batch) -> float:
    """Bessel-corrected member variance averaged over samples and classes."""
    arr = batch_array(batch)
    m = arr.shape[1]
    if m < 2:
        raise TooFewMembers(f"diversity needs M >= 2, got M={m}")
    mean = arr.mean(axis=1, keepdims=True)
    var = ((arr - mean) ** 2).sum(axis=1) / (m - 1)
    return float(var.mean())


def accuracy_f1(predictions, labels, n_classes: int) -> tuple[float, float]:
    """Accuracy and macro-F1 (unweighted per-class mean, 0/0 := 0)."""
    pred = np.asarray(predictions, dtype=np.int64)
    lab = np.asarray(labels, dtype=np.int64)
    if pred.shape != lab.shape:
        raise LengthMismatch(f"predictions/labels disagree: {pred.shape} vs {lab.shape}")
    if pred.size == 0:
        raise EmptyInput("no samples supplied")
    acc = float((pred == lab).mean())
    f1s = []
    for c in range(n_classes):
        tp = int(np.sum((pred == c) & (lab == c)))
        fp = int(np.sum((pred == c) & (lab != c)))
        fn = int(np.sum((pred != c) & (lab == c)))
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom > 0 else 0.0)
    return acc, float(np.mean(f1s))


def roc_curve(id_scores, ood_scores) -> tuple[np.ndarray, np.ndarray]:
    """(fpr, tpr) at every candidate threshold, descending thresholds.

    Higher scores mean more OOD; a sample is flagged when score >= threshold.
    """
    id_s = np.asarray(id_scores, dtype=np.float64)
    ood_s = np.asarray(ood_scores, dtype=np.float64)
    if id_s.size == 0 or ood_s.size == 0:
        raise EmptySet("both score sets must be non-empty")
    thresholds = np.unique(np.concatenate([id_s, ood_s]))[::-1]
    tpr = np.array([(ood_s >= t).mean() for t in thresholds])
    fpr = np.array([(id_s >= t).mean() for t in thresholds])
    return fpr, tpr


def roc_auc_fpr95(id_scores, ood_scores) -> tuple[float, float]:
    """Rank-based AUC (tie-corrected) and FPR at the first threshold with
    TPR >= 0.95, scanning thresholds from high to low."""
    id_s = np.asarray(id_scores, dtype=np.float64)
    ood_s = np.asarray(ood_scores, dtype=np.float64)
    if id_s.size == 0 or ood_s.size == 0:
        raise EmptySet("both score sets must be non-empty")
    n_i, n_o = id_s.size, ood_s.size
    ranks = stats.rankdata(np.concatenate([id_s, ood_s]))
    r_ood = ranks[n_i:].sum()
    auc = (r_ood - n_o * (n_o + 1) / 2.0) / (n_o * n_i)
    fpr, tpr = roc_curve(id_s, ood_s)
    hit = np.argmax(tpr >= 0.95)  # first (largest) threshold reaching 0.95
    return float(auc), float(fpr[hit])
