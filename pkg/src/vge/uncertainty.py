"""Uncertainty scores: entropy decomposition, EPKL, EPJS, SNR rule, and VGMU.

Entropies are in nats; pass ``normalize=True`` to divide by log(C).
Probabilities are floored at 1e-12 inside every logarithm so simplex
vertices are legal inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .ensemble import EnsembleMoments, ProbVector, as_members, batch_array
from .errors import ShapeMismatch, TooFewMembers
from .gate import DEFAULT_GAMMA_MIN, GateParams, classify_region

LOG_FLOOR = 1e-12

ABSTAIN = -1


def _values(p) -> np.ndarray:
    if isinstance(p, ProbVector):
        return p.values
    return np.asarray(p, dtype=np.float64)


def _plogp(p: np.ndarray) -> np.ndarray:
    return p * np.log(np.maximum(p, LOG_FLOOR))


def entropy(p, normalize: bool = False) -> float:
    """Shannon entropy -sum p log p with 0 log 0 := 0."""
    arr = _values(p)
    h = -float(_plogp(arr).sum())
    if normalize:
        h /= np.log(arr.shape[-1])
    return h + 0.0  # drop negative zero from 0*log(floor) terms


def decompose(members, normalize: bool = False) -> tuple[float, float, float]:
    """Split total uncertainty into aleatoric and epistemic parts.

    Total is the entropy of the member mixture, aleatoric the mean member
    entropy, and epistemic their difference (equal to the mean KL from each
    member to the mixture).
    """
    arr = as_members(members)
    mix = arr.mean(axis=0)
    tu = -float(_plogp(mix).sum()) + 0.0
    au = -float(_plogp(arr).sum(axis=1).mean()) + 0.0
    if normalize:
        scale = np.log(arr.shape[1])
        tu /= scale
        au /= scale
    return tu, au, tu - au


def mean_kl_to_mixture(members, normalize: bool = False) -> float:
    """Mean KL(member || mixture); the epistemic part computed directly."""
    arr = as_members(members)
    mix = arr.mean(axis=0)
    logs = np.log(np.maximum(arr, LOG_FLOOR)) - np.log(np.maximum(mix, LOG_FLOOR))
    value = float((arr * logs).sum(axis=1).mean())
    if normalize:
        value /= np.log(arr.shape[1])
    return value


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    return float((p * (np.log(np.maximum(p, LOG_FLOOR)) - np.log(np.maximum(q, LOG_FLOOR)))).sum())


def epkl(members) -> float:
    """Expected pairwise KL divergence over ordered member pairs."""
    arr = as_members(members)
    m = arr.shape[0]
    if m < 2:
        raise TooFewMembers(f"pairwise divergence needs M >= 2, got M={m}")
    logs = np.log(np.maximum(arr, LOG_FLOOR))
    self_terms = (arr * logs).sum(axis=1)
    cross = np.einsum("ic,jc->ij", arr, logs)
    total = (m - 1) * self_terms.sum() - (cross.sum() - np.trace(cross))
    return float(total / (m * (m - 1)))


def epjs(members) -> float:
    """Expected pairwise Jensen-Shannon divergence; bounded by log 2."""
    arr = as_members(members)
    m = arr.shape[0]
    if m < 2:
        raise TooFewMembers(f"pairwise divergence needs M >= 2, got M={m}")
    total = 0.0
    for i in range(m):
        for j in range(i + 1, m):
            mid = 0.5 * (arr[i] + arr[j])
            total += 0.5 * _kl(arr[i], mid) + 0.5 * _kl(arr[j], mid)
    return float(2.0 * total / (m * (m - 1)))


def _top2(mean: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices of the two largest per-row entries, ties to lower index."""
    i1 = np.argmax(mean, axis=1)
    masked = mean.copy()
    masked[np.arange(mean.shape[0]), i1] = -np.inf
    i2 = np.argmax(masked, axis=1)
    return i1, i2


def snr_for_moments(moments: EnsembleMoments, epsilon: float = 1e-8) -> np.ndarray:
    """Top-2 mean margin over combined raw spreads: (p1 - p2) / (S1 + S2 + eps)."""
    rows = np.arange(moments.mean.shape[0])
    i1, i2 = _top2(moments.mean)
    margin = moments.mean[rows, i1] - moments.mean[rows, i2]
    noise = moments.spread_raw[rows, i1] + moments.spread_raw[rows, i2] + epsilon
    return margin / noise


def snr_decision(
    moments: EnsembleMoments, k: float, epsilon: float = 1e-8
) -> tuple[np.ndarray, np.ndarray]:
    """Abstention rule: predict the top class when SNR > k, else abstain.

    Returns (snr, decision) with decision = ABSTAIN (-1) where the margin
    does not clear the threshold.
    """
    if k < 0:
        raise ValueError("threshold k must be non-negative")
    snr = snr_for_moments(moments, epsilon)
    i1, _ = _top2(moments.mean)
    decision = np.where(snr > k, i1, ABSTAIN)
    return snr, decision


def vgmu(moments: EnsembleMoments, k: float = 1.0, epsilon: float = 1e-8) -> np.ndarray:
    """Variance-gated margin uncertainty: 1 - (1 - exp(-SNR)) * p1.

    ``k`` does not enter the score; it is the abstention threshold of the
    companion decision rule and is accepted here only so callers can pass
    one parameter set for both. Values near 0 mean confident, separated,
    consistent predictions; values near 1 mean ambiguity or disagreement.
    """
    del k
    snr = snr_for_moments(moments, epsilon)
    rows = np.arange(moments.mean.shape[0])
    i1, _ = _top2(moments.mean)
    gamma = 1.0 - np.exp(-snr)
    return 1.0 - gamma * moments.mean[rows, i1]


@dataclass(frozen=True)
class UncertaintyReport:
    """Per-sample uncertainty scores and the abstention decision."""

    id: str
    tu: float
    au: float
    eu: float
    tu_gated: float
    au_gated: float
    eu_gated: float
    epkl: float
    epjs: float
    snr: float
    vgmu: float
    decision: int  # class index, or ABSTAIN (-1)
    region: str


def score_batch(
    batch,
    gate_params: GateParams | None,
    *,
    k_threshold: float | None = None,
    normalize: bool = False,
    conf_threshold: float = 0.5,
    spread_threshold: float = 0.1,
    snr_epsilon: float = 1e-8,
    ids: list[str] | None = None,
) -> list[UncertaintyReport]:
    """Score every sample of a batch through the fast kernel backend.

    ``gate_params=None`` disables gating (the gated decomposition then
    equals the ungated one). The abstention threshold defaults to the mean
    derived k, or 0 when gating is disabled.
    """
    arr = np.ascontiguousarray(batch_array(batch))
    b, _, c = arr.shape
    if ids is None:
        ids = [str(i) for i in range(b)]
    if gate_params is not None and gate_params.n_classes != c:
        raise ShapeMismatch(f"gate has {gate_params.n_classes} classes, batch has {c}")
    if k_threshold is None:
        k_threshold = 0.0 if gate_params is None else float(np.mean(gate_params.k))

    mean, spread_raw = backend.moments_batch(arr, 1e-8)
    tu, au, eu = backend.decompose_batch(arr, np.ones(c), 1e-8, DEFAULT_GAMMA_MIN, 1e-8, False)
    if gate_params is None:
        tu_g, au_g, eu_g = tu, au, eu
    else:
        tu_g, au_g, eu_g = backend.decompose_batch(
            arr, np.ascontiguousarray(gate_params.k), 1e-8, gate_params.gamma_min, 1e-8, True
        )
    epkl_v = backend.epkl_batch(arr)
    epjs_v = backend.epjs_batch(arr)
    snr, vgmu_v, top1 = backend.vgmu_batch(mean, spread_raw, snr_epsilon)
    decision = np.where(snr > k_threshold, top1, ABSTAIN)

    moments = EnsembleMoments(
        mean=mean, spread=spread_raw + 1e-8, epsilon=1e-8, spread_raw=spread_raw
    )
    regions = classify_region(moments, conf_threshold, spread_threshold)
    scale = np.log(c) if normalize else 1.0

    reports = []
    for i in range(b):
        reports.append(
            UncertaintyReport(
                id=ids[i],
                tu=float(tu[i] / scale),
                au=float(au[i] / scale),
                eu=float(eu[i] / scale),
                tu_gated=float(tu_g[i] / scale),
                au_gated=float(au_g[i] / scale),
                eu_gated=float(eu_g[i] / scale),
                epkl=float(epkl_v[i]),
                epjs=float(epjs_v[i]),
                snr=float(snr[i]),
                vgmu=float(vgmu_v[i]),
                decision=int(decision[i]),
                region=regions[i],
            )
        )
    return reports
