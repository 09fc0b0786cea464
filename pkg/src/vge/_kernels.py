"""Pure-numpy scoring kernels; reference semantics for the compiled core.

All functions take contiguous float64 arrays and are per-sample independent,
so results do not depend on how a batch is chunked across workers. Member
reductions use numpy's single-threaded axis reductions, which are
deterministic for a fixed build.
"""

from __future__ import annotations

import numpy as np

LOG_FLOOR = 1e-12


def moments_batch(p: np.ndarray, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-class mean and raw (pre-epsilon) Bessel-corrected std; (B, C) each."""
    del epsilon  # kept for signature parity; the raw spread is returned
    m = p.shape[1]
    mean = p.mean(axis=1)
    dev = p - mean[:, None, :]
    spread_raw = np.sqrt((dev * dev).sum(axis=1) / (m - 1))
    return mean, spread_raw


def _entropy_rows(rows: np.ndarray) -> np.ndarray:
    return -(rows * np.log(np.maximum(rows, LOG_FLOOR))).sum(axis=-1)


def decompose_batch(
    p: np.ndarray,
    k: np.ndarray,
    epsilon: float,
    gamma_min: float,
    z_floor: float,
    apply_gate: bool,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-sample (tu, au, eu) in nats, optionally on gated members."""
    m = p.shape[1]
    if apply_gate:
        mean, spread_raw = moments_batch(p, epsilon)
        s = spread_raw + epsilon
        gamma = 1.0 - np.exp(-mean / (k[None, :] * s))
        gamma = np.maximum(gamma, gamma_min)
        weighted = p * gamma[:, None, :]
        z = np.maximum(weighted.sum(axis=2, keepdims=True), z_floor)
        q = weighted / z
    else:
        q = p
    mix = q.mean(axis=1)
    tu = _entropy_rows(mix)
    au = _entropy_rows(q).mean(axis=1)
    return tu, au, tu - au


def epkl_batch(p: np.ndarray) -> np.ndarray:
    """Per-sample expected pairwise KL over ordered member pairs."""
    m = p.shape[1]
    logs = np.log(np.maximum(p, LOG_FLOOR))
    self_terms = (p * logs).sum(axis=2)  # (B, M)
    cross = np.einsum("bic,bjc->bij", p, logs)  # (B, M, M)
    trace = np.einsum("bii->b", cross)
    total = (m - 1) * self_terms.sum(axis=1) - (cross.sum(axis=(1, 2)) - trace)
    return total / (m * (m - 1))


def epjs_batch(p: np.ndarray) -> np.ndarray:
    """Per-sample expected pairwise Jensen-Shannon divergence."""
    b, m, _ = p.shape
    logs = np.log(np.maximum(p, LOG_FLOOR))
    self_terms = (p * logs).sum(axis=2)  # (B, M)
    total = np.zeros(b)
    for i in range(m):
        # js(i, j) for all j > i, vectorized over j
        mid = 0.5 * (p[:, i : i + 1, :] + p[:, i + 1 :, :])  # (B, M-i-1, C)
        log_mid = np.log(np.maximum(mid, LOG_FLOOR))
        cross_i = (p[:, i : i + 1, :] * log_mid).sum(axis=2)
        cross_j = (p[:, i + 1 :, :] * log_mid).sum(axis=2)
        js = 0.5 * (self_terms[:, i : i + 1] - cross_i) + 0.5 * (
            self_terms[:, i + 1 :] - cross_j
        )
        total += js.sum(axis=1)
    return 2.0 * total / (m * (m - 1))


def vgmu_batch(
    mean: np.ndarray, spread_raw: np.ndarray, epsilon: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top-2 SNR and VGMU from precomputed moments; ties to lower index."""
    b = mean.shape[0]
    rows = np.arange(b)
    i1 = np.argmax(mean, axis=1)
    masked = mean.copy()
    masked[rows, i1] = -np.inf
    i2 = np.argmax(masked, axis=1)
    margin = mean[rows, i1] - mean[rows, i2]
    snr = margin / (spread_raw[rows, i1] + spread_raw[rows, i2] + epsilon)
    vgmu = 1.0 - (1.0 - np.exp(-snr)) * mean[rows, i1]
    return snr, vgmu, i1
